"""Deterministic scenario and corpus generators for verification.

``figure4_scenario`` reconstructs the canonical four-organization worked
example: a large stable company, a prestigious university with few but
highly experienced movers, a declining company shedding staff, and a
small fast-growing startup. The exact head counts are artifacts of this
reconstruction, frozen here and regression-tested; directional claims
(who tops which ranking after which transform) are what downstream tests
assert.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from careerflow.flownet import build_network, derive_transitions
from careerflow.ingest import RuleSet
from careerflow.model import (
    CareerTrajectory,
    Corpus,
    EmploymentSpell,
    FlowNetwork,
    Organization,
    Sector,
)

SCENARIO_YEAR = 2010

STABLE = "STABLE-LLC"
UNI = "UNI"
DECLINE = "DECLINE-LLC"
STARTUP = "STARTUP"
IVY = "IVY-COLLEGE"
OLDCO = "OLDCO"

# Mover counts and experience (years) per directed edge, transition year
# SCENARIO_YEAR. Movers touching UNI carry 20 years of experience; all
# others carry 5, against a system mean of exactly 10.
SCENARIO_EDGES: tuple[tuple[str, str, int, int], ...] = (
    (DECLINE, STABLE, 14, 5),
    (DECLINE, STARTUP, 6, 5),
    (DECLINE, UNI, 1, 20),
    (STABLE, STARTUP, 4, 5),
    (STABLE, UNI, 3, 20),
    (UNI, STABLE, 2, 20),
    (UNI, STARTUP, 1, 20),
)

# Incumbent tenure-in-years multisets per org, chosen so that at the
# scenario year: STABLE's mean retention equals the industry mean (8.0),
# DECLINE's is half of it, UNI's is twice the academia mean (5.0), and
# the system mean career length is exactly 10.0.
_INCUMBENT_TENURES: dict[str, tuple[tuple[int, int], ...]] = {
    STABLE: ((10, 11), (9, 82)),
    DECLINE: ((8, 3), (1, 16)),
    STARTUP: ((1, 5),),
    UNI: ((11, 10), (10, 17)),
    IVY: ((3, 85),),
    OLDCO: ((16, 3), (15, 37)),
}

# IVY incumbents who worked an earlier 5-year stint at IVY before a gap;
# the extra history lifts their career lengths (balancing the system mean
# at 10.0) without moving the academia retention mean off 5.0.
_IVY_REHIRES: tuple[tuple[int, int], ...] = ((13, 70), (12, 1))

_ORG_SECTORS: dict[str, Sector] = {
    STABLE: Sector.INDUSTRY,
    DECLINE: Sector.INDUSTRY,
    STARTUP: Sector.INDUSTRY,
    OLDCO: Sector.INDUSTRY,
    UNI: Sector.ACADEMIA,
    IVY: Sector.ACADEMIA,
}

_TITLES = {5: "Software Engineer", 20: "Distinguished Professor"}


@dataclass(frozen=True)
class ScenarioSpec:
    """The construction targets a scenario corpus is checked against."""

    orgs: tuple[tuple[str, Sector, int, float], ...]  # id, sector, staff, retention vs sector mean
    edges: tuple[tuple[str, str, int, int], ...]  # source, target, movers, experience
    system_mean_career_length: float

    def __post_init__(self) -> None:
        declared = {org for org, *_ in self.orgs}
        for src, dst, count, _exp in self.edges:
            if src not in declared or dst not in declared:
                raise ValueError(f"edge {src}->{dst} references undeclared org")
            if count < 0:
                raise ValueError("mover counts must be nonnegative")

    @property
    def staff(self) -> dict[str, int]:
        return {org: staff for org, _sector, staff, _rel in self.orgs}


def figure4_scenario() -> tuple[Corpus, FlowNetwork, ScenarioSpec]:
    """The frozen four-organization reconstruction.

    Returns the corpus, the flow network for the scenario year, and the
    spec the construction is verified against.
    """
    t = SCENARIO_YEAR
    trajectories: list[CareerTrajectory] = []

    def person(pid: str, spells: Iterable[EmploymentSpell]) -> None:
        spells = tuple(spells)
        trajectories.append(
            CareerTrajectory(pid, IVY, min(s.start_year for s in spells), spells)
        )

    for org, tenures in _INCUMBENT_TENURES.items():
        tag = org.lower().replace("-", "")
        i = 0
        rehires = dict(_IVY_REHIRES) if org == IVY else {}
        rehire_plan: list[int] = []
        for length, count in rehires.items():
            rehire_plan.extend([length] * count)
        for tenure, count in tenures:
            for _ in range(count):
                i += 1
                pid = f"{tag}-{i:03d}"
                if org == IVY and rehire_plan:
                    total = rehire_plan.pop()
                    # earlier 5-year stint, a gap, then the current job
                    person(
                        pid,
                        (
                            EmploymentSpell(IVY, t - total, t - total + 5, "Lecturer"),
                            EmploymentSpell(IVY, t - tenure, None, "Lecturer"),
                        ),
                    )
                else:
                    person(pid, (EmploymentSpell(org, t - tenure, None, "Staff"),))

    mover_id = 0
    for src, dst, count, experience in SCENARIO_EDGES:
        for _ in range(count):
            mover_id += 1
            pid = f"mover-{mover_id:03d}"
            person(
                pid,
                (
                    EmploymentSpell(src, t - experience, t, _TITLES[experience]),
                    EmploymentSpell(dst, t, None, _TITLES[experience]),
                ),
            )

    organizations = {
        org: Organization(org, sector, frozenset({org}))
        for org, sector in _ORG_SECTORS.items()
    }
    corpus = Corpus(tuple(trajectories), organizations, horizon_year=t)
    net = build_network(derive_transitions(corpus), corpus, years=(t,))
    spec = ScenarioSpec(
        orgs=(
            (STABLE, Sector.INDUSTRY, 100, 1.0),
            (UNI, Sector.ACADEMIA, 30, 2.0),
            (DECLINE, Sector.INDUSTRY, 40, 0.5),
            (STARTUP, Sector.INDUSTRY, 5, (5 / 16) / 8.0),
            (IVY, Sector.ACADEMIA, 85, (610 / 156) / 5.0),
            (OLDCO, Sector.INDUSTRY, 40, (603 / 40) / 8.0),
        ),
        edges=SCENARIO_EDGES,
        system_mean_career_length=10.0,
    )
    return corpus, net, spec


_TITLE_POOL = (
    "Software Engineer",
    "Senior Software Engineer",
    "Research Scientist",
    "Professor",
    "Assistant Professor",
    "Data Scientist",
    "Principal Engineer",
    "Visiting Scholar",
    "Director of Engineering",
    "CEO",
)


def random_population(
    seed: int,
    n_persons: int,
    n_orgs: int,
    tail_exponent: float = 1.5,
    planted_signal: bool = False,
    era: tuple[int, int] = (1990, 2015),
) -> Corpus:
    """A random corpus with heavy-tailed employer popularity.

    Organization attractiveness is Pareto(``tail_exponent``), so distinct
    employee counts have a matching power-law tail. With
    ``planted_signal`` the per-year transition hazard jumps once tenure at
    the current employer reaches four years, making transitions highly
    predictable from tenure alone (all transitions are then hard so the
    signal stays clean).
    """
    if n_persons < 1 or n_orgs < 1:
        raise ValueError("need at least one person and one organization")
    if tail_exponent <= 0:
        raise ValueError("tail_exponent must be positive")
    rng = np.random.default_rng(seed)
    start_era, end_era = era

    weights = (1.0 - rng.random(n_orgs)) ** (-1.0 / tail_exponent)
    probs = weights / weights.sum()
    sectors = rng.choice(
        [Sector.INDUSTRY, Sector.ACADEMIA, Sector.GOVERNMENT],
        size=n_orgs,
        p=[0.8, 0.15, 0.05],
    )
    org_ids = [f"org-{i:04d}" for i in range(n_orgs)]
    organizations = {
        org_ids[i]: Organization(org_ids[i], sectors[i], frozenset({org_ids[i]}))
        for i in range(n_orgs)
    }
    schools = [org_ids[i] for i in range(n_orgs) if sectors[i] is Sector.ACADEMIA]
    if not schools:
        organizations["grad-school"] = Organization(
            "grad-school", Sector.ACADEMIA, frozenset({"grad-school"})
        )
        schools = ["grad-school"]

    def hazard(tenure: int) -> float:
        if planted_signal:
            return 0.96 if tenure >= 4 else 0.02
        return 0.18

    p_soft = 0.0 if planted_signal else 0.2
    trajectories: list[CareerTrajectory] = []
    for p in range(n_persons):
        pid = f"p{p:05d}"
        grad = int(rng.integers(start_era, end_era - 4))
        school = schools[int(rng.integers(0, len(schools)))]
        org = int(rng.choice(n_orgs, p=probs))
        spells: list[EmploymentSpell] = []
        current_start = grad
        open_prior: EmploymentSpell | None = None
        is_postdoc = rng.random() < 0.15
        year = grad
        while year < end_era:
            if rng.random() < hazard(year - current_start):
                move_year = year + 1
                if move_year >= end_era:
                    break
                choices = np.delete(np.arange(n_orgs), org)
                probs_rest = probs[choices] / probs[choices].sum()
                new_org = int(rng.choice(choices, p=probs_rest))
                if open_prior is not None:
                    spells.append(open_prior)
                    open_prior = None
                if rng.random() < p_soft:
                    # keep the old job for a while past the new start
                    extra = int(rng.integers(1, 4))
                    end = min(move_year + extra, end_era)
                    spells.append(
                        EmploymentSpell(org_ids[org], current_start, end, _pick_title(rng), is_postdoc)
                    )
                else:
                    spells.append(
                        EmploymentSpell(org_ids[org], current_start, move_year, _pick_title(rng), is_postdoc)
                    )
                org = new_org
                current_start = move_year
                year = move_year
                is_postdoc = False
            else:
                year += 1
        if open_prior is not None:
            spells.append(open_prior)
        spells.append(
            EmploymentSpell(org_ids[org], current_start, None, _pick_title(rng), is_postdoc)
        )
        trajectories.append(CareerTrajectory(pid, school, grad, tuple(spells)))

    used = {s.org for traj in trajectories for s in traj.spells}
    used.update(traj.phd_school for traj in trajectories)
    organizations = {oid: o for oid, o in organizations.items() if oid in used}
    return Corpus(tuple(trajectories), organizations, horizon_year=end_era)


def _pick_title(rng: np.random.Generator) -> str:
    return _TITLE_POOL[int(rng.integers(0, len(_TITLE_POOL)))]


def corpus_rules(corpus: Corpus) -> RuleSet:
    """Rules that reproduce a generated corpus byte-for-byte through ingest.

    Each organization id self-aliases (preserving case) and gets an exact
    sector rule, so writing the corpus with the records schema and reading
    it back yields an identical corpus.
    """
    aliases = {oid: oid for oid in corpus.organizations}
    sector_rules = tuple(
        ("exact", oid, corpus.organizations[oid].sector)
        for oid in sorted(corpus.organizations)
    )
    return RuleSet(aliases, sector_rules)

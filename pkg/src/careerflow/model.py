"""Domain types shared by every stage of the pipeline.

All values are immutable after construction and validated eagerly, so a
corpus that exists is a corpus that satisfies the invariants. Time is
whole years; an ongoing job carries ``end_year=None`` (OPEN) and is
treated as extending through the corpus horizon for duration purposes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping


class Sector(enum.Enum):
    INDUSTRY = "industry"
    ACADEMIA = "academia"
    GOVERNMENT = "government"

    @classmethod
    def parse(cls, name: str) -> "Sector":
        key = name.strip().lower()
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown sector: {name!r}")


class TransitionKind(enum.Enum):
    HARD = "hard"
    SOFT = "soft"


@dataclass(frozen=True)
class Organization:
    """A canonical employer. ``aliases`` are the raw names mapped onto it."""

    id: str
    sector: Sector
    aliases: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("organization id must be non-empty")


@dataclass(frozen=True)
class EmploymentSpell:
    """One job: ``end_year=None`` means the position is still held (OPEN)."""

    org: str
    start_year: int
    end_year: int | None
    title: str = ""
    is_postdoc: bool = False

    def __post_init__(self) -> None:
        if self.end_year is not None and self.end_year < self.start_year:
            raise ValueError(
                f"spell at {self.org}: end_year {self.end_year} < start_year {self.start_year}"
            )

    @property
    def is_open(self) -> bool:
        return self.end_year is None

    def end_or(self, horizon: int) -> int:
        """End year with OPEN resolved to the analysis horizon."""
        return self.end_year if self.end_year is not None else horizon

    def covers(self, year: int, horizon: int) -> bool:
        """True if the spell is in force during ``year`` (boundaries inclusive)."""
        return self.start_year <= year <= self.end_or(horizon)

    def held_at(self, year: int) -> bool:
        """True if the job is still held (not yet ended) at ``year``.

        Unlike :meth:`covers` the end boundary is exclusive: a job that
        ends in ``year`` has been left by then.
        """
        return self.start_year <= year and (self.end_year is None or self.end_year > year)

    def duration_at(self, year: int) -> int:
        """Years spent on the job using only information up to ``year``.

        Ends after ``year`` (including OPEN) clip to ``year`` so the value
        never leaks future records.
        """
        end = year if self.end_year is None else min(self.end_year, year)
        return max(end - self.start_year, 0)


def _spell_sort_key(spell: EmploymentSpell) -> tuple[int, float, str]:
    end = float("inf") if spell.end_year is None else float(spell.end_year)
    return (spell.start_year, end, spell.org)


@dataclass(frozen=True)
class CareerTrajectory:
    """One person's ordered post-PhD employment history."""

    person: str
    phd_school: str
    grad_year: int
    spells: tuple[EmploymentSpell, ...]

    def __post_init__(self) -> None:
        if not self.person:
            raise ValueError("person id must be non-empty")
        if not self.spells:
            raise ValueError(f"trajectory for {self.person} has no spells")
        ordered = tuple(sorted(self.spells, key=_spell_sort_key))
        if ordered != self.spells:
            object.__setattr__(self, "spells", ordered)
        for spell in self.spells:
            if spell.start_year < self.grad_year - 1:
                raise ValueError(
                    f"{self.person}: spell at {spell.org} starts {spell.start_year}, "
                    f"more than a year before graduation {self.grad_year}"
                )

    @property
    def first_start(self) -> int:
        return self.spells[0].start_year

    def active_at(self, year: int, horizon: int) -> bool:
        return any(s.covers(year, horizon) for s in self.spells)

    def current_spell(self, year: int, horizon: int) -> EmploymentSpell | None:
        """The "most current" job at ``year``.

        Among concurrently held jobs the one started earlier wins; if no
        job is still held, the most recently ended spell covering or
        preceding ``year`` is returned.
        """
        held = [s for s in self.spells if s.held_at(year)]
        if held:
            return min(held, key=_spell_sort_key)
        past = [s for s in self.spells if s.start_year <= year]
        if not past:
            return None
        return max(past, key=lambda s: (s.end_or(horizon), s.start_year, s.org))


@dataclass(frozen=True)
class Transition:
    """A directed move between distinct employers in a given year."""

    person: str
    source: str
    target: str
    year: int
    kind: TransitionKind

    def __post_init__(self) -> None:
        if self.source == self.target:
            raise ValueError(f"transition for {self.person} has source == target ({self.source})")


@dataclass(frozen=True)
class Corpus:
    """A validated set of trajectories plus the organizations they reference."""

    trajectories: tuple[CareerTrajectory, ...]
    organizations: Mapping[str, Organization]
    horizon_year: int

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.trajectories, key=lambda t: t.person))
        if ordered != self.trajectories:
            object.__setattr__(self, "trajectories", ordered)
        seen: set[str] = set()
        for traj in self.trajectories:
            if traj.person in seen:
                raise ValueError(f"duplicate person id: {traj.person}")
            seen.add(traj.person)
            for org in (traj.phd_school, *(s.org for s in traj.spells)):
                if org not in self.organizations:
                    raise ValueError(f"unknown organization referenced: {org!r}")

    def __iter__(self) -> Iterable[CareerTrajectory]:
        return iter(self.trajectories)

    def sector_of(self, org: str) -> Sector:
        return self.organizations[org].sector

    def trajectory(self, person: str) -> CareerTrajectory:
        for traj in self.trajectories:
            if traj.person == person:
                return traj
        raise KeyError(person)


def truncate_corpus(corpus: Corpus, year: int) -> Corpus:
    """Restrict a corpus to what was knowable at the end of ``year``.

    Spells starting after ``year`` are dropped; ends after ``year`` become
    OPEN. Persons left with no spells are dropped. This is the reference
    operation for leakage checks: any feature computed "as of year t" must
    be unchanged by truncation at t.
    """
    kept: list[CareerTrajectory] = []
    used_orgs: set[str] = set()
    for traj in corpus.trajectories:
        spells = []
        for s in traj.spells:
            if s.start_year > year:
                continue
            end = s.end_year if (s.end_year is not None and s.end_year <= year) else None
            spells.append(EmploymentSpell(s.org, s.start_year, end, s.title, s.is_postdoc))
        if not spells:
            continue
        kept.append(CareerTrajectory(traj.person, traj.phd_school, traj.grad_year, tuple(spells)))
        used_orgs.add(traj.phd_school)
        used_orgs.update(s.org for s in spells)
    orgs = {oid: org for oid, org in corpus.organizations.items() if oid in used_orgs}
    return Corpus(tuple(kept), orgs, year)


@dataclass(frozen=True)
class FlowNetwork:
    """Per-year weighted directed multigraph over organizations.

    ``edges`` maps ``(source, target, year)`` to a nonnegative weight — a
    transition count on the raw network, a real value after reweighting.
    ``self_weights`` maps ``(org, year)`` to the number of PhDs employed
    there during that year before the year's transitions. The transitions
    the network was built from ride along so person-level reweighting can
    recover who moved on each edge.
    """

    years: tuple[int, ...]
    nodes: frozenset[str]
    edges: Mapping[tuple[str, str, int], float]
    self_weights: Mapping[tuple[str, int], float]
    transitions: tuple[Transition, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "years", tuple(sorted(self.years)))
        for key, w in self.edges.items():
            if w < 0:
                raise ValueError(f"negative edge weight on {key}")
        for key, w in self.self_weights.items():
            if w < 0:
                raise ValueError(f"negative self weight on {key}")

    def in_weight(self, org: str, year: int) -> float:
        return sum(w for (u, v, t), w in self.edges.items() if v == org and t == year)

    def out_weight(self, org: str, year: int) -> float:
        return sum(w for (u, v, t), w in self.edges.items() if u == org and t == year)

    def self_weight(self, org: str, year: int) -> float:
        return self.self_weights.get((org, year), 0.0)

    def nodes_in_year(self, year: int) -> frozenset[str]:
        present = {org for (org, t) in self.self_weights if t == year}
        for u, v, t in self.edges:
            if t == year:
                present.add(u)
                present.add(v)
        return frozenset(present)

    def reweighted(self, edges: Mapping[tuple[str, str, int], float]) -> "FlowNetwork":
        """Same network with new inter-org weights; self-weights unchanged."""
        return FlowNetwork(self.years, self.nodes, dict(edges), dict(self.self_weights), self.transitions)


@dataclass(frozen=True)
class RankingTable:
    """Hub/authority scores and ordinal ranks for one window."""

    window: tuple[int, int]
    hub: Mapping[str, float]
    authority: Mapping[str, float]
    hub_rank: Mapping[str, int]
    authority_rank: Mapping[str, int]
    converged: bool = True

    def __post_init__(self) -> None:
        n = len(self.hub)
        for ranks in (self.hub_rank, self.authority_rank):
            if sorted(ranks.values()) != list(range(1, n + 1)):
                raise ValueError("ranks must be a permutation of 1..N")

    @property
    def size(self) -> int:
        return len(self.hub)


IND_FEATURE_COUNT = 17
GF_FEATURE_COUNT = 8
R3_FEATURE_COUNT = 11


@dataclass(frozen=True)
class FeatureVector:
    """The per-(person, year) prediction instance.

    The realized layout is 17 individual values, 8 raw-network values and
    11 reweighted-network values (36 in total); see the predict module for
    the column enumeration.
    """

    person: str
    year: int
    ind: tuple[float, ...]
    gf: tuple[float, ...]
    r3: tuple[float, ...]
    label: bool

    def __post_init__(self) -> None:
        if len(self.ind) != IND_FEATURE_COUNT:
            raise ValueError(f"expected {IND_FEATURE_COUNT} individual features, got {len(self.ind)}")
        if len(self.gf) != GF_FEATURE_COUNT:
            raise ValueError(f"expected {GF_FEATURE_COUNT} flow-network features, got {len(self.gf)}")
        if len(self.r3) != R3_FEATURE_COUNT:
            raise ValueError(f"expected {R3_FEATURE_COUNT} reweighted-network features, got {len(self.r3)}")

    @property
    def values(self) -> tuple[float, ...]:
        return self.ind + self.gf + self.r3

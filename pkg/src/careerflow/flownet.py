"""Transition derivation and the yearly aggregate flow network."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

from careerflow.model import (
    CareerTrajectory,
    Corpus,
    EmploymentSpell,
    FlowNetwork,
    Transition,
    TransitionKind,
)


def classify_transition(prior: EmploymentSpell, new: EmploymentSpell) -> TransitionKind:
    """Soft if the prior job is still held when the new one starts.

    With whole-year granularity a prior job ending the same year the new
    one starts counts as "left before joining", i.e. hard.
    """
    if prior.end_year is None or prior.end_year > new.start_year:
        return TransitionKind.SOFT
    return TransitionKind.HARD


def _most_current_prior(
    prior_spells: Sequence[EmploymentSpell], year: int
) -> EmploymentSpell:
    """The employer a move at ``year`` departs from.

    Among jobs still held at ``year`` the one started earliest wins;
    if none are held, the most recently ended one is the source.
    """
    held = [s for s in prior_spells if s.held_at(year)]
    if held:
        return min(held, key=lambda s: (s.start_year, s.end_year is not None, s.end_year or 0, s.org))
    return max(prior_spells, key=lambda s: (s.end_year or 0, s.start_year, s.org))


def derive_transitions(corpus: Corpus) -> list[Transition]:
    """Extract one transition per move to a distinct employer.

    For each spell after the first whose organization differs from the
    person's most-current employer at that point, a transition is emitted
    from that employer in the new spell's start year.
    """
    transitions: list[Transition] = []
    for traj in corpus.trajectories:
        for j in range(1, len(traj.spells)):
            new = traj.spells[j]
            prior = _most_current_prior(traj.spells[:j], new.start_year)
            if prior.org == new.org:
                continue
            transitions.append(
                Transition(
                    person=traj.person,
                    source=prior.org,
                    target=new.org,
                    year=new.start_year,
                    kind=classify_transition(prior, new),
                )
            )
    return transitions


def build_network(
    transitions: Iterable[Transition],
    corpus: Corpus,
    years: Iterable[int],
) -> FlowNetwork:
    """Aggregate transitions into the yearly flow network.

    Edge weight (u, v, t) counts movers u->v in year t. The self weight
    (v, t) counts persons with a spell at v covering t, excluding those
    who arrive at v by transition in t — the employment stock in place
    before the year's flows.
    """
    years = tuple(sorted(set(years)))
    year_set = set(years)
    transitions = tuple(transitions)

    edges: dict[tuple[str, str, int], float] = defaultdict(float)
    kept: list[Transition] = []
    for tr in transitions:
        if tr.year in year_set:
            edges[(tr.source, tr.target, tr.year)] += 1.0
            kept.append(tr)

    arrivals = {(tr.person, tr.target, tr.year) for tr in transitions}
    self_weights: dict[tuple[str, int], float] = defaultdict(float)
    for traj in corpus.trajectories:
        for year in years:
            present: set[str] = set()
            for spell in traj.spells:
                if spell.covers(year, corpus.horizon_year) and (traj.person, spell.org, year) not in arrivals:
                    present.add(spell.org)
            for org in present:
                self_weights[(org, year)] += 1.0

    nodes = {org for (org, _t) in self_weights}
    for u, v, _t in edges:
        nodes.add(u)
        nodes.add(v)
    return FlowNetwork(
        years=years,
        nodes=frozenset(nodes),
        edges=dict(edges),
        self_weights=dict(self_weights),
        transitions=tuple(kept),
    )


@dataclass(frozen=True)
class WeightedDigraph:
    """A single-layer weighted digraph (what the ranking stage consumes)."""

    nodes: tuple[str, ...]
    weights: Mapping[tuple[str, str], float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(sorted(set(self.nodes))))
        node_set = set(self.nodes)
        for (u, v), w in self.weights.items():
            if u not in node_set or v not in node_set:
                raise ValueError(f"edge ({u}, {v}) references unknown node")
            if w < 0:
                raise ValueError(f"negative weight on ({u}, {v})")

    @property
    def total_weight(self) -> float:
        return sum(self.weights.values())


def window_aggregate(net: FlowNetwork, window: tuple[int, int]) -> WeightedDigraph:
    """Sum yearly inter-org weights over an inclusive window.

    Self-loops are deliberately not carried over: ranking employment
    stock together with flow would conflate size with movement.
    """
    start, end = window
    if start > end:
        raise ValueError(f"window start {start} after end {end}")
    weights: dict[tuple[str, str], float] = defaultdict(float)
    nodes: set[str] = set()
    for (u, v, t), w in net.edges.items():
        if start <= t <= end:
            weights[(u, v)] += w
            nodes.add(u)
            nodes.add(v)
    for (org, t) in net.self_weights:
        if start <= t <= end:
            nodes.add(org)
    return WeightedDigraph(tuple(nodes), dict(weights))


def is_postdoc_arrival(corpus: Corpus, transition: Transition) -> bool:
    """True if the spell this transition arrives into is a postdoc."""
    traj = corpus.trajectory(transition.person)
    for spell in traj.spells:
        if spell.org == transition.target and spell.start_year == transition.year:
            return spell.is_postdoc
    return False


EDGE_COLUMNS = ("source", "target", "year", "weight")
SELF_COLUMNS = ("org", "year", "self_weight")


def write_edges(net: FlowNetwork, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(EDGE_COLUMNS)
    for (u, v, t) in sorted(net.edges):
        writer.writerow((u, v, t, f"{net.edges[(u, v, t)]:.6f}"))


def write_self_weights(net: FlowNetwork, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SELF_COLUMNS)
    for (org, t) in sorted(net.self_weights):
        writer.writerow((org, t, f"{net.self_weights[(org, t)]:.6f}"))

"""Edge-weight transformations: resources, retention, relative growth.

Each score produces a per-edge multiplicative factor in [0, 1]:

* resources — edges carry the mean logistic expertise score of the people
  who moved on them, concentrating flow around experienced movers;
* retention — outgoing edges of an organization scale by one minus its
  logistic retention score, amplifying outflux from low-retention
  employers;
* relative growth — incoming edges scale by a max-normalized exponential
  of the log influx/outflux ratio over organization size, boosting small
  fast-growing destinations.

The unified transform computes all three factor sets from the original
untransformed network and multiplies them, so composition order cannot
change the result. Natural log throughout.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping

from careerflow.model import Corpus, FlowNetwork, Sector


@dataclass(frozen=True)
class R3Params:
    """Steepness controls for the three transforms.

    ``alpha_ratio`` and ``beta_ratio`` set the logistic scale as a
    fraction of the relevant mean (system career length, sector
    retention); ``gamma`` is the exponential growth steepness.
    """

    alpha_ratio: float = 0.5
    beta_ratio: float = 0.5
    gamma: float = 1.5

    def __post_init__(self) -> None:
        if self.alpha_ratio <= 0 or self.beta_ratio <= 0 or self.gamma <= 0:
            raise ValueError("R3Params must be strictly positive")


def logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def _scaled_logistic(delta: float, scale: float) -> float:
    """logistic(delta / scale) with the degenerate zero-scale limit."""
    if scale == 0:
        if delta == 0:
            return 0.5
        return 1.0 if delta > 0 else 0.0
    return logistic(delta / scale)


def career_length(traj, year: int) -> int:
    """Years since the first post-PhD job started."""
    first = traj.first_start
    if year < first:
        raise ValueError(f"{traj.person}: year {year} precedes career start {first}")
    return year - first


def system_mean_career_length(corpus: Corpus, year: int) -> float:
    """Mean career length over persons with a spell covering ``year``."""
    lengths = [
        career_length(traj, year)
        for traj in corpus.trajectories
        if traj.active_at(year, corpus.horizon_year)
    ]
    if not lengths:
        raise ValueError(f"no persons active in {year}")
    return sum(lengths) / len(lengths)


def r_src(length: float, system_mean: float, params: R3Params | None = None) -> float:
    """Logistic expertise score of a mover's career length vs. the system mean."""
    params = params or R3Params()
    if system_mean <= 0:
        return _scaled_logistic(length - system_mean, 0.0)
    return _scaled_logistic(length - system_mean, params.alpha_ratio * system_mean)


def org_mean_retention(org: str, year: int, corpus: Corpus) -> float:
    """Mean spell duration at ``org`` over spells started by ``year``.

    Durations clip at ``year`` (also for spells recorded as ending later),
    so the value only reflects what was observable then.
    """
    durations = [
        spell.duration_at(year)
        for traj in corpus.trajectories
        for spell in traj.spells
        if spell.org == org and spell.start_year <= year
    ]
    if not durations:
        raise ValueError(f"{org}: no employment history by {year}")
    return sum(durations) / len(durations)


def sector_mean_retention(sector: Sector, year: int, corpus: Corpus) -> float:
    """Mean spell duration pooled over every organization in the sector."""
    durations = [
        spell.duration_at(year)
        for traj in corpus.trajectories
        for spell in traj.spells
        if corpus.sector_of(spell.org) == sector and spell.start_year <= year
    ]
    if not durations:
        raise ValueError(f"{sector.value}: no employment history by {year}")
    return sum(durations) / len(durations)


def r_tn(org: str, year: int, corpus: Corpus, params: R3Params | None = None) -> float:
    """Logistic retention score of an org vs. its sector's mean.

    An organization with no history by ``year`` gets the neutral 0.5
    (sector-mean prior), keeping the outgoing-edge transform defined.
    """
    params = params or R3Params()
    sector = corpus.sector_of(org)
    sector_mean = sector_mean_retention(sector, year, corpus)
    try:
        org_mean = org_mean_retention(org, year, corpus)
    except ValueError:
        return 0.5
    return _scaled_logistic(org_mean - sector_mean, params.beta_ratio * sector_mean)


def r_gr(org: str, year: int, net: FlowNetwork) -> float:
    """Log influx/outflux difference normalized by organization size.

    Plus-one smoothing keeps the value defined when any of influx,
    outflux, or the employment stock is zero.
    """
    influx = net.in_weight(org, year)
    outflux = net.out_weight(org, year)
    size = net.self_weight(org, year)
    return (math.log(influx + 1.0) - math.log(outflux + 1.0)) / (math.log(size + 1.0) + 1.0)


def resource_factors(
    net: FlowNetwork, corpus: Corpus, params: R3Params | None = None
) -> dict[tuple[str, str, int], float]:
    """Per-edge mean mover expertise score (the Eq.-style averaging means
    a raw count edge becomes the sum of its movers' scores)."""
    params = params or R3Params()
    scores: dict[tuple[str, str, int], list[float]] = defaultdict(list)
    means: dict[int, float] = {}
    trajs = {traj.person: traj for traj in corpus.trajectories}
    for tr in net.transitions:
        if tr.year not in means:
            means[tr.year] = system_mean_career_length(corpus, tr.year)
        traj = trajs.get(tr.person)
        if traj is None:
            raise ValueError(f"transition person {tr.person} not in corpus")
        length = career_length(traj, tr.year)
        scores[(tr.source, tr.target, tr.year)].append(r_src(length, means[tr.year], params))
    factors: dict[tuple[str, str, int], float] = {}
    for key in net.edges:
        movers = scores.get(key)
        if not movers:
            raise ValueError(f"edge {key} has no underlying transitions; cannot score movers")
        factors[key] = sum(movers) / len(movers)
    return factors


def retention_factors(
    net: FlowNetwork, corpus: Corpus, params: R3Params | None = None
) -> dict[tuple[str, str, int], float]:
    """Per-edge (1 - retention score of the source org at the edge's year)."""
    params = params or R3Params()
    cache: dict[tuple[str, int], float] = {}
    factors: dict[tuple[str, str, int], float] = {}
    for (u, v, t) in net.edges:
        if (u, t) not in cache:
            cache[(u, t)] = 1.0 - r_tn(u, t, corpus, params)
        factors[(u, v, t)] = cache[(u, t)]
    return factors


def growth_factors(
    net: FlowNetwork, params: R3Params | None = None
) -> dict[tuple[str, str, int], float]:
    """Per-edge normalized exponential growth of the target org.

    The normalizer is the maximum exponential growth among organizations
    present in the same year, so the fastest-growing org's incoming edges
    keep full weight and every factor lies in (0, 1].
    """
    params = params or R3Params()
    exp_by_org: dict[tuple[str, int], float] = {}
    max_by_year: dict[int, float] = {}
    for year in net.years:
        for org in net.nodes_in_year(year):
            value = math.exp(params.gamma * r_gr(org, year, net))
            exp_by_org[(org, year)] = value
            max_by_year[year] = max(max_by_year.get(year, 0.0), value)
    factors: dict[tuple[str, str, int], float] = {}
    for (u, v, t) in net.edges:
        factors[(u, v, t)] = exp_by_org[(v, t)] / max_by_year[t]
    return factors


def _apply(net: FlowNetwork, factors: Mapping[tuple[str, str, int], float]) -> FlowNetwork:
    return net.reweighted({key: w * factors[key] for key, w in net.edges.items()})


def transform_resources(net: FlowNetwork, corpus: Corpus, params: R3Params | None = None) -> FlowNetwork:
    return _apply(net, resource_factors(net, corpus, params))


def transform_retention(net: FlowNetwork, corpus: Corpus, params: R3Params | None = None) -> FlowNetwork:
    return _apply(net, retention_factors(net, corpus, params))


def transform_growth(net: FlowNetwork, params: R3Params | None = None) -> FlowNetwork:
    return _apply(net, growth_factors(net, params))


def transform_unified(net: FlowNetwork, corpus: Corpus, params: R3Params | None = None) -> FlowNetwork:
    """Apply all three reweightings as one composed per-edge factor.

    Every factor is computed from the original weights, then the products
    are applied in a single pass; the outcome is therefore independent of
    any notional ordering of the three transforms.
    """
    params = params or R3Params()
    src = resource_factors(net, corpus, params)
    tn = retention_factors(net, corpus, params)
    gr = growth_factors(net, params)
    return net.reweighted(
        {key: w * src[key] * tn[key] * gr[key] for key, w in net.edges.items()}
    )

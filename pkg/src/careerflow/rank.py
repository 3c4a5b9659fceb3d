"""Weighted HITS, windowed ranking tables, and rank-change outliers."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from careerflow.flownet import WeightedDigraph, window_aggregate
from careerflow.model import Corpus, FlowNetwork, RankingTable, Transition
from careerflow.r3 import R3Params, transform_unified

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100


@dataclass(frozen=True)
class HitsResult:
    hub: dict[str, float]
    authority: dict[str, float]
    converged: bool
    iterations: int


def hits(
    graph: WeightedDigraph,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> HitsResult:
    """Weighted HITS fixed point.

    Per iteration: a <- W^T h, h <- W a, each renormalized to unit
    Euclidean norm; stops when the largest componentwise change of both
    vectors drops below ``tol``. Starts from the uniform vector. A graph
    with zero total weight yields uniform scores.
    """
    if not graph.nodes:
        raise ValueError("graph is empty")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = len(graph.nodes)
    index = {node: i for i, node in enumerate(graph.nodes)}
    uniform = 1.0 / np.sqrt(n)
    if graph.total_weight == 0:
        scores = {node: uniform for node in graph.nodes}
        return HitsResult(dict(scores), dict(scores), True, 0)

    w = np.zeros((n, n))
    for (u, v), weight in graph.weights.items():
        w[index[u], index[v]] += weight

    h = np.full(n, uniform)
    a = np.full(n, uniform)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        a_new = w.T @ h
        norm = np.linalg.norm(a_new)
        a_new = a_new / norm if norm > 0 else np.full(n, uniform)
        h_new = w @ a_new
        norm = np.linalg.norm(h_new)
        h_new = h_new / norm if norm > 0 else np.full(n, uniform)
        delta = max(np.max(np.abs(a_new - a)), np.max(np.abs(h_new - h)))
        a, h = a_new, h_new
        if delta < tol:
            converged = True
            break
    hub = {node: float(h[index[node]]) for node in graph.nodes}
    authority = {node: float(a[index[node]]) for node in graph.nodes}
    return HitsResult(hub, authority, converged, iterations)


def ordinal_ranks(scores: Mapping[str, float]) -> dict[str, int]:
    """Rank 1 = highest score; ties broken lexicographically by org id."""
    ordered = sorted(scores, key=lambda org: (-scores[org], org))
    return {org: rank for rank, org in enumerate(ordered, start=1)}


def ranking_table(graph: WeightedDigraph, window: tuple[int, int], tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> RankingTable:
    result = hits(graph, tol=tol, max_iter=max_iter)
    return RankingTable(
        window=window,
        hub=result.hub,
        authority=result.authority,
        hub_rank=ordinal_ranks(result.hub),
        authority_rank=ordinal_ranks(result.authority),
        converged=result.converged,
    )


def windowed_rankings(
    net: FlowNetwork,
    window_len: int = 5,
    step: int | None = None,
    transform: str = "none",
    corpus: Corpus | None = None,
    params: R3Params | None = None,
    start: int | None = None,
    end: int | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> list[RankingTable]:
    """Ranking tables over sliding windows of the flow network.

    Windows begin at ``start`` and advance by ``step`` while they still
    fit inside ``end`` (both default to the data's year range). With
    ``transform="r3"`` each year's edges are reweighted by the unified
    transform before aggregation; windows with no nodes are skipped.
    """
    if window_len < 1:
        raise ValueError("window_len must be >= 1")
    step = step or window_len
    if transform not in ("none", "r3"):
        raise ValueError(f"unknown transform {transform!r}")
    if transform == "r3":
        if corpus is None:
            raise ValueError("transform='r3' requires the corpus")
        net = transform_unified(net, corpus, params)
    if not net.years:
        return []
    start = start if start is not None else net.years[0]
    end = end if end is not None else net.years[-1]
    tables: list[RankingTable] = []
    s = start
    while s + window_len - 1 <= end:
        window = (s, s + window_len - 1)
        graph = window_aggregate(net, window)
        if not graph.nodes:
            logger.info("window %s-%s has no data; skipped", *window)
        else:
            tables.append(ranking_table(graph, window, tol=tol, max_iter=max_iter))
        s += step
    return tables


def rank_change_outliers(
    table_gf: RankingTable,
    table_r3: RankingTable,
    k: int,
    score: str = "authority",
) -> list[tuple[str, float]]:
    """Organizations whose reweighted rank deviates most from the raw one.

    Ordinary least squares of the reweighted rank on the raw rank over
    the common node set; the per-node absolute residual measures how much
    extra information the reweighting carried. Top-k descending, ties by
    org id.
    """
    if score not in ("authority", "hub"):
        raise ValueError(f"score must be 'authority' or 'hub', got {score!r}")
    ranks_gf = table_gf.authority_rank if score == "authority" else table_gf.hub_rank
    ranks_r3 = table_r3.authority_rank if score == "authority" else table_r3.hub_rank
    common = sorted(set(ranks_gf) & set(ranks_r3))
    if len(common) < 3:
        raise ValueError(f"regression needs >= 3 common nodes, got {len(common)}")
    x = np.array([ranks_gf[org] for org in common], dtype=float)
    y = np.array([ranks_r3[org] for org in common], dtype=float)
    x_mean, y_mean = x.mean(), y.mean()
    var = np.sum((x - x_mean) ** 2)
    slope = np.sum((x - x_mean) * (y - y_mean)) / var if var > 0 else 0.0
    intercept = y_mean - slope * x_mean
    residuals = np.abs(y - (intercept + slope * x))
    ordered = sorted(zip(common, residuals), key=lambda item: (-item[1], item[0]))
    return [(org, float(res)) for org, res in ordered[:k]]


def rank_delta(transition: Transition, table: RankingTable) -> int | None:
    """Authority-rank gain of a move: source rank minus target rank.

    Positive means the person moved to a better-ranked organization.
    None when either org is absent from the table (callers count these
    toward coverage, not toward averages).
    """
    src = table.authority_rank.get(transition.source)
    dst = table.authority_rank.get(transition.target)
    if src is None or dst is None:
        return None
    return src - dst


def preceding_tables(
    net: FlowNetwork,
    years: Iterable[int],
    window_len: int = 5,
    transform: str = "none",
    corpus: Corpus | None = None,
    params: R3Params | None = None,
) -> dict[int, RankingTable]:
    """For each year t, the ranking table of the window (t-len, t-1].

    This is the lookup used for rank deltas: a transition in year t is
    judged against the rankings of the window immediately preceding it.
    """
    if transform == "r3":
        if corpus is None:
            raise ValueError("transform='r3' requires the corpus")
        net = transform_unified(net, corpus, params)
    tables: dict[int, RankingTable] = {}
    for year in sorted(set(years)):
        window = (year - window_len, year - 1)
        graph = window_aggregate(net, window)
        if graph.nodes:
            tables[year] = ranking_table(graph, window)
    return tables


RANKING_COLUMNS = (
    "org",
    "window_start",
    "window_end",
    "hub_score",
    "hub_rank",
    "auth_score",
    "auth_rank",
    "converged",
)


def write_rankings(tables: Sequence[RankingTable], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RANKING_COLUMNS)
    for table in tables:
        for org in sorted(table.hub):
            writer.writerow(
                (
                    org,
                    table.window[0],
                    table.window[1],
                    f"{table.hub[org]:.6f}",
                    table.hub_rank[org],
                    f"{table.authority[org]:.6f}",
                    table.authority_rank[org],
                    int(table.converged),
                )
            )

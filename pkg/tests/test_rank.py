from __future__ import annotations

import math

import numpy as np
import pytest

from careerflow.flownet import WeightedDigraph, build_network, derive_transitions
from careerflow.model import RankingTable, Sector, Transition, TransitionKind
from careerflow.rank import (
    hits,
    ordinal_ranks,
    preceding_tables,
    rank_change_outliers,
    rank_delta,
    ranking_table,
    windowed_rankings,
)
from careerflow.model import CareerTrajectory, EmploymentSpell
from conftest import corpus_of


def graph_of(weights: dict, extra_nodes=()) -> WeightedDigraph:
    nodes = set(extra_nodes)
    for u, v in weights:
        nodes.add(u)
        nodes.add(v)
    return WeightedDigraph(tuple(nodes), weights)


def test_single_edge_graph():
    result = hits(graph_of({("a", "b"): 3.5}))
    assert result.hub["a"] == pytest.approx(1.0)
    assert result.authority["b"] == pytest.approx(1.0)
    assert result.hub["b"] == pytest.approx(0.0)
    assert result.authority["a"] == pytest.approx(0.0)
    assert result.converged


def test_symmetric_complete_digraph():
    nodes = ("a", "b", "c")
    weights = {(u, v): 2.0 for u in nodes for v in nodes if u != v}
    result = hits(graph_of(weights))
    expected = 1.0 / math.sqrt(3.0)
    for node in nodes:
        assert result.hub[node] == pytest.approx(expected, abs=1e-9)
        assert result.authority[node] == pytest.approx(expected, abs=1e-9)


def test_zero_weight_graph_gives_uniform_scores():
    result = hits(WeightedDigraph(("a", "b", "c", "d"), {}))
    assert result.converged
    for v in result.hub.values():
        assert v == pytest.approx(0.5)


def _power_iteration_dominant(m: np.ndarray, iters: int = 50000) -> np.ndarray:
    """Independent oracle: dense power iteration from the uniform vector."""
    x = np.full(m.shape[0], 1.0 / math.sqrt(m.shape[0]))
    for _ in range(iters):
        nxt = m @ x
        norm = np.linalg.norm(nxt)
        if norm == 0:
            return x
        nxt /= norm
        if np.max(np.abs(nxt - x)) < 1e-15:
            return nxt
        x = nxt
    return x


def _random_graph(rng: np.random.Generator):
    n = int(rng.integers(3, 11))
    names = [f"n{i}" for i in range(n)]
    w = {}
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < 0.5:
                w[(names[i], names[j])] = float(rng.uniform(0.1, 5.0))
    if not w:
        w[(names[0], names[1])] = 1.0
    return graph_of(w, extra_nodes=names)


def test_hits_matches_dense_eigenvector_oracle():
    rng = np.random.default_rng(42)
    for _ in range(30):
        graph = _random_graph(rng)
        result = hits(graph, tol=1e-14, max_iter=30000)
        names = graph.nodes
        idx = {v: i for i, v in enumerate(names)}
        w = np.zeros((len(names), len(names)))
        for (u, v), weight in graph.weights.items():
            w[idx[u], idx[v]] = weight
        auth_oracle = _power_iteration_dominant(w.T @ w)
        hub_oracle = _power_iteration_dominant(w @ w.T)
        for v in names:
            assert result.authority[v] == pytest.approx(auth_oracle[idx[v]], abs=1e-6)
            assert result.hub[v] == pytest.approx(hub_oracle[idx[v]], abs=1e-6)


def test_scores_invariant_under_uniform_scaling():
    rng = np.random.default_rng(7)
    graph = _random_graph(rng)
    scaled = graph_of({k: 37.5 * w for k, w in graph.weights.items()}, extra_nodes=graph.nodes)
    a = hits(graph, tol=1e-12, max_iter=2000)
    b = hits(scaled, tol=1e-12, max_iter=2000)
    for v in graph.nodes:
        assert a.hub[v] == pytest.approx(b.hub[v], abs=1e-9)
        assert a.authority[v] == pytest.approx(b.authority[v], abs=1e-9)


def test_scores_are_permutation_equivariant():
    weights = {("a", "b"): 1.0, ("b", "c"): 2.0, ("a", "c"): 3.0}
    renamed = {("x" + u, "x" + v): w for (u, v), w in weights.items()}
    a = hits(graph_of(weights))
    b = hits(graph_of(renamed))
    for v in ("a", "b", "c"):
        assert a.hub[v] == pytest.approx(b.hub["x" + v], abs=1e-12)
        assert a.authority[v] == pytest.approx(b.authority["x" + v], abs=1e-12)


def test_convergence_flag_reports_early_stop():
    rng = np.random.default_rng(3)
    graph = _random_graph(rng)
    assert not hits(graph, tol=1e-12, max_iter=1).converged
    assert hits(graph, tol=1e-6, max_iter=500).converged


def test_ordinal_ranks_deterministic_ties():
    ranks = ordinal_ranks({"b": 0.5, "a": 0.5, "c": 0.9})
    assert ranks == {"c": 1, "a": 2, "b": 3}
    assert sorted(ranks.values()) == [1, 2, 3]


def test_isolated_nodes_rank_after_scored_ones():
    graph = graph_of({("a", "b"): 1.0}, extra_nodes=("z-island", "m-island"))
    table = ranking_table(graph, (2000, 2004))
    assert table.authority_rank["b"] == 1
    # zero-score nodes follow, ordered lexicographically
    zeros = sorted(
        (org for org, score in table.authority.items() if score == 0.0),
    )
    expected_rank = 2
    for org in zeros:
        assert table.authority_rank[org] == expected_rank
        expected_rank += 1


def _yearly_corpus(years):
    """One a->b mover per given year."""
    sectors = {"a": Sector.INDUSTRY, "b": Sector.INDUSTRY, "u": Sector.ACADEMIA}
    trajs = []
    for i, year in enumerate(years):
        trajs.append(
            CareerTrajectory(
                f"p{i}", "u", year - 1,
                (EmploymentSpell("a", year - 1, year), EmploymentSpell("b", year, None)),
            )
        )
    return corpus_of(trajs, sectors, max(years) + 1)


def test_windowed_rankings_five_year_intervals():
    corpus = _yearly_corpus(range(1980, 2016))
    net = build_network(derive_transitions(corpus), corpus, years=range(1980, 2016))
    tables = windowed_rankings(net, window_len=5, step=5)
    assert [t.window for t in tables] == [
        (1980, 1984),
        (1985, 1989),
        (1990, 1994),
        (1995, 1999),
        (2000, 2004),
        (2005, 2009),
        (2010, 2014),
    ]


def test_windowed_rankings_single_window_and_skip():
    corpus = _yearly_corpus([2000, 2001])
    net = build_network(derive_transitions(corpus), corpus, years=range(1990, 2002))
    single = windowed_rankings(net, window_len=12, step=12, start=1990, end=2001)
    assert len(single) == 1 and single[0].window == (1990, 2001)
    # windows before any data are skipped
    skipped = windowed_rankings(net, window_len=5, step=5, start=1985, end=2001)
    assert [t.window for t in skipped] == [(2000, 2004)] or all(
        t.window != (1985, 1989) for t in skipped
    )


def _table_from_ranks(ranks: dict[str, int], window=(2000, 2004)) -> RankingTable:
    scores = {org: 1.0 / rank for org, rank in ranks.items()}
    norm = math.sqrt(sum(v * v for v in scores.values()))
    scores = {org: v / norm for org, v in scores.items()}
    return RankingTable(window, scores, scores, dict(ranks), dict(ranks))


def test_outliers_zero_residuals_for_identical_tables():
    ranks = {f"o{i}": i + 1 for i in range(6)}
    table = _table_from_ranks(ranks)
    top = rank_change_outliers(table, table, k=3)
    assert all(res == pytest.approx(0.0, abs=1e-12) for _org, res in top)


def test_outliers_flags_planted_shuffle():
    n = 30
    gf = {f"o{i:02d}": i + 1 for i in range(n)}
    r3 = dict(gf)
    # rotate three mid-range orgs through each other's ranks
    r3["o05"], r3["o15"], r3["o25"] = gf["o25"], gf["o05"], gf["o15"]
    top = rank_change_outliers(_table_from_ranks(gf), _table_from_ranks(r3), k=3)
    flagged = {org for org, _res in top}
    assert flagged == {"o05", "o15", "o25"}

    # independent least-squares oracle over the same data
    x = np.array([gf[o] for o in sorted(gf)], dtype=float)
    y = np.array([r3[o] for o in sorted(gf)], dtype=float)
    design = np.column_stack([np.ones_like(x), x])
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    residuals = np.abs(y - design @ beta)
    expected = dict(zip(sorted(gf), residuals))
    for org, res in top:
        assert res == pytest.approx(expected[org], abs=1e-9)


def test_outliers_need_three_common_nodes():
    a = _table_from_ranks({"x": 1, "y": 2})
    with pytest.raises(ValueError):
        rank_change_outliers(a, a, k=1)


def test_rank_delta_sign_and_missing_policy():
    table = _table_from_ranks({f"o{i}": i + 1 for i in range(60)})
    up = Transition("p", "o49", "o9", 2005, TransitionKind.HARD)
    down = Transition("p", "o9", "o49", 2005, TransitionKind.HARD)
    absent = Transition("p", "o9", "nowhere", 2005, TransitionKind.HARD)
    assert rank_delta(up, table) == 40
    assert rank_delta(down, table) == -40
    assert rank_delta(absent, table) is None


def test_preceding_tables_window_ends_before_year():
    corpus = _yearly_corpus(range(1998, 2006))
    net = build_network(derive_transitions(corpus), corpus, years=range(1995, 2006))
    tables = preceding_tables(net, [2003], window_len=5)
    assert tables[2003].window == (1998, 2002)

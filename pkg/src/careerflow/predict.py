"""Transition prediction: labels, features, metrics, and the CV harness.

Features come in three groups — 17 individual career values, 8 raw-network
ranking values, 11 reweighted-network values — all computed strictly from
records dated at or before the prediction year. Any estimator exposing the
sklearn-style ``fit(X, y)`` / ``predict_proba(X)`` / ``get_params()``
surface plugs into the harness; a deterministic logistic-regression
baseline ships with it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from careerflow.flownet import build_network, derive_transitions, window_aggregate
from careerflow.model import (
    CareerTrajectory,
    Corpus,
    FeatureVector,
    FlowNetwork,
    RankingTable,
    Sector,
    Transition,
    TransitionKind,
)
from careerflow.r3 import (
    R3Params,
    career_length,
    r_gr,
    r_src,
    r_tn,
    system_mean_career_length,
    transform_unified,
)
from careerflow.rank import ranking_table

IND_COLUMNS = (
    "ind_years_since_grad",
    "ind_career_length",
    "ind_num_employers",
    "ind_avg_years_per_employer",
    "ind_years_at_current",
    "ind_num_jobs_industry",
    "ind_num_jobs_not_industry",
    "ind_num_inter_sector_transitions",
    "ind_first_sector",
    "ind_current_sector",
    "ind_num_hard",
    "ind_num_soft",
    "ind_num_postdocs",
    "ind_is_senior",
    "ind_is_founder_or_ceo",
    "ind_is_professor",
    "ind_is_researcher_engineer_or_visiting",
)
GF_COLUMNS = (
    "gf_hub_score_now",
    "gf_hub_rank_now",
    "gf_auth_score_now",
    "gf_auth_rank_now",
    "gf_hub_score_joined",
    "gf_hub_rank_joined",
    "gf_auth_score_joined",
    "gf_auth_rank_joined",
)
R3_COLUMNS = (
    "r3_src_score",
    "r3_tn_score",
    "r3_gr_score",
    "r3_hub_score_now",
    "r3_hub_rank_now",
    "r3_auth_score_now",
    "r3_auth_rank_now",
    "r3_hub_score_joined",
    "r3_hub_rank_joined",
    "r3_auth_score_joined",
    "r3_auth_rank_joined",
)
ALL_COLUMNS = IND_COLUMNS + GF_COLUMNS + R3_COLUMNS

CONFIGS = ("ind", "ind+gf", "ind+r3", "all")
CONFIG_GROUPS: dict[str, tuple[str, ...]] = {
    "ind": ("ind",),
    "ind+gf": ("ind", "gf"),
    "ind+r3": ("ind", "r3"),
    "all": ("ind", "gf", "r3"),
}

SECTOR_CODES = {Sector.INDUSTRY: 0, Sector.ACADEMIA: 1, Sector.GOVERNMENT: 2}

_TITLE_KEYWORDS = {
    "senior": ("senior", "principal", "staff", "distinguished", "director", "vp", "chief"),
    "founder_or_ceo": ("founder", "ceo", "co-founder"),
    "professor": ("professor", "lecturer", "faculty"),
    "researcher": ("research", "scientist"),
    "engineer": ("engineer", "developer"),
    "visiting": ("visiting",),
}


def title_flags(title: str) -> dict[str, bool]:
    lowered = title.lower()
    return {
        name: any(keyword in lowered for keyword in keywords)
        for name, keywords in _TITLE_KEYWORDS.items()
    }


def make_labels(
    corpus: Corpus,
    t: int,
    n: int,
    transitions: Sequence[Transition] | None = None,
) -> list[tuple[str, bool]]:
    """Label each person employed at ``t`` with "transitions within n years".

    True iff the person has a transition with year in (t, t+n]. Persons
    not active at ``t`` are excluded.
    """
    if n < 1:
        raise ValueError("horizon n must be >= 1")
    if transitions is None:
        transitions = derive_transitions(corpus)
    movers_by_person: dict[str, list[int]] = {}
    for tr in transitions:
        movers_by_person.setdefault(tr.person, []).append(tr.year)
    labels = []
    for traj in corpus.trajectories:
        if not traj.active_at(t, corpus.horizon_year):
            continue
        years = movers_by_person.get(traj.person, ())
        labels.append((traj.person, any(t < y <= t + n for y in years)))
    return labels


def features_individual(
    traj: CareerTrajectory,
    t: int,
    corpus: Corpus,
    transitions: Sequence[Transition],
) -> tuple[float, ...]:
    """The 17 individual career-trajectory features at year ``t``.

    Everything is computed from spells started by ``t`` and transitions
    dated at or before ``t``; durations clip at ``t``.
    """
    if not traj.active_at(t, corpus.horizon_year):
        raise ValueError(f"{traj.person} is not employed in {t}")
    past = [s for s in traj.spells if s.start_year <= t]
    employers = {s.org for s in past}
    total_years = sum(s.duration_at(t) for s in past)
    current = traj.current_spell(t, corpus.horizon_year)
    assert current is not None
    years_at_current = sum(s.duration_at(t) for s in past if s.org == current.org)
    industry_jobs = sum(1 for s in past if corpus.sector_of(s.org) is Sector.INDUSTRY)
    own = [tr for tr in transitions if tr.person == traj.person and tr.year <= t]
    inter_sector = sum(
        1 for tr in own if corpus.sector_of(tr.source) is not corpus.sector_of(tr.target)
    )
    hard = sum(1 for tr in own if tr.kind is TransitionKind.HARD)
    soft = len(own) - hard
    flags = title_flags(current.title)
    return (
        float(t - traj.grad_year),
        float(career_length(traj, t)),
        float(len(employers)),
        total_years / len(employers),
        float(years_at_current),
        float(industry_jobs),
        float(len(past) - industry_jobs),
        float(inter_sector),
        float(SECTOR_CODES[corpus.sector_of(traj.spells[0].org)]),
        float(SECTOR_CODES[corpus.sector_of(current.org)]),
        float(hard),
        float(soft),
        float(sum(1 for s in past if s.is_postdoc)),
        float(flags["senior"]),
        float(flags["founder_or_ceo"]),
        float(flags["professor"]),
        float(flags["researcher"] or flags["engineer"] or flags["visiting"]),
    )


class RankingContext:
    """Window ranking tables for feature extraction, computed lazily.

    One table per (transform, window end year); the window spans the
    ``window_len`` years up to and including the end year. The reweighted
    network is derived once from the raw one.
    """

    def __init__(
        self,
        net: FlowNetwork,
        corpus: Corpus,
        window_len: int = 5,
        params: R3Params | None = None,
    ):
        self.window_len = window_len
        self._nets = {"gf": net, "r3": transform_unified(net, corpus, params)}
        self._tables: dict[tuple[str, int], RankingTable | None] = {}

    def table(self, transform: str, end_year: int) -> RankingTable | None:
        key = (transform, end_year)
        if key not in self._tables:
            window = (end_year - self.window_len + 1, end_year)
            graph = window_aggregate(self._nets[transform], window)
            self._tables[key] = ranking_table(graph, window) if graph.nodes else None
        return self._tables[key]

    def org_features(self, transform: str, org: str, end_year: int) -> tuple[float, float, float, float]:
        """(hub score, hub rank, authority score, authority rank) with the
        missing-org sentinel: score 0, rank N+1."""
        table = self.table(transform, end_year)
        if table is None:
            return (0.0, 1.0, 0.0, 1.0)
        if org not in table.hub:
            sentinel = float(table.size + 1)
            return (0.0, sentinel, 0.0, sentinel)
        return (
            table.hub[org],
            float(table.hub_rank[org]),
            table.authority[org],
            float(table.authority_rank[org]),
        )


def features_network(
    traj: CareerTrajectory,
    t: int,
    corpus: Corpus,
    ctx: RankingContext,
    transform: str,
) -> tuple[float, ...]:
    """Eight ranking features of the current employer: the window ending
    at ``t`` and the window ending the year the person joined it."""
    current = traj.current_spell(t, corpus.horizon_year)
    if current is None:
        raise ValueError(f"{traj.person} has no employment by {t}")
    now = ctx.org_features(transform, current.org, t)
    joined = ctx.org_features(transform, current.org, current.start_year)
    return now + joined


def features_r3_scores(
    traj: CareerTrajectory,
    t: int,
    corpus: Corpus,
    net: FlowNetwork,
    params: R3Params | None = None,
    system_mean: float | None = None,
) -> tuple[float, float, float]:
    """(mover expertise of the person, retention of the current employer,
    relative growth of the current employer) at year ``t``."""
    params = params or R3Params()
    current = traj.current_spell(t, corpus.horizon_year)
    if current is None:
        raise ValueError(f"{traj.person} has no employment by {t}")
    if system_mean is None:
        system_mean = system_mean_career_length(corpus, t)
    return (
        r_src(career_length(traj, t), system_mean, params),
        r_tn(current.org, t, corpus, params),
        r_gr(current.org, t, net),
    )


@dataclass(frozen=True)
class PredictionDataset:
    """Feature matrix plus instance metadata for one horizon ``n``."""

    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]
    persons: tuple[str, ...]
    ts: tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        if self.X.shape != (len(self.persons), len(self.columns)):
            raise ValueError("feature matrix shape does not match metadata")
        if len(self.y) != len(self.persons):
            raise ValueError("label vector length mismatch")

    def config_indices(self, config: str) -> list[int]:
        groups = CONFIG_GROUPS[config]
        prefixes = tuple(f"{g}_" for g in groups)
        return [i for i, col in enumerate(self.columns) if col.startswith(prefixes)]


def build_dataset(
    corpus: Corpus,
    years: Iterable[int],
    n: int,
    net: FlowNetwork | None = None,
    window_len: int = 5,
    params: R3Params | None = None,
) -> PredictionDataset:
    """Assemble (person, year) instances over the prediction years."""
    params = params or R3Params()
    transitions = derive_transitions(corpus)
    if net is None:
        first = min(traj.first_start for traj in corpus.trajectories)
        net = build_network(transitions, corpus, range(first, corpus.horizon_year + 1))
    ctx = RankingContext(net, corpus, window_len, params)

    rows: list[FeatureVector] = []
    for t in sorted(set(years)):
        labels = dict(make_labels(corpus, t, n, transitions))
        mean = system_mean_career_length(corpus, t)
        for traj in corpus.trajectories:
            if traj.person not in labels:
                continue
            ind = features_individual(traj, t, corpus, transitions)
            gf = features_network(traj, t, corpus, ctx, "gf")
            r3_net = features_network(traj, t, corpus, ctx, "r3")
            scores = features_r3_scores(traj, t, corpus, net, params, mean)
            rows.append(
                FeatureVector(traj.person, t, ind, gf, scores + r3_net, labels[traj.person])
            )

    X = np.array([row.values for row in rows], dtype=float) if rows else np.zeros((0, len(ALL_COLUMNS)))
    y = np.array([int(row.label) for row in rows], dtype=int)
    return PredictionDataset(
        X=X,
        y=y,
        columns=ALL_COLUMNS,
        persons=tuple(row.person for row in rows),
        ts=tuple(row.year for row in rows),
        n=n,
    )


def auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Probability a random positive outranks a random negative; ties 1/2."""
    y = np.asarray(labels).astype(bool)
    s = np.asarray(scores, dtype=float)
    n_pos = int(y.sum())
    n_neg = int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s), dtype=float)
    sorted_s = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    u = float(ranks[y].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def f1(labels: Sequence[int], predictions: Sequence[int]) -> float:
    """Harmonic mean of precision and recall; 0 when both are undefined."""
    y = np.asarray(labels).astype(bool)
    p = np.asarray(predictions).astype(bool)
    if len(y) != len(p) or len(y) == 0:
        raise ValueError("labels and predictions must be equal-length and non-empty")
    tp = int(np.sum(y & p))
    fp = int(np.sum(~y & p))
    fn = int(np.sum(y & ~p))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_grad(
    w: np.ndarray,
    Xb: np.ndarray,
    y: np.ndarray,
    l2: float,
    sample_weight: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Weighted L2-regularized logistic loss and gradient.

    ``Xb`` carries a trailing bias column; the bias is not regularized.
    """
    z = Xb @ w
    p = _sigmoid(z)
    eps = 1e-12
    total = sample_weight.sum()
    ce = -(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
    loss = float(np.dot(sample_weight, ce) / total)
    reg = w.copy()
    reg[-1] = 0.0
    loss += 0.5 * l2 * float(np.dot(reg, reg))
    grad = Xb.T @ (sample_weight * (p - y)) / total + l2 * reg
    return loss, grad


class BaselineLogisticRegression:
    """L2-regularized logistic regression trained by batch gradient descent.

    Features are standardized inside ``fit``; ``pos_weight`` scales the
    loss of positive examples (the label-balance knob). Training starts
    from zero weights, so results are fully deterministic.
    """

    def __init__(
        self,
        learning_rate: float = 0.5,
        n_iter: int = 500,
        l2: float = 1e-3,
        pos_weight: float = 1.0,
    ):
        self.learning_rate = learning_rate
        self.n_iter = n_iter
        self.l2 = l2
        self.pos_weight = pos_weight

    def get_params(self, deep: bool = True) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "n_iter": self.n_iter,
            "l2": self.l2,
            "pos_weight": self.pos_weight,
        }

    def set_params(self, **params) -> "BaselineLogisticRegression":
        for key, value in params.items():
            if not hasattr(self, key):
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, X: np.ndarray, y: np.ndarray) -> "BaselineLogisticRegression":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.std_ = np.where(std == 0, 1.0, std)
        Xs = (X - self.mean_) / self.std_
        Xb = np.hstack([Xs, np.ones((len(Xs), 1))])
        sample_weight = np.where(y == 1, self.pos_weight, 1.0)
        w = np.zeros(Xb.shape[1])
        for _ in range(self.n_iter):
            _, grad = logistic_loss_grad(w, Xb, y, self.l2, sample_weight)
            w -= self.learning_rate * grad
        self.coef_ = w[:-1]
        self.intercept_ = float(w[-1])
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        Xs = (np.asarray(X, dtype=float) - self.mean_) / self.std_
        return Xs @ self.coef_ + self.intercept_

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        p = _sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)


def positive_scores(classifier, X: np.ndarray) -> np.ndarray:
    """Positive-class probabilities from any contract-compatible estimator."""
    proba = np.asarray(classifier.predict_proba(X), dtype=float)
    if proba.ndim == 2:
        proba = proba[:, -1]
    if not np.all(np.isfinite(proba)):
        raise ValueError("classifier produced non-finite probabilities")
    return proba


def _clone(classifier, overrides: Mapping[str, object] | None = None):
    params = dict(classifier.get_params())
    if overrides:
        params.update(overrides)
    return type(classifier)(**params)


def stratified_kfold(y: np.ndarray, k: int, seed: int, max_attempts: int = 5) -> list[np.ndarray]:
    """Deterministic stratified folds; reshuffles with an offset seed if a
    fold ends up single-class, and raises when that is impossible."""
    if k < 2:
        raise ValueError("k must be >= 2")
    y = np.asarray(y)
    for attempt in range(max_attempts):
        rng = np.random.default_rng(seed + attempt)
        folds: list[list[int]] = [[] for _ in range(k)]
        for cls in np.unique(y):
            idx = np.flatnonzero(y == cls)
            rng.shuffle(idx)
            for i, sample in enumerate(idx):
                folds[i % k].append(int(sample))
        arrays = [np.sort(np.array(f, dtype=int)) for f in folds]
        if all(len(np.unique(y[f])) == len(np.unique(y)) for f in arrays if len(f)):
            return arrays
    raise ValueError(f"could not build {k} stratified folds with both classes")


@dataclass(frozen=True)
class MetricSummary:
    config: str
    n: int
    metric: str
    mean: float
    std: float
    folds: tuple[float, ...] = field(repr=False, default=())


def cross_validate(
    dataset: PredictionDataset,
    classifier,
    k: int = 10,
    grid: Mapping[str, Sequence[object]] | None = None,
    seed: int = 0,
    configs: Sequence[str] = ("ind", "ind+gf", "ind+r3", "all"),
) -> list[MetricSummary]:
    """Stratified k-fold evaluation per feature-group configuration.

    When a grid is given, each outer training fold is split once more
    (stratified, 3:1) and the grid point with the best inner-fold AUC is
    refit on the whole training fold. Fixed seed => bit-reproducible.
    """
    if len(dataset.y) == 0:
        raise ValueError("dataset is empty")
    folds = stratified_kfold(dataset.y, k, seed)
    results: list[MetricSummary] = []
    for config in configs:
        cols = dataset.config_indices(config)
        X = dataset.X[:, cols]
        auc_scores: list[float] = []
        f1_scores: list[float] = []
        for fold_id, test_idx in enumerate(folds):
            if len(test_idx) == 0:
                continue
            train_mask = np.ones(len(dataset.y), dtype=bool)
            train_mask[test_idx] = False
            X_train, y_train = X[train_mask], dataset.y[train_mask]
            X_test, y_test = X[test_idx], dataset.y[test_idx]
            model = _fit_with_grid(classifier, X_train, y_train, grid, seed + 1000 * (fold_id + 1))
            scores = positive_scores(model, X_test)
            auc_scores.append(auc(y_test, scores))
            f1_scores.append(f1(y_test, (scores >= 0.5).astype(int)))
        for metric, values in (("auc", auc_scores), ("f1", f1_scores)):
            arr = np.array(values)
            results.append(
                MetricSummary(config, dataset.n, metric, float(arr.mean()), float(arr.std()), tuple(values))
            )
    return results


def _fit_with_grid(classifier, X: np.ndarray, y: np.ndarray, grid, seed: int):
    if not grid:
        return _clone(classifier).fit(X, y)
    inner = stratified_kfold(y, 4, seed)
    val_idx = inner[0]
    train_mask = np.ones(len(y), dtype=bool)
    train_mask[val_idx] = False
    best_point: dict[str, object] | None = None
    best_auc = -1.0
    for point in _grid_points(grid):
        candidate = _clone(classifier, point).fit(X[train_mask], y[train_mask])
        score = auc(y[val_idx], positive_scores(candidate, X[val_idx]))
        if score > best_auc:
            best_auc = score
            best_point = point
    return _clone(classifier, best_point).fit(X, y)


def _grid_points(grid: Mapping[str, Sequence[object]]) -> list[dict[str, object]]:
    keys = sorted(grid)
    points: list[dict[str, object]] = [{}]
    for key in keys:
        points = [{**p, key: value} for p in points for value in grid[key]]
    return points


def write_dataset(dataset: PredictionDataset, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(("person_id", "t", "n", *dataset.columns, "label"))
    for i in range(len(dataset.persons)):
        writer.writerow(
            (
                dataset.persons[i],
                dataset.ts[i],
                dataset.n,
                *(f"{v:.6f}" for v in dataset.X[i]),
                int(dataset.y[i]),
            )
        )


def write_metrics(results: Sequence[MetricSummary], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(("config", "n", "metric", "mean", "std"))
    for row in results:
        writer.writerow((row.config, row.n, row.metric, f"{row.mean:.6f}", f"{row.std:.6f}"))

"""Descriptive and inferential statistics over transitions and corpora."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import betainc

from careerflow.flownet import is_postdoc_arrival
from careerflow.model import Corpus, RankingTable, Sector, Transition, TransitionKind


def _t_sf_two_sided(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t via the regularized
    incomplete beta function."""
    if math.isinf(t):
        return 0.0
    if t == 0:
        return 1.0
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def t_test_two_sided(sample_a: Sequence[float], sample_b: Sequence[float]) -> tuple[float, float]:
    """Welch's unequal-variance two-sample t-test.

    Degenerate convention: when both samples have zero variance, p is 1
    for equal means and 0 otherwise (t is signed infinity in the latter
    case).
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 observations")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    diff = a.mean() - b.mean()
    if va == 0 and vb == 0:
        if diff == 0:
            return 0.0, 1.0
        return math.copysign(math.inf, diff), 0.0
    sa, sb = va / a.size, vb / b.size
    t = diff / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    return float(t), _t_sf_two_sided(float(t), float(df))


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.size != yv.size:
        raise ValueError("samples must have equal length")
    if xv.size < 2:
        raise ValueError("need at least 2 points")
    dx = xv - xv.mean()
    dy = yv - yv.mean()
    sx = math.sqrt(float(np.sum(dx * dx)))
    sy = math.sqrt(float(np.sum(dy * dy)))
    if sx == 0 or sy == 0:
        raise ValueError("zero variance in a sample")
    return float(np.sum(dx * dy)) / (sx * sy)


def fleiss_kappa(ratings: Sequence[Sequence[int]]) -> float:
    """Inter-rater agreement over chance for fixed-size rater panels.

    ``ratings`` is an items x categories matrix of counts; every row must
    sum to the same number of raters n >= 2. When expected chance
    agreement is 1 (all ratings in one category) kappa is defined as 1.
    """
    m = np.asarray(ratings, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1:
        raise ValueError("ratings must be a non-empty 2-D count matrix")
    row_sums = m.sum(axis=1)
    n = row_sums[0]
    if n < 2 or not np.all(row_sums == n):
        raise ValueError("every item must be rated by the same n >= 2 raters")
    p_cat = m.sum(axis=0) / m.sum()
    p_item = (np.sum(m * m, axis=1) - n) / (n * (n - 1))
    p_bar = float(p_item.mean())
    p_exp = float(np.sum(p_cat * p_cat))
    if p_exp == 1.0:
        return 1.0
    return (p_bar - p_exp) / (1.0 - p_exp)


def soft_trend(
    transitions: Iterable[Transition],
    year_range: tuple[int, int] | None = None,
) -> tuple[float, float]:
    """OLS slope of the yearly soft-transition percentage on the year.

    Returns (slope in percentage points per year, two-sided p-value for
    slope != 0). Years with no transitions are skipped. A perfectly
    linear series has zero residual variance; the p-value is then 0 for a
    nonzero slope and 1 otherwise.
    """
    by_year: dict[int, list[Transition]] = defaultdict(list)
    for tr in transitions:
        if year_range is None or year_range[0] <= tr.year <= year_range[1]:
            by_year[tr.year].append(tr)
    years = sorted(by_year)
    if len(years) < 3:
        raise ValueError("need at least 3 years with transitions")
    x = np.array(years, dtype=float)
    y = np.array(
        [
            100.0 * sum(tr.kind is TransitionKind.SOFT for tr in by_year[yr]) / len(by_year[yr])
            for yr in years
        ]
    )
    dx = x - x.mean()
    var = float(np.sum(dx * dx))
    if var == 0:
        raise ValueError("degenerate year values")
    slope = float(np.sum(dx * (y - y.mean()))) / var
    intercept = float(y.mean()) - slope * float(x.mean())
    resid = y - (intercept + slope * x)
    n = len(years)
    sse = float(np.sum(resid * resid))
    if sse == 0:
        return slope, (1.0 if slope == 0 else 0.0)
    se = math.sqrt(sse / (n - 2) / var)
    t = slope / se
    return slope, _t_sf_two_sided(t, n - 2)


@dataclass(frozen=True)
class SectorFlowCell:
    count: int = 0
    hard: int = 0
    soft: int = 0
    mean_delta_gf: float | None = None
    mean_delta_r3: float | None = None
    covered_gf: int = 0
    covered_r3: int = 0


@dataclass(frozen=True)
class CrossSectorReport:
    cells: Mapping[tuple[Sector, Sector], SectorFlowCell]
    total: int
    cross_sector: int
    soft_total: int
    excluded_postdocs: int

    @property
    def cross_sector_share(self) -> float:
        return self.cross_sector / self.total if self.total else 0.0

    @property
    def soft_share(self) -> float:
        return self.soft_total / self.total if self.total else 0.0


def cross_sector_report(
    transitions: Iterable[Transition],
    corpus: Corpus,
    tables_gf: Mapping[int, RankingTable] | None = None,
    tables_r3: Mapping[int, RankingTable] | None = None,
    exclude_postdocs: bool = False,
) -> CrossSectorReport:
    """Transition counts and rank gains by (source sector, target sector).

    Rank-delta means use the ranking table for the window preceding each
    transition's year (keyed by year in the table maps); transitions with
    either endpoint missing from a table are excluded from that mean but
    counted in the corresponding coverage figure.
    """
    from careerflow.rank import rank_delta

    counts: dict[tuple[Sector, Sector], dict[str, float]] = defaultdict(
        lambda: {"count": 0, "hard": 0, "soft": 0, "sum_gf": 0.0, "n_gf": 0, "sum_r3": 0.0, "n_r3": 0}
    )
    total = cross = soft_total = excluded = 0
    for tr in transitions:
        if exclude_postdocs and is_postdoc_arrival(corpus, tr):
            excluded += 1
            continue
        src_sector = corpus.sector_of(tr.source)
        dst_sector = corpus.sector_of(tr.target)
        cell = counts[(src_sector, dst_sector)]
        cell["count"] += 1
        total += 1
        if src_sector is not dst_sector:
            cross += 1
        if tr.kind is TransitionKind.SOFT:
            cell["soft"] += 1
            soft_total += 1
        else:
            cell["hard"] += 1
        for tables, sum_key, n_key in ((tables_gf, "sum_gf", "n_gf"), (tables_r3, "sum_r3", "n_r3")):
            if tables is None:
                continue
            table = tables.get(tr.year)
            delta = rank_delta(tr, table) if table is not None else None
            if delta is not None:
                cell[sum_key] += delta
                cell[n_key] += 1

    cells = {
        key: SectorFlowCell(
            count=int(c["count"]),
            hard=int(c["hard"]),
            soft=int(c["soft"]),
            mean_delta_gf=(c["sum_gf"] / c["n_gf"]) if c["n_gf"] else None,
            mean_delta_r3=(c["sum_r3"] / c["n_r3"]) if c["n_r3"] else None,
            covered_gf=int(c["n_gf"]),
            covered_r3=int(c["n_r3"]),
        )
        for key, c in counts.items()
    }
    return CrossSectorReport(cells, total, cross, soft_total, excluded)


def employment_ccdf(corpus: Corpus) -> list[tuple[int, float]]:
    """Complementary CDF of per-organization distinct employee counts.

    Points (c, fraction of employing orgs with at least c employees) for
    each distinct count c, ascending. Organizations with no employment
    spells (e.g. pure PhD schools) are not part of the distribution.
    """
    employees: dict[str, set[str]] = defaultdict(set)
    for traj in corpus.trajectories:
        for spell in traj.spells:
            employees[spell.org].add(traj.person)
    if not employees:
        raise ValueError("corpus has no employment spells")
    sizes = sorted(len(v) for v in employees.values())
    n = len(sizes)
    points: list[tuple[int, float]] = []
    for count in sorted(set(sizes)):
        at_least = sum(1 for s in sizes if s >= count)
        points.append((count, at_least / n))
    return points


def retention_by_sector(corpus: Corpus, horizon: int | None = None) -> dict[Sector, float]:
    """Mean spell duration per sector, OPEN spells clipped at the horizon."""
    horizon = corpus.horizon_year if horizon is None else horizon
    durations: dict[Sector, list[int]] = defaultdict(list)
    for traj in corpus.trajectories:
        for spell in traj.spells:
            durations[corpus.sector_of(spell.org)].append(spell.end_or(horizon) - spell.start_year)
    return {sector: sum(vals) / len(vals) for sector, vals in durations.items()}


def write_cross_sector(report: CrossSectorReport, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(
        (
            "source_sector",
            "target_sector",
            "count",
            "hard",
            "soft",
            "share",
            "mean_delta_gf",
            "covered_gf",
            "mean_delta_r3",
            "covered_r3",
        )
    )
    for (src, dst) in sorted(report.cells, key=lambda k: (k[0].value, k[1].value)):
        cell = report.cells[(src, dst)]
        writer.writerow(
            (
                src.value,
                dst.value,
                cell.count,
                cell.hard,
                cell.soft,
                f"{cell.count / report.total:.6f}" if report.total else "0",
                "" if cell.mean_delta_gf is None else f"{cell.mean_delta_gf:.6f}",
                cell.covered_gf,
                "" if cell.mean_delta_r3 is None else f"{cell.mean_delta_r3:.6f}",
                cell.covered_r3,
            )
        )


def write_ccdf(points: Sequence[tuple[int, float]], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(("employee_count", "ccdf"))
    for count, frac in points:
        writer.writerow((count, f"{frac:.6f}"))


def write_retention(means: Mapping[Sector, float], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(("sector", "mean_retention_years"))
    for sector in Sector:
        if sector in means:
            writer.writerow((sector.value, f"{means[sector]:.6f}"))

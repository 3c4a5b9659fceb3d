from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats as scipy_stats

from careerflow.analysis import (
    cross_sector_report,
    employment_ccdf,
    fleiss_kappa,
    pearson_r,
    retention_by_sector,
    soft_trend,
    t_test_two_sided,
)
from careerflow.model import (
    CareerTrajectory,
    EmploymentSpell,
    RankingTable,
    Sector,
    Transition,
    TransitionKind,
)
from conftest import corpus_of

# The classic 10-item, 14-rater, 5-category agreement example.
FLEISS_EXAMPLE = (
    (0, 0, 0, 0, 14),
    (0, 2, 6, 4, 2),
    (0, 0, 3, 5, 6),
    (0, 3, 9, 2, 0),
    (2, 2, 8, 1, 1),
    (7, 7, 0, 0, 0),
    (3, 2, 6, 3, 0),
    (2, 5, 3, 2, 2),
    (6, 5, 2, 1, 0),
    (0, 2, 2, 3, 7),
)


class TestWelch:
    def test_identical_samples(self):
        t, p = t_test_two_sided([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert t == 0.0 and p == 1.0

    def test_known_example(self):
        t, p = t_test_two_sided([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
        assert t == pytest.approx(-1.0, abs=1e-12)
        assert p == pytest.approx(0.3465935070873342, abs=1e-9)

    def test_zero_variance_conventions(self):
        t, p = t_test_two_sided([10, 10, 10], [20, 20, 20])
        assert p == 0.0 and t == -math.inf
        t, p = t_test_two_sided([5, 5], [5, 5])
        assert p == 1.0

    def test_matches_scipy_and_is_symmetric(self):
        rng = np.random.default_rng(123)
        for _ in range(200):
            a = rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 3), size=int(rng.integers(3, 30)))
            b = rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 3), size=int(rng.integers(3, 30)))
            t, p = t_test_two_sided(a, b)
            t_ref, p_ref = scipy_stats.ttest_ind(a, b, equal_var=False)
            assert t == pytest.approx(float(t_ref), rel=1e-10)
            assert p == pytest.approx(float(p_ref), abs=1e-9)
            t_swapped, p_swapped = t_test_two_sided(b, a)
            assert t_swapped == pytest.approx(-t, rel=1e-12)
            assert p_swapped == pytest.approx(p, abs=1e-12)
            assert 0.0 <= p <= 1.0


class TestPearson:
    def test_perfect_correlations(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert pearson_r(x, [2 * v for v in x]) == pytest.approx(1.0, abs=1e-12)
        assert pearson_r(x, [-v for v in x]) == pytest.approx(-1.0, abs=1e-12)

    def test_hand_computed_example(self):
        assert pearson_r((1, 2, 3, 4), (1, 3, 2, 4)) == pytest.approx(0.8, abs=1e-12)

    def test_self_correlation_and_bounds(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            x = rng.normal(size=10)
            y = rng.normal(size=10)
            assert pearson_r(x, x) == pytest.approx(1.0, abs=1e-12)
            assert abs(pearson_r(x, y)) <= 1.0 + 1e-12

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError):
            pearson_r([1, 1, 1], [1, 2, 3])


class TestFleiss:
    def test_perfect_agreement(self):
        # all raters agree per item, more than one category used overall
        assert fleiss_kappa([(3, 0), (0, 3), (3, 0)]) == pytest.approx(1.0)

    def test_chance_structure_gives_zero(self):
        # mean observed agreement 0.5 equals expected chance agreement 0.5
        ratings = [(2, 0), (0, 2), (1, 1), (1, 1)]
        assert fleiss_kappa(ratings) == pytest.approx(0.0, abs=1e-12)

    def test_worked_example_against_pair_enumeration_oracle(self):
        kappa = fleiss_kappa(FLEISS_EXAMPLE)
        # oracle: agreement as the fraction of agreeing ordered rater pairs
        n = 14
        p_item = [sum(c * (c - 1) for c in row) / (n * (n - 1)) for row in FLEISS_EXAMPLE]
        p_bar = sum(p_item) / len(p_item)
        totals = [sum(col) for col in zip(*FLEISS_EXAMPLE)]
        grand = sum(totals)
        p_exp = sum((c / grand) ** 2 for c in totals)
        oracle = (p_bar - p_exp) / (1 - p_exp)
        assert kappa == pytest.approx(oracle, abs=1e-3)
        assert kappa == pytest.approx(0.2099, abs=1e-3)

    def test_invariance_under_permutations(self):
        base = fleiss_kappa(FLEISS_EXAMPLE)
        items_shuffled = FLEISS_EXAMPLE[::-1]
        assert fleiss_kappa(items_shuffled) == pytest.approx(base, abs=1e-12)
        cats_shuffled = tuple(row[::-1] for row in FLEISS_EXAMPLE)
        assert fleiss_kappa(cats_shuffled) == pytest.approx(base, abs=1e-12)

    def test_single_category_convention(self):
        assert fleiss_kappa([(4,), (4,)]) == 1.0

    def test_unequal_rater_counts_rejected(self):
        with pytest.raises(ValueError):
            fleiss_kappa([(2, 1), (1, 1)])


def _transitions_with_soft_share(year: int, soft: int, hard: int) -> list[Transition]:
    out = []
    for i in range(soft):
        out.append(Transition(f"s{year}-{i}", "a", "b", year, TransitionKind.SOFT))
    for i in range(hard):
        out.append(Transition(f"h{year}-{i}", "a", "b", year, TransitionKind.HARD))
    return out


class TestSoftTrend:
    def test_constant_share_has_zero_slope(self):
        transitions = []
        for year in (2000, 2001, 2002, 2003):
            transitions += _transitions_with_soft_share(year, 1, 4)  # 20% each year
        slope, p = soft_trend(transitions)
        assert slope == pytest.approx(0.0, abs=1e-12)
        assert p == 1.0

    def test_exactly_linear_shares(self):
        mix = {2000: (1, 9), 2001: (3, 22), 2002: (7, 43), 2003: (4, 21)}
        transitions = []
        for year, (soft, hard) in mix.items():
            transitions += _transitions_with_soft_share(year, soft, hard)
        slope, p = soft_trend(transitions)
        assert slope == pytest.approx(2.0, abs=1e-9)
        assert p < 0.05

    def test_needs_three_years(self):
        transitions = _transitions_with_soft_share(2000, 1, 1)
        with pytest.raises(ValueError):
            soft_trend(transitions)

    def test_year_range_filter(self):
        transitions = []
        for year in (2000, 2001, 2002, 2010):
            transitions += _transitions_with_soft_share(year, 1, 4)
        slope, _ = soft_trend(transitions, year_range=(2000, 2002))
        assert slope == pytest.approx(0.0, abs=1e-12)


def _cross_sector_fixture():
    sectors = {
        "uni-1": Sector.ACADEMIA,
        "uni-2": Sector.ACADEMIA,
        "co-1": Sector.INDUSTRY,
        "school": Sector.ACADEMIA,
    }
    trajs = [
        CareerTrajectory("p1", "school", 2000, (
            EmploymentSpell("uni-1", 2000, 2005), EmploymentSpell("co-1", 2005, None))),
        CareerTrajectory("p2", "school", 2001, (
            EmploymentSpell("uni-2", 2001, None), EmploymentSpell("co-1", 2006, None))),
        CareerTrajectory("p3", "school", 2000, (
            EmploymentSpell("co-1", 2000, 2004), EmploymentSpell("uni-1", 2004, None, "Postdoc", True))),
    ]
    return corpus_of(trajs, sectors, 2010)


class TestCrossSector:
    def test_counts_and_shares(self):
        from careerflow.flownet import derive_transitions

        corpus = _cross_sector_fixture()
        transitions = derive_transitions(corpus)
        report = cross_sector_report(transitions, corpus)
        a2i = report.cells[(Sector.ACADEMIA, Sector.INDUSTRY)]
        i2a = report.cells[(Sector.INDUSTRY, Sector.ACADEMIA)]
        assert a2i.count == 2 and i2a.count == 1
        assert report.cross_sector == 3 and report.total == 3
        assert report.cross_sector_share == 1.0
        assert a2i.hard == 1 and a2i.soft == 1
        assert report.soft_share == pytest.approx(1 / 3)

    def test_single_sector_means_zero_cross_share(self):
        sectors = {"a": Sector.INDUSTRY, "b": Sector.INDUSTRY, "school": Sector.ACADEMIA}
        trajs = [
            CareerTrajectory("p", "school", 2000, (
                EmploymentSpell("a", 2000, 2005), EmploymentSpell("b", 2005, None))),
        ]
        corpus = corpus_of(trajs, sectors, 2010)
        from careerflow.flownet import derive_transitions

        report = cross_sector_report(derive_transitions(corpus), corpus)
        assert report.cross_sector_share == 0.0

    def test_postdoc_exclusion_flag(self):
        from careerflow.flownet import derive_transitions

        corpus = _cross_sector_fixture()
        transitions = derive_transitions(corpus)
        report = cross_sector_report(transitions, corpus, exclude_postdocs=True)
        assert report.total == 2
        assert report.excluded_postdocs == 1
        assert (Sector.INDUSTRY, Sector.ACADEMIA) not in report.cells

    def test_rank_deltas_use_preceding_tables(self):
        from careerflow.flownet import derive_transitions

        corpus = _cross_sector_fixture()
        transitions = [tr for tr in derive_transitions(corpus) if tr.year == 2005]
        ranks = {"uni-1": 3, "co-1": 1, "uni-2": 2}
        scores = {org: 1.0 / r for org, r in ranks.items()}
        norm = math.sqrt(sum(v * v for v in scores.values()))
        scores = {org: v / norm for org, v in scores.items()}
        table = RankingTable((2000, 2004), scores, scores, dict(ranks), dict(ranks))
        report = cross_sector_report(transitions, corpus, tables_gf={2005: table})
        cell = report.cells[(Sector.ACADEMIA, Sector.INDUSTRY)]
        assert cell.mean_delta_gf == pytest.approx(2.0)  # rank 3 -> rank 1
        assert cell.covered_gf == 1


class TestCcdf:
    def test_small_example(self):
        sectors = {"a": Sector.INDUSTRY, "b": Sector.INDUSTRY, "c": Sector.INDUSTRY, "school": Sector.ACADEMIA}
        trajs = [
            CareerTrajectory("p1", "school", 2000, (EmploymentSpell("a", 2000, None),)),
            CareerTrajectory("p2", "school", 2000, (EmploymentSpell("b", 2000, None),)),
            CareerTrajectory("p3", "school", 2000, (
                EmploymentSpell("c", 2000, 2005), EmploymentSpell("a", 2005, None))),
        ]
        # distinct-employee counts: a=2, b=1, c=1
        corpus = corpus_of(trajs, sectors, 2010)
        assert employment_ccdf(corpus) == [(1, 1.0), (2, pytest.approx(1 / 3))]

    def test_single_org(self):
        sectors = {"a": Sector.INDUSTRY, "school": Sector.ACADEMIA}
        trajs = [CareerTrajectory("p1", "school", 2000, (EmploymentSpell("a", 2000, None),))]
        corpus = corpus_of(trajs, sectors, 2010)
        assert employment_ccdf(corpus) == [(1, 1.0)]

    def test_monotone_and_starts_at_one(self):
        from careerflow.synth import random_population

        corpus = random_population(seed=2, n_persons=200, n_orgs=30)
        points = employment_ccdf(corpus)
        assert points[0][1] == 1.0
        fractions = [f for _c, f in points]
        assert all(a >= b for a, b in zip(fractions, fractions[1:]))


class TestRetention:
    def test_single_spell(self):
        sectors = {"a": Sector.INDUSTRY, "school": Sector.ACADEMIA}
        trajs = [CareerTrajectory("p", "school", 2000, (EmploymentSpell("a", 2000, 2004),))]
        corpus = corpus_of(trajs, sectors, 2010)
        means = retention_by_sector(corpus)
        assert means[Sector.INDUSTRY] == 4.0

    def test_mixed_fixture_with_open_clipping(self):
        sectors = {
            "a": Sector.INDUSTRY,
            "u": Sector.ACADEMIA,
            "g": Sector.GOVERNMENT,
            "school": Sector.ACADEMIA,
        }
        trajs = [
            CareerTrajectory("p1", "school", 2000, (EmploymentSpell("a", 2000, 2003),)),
            CareerTrajectory("p2", "school", 2000, (EmploymentSpell("a", 2000, None),)),  # 10 at horizon
            CareerTrajectory("p3", "school", 2000, (EmploymentSpell("u", 2000, 2008),)),
            CareerTrajectory("p4", "school", 2000, (EmploymentSpell("g", 2001, 2006),)),
        ]
        corpus = corpus_of(trajs, sectors, 2010)
        means = retention_by_sector(corpus)
        assert means[Sector.INDUSTRY] == pytest.approx(6.5)
        assert means[Sector.ACADEMIA] == pytest.approx(8.0)
        assert means[Sector.GOVERNMENT] == pytest.approx(5.0)

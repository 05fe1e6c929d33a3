# tests/test_estimators.py
"""
Unit tests for modules/estimators.py

Coverage:
  - bowen_distance() / bowen_diameter()   — exact d_n, metric laws, cube boxes
  - hausdorff_sum()                       — uniform covers, 0^0 = 1
  - cylinder_cover() / brute_min_cover()  — measured cylinders, leg checks, brute window
  - critical_exponent()                   — closed-form agreement
  - max_separated() / separation_upper_bound() — greedy counts, proven flags
  - mdim_H_estimate() / mdim_M_estimate() — stage values, bounds, errors
  - ordering_diagnostic()                 — horizon pairing, violations
  - power_bound_check()                   — p * mdim bound on powers

Run with:
    pytest tests/test_estimators.py -v
"""

import math
import os
import random
import sys
from dataclasses import replace
from fractions import Fraction

import pytest

_PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if _PROJECT_ROOT not in sys.path:
    sys.path.insert(0, _PROJECT_ROOT)

from modules.cubes import make_cube_block
from modules.exceptions import BudgetExceededError, DomainError, InvalidParameterError
from modules.estimators import (
    BowenContext,
    Cover,
    DimEstimate,
    DimensionStage,
    UniformCover,
    bowen_diameter,
    bowen_distance,
    brute_min_cover,
    critical_exponent,
    cylinder_cover,
    hausdorff_sum,
    max_separated,
    mdim_H_estimate,
    mdim_M_estimate,
    min_hausdorff_sum,
    ordering_diagnostic,
    power_bound_check,
    separated_growth_rate,
    separation_upper_bound,
)
from modules.maps1d import HorseshoeBlock, Schedule, make_identity, make_phi_sr, make_schedule_map, make_tent_g
from modules.rational import Box, Interval

F = Fraction
JUST_BELOW_THIRD = F(1, 3) - F(1, 10**6)


@pytest.fixture
def three_leg_map():
    """One 3-leg block on [0, 1/3], identity on the rest."""
    return make_schedule_map(Schedule.from_entries([("1/3", 3)]))


# ═══════════════════════════════════════════════════════════════════════════════
# Bowen metric
# ═══════════════════════════════════════════════════════════════════════════════

class TestBowenMetric:

    def test_distance_grows_with_horizon(self):
        g = make_tent_g()
        assert bowen_distance(BowenContext(g, 1), F(0), F(1, 9)) == pytest.approx(1 / 9)
        assert bowen_distance(BowenContext(g, 2), F(0), F(1, 9)) == pytest.approx(1 / 3)
        assert bowen_distance(BowenContext(g, 3), F(0), F(1, 9)) == pytest.approx(1.0)

    def test_diameter_of_leg_piece(self):
        ctx = BowenContext(make_tent_g(), 2)
        assert bowen_diameter(ctx, Interval(F(0), F(1, 9))) == F(1, 3)
        assert bowen_diameter(ctx, None) == 0

    def test_for_stage_adds_one(self):
        assert BowenContext.for_stage(make_tent_g(), 2).horizon == 3

    def test_horizon_zero_rejected(self):
        with pytest.raises(InvalidParameterError):
            BowenContext(make_tent_g(), 0)

    @pytest.mark.parametrize("seed", [3, 11, 29])
    def test_metric_laws_on_random_points(self, three_leg_map, seed):
        rng = random.Random(seed)
        points = [F(rng.randrange(0, 3 ** 7 + 1), 3 ** 7) for _ in range(15)]
        for phi in (make_tent_g(), three_leg_map):
            for n in (1, 2, 3):
                ctx, longer = BowenContext(phi, n), BowenContext(phi, n + 1)
                for x, y, z in zip(points, points[1:], points[2:]):
                    xy, yz, xz = bowen_distance(ctx, x, y), bowen_distance(ctx, y, z), bowen_distance(ctx, x, z)
                    assert xy == bowen_distance(ctx, y, x)
                    assert xz <= xy + yz + 1e-12
                    assert xy <= bowen_distance(longer, x, y)
                assert bowen_distance(ctx, points[0], points[0]) == 0

    def test_diameter_grows_with_horizon(self, three_leg_map):
        piece = Interval(F(1, 27), F(2, 27))
        diameters = [bowen_diameter(BowenContext(three_leg_map, n), piece) for n in (1, 2, 3, 4)]
        assert diameters == sorted(diameters)
        assert diameters[:3] == [F(1, 27), F(1, 9), F(1, 3)]

    def test_cube_distance_follows_the_leg(self):
        block = make_cube_block(2, 1)
        # slab 1 is leg 0: x_1 stretches by 5, x_2 contracts into the top row
        assert bowen_distance(BowenContext(block, 1), (F(1, 10), F(1, 10)), (F(3, 20), F(1, 10))) == pytest.approx(1 / 20)
        assert bowen_distance(BowenContext(block, 2), (F(1, 10), F(1, 10)), (F(3, 20), F(1, 10))) == pytest.approx(1 / 4)
        assert bowen_distance(BowenContext(block, 2), (F(1, 10), F(1, 10)), (F(1, 10), F(1, 5))) == pytest.approx(1 / 10)

    def test_cube_box_diameter(self):
        block = make_cube_block(2, 1)
        leg_box = Box((block.slab(1), block.row(1)))
        assert bowen_diameter(BowenContext(block, 1), leg_box) == F(1, 5)
        assert bowen_diameter(BowenContext(block, 2), leg_box) == 1
        for cylinder in block.cylinders(2):
            assert bowen_diameter(BowenContext(block, 2), cylinder) == block.delta

    def test_box_and_interval_do_not_mix(self):
        block = make_cube_block(2, 1)
        with pytest.raises(DomainError):
            bowen_diameter(BowenContext(block, 1), Interval(F(0), F(1, 5)))
        with pytest.raises(DomainError):
            bowen_diameter(BowenContext(make_tent_g(), 1), block.box)

    def test_box_escaping_early(self):
        block = make_cube_block(2, 1)
        bulge = Box((block.slab(2), block.row(1)))
        assert bowen_diameter(BowenContext(block, 2), bulge) == block.escape_gap
        with pytest.raises(DomainError):
            bowen_diameter(BowenContext(block, 3), bulge)


# ═══════════════════════════════════════════════════════════════════════════════
# Hausdorff sums and covers
# ═══════════════════════════════════════════════════════════════════════════════

class TestHausdorffSums:

    def test_uniform_cover(self):
        cover = UniformCover(27, F(1, 9))
        assert hausdorff_sum(cover, 1) == pytest.approx(3.0)
        assert hausdorff_sum(cover, 0) == pytest.approx(27.0)
        assert hausdorff_sum(UniformCover(0, F(1, 9)), 1) == 0.0

    def test_zero_diameter_counts_at_s_zero(self):
        cover = Cover((Interval(F(1, 2), F(1, 2)),), (F(0),))
        assert hausdorff_sum(cover, 0) == 1.0
        assert hausdorff_sum(cover, 1) == 0.0

    def test_negative_exponent(self):
        with pytest.raises(InvalidParameterError):
            hausdorff_sum(UniformCover(3, F(1, 3)), -1)

    def test_block_cylinder_sum(self, three_leg_map):
        ctx = BowenContext.for_stage(three_leg_map, 2)
        block = Interval(F(0), F(1, 3))
        assert min_hausdorff_sum(ctx, F(1, 9), 1, block) == pytest.approx(3.0)
        assert min_hausdorff_sum(ctx, F(1, 9), 0, block) == pytest.approx(27.0)

    def test_identity_lap_cover(self):
        ident = make_identity()
        ctx = BowenContext.for_stage(ident, 1)
        assert min_hausdorff_sum(ctx, F(1, 2), 1, ident.domain) == pytest.approx(1.0)

    def test_point_has_zero_sum(self):
        ctx = BowenContext.for_stage(make_tent_g(), 1)
        assert min_hausdorff_sum(ctx, F(1, 9), 1, Interval(F(1, 2), F(1, 2))) == 0.0

    def test_unknown_strategy(self, three_leg_map):
        ctx = BowenContext.for_stage(three_leg_map, 1)
        with pytest.raises(InvalidParameterError):
            min_hausdorff_sum(ctx, F(1, 9), 1, Interval(F(0), F(1, 3)), strategy="greedy")

    def test_lap_cover_budget(self):
        ident = make_identity()
        with pytest.raises(BudgetExceededError):
            cylinder_cover(BowenContext(ident, 1), F(1, 1000), ident.domain, budget=10)

    def test_sums_are_monotone(self, three_leg_map):
        ctx = BowenContext.for_stage(three_leg_map, 1)
        scales = [F(1, 3), F(1, 9), F(1, 27), F(1, 81)]
        for target in (three_leg_map.domain, Interval(F(0), F(1, 3))):
            for s in (0.5, 1.0):
                sums = [min_hausdorff_sum(ctx, eps, s, target) for eps in scales]
                assert all(a <= b + 1e-12 for a, b in zip(sums, sums[1:]))
            for eps in scales:
                sums = [min_hausdorff_sum(ctx, eps, s, target) for s in (0.0, 0.5, 1.0, 1.5, 2.0)]
                assert all(a >= b - 1e-12 for a, b in zip(sums, sums[1:]))

    def test_block_cylinders_are_measured(self, three_leg_map):
        cover = cylinder_cover(BowenContext.for_stage(three_leg_map, 1), F(1, 27), Interval(F(0), F(1, 3)))
        assert cover.size == 27
        assert set(cover.diameters) == {F(1, 27)}

    def test_declared_block_must_have_full_legs(self):
        fake = replace(make_identity(), blocks=(HorseshoeBlock(F(0), F(1, 3), 3, index=1),))
        ctx = BowenContext.for_stage(fake, 1)
        with pytest.raises(InvalidParameterError, match="not a full-leg block"):
            critical_exponent(ctx, F(1, 9), Interval(F(0), F(1, 3)))
        with pytest.raises(InvalidParameterError, match="not a declared full-leg block"):
            mdim_H_estimate(fake, None, [(1, 1)])

    def test_undeclared_interval_is_measured(self):
        ctx = BowenContext.for_stage(make_identity(), 1)
        assert critical_exponent(ctx, F(1, 9), Interval(F(0), F(1, 3))) == pytest.approx(0.5, abs=1e-6)


class TestBruteCover:

    @pytest.mark.parametrize("s, brute, cylinder", [(1.0, 7 / 9, 1.0), (0.5, 7 / 3, 3.0)])
    def test_folds_merge_cylinders(self, three_leg_map, s, brute, cylinder):
        ctx = BowenContext.for_stage(three_leg_map, 1)
        block = Interval(F(0), F(1, 3))
        brute_value = min_hausdorff_sum(ctx, F(1, 9), s, block, strategy="brute")
        cylinder_value = min_hausdorff_sum(ctx, F(1, 9), s, block)
        assert brute_value == pytest.approx(brute, abs=1e-9)
        assert cylinder_value == pytest.approx(cylinder, abs=1e-9)
        assert cylinder_value / 2 <= brute_value <= cylinder_value

    def test_brute_cover_respects_scale(self, three_leg_map):
        ctx = BowenContext.for_stage(three_leg_map, 1)
        value, cover = brute_min_cover(ctx, F(1, 9), 0.5, Interval(F(0), F(1, 3)))
        assert cover.size == 7
        assert value == pytest.approx(hausdorff_sum(cover, 0.5), abs=1e-9)
        assert cover.max_diameter <= F(1, 9)
        assert cover.elements[0].lo == 0 and cover.elements[-1].hi == F(1, 3)

    def test_grid_too_coarse(self, three_leg_map):
        ctx = BowenContext.for_stage(three_leg_map, 1)
        with pytest.raises(InvalidParameterError, match="grid too coarse"):
            brute_min_cover(ctx, F(1, 9), 1.0, Interval(F(0), F(1, 3)), grid=[F(0), F(1, 3)])

    def test_grid_cap(self, three_leg_map):
        ctx = BowenContext.for_stage(three_leg_map, 1)
        with pytest.raises(BudgetExceededError):
            brute_min_cover(ctx, F(1, 9), 1.0, Interval(F(0), F(1, 3)), cap=5)


# ═══════════════════════════════════════════════════════════════════════════════
# Critical exponents
# ═══════════════════════════════════════════════════════════════════════════════

class TestCriticalExponent:

    def test_block_exponent(self, three_leg_map):
        ctx = BowenContext.for_stage(three_leg_map, 2)
        assert critical_exponent(ctx, F(1, 9), Interval(F(0), F(1, 3))) == pytest.approx(1.5, abs=1e-9)

    def test_brute_exponent_below_cylinder(self, three_leg_map):
        ctx = BowenContext.for_stage(three_leg_map, 1)
        block = Interval(F(0), F(1, 3))
        brute = critical_exponent(ctx, F(1, 9), block, strategy="brute")
        assert 0 < brute <= critical_exponent(ctx, F(1, 9), block) + 1e-6

    @pytest.mark.parametrize("eps, expected", [
        (F(1, 9), [0.5, 1.0, 1.5, 2.0]),
        (F(1, 27), [2 / 3, 1.0, 4 / 3, 5 / 3]),
    ])
    def test_exponent_grows_with_horizon(self, three_leg_map, eps, expected):
        block = Interval(F(0), F(1, 3))
        exponents = [critical_exponent(BowenContext.for_stage(three_leg_map, n), eps, block) for n in range(4)]
        assert exponents == pytest.approx(expected, abs=1e-6)
        assert exponents == sorted(exponents)


# ═══════════════════════════════════════════════════════════════════════════════
# Separated sets
# ═══════════════════════════════════════════════════════════════════════════════

class TestSeparation:

    def test_tent_just_below_a_third(self):
        result = max_separated(BowenContext(make_tent_g(), 1), JUST_BELOW_THIRD)
        assert result.count == 4
        assert result.flag == "exact"
        assert result.points == (F(0), F(1, 3), F(2, 3), F(1))

    def test_tent_second_horizon(self):
        result = max_separated(BowenContext(make_tent_g(), 2), JUST_BELOW_THIRD)
        assert result.points == (F(0), F(1, 9), F(2, 9), F(1, 3), F(5, 9), F(2, 3), F(8, 9), F(1))
        assert result.flag == "lower-bound"

    def test_identity_lower_bound(self):
        result = max_separated(BowenContext(make_identity(), 2), F(1, 3))
        assert result.count == 3
        assert result.flag == "lower-bound"

    def test_line_count_meets_its_bound(self):
        ctx = BowenContext(make_identity(), 1)
        assert separation_upper_bound(ctx, F(1, 3), make_identity().domain) == 3
        assert max_separated(ctx, F(1, 3)).flag == "exact"

    def test_coarse_scale_keeps_one_point(self):
        result = max_separated(BowenContext(make_identity(), 1), 2)
        assert result.count == 1
        assert result.flag == "exact"

    @pytest.mark.parametrize("phi, n", [(make_tent_g(), 1), (make_identity(), 3)])
    def test_count_shrinks_as_scale_grows(self, phi, n):
        counts = [max_separated(BowenContext(phi, n), eps).count
                  for eps in (F(1, 20), F(1, 10), F(1, 5), F(1, 3), F(1, 2))]
        assert counts == sorted(counts, reverse=True)
        assert counts[-1] < counts[0]

    def test_block_growth_rate(self, three_leg_map):
        eps = F(1, 9) * (1 - F(1, 10**6))
        block = Interval(F(0), F(1, 3))
        counts = [max_separated(BowenContext(three_leg_map, n), eps, block).count for n in (1, 2)]
        assert counts == [4, 8]
        assert separated_growth_rate(three_leg_map, eps, 2, block) >= math.log(3 / 2)

    def test_budget(self):
        with pytest.raises(BudgetExceededError):
            max_separated(BowenContext(make_tent_g(), 3), F(1, 10), budget=5)


# ═══════════════════════════════════════════════════════════════════════════════
# Estimators
# ═══════════════════════════════════════════════════════════════════════════════

class TestMdimH:

    def test_power_law_schedule(self):
        estimate = mdim_H_estimate(None, Schedule.power_law(1, 1, 30), [(k, 0) for k in range(30)])
        assert len(estimate.stages) == 30
        assert 0.5 <= estimate.lower <= estimate.upper <= 0.51

    def test_quadratic_deep_block(self):
        estimate = mdim_H_estimate(None, Schedule.quadratic(1, 1000), [(1000, 0)])
        assert estimate.upper == pytest.approx(0.987, abs=1e-3)

    def test_declared_block_of_map(self, three_leg_map):
        estimate = mdim_H_estimate(three_leg_map, None, [(1, 2)])
        stage = estimate.stages[0]
        assert stage.eps == F(1, 9)
        assert stage.dim == pytest.approx(1.5, abs=1e-9)
        assert stage.normalized == pytest.approx(0.5, abs=1e-9)

    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_identity_decays(self, n):
        estimate = mdim_H_estimate(make_identity(), None, [(2, n)])
        assert estimate.stages[0].normalized == pytest.approx(1 / (n + 1), abs=1e-9)

    def test_schedule_block_not_in_map(self):
        with pytest.raises(InvalidParameterError, match="not a declared full-leg block"):
            mdim_H_estimate(make_tent_g(), Schedule.power_law(1, 1, 2), [(0, 0)])

    def test_needs_map_or_schedule(self):
        with pytest.raises(InvalidParameterError):
            mdim_H_estimate(None, None, [(0, 0)])

    def test_summary_shape(self):
        summary = mdim_H_estimate(None, Schedule.power_law(1, 1, 3), [(0, 0)]).summary()
        assert summary["kind"] == "H"
        assert summary["stages"][0]["eps"] == "2/9"
        assert "growth_rates" not in summary


class TestMdimM:

    def test_identity_has_no_growth(self):
        estimate = mdim_M_estimate(make_identity(), ["1/4", "1/10"], 3)
        assert len(estimate.stages) == 6
        assert all(rate == pytest.approx(0.0, abs=1e-9) for rate in estimate.growth_rates.values())
        assert set(estimate.growth_rates) == {"1/4", "1/10"}
        assert estimate.upper == pytest.approx(0.0, abs=1e-9)

    def test_tent_counts(self):
        estimate = mdim_M_estimate(make_tent_g(), [JUST_BELOW_THIRD], 1)
        assert estimate.stages[0].dim > 1.0
        assert estimate.stages[0].normalized == 1.0

    def test_slope_over_log_scale(self, three_leg_map):
        eps = F(1, 9) * (1 - F(1, 10**6))
        estimate = mdim_M_estimate(three_leg_map, [eps], 2, Interval(F(0), F(1, 3)))
        last = estimate.stages[-1]
        assert last.n == 2
        assert estimate.growth_rates[list(estimate.growth_rates)[0]] == pytest.approx(math.log(2))
        assert last.normalized == pytest.approx(math.log(2) / -math.log(float(eps)))
        assert 0.0 <= estimate.lower <= estimate.upper <= 1.0

    @pytest.mark.parametrize("scales, n_max", [
        ([], 2),
        (["1/10", "1/4"], 2),
        (["1/4", "1/4"], 2),
        (["3/2"], 2),
        (["1/4"], 0),
    ])
    def test_rejected_inputs(self, scales, n_max):
        with pytest.raises(InvalidParameterError):
            mdim_M_estimate(make_identity(), scales, n_max)


class TestOrderingDiagnostic:

    def test_tent_is_ordered(self):
        g = make_tent_g()
        h = mdim_H_estimate(g, None, [(0, 0)])
        m = mdim_M_estimate(g, [JUST_BELOW_THIRD], 1)
        assert ordering_diagnostic(h, m, slack=0.05) == []

    def test_power_law_map_is_ordered(self):
        phi = make_phi_sr(1, 1, 2)
        h = mdim_H_estimate(phi, None, [(0, 0), (1, 0)])
        m = mdim_M_estimate(phi, ["2/9", "2/27", "2/81"], 1)
        assert [st.eps for st in h.stages] == [F(2, 9), F(2, 81)]
        assert [st.normalized for st in h.stages] == pytest.approx([0.7304, 0.5936], abs=1e-3)
        assert ordering_diagnostic(h, m, slack=0.0) == []

    def test_power_law_map_gap_at_first_horizon(self):
        phi = make_phi_sr(1, 1, 2)
        h = mdim_H_estimate(phi, None, [(0, 1)])
        m = mdim_M_estimate(phi, ["2/9", "2/27"], 2)
        violations = ordering_diagnostic(h, m, slack=0.05)
        assert [(v["k"], v["n"]) for v in violations] == [(0, 1)]
        assert violations[0]["mdim_H"] == pytest.approx(0.7304, abs=1e-3)
        assert violations[0]["excess"] > 0.05

    def test_pairs_by_horizon(self):
        h = DimEstimate("H", [DimensionStage(k=1, n=0, eps=F(1, 9), dim=1.0, normalized=1.0)], 1.0, 1.0)
        m = DimEstimate("M", [
            DimensionStage(k=0, n=1, eps=F(1, 10), dim=0.5, normalized=0.5),
            DimensionStage(k=0, n=2, eps=F(1, 10), dim=4.0, normalized=2.0),
        ], 0.5, 2.0)
        violations = ordering_diagnostic(h, m, slack=0.05)
        assert len(violations) == 1
        assert violations[0]["mdim_M"] == 0.5
        assert violations[0]["excess"] == pytest.approx(0.5)

    def test_unpaired_stages_are_skipped(self):
        h = DimEstimate("H", [DimensionStage(k=1, n=0, eps=F(1, 100), dim=1.0, normalized=1.0)], 1.0, 1.0)
        m = DimEstimate("M", [DimensionStage(k=0, n=1, eps=F(1, 10), dim=0.1, normalized=0.1)], 0.1, 0.1)
        assert ordering_diagnostic(h, m, slack=0.0) == []


class TestPowerBound:

    def test_phi_squared(self):
        rows = power_bound_check(make_phi_sr(1, 1, 2), 2, [(0, 0), (1, 1)])
        assert [row["k"] for row in rows] == [0, 1]
        assert all(row["holds"] for row in rows)

    def test_power_zero(self):
        with pytest.raises(InvalidParameterError):
            power_bound_check(make_tent_g(), 0, [(0, 0)])

# tests/test_symbolic.py
"""
Unit tests for modules/symbolic.py

Coverage:
  - cylinder_count() / cylinder_endpoints()  — counts, exact partitions, budget
  - stage_dimension() / block_stage_value()  — closed forms
  - closed_form_limit()                      — every rule, explicit limsup/liminf
  - stage_sequence() / convergence_gap()     — convergence towards the limit
  - schedule_power()                         — power bound on the limit
  - cube_limit()                             — m/(1+r) and m

Run with:
    pytest tests/test_symbolic.py -v
"""

import math
import os
import sys
from fractions import Fraction

import pytest

_PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if _PROJECT_ROOT not in sys.path:
    sys.path.insert(0, _PROJECT_ROOT)

from modules.exceptions import BudgetExceededError, InvalidParameterError
from modules.maps1d import HorseshoeBlock, Schedule
from modules.symbolic import (
    block_stage_value,
    closed_form_limit,
    convergence_gap,
    cube_limit,
    cylinder_count,
    cylinder_endpoints,
    schedule_power,
    stage_dimension,
    stage_sequence,
)

F = Fraction


def _block(width, legs):
    return HorseshoeBlock(F(0), F(width), legs)


# ═══════════════════════════════════════════════════════════════════════════════
# Cylinders
# ═══════════════════════════════════════════════════════════════════════════════

class TestCylinders:

    @pytest.mark.parametrize("legs, n, expected", [(3, 2, 27), (2, 1, 4), (9, 3, 6561)])
    def test_count(self, legs, n, expected):
        assert cylinder_count(_block(1, legs), n) == expected

    def test_endpoints_partition_block(self):
        cylinders = cylinder_endpoints(_block(1, 3), 1)
        assert len(cylinders) == 9
        assert all(c.width == F(1, 9) for c in cylinders)
        assert cylinders[0].lo == 0 and cylinders[-1].hi == 1
        assert all(a.hi == b.lo for a, b in zip(cylinders, cylinders[1:]))

    def test_deeper_partition_refines(self):
        coarse = cylinder_endpoints(_block(F(1, 3), 3), 1)
        fine = cylinder_endpoints(_block(F(1, 3), 3), 2)
        assert all(any(c.contains_interval(f) for c in coarse) for f in fine)

    def test_budget(self):
        with pytest.raises(BudgetExceededError):
            cylinder_endpoints(_block(1, 3), 10, budget=100)

    def test_negative_depth(self):
        with pytest.raises(InvalidParameterError):
            cylinder_count(_block(1, 3), -1)


# ═══════════════════════════════════════════════════════════════════════════════
# Stage values
# ═══════════════════════════════════════════════════════════════════════════════

class TestStageValues:

    def test_stage_dimension(self):
        dim = stage_dimension(_block(F(1, 3), 3), 2)
        assert dim == pytest.approx(1.5, abs=1e-12)
        assert dim / 3 == pytest.approx(0.5, abs=1e-12)

    def test_normalized_constant_in_n(self):
        block = _block(F(2, 9), 9)
        values = [stage_dimension(block, n) / (n + 1) for n in range(5)]
        assert max(values) - min(values) < 1e-12
        assert values[0] == pytest.approx(block_stage_value(F(2, 9), 9), abs=1e-12)

    def test_width_one_over_legs_gives_half(self):
        assert block_stage_value(F(1, 3), 3) == pytest.approx(0.5, abs=1e-12)

    def test_leg_width_one_rejected(self):
        with pytest.raises(InvalidParameterError):
            stage_dimension(HorseshoeBlock(F(0), F(3), 3), 0)


# ═══════════════════════════════════════════════════════════════════════════════
# Limits
# ═══════════════════════════════════════════════════════════════════════════════

class TestClosedFormLimit:

    @pytest.mark.parametrize("s, r, expected", [(1, 1, 0.5), (2, "1/2", 0.8), (1, 3, 0.25)])
    def test_power_law(self, s, r, expected):
        assert closed_form_limit(Schedule.power_law(s, r, 3)) == pytest.approx(expected, abs=1e-12)

    def test_quadratic(self):
        assert closed_form_limit(Schedule.quadratic(2, 3)) == 1.0

    @pytest.mark.parametrize("s, expected", [(1, 1 / 3), (2, 0.5)])
    def test_odd_legs(self, s, expected):
        assert closed_form_limit(Schedule.odd_legs(s, 3)) == pytest.approx(expected, abs=1e-12)

    def test_explicit_limsup_and_liminf(self):
        sched = Schedule.from_entries([("1/9", 3), ("1/3", 3)])
        assert closed_form_limit(sched, "limsup") == pytest.approx(0.5, abs=1e-12)
        assert closed_form_limit(sched, "liminf") == pytest.approx(1 / 3, abs=1e-12)

    def test_rearrangement_keeps_extremes(self):
        sched = Schedule.from_entries([("1/27", 9), ("1/9", 3), ("1/3", 5)])
        for mode in ("limsup", "liminf"):
            assert closed_form_limit(sched, mode, rearrange=True) == closed_form_limit(sched, mode)

    def test_single_leg_rejected(self):
        with pytest.raises(InvalidParameterError):
            closed_form_limit(Schedule.from_entries([("1/3", 1)]))

    def test_unknown_mode(self):
        with pytest.raises(InvalidParameterError):
            closed_form_limit(Schedule.quadratic(1, 2), "sup")


# ═══════════════════════════════════════════════════════════════════════════════
# Convergence
# ═══════════════════════════════════════════════════════════════════════════════

class TestConvergence:

    def test_power_law_k20(self):
        k, value = stage_sequence(Schedule.power_law(1, 1, 30), 20)[-1]
        assert k == 20
        assert abs(value - 0.5) < 0.01
        assert value == pytest.approx(0.5075, abs=1e-3)

    def test_power_law_monotone(self):
        values = [v for _, v in stage_sequence(Schedule.power_law(1, 1, 30), 29)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_quadratic_k1000(self):
        sequence = stage_sequence(Schedule.quadratic(1, 1000), 1000)
        k, value = sequence[-1]
        assert k == 1000
        assert abs(value - 1) < 0.02
        assert value == pytest.approx(0.987, abs=1e-3)
        assert all(b > a for (_, a), (_, b) in zip(sequence, sequence[1:]))

    def test_stage_sequence_clamps_to_truncation(self):
        assert len(stage_sequence(Schedule.power_law(1, 1, 5), 50)) == 5

    @pytest.mark.parametrize("k", [1, 5, 20])
    def test_power_law_gap_matches_prediction(self, k):
        row = convergence_gap(Schedule.power_law(1, 1, 30), k)
        assert row["gap"] == pytest.approx(row["predicted"], rel=1e-9)
        assert row["limit"] == 0.5

    def test_quadratic_gap_matches_prediction(self):
        row = convergence_gap(Schedule.quadratic(1, 200), 100)
        assert row["gap"] == pytest.approx(row["predicted"], rel=1e-9)


# ═══════════════════════════════════════════════════════════════════════════════
# Powers and cubes
# ═══════════════════════════════════════════════════════════════════════════════

class TestPowersAndCubes:

    def test_schedule_power_squares_legs(self):
        powered = schedule_power(Schedule.power_law(1, 1, 3), 2)
        assert [powered.legs(k) for k in powered.indices()] == [9, 81, 729]
        assert powered.width(1) == F(2, 3)

    def test_schedule_power_limit_bound(self):
        base = schedule_power(Schedule.power_law(1, 1, 4), 1)
        for p in (2, 3):
            powered = schedule_power(Schedule.power_law(1, 1, 4), p)
            assert closed_form_limit(powered) <= p * closed_form_limit(base) + 1e-12

    def test_schedule_power_rejects_zero(self):
        with pytest.raises(InvalidParameterError):
            schedule_power(Schedule.quadratic(1, 2), 0)

    @pytest.mark.parametrize("m, rule, r, expected", [
        (2, "power", F(1), 1.0),
        (3, "power", F(1, 2), 2.0),
        (2, "quadratic", None, 2.0),
    ])
    def test_cube_limit(self, m, rule, r, expected):
        assert cube_limit(m, rule, r) == pytest.approx(expected, abs=1e-12)

    def test_cube_limit_rejects_m1(self):
        with pytest.raises(InvalidParameterError):
            cube_limit(1, "power", F(1))

    def test_cube_limit_unknown_rule(self):
        with pytest.raises(InvalidParameterError):
            cube_limit(2, "cubic")

    def test_stage_value_closed_form(self):
        # leg width 2/27
        assert block_stage_value(F(2, 9), 3) == pytest.approx(math.log(3) / math.log(27 / 2), abs=1e-12)

"""
symbolic.py
-----------
Closed-form cylinder combinatorics and limit values of horseshoe schedules.

A block with s legs over an interval I has s^{n+1} depth-n cylinders, all of
width |I|/s^{n+1} and of Bowen diameter |I|/s at horizon n+1. Everything
below follows from that count.
"""

import math
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from modules.configManager import get_settings
from modules.exceptions import BudgetExceededError, InvalidParameterError
from modules.logging_config import logger
from modules.maps1d import HorseshoeBlock, Schedule
from modules.rational import Interval, log_rational


def cylinder_count(block: HorseshoeBlock, n: int) -> int:
    if n < 0:
        raise InvalidParameterError(f"depth n must be >= 0, got {n}")
    return block.legs ** (n + 1)


def cylinder_endpoints(block: HorseshoeBlock, n: int, budget: Optional[int] = None) -> List[Interval]:
    """The s^{n+1} equal depth-n cylinders of the block, left to right."""
    count = cylinder_count(block, n)
    budget = budget or get_settings().enumeration_budget
    if count > budget:
        raise BudgetExceededError(f"{count} cylinders requested, enumeration budget is {budget}")
    width = block.width / count
    return [Interval(block.left + i * width, block.left + (i + 1) * width) for i in range(count)]


def _check_scale(block: HorseshoeBlock) -> None:
    if block.leg_width >= 1:
        raise InvalidParameterError(f"leg width {block.leg_width} must be below 1")
    if block.legs < 2:
        raise InvalidParameterError("a single leg carries no dimension")


def stage_dimension(block: HorseshoeBlock, n: int) -> float:
    """(n+1) log s / log(s/|I|): the exponent at which the cylinder cover has unit mass."""
    _check_scale(block)
    return (n + 1) * math.log(block.legs) / -log_rational(block.leg_width)


def block_stage_value(width: Fraction, legs: int) -> float:
    """log s / log(s/|I|), the normalized stage value of one block."""
    if legs < 2:
        raise InvalidParameterError(f"legs must be >= 2, got {legs}")
    eps = Fraction(width) / legs
    if eps >= 1:
        raise InvalidParameterError(f"leg width {eps} must be below 1")
    return math.log(legs) / -log_rational(eps)


def stage_sequence(schedule: Schedule, k_max: int) -> List[Tuple[int, float]]:
    k_max = min(k_max, schedule.first_index + schedule.K - 1)
    return [(k, block_stage_value(schedule.width(k), schedule.legs(k)))
            for k in range(schedule.first_index, k_max + 1)]


def closed_form_limit(schedule: Schedule, mode: str = "limsup", rearrange: bool = False) -> float:
    """
    FUNCTION: closed_form_limit

    DESCRIPTION:
    Limit of the normalized stage values. power_law -> s/(r+s), quadratic -> 1,
    odd_legs -> s/(s+2). Explicit schedules have no tail, so the value is the
    max (limsup) or min (liminf) of 1/|1 - log|I_k|/log s_k| over the blocks.
    rearrange=True sorts explicit blocks by leg count first.
    """
    if mode not in ("limsup", "liminf"):
        raise InvalidParameterError(f"mode must be limsup or liminf, got {mode!r}")
    if schedule.rule == "power_law":
        return schedule.s / (float(schedule.r) + schedule.s)
    if schedule.rule == "quadratic":
        return 1.0
    if schedule.rule == "odd_legs":
        return schedule.s / (schedule.s + 2)
    entries = list(schedule.explicit)
    if rearrange:
        entries.sort(key=lambda e: e[1])
    values = []
    for width, legs in entries:
        if legs < 2:
            raise InvalidParameterError("explicit block with a single leg has no dimension")
        values.append(1 / abs(1 - log_rational(width) / math.log(legs)))
    return max(values) if mode == "limsup" else min(values)


def convergence_gap(schedule: Schedule, k: int) -> Dict[str, float]:
    """
    Distance of block k's stage value from the limit, next to the gap the
    rule predicts in closed form. power_law: s|r - L| / ((s+r)(s(k+1) + kr + L))
    with L = log_3(1/C); quadratic and odd_legs: the extra 2 log k - log c_K
    term in the denominator of the stage value.
    """
    value = block_stage_value(schedule.width(k), schedule.legs(k))
    limit = closed_form_limit(schedule)
    if schedule.rule == "power_law":
        r, s = float(schedule.r), schedule.s
        big_l = -math.log(1 - 3 ** (-r)) / math.log(3)
        predicted = s * abs(r - big_l) / ((s + r) * (s * (k + 1) + k * r + big_l))
    elif schedule.rule in ("quadratic", "odd_legs"):
        extra = 2 * math.log(k) - log_rational(schedule.quadratic_constant())
        if schedule.rule == "quadratic":
            head = schedule.s * k * math.log(3)
            predicted = extra / (head + extra)
        else:
            head = schedule.s * math.log(2 * k + 1)
            predicted = abs(head / (head + extra) - schedule.s / (schedule.s + 2))
    else:
        predicted = abs(value - limit)
    return {"k": k, "value": value, "limit": limit, "gap": abs(value - limit), "predicted": predicted}


def schedule_power(schedule: Schedule, p: int) -> Schedule:
    """The schedule of phi^p: widths unchanged, legs s_k^p."""
    if p < 1:
        raise InvalidParameterError(f"power must be >= 1, got {p}")
    entries = tuple((schedule.width(k), schedule.legs(k) ** p) for k in schedule.indices())
    logger.debug(f"[Symbolic] schedule_power p={p} over {len(entries)} blocks")
    return Schedule(rule="explicit", K=len(entries), explicit=entries)


def cube_limit(m: int, rule: str, r: Optional[Fraction] = None) -> float:
    if m < 2:
        raise InvalidParameterError(f"cube dimension m must be >= 2, got {m}")
    if rule == "power":
        if r is None or Fraction(r) <= 0:
            raise InvalidParameterError(f"r must be positive, got {r}")
        return m / (1 + float(r))
    if rule == "quadratic":
        return float(m)
    raise InvalidParameterError(f"unknown cube rule {rule!r}")

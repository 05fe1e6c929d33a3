"""
checks.py
---------
Individual invariant checks. Each returns a list of CheckRecords; none of
them raises for a failed invariant.
"""

from fractions import Fraction
from itertools import product
from typing import List, Optional

from modules.configManager import get_settings
from modules.cubes import CubeBlock, CubeMap, cube_cylinder_count, cube_cylinders, cube_itinerary_count, cube_stage_dimension
from modules.estimators import (
    BowenContext,
    Cover,
    UniformCover,
    bowen_diameter,
    brute_min_cover,
    cover_exponent,
    critical_exponent,
    hausdorff_sum,
)
from modules.exceptions import BudgetExceededError, MeanDimError
from modules.maps1d import PAMap, check_full_legs
from modules.rational import format_rational
from modules.symbolic import cylinder_endpoints, stage_dimension
from modules.verification.models import CheckRecord, CheckStatus

TOLERANCE = 1e-9


def _record(name: str, ok: bool, subject: str, detail: str = "", value: Optional[float] = None) -> CheckRecord:
    return CheckRecord(name=name, status=CheckStatus.PASS if ok else CheckStatus.FAIL,
                       subject=subject, detail=detail, value=value)


def _skip(name: str, subject: str, detail: str) -> CheckRecord:
    return CheckRecord(name=name, status=CheckStatus.SKIP, subject=subject, detail=detail)


# ═══════════════════════════════════════════════════════════════════════════════
# Interval maps
# ═══════════════════════════════════════════════════════════════════════════════

def check_leg_exactness(phi: PAMap) -> List[CheckRecord]:
    out = []
    for block in phi.blocks:
        problems = check_full_legs(phi, block)
        out.append(_record("leg_exactness", not problems, f"block {block.index}", "; ".join(problems[:3])))
    return out


def check_blocks_fixed(phi: PAMap) -> List[CheckRecord]:
    out = []
    for block in phi.blocks:
        ok = phi(block.left) == block.left and phi(block.right) == block.right
        out.append(_record("block_fixed_points", ok, f"block {block.index}",
                           "" if ok else "block endpoints are not fixed"))
    return out


def check_cylinder_diameters(phi: PAMap, depths=(0, 1)) -> List[CheckRecord]:
    out = []
    budget = min(get_settings().enumeration_budget, 10_000)
    for block in phi.blocks:
        for n in depths:
            subject = f"block {block.index}, n={n}"
            try:
                cylinders = cylinder_endpoints(block, n, budget)
            except BudgetExceededError as e:
                out.append(_skip("cylinder_diameters", subject, e.detail))
                continue
            ctx = BowenContext.for_stage(phi, n)
            wrong = [c for c in cylinders if bowen_diameter(ctx, c) != block.leg_width]
            out.append(_record("cylinder_diameters", not wrong, subject,
                               f"{len(wrong)} of {len(cylinders)} cylinders off {format_rational(block.leg_width)}"
                               if wrong else ""))
    return out


def check_cover_optimality(phi: PAMap, n: int = 1, exponents=(0.5, 1.0)) -> List[CheckRecord]:
    """
    Brute grid covers against the cylinder cover at tiny scale. Folds of the
    iterates let one grid interval replace two cylinders, so the certified
    window is cylinder/2 <= brute <= cylinder for s <= 1.
    """
    out = []
    cap = get_settings().brute_grid_cap
    for block in phi.blocks:
        subject = f"block {block.index}, n={n}"
        if (block.legs ** (n + 1)) * 3 + 1 > cap:
            out.append(_skip("cover_optimality", subject, "grid above the brute cap"))
            continue
        ctx = BowenContext.for_stage(phi, n)
        cylinder = UniformCover(block.legs ** (n + 1), block.leg_width)
        for s in exponents:
            try:
                brute, _ = brute_min_cover(ctx, block.leg_width, s, block.interval)
            except MeanDimError as e:
                out.append(_skip("cover_optimality", subject, e.detail))
                continue
            reference = hausdorff_sum(cylinder, s)
            ok = reference / 2 - TOLERANCE <= brute <= reference + TOLERANCE
            out.append(_record("cover_optimality", ok, f"{subject}, s={s}",
                               f"brute {brute:.9f}, cylinder {reference:.9f}", brute))
    return out


def check_stage_agreement(phi: PAMap, depths=(0, 1, 2)) -> List[CheckRecord]:
    out = []
    for block in phi.blocks:
        if block.legs < 2 or block.leg_width >= 1:
            continue
        for n in depths:
            numeric = critical_exponent(BowenContext.for_stage(phi, n), block.leg_width, block.interval)
            symbolic = stage_dimension(block, n)
            ok = abs(numeric - symbolic) <= TOLERANCE
            out.append(_record("stage_agreement", ok, f"block {block.index}, n={n}",
                               f"numeric {numeric:.12f}, symbolic {symbolic:.12f}", numeric))
    return out


def check_provenance(phi: PAMap, rebuilt: Optional[PAMap]) -> List[CheckRecord]:
    if rebuilt is None:
        return [_skip("provenance", "map", "no construction header")]
    ok = rebuilt == phi and tuple(rebuilt.blocks) == tuple(phi.blocks)
    return [_record("provenance", ok, "map", "" if ok else "map differs from a rebuild of its own header")]


# ═══════════════════════════════════════════════════════════════════════════════
# Cube maps
# ═══════════════════════════════════════════════════════════════════════════════

def check_slab_law(block: CubeBlock) -> List[CheckRecord]:
    subject = f"cube block {block.index}"
    head = 4 * block.kappa
    widths_ok = all(block.slab(l).width == block.delta for l in range(1, head + 1))
    tail = {block.slab(l).width for l in range(head + 1, min(block.slab_count, head + 2000) + 1)}
    total = block.slab_endpoint(block.slab_count) - block.lo
    ok = widths_ok and len(tail) == 1 and total == block.side
    return [_record("slab_law", ok, subject, "" if ok else "slab widths break the law")]


def check_leg_corners(block: CubeBlock, limit: int = 200) -> List[CheckRecord]:
    """Odd legs must reach their target boxes at every corner and be affine across the slab."""
    subject = f"cube block {block.index}"
    bad = 0
    for j in range(min(block.leg_count, limit)):
        slab = block.slab(2 * j + 1)
        target = block.leg_image_box(j)
        increasing = j % 2 == 0
        for x1, rest in product((slab.lo, slab.hi), product((block.lo, block.hi), repeat=block.m - 1)):
            image = block._leg_map(j, (x1,) + rest)
            first = target.sides[0]
            want = [first.lo if (x1 == slab.lo) == increasing else first.hi]
            want += [side.lo if y == block.lo else side.hi for y, side in zip(rest, target.sides[1:])]
            if list(image) != want:
                bad += 1
        mid = tuple([slab.midpoint] + [block.lo + block.side / 2] * (block.m - 1))
        centre = tuple(side.midpoint for side in target.sides)
        if block(mid) != centre:
            bad += 1
    return [_record("leg_corners", bad == 0, subject, f"{bad} corner mismatches" if bad else "")]


def check_cube_cylinders(block: CubeBlock, depths=(1, 2)) -> List[CheckRecord]:
    """
    Count and Bowen diameters of the non-empty cube cylinders. The closed-form
    stage value counts (2k+1)^{nm} index tuples, which equals the non-empty
    count only at n = m - 1; other depths skip the agreement check.
    """
    out = []
    for n in depths:
        subject = f"cube block {block.index}, n={n}"
        try:
            boxes = cube_cylinders(block, n, budget=min(get_settings().enumeration_budget, 20_000))
        except BudgetExceededError as e:
            out.append(_skip("cylinder_diameters", subject, e.detail))
            continue
        expected = cube_itinerary_count(block, n)
        out.append(_record("cylinder_count", len(boxes) == expected, subject,
                           f"{len(boxes)} non-empty cylinders, expected {expected}"))
        cover = Cover.from_elements(BowenContext(block, n), boxes)
        ok_diam = set(cover.diameters) == {block.delta}
        out.append(_record("cylinder_diameters", ok_diam, subject,
                           "" if ok_diam else "cube cylinders of unequal Bowen diameter"))
        numeric = cover_exponent(cover)
        symbolic = cube_stage_dimension(block, n)
        if len(boxes) != cube_cylinder_count(block, n):
            out.append(_skip("stage_agreement", subject,
                             f"{cube_cylinder_count(block, n)} index tuples but {len(boxes)} non-empty cylinders; "
                             f"measured {numeric:.12f}, closed form {symbolic:.12f}"))
            continue
        out.append(_record("stage_agreement", abs(numeric - symbolic) <= TOLERANCE, subject,
                           f"numeric {numeric:.12f}, symbolic {symbolic:.12f}", numeric))
    return out


def check_corner_fixed_points(block: CubeBlock) -> List[CheckRecord]:
    if block.inflation != 0:
        return [_skip("corner_fixed_points", f"cube block {block.index}", "inflated legs move the corners")]
    low = tuple([block.lo] * (block.m - 1) + [block.hi])
    high = tuple([block.hi] * (block.m - 1) + [block.lo])
    ok = block(low) == low and block(high) == high
    return [_record("corner_fixed_points", ok, f"cube block {block.index}")]


def check_assignment(cube: CubeMap, declared: Optional[list]) -> List[CheckRecord]:
    if not declared:
        return [_skip("leg_assignment", "cube map", "document carries no assignment")]
    out = []
    for raw in declared:
        k = int(raw.get("k", 0))
        listed = raw.get("leg_assignment")
        if listed is None:
            continue
        block = cube.block(k)
        expected = [list(t) for t in block.leg_assignment()]
        bounds_ok = [Fraction(b) for b in raw.get("bounds", [])] == [block.lo, block.hi]
        ok = listed == expected and bounds_ok
        out.append(_record("leg_assignment", ok, f"cube block {k}"))
    return out

"""
cubes.py
--------
m-dimensional horseshoe blocks under the max metric, the nested cube map
that stacks them along the diagonal, and the strong cube detector.

A CubeBlock on E = [a, b]^m with leg parameter kappa cuts [a, b] into
4*kappa + 1 cells of width delta. Odd slabs V_l = [s_{l-1}, s_l] x [a, b]^{m-1}
expand along x_1 and contract onto an odd row H of the stable coordinates;
even slabs bend out of E. Slabs and leg assignments are computed by formula,
never stored, so blocks with 3^{k(m-1)} legs cost nothing until evaluated.

Usage:
    from modules.cubes import make_cube_block, cube_cylinders
    block = make_cube_block(2, 1, (0, 1))
    boxes = cube_cylinders(block, 2)
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from modules.configManager import get_settings
from modules.exceptions import (
    BudgetExceededError,
    ConstructionError,
    DomainError,
    InvalidParameterError,
)
from modules.estimators import DimensionStage
from modules.logging_config import logger
from modules.rational import Box, Interval, format_rational, log_rational, parse_rational, rational_power
from modules.surgery import Refusal

Point = Tuple[Fraction, ...]


def rho_distance(x: Sequence, y: Sequence) -> Fraction:
    if len(x) != len(y):
        raise DomainError(f"points of dimension {len(x)} and {len(y)}")
    return max((abs(Fraction(u) - Fraction(v)) for u, v in zip(x, y)), default=Fraction(0))


# ═══════════════════════════════════════════════════════════════════════════════
# Cube block
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class CubeBlock:
    m: int
    kappa: int
    lo: Fraction
    hi: Fraction
    inflation: Fraction = Fraction(0)
    escape_gap: Optional[Fraction] = None
    index: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise InvalidParameterError(f"cube dimension m must be >= 2, got {self.m}")
        if self.kappa < 1:
            raise InvalidParameterError(f"leg parameter must be >= 1, got {self.kappa}")
        if self.hi <= self.lo:
            raise ConstructionError("cube bounds must satisfy a < b")
        if self.inflation < 0:
            raise InvalidParameterError("inflation must be >= 0")
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        object.__setattr__(self, "inflation", Fraction(self.inflation))
        if self.escape_gap is None:
            object.__setattr__(self, "escape_gap", self.side / 2)

    # -----------------------------------------------------------------------
    # Geometry
    # -----------------------------------------------------------------------

    @property
    def side(self) -> Fraction:
        return self.hi - self.lo

    @property
    def cells(self) -> int:
        return 4 * self.kappa + 1

    @property
    def delta(self) -> Fraction:
        return self.side / self.cells

    @property
    def per_axis(self) -> int:
        return 2 * self.kappa + 1

    @property
    def leg_count(self) -> int:
        return self.per_axis ** (self.m - 1)

    @property
    def slab_count(self) -> int:
        return 2 * self.leg_count - 1

    @property
    def box(self) -> Box:
        return Box(tuple(Interval(self.lo, self.hi) for _ in range(self.m)))

    def grid_point(self, i: int) -> Fraction:
        return self.lo + i * self.delta

    def slab_endpoint(self, l: int) -> Fraction:
        """s_l: the first 4*kappa slabs have width delta, the rest share the last delta."""
        if l < 0 or l > self.slab_count:
            raise InvalidParameterError(f"slab endpoint {l} out of range 0..{self.slab_count}")
        head = 4 * self.kappa
        if l <= head:
            return self.lo + l * self.delta
        return self.lo + head * self.delta + (l - head) * self.delta / (self.slab_count - head)

    def slab(self, l: int) -> Interval:
        return Interval(self.slab_endpoint(l - 1), self.slab_endpoint(l))

    def slab_of(self, x1: Fraction) -> int:
        head = 4 * self.kappa
        offset = x1 - self.lo
        if offset < head * self.delta:
            l = int(offset // self.delta) + 1
        else:
            tail = self.delta / (self.slab_count - head)
            l = head + int((offset - head * self.delta) // tail) + 1
        return min(max(l, 1), self.slab_count)

    def leg_target(self, j: int) -> Tuple[int, ...]:
        """
        Odd multi-index assigned to the j-th odd slab: i_1..i_{m-2} ascending,
        i_{m-1} descending. Leg 0 gets (1, .., 1, 4k+1), the last leg (4k+1, .., 4k+1, 1).
        """
        if j < 0 or j >= self.leg_count:
            raise InvalidParameterError(f"leg {j} out of range 0..{self.leg_count - 1}")
        digits: List[int] = []
        rest = j
        for _ in range(self.m - 1):
            digits.append(rest % self.per_axis)
            rest //= self.per_axis
        digits.reverse()
        indices = [2 * d + 1 for d in digits[:-1]]
        indices.append(2 * (2 * self.kappa - digits[-1]) + 1)
        return tuple(indices)

    def leg_assignment(self, limit: Optional[int] = None) -> Optional[List[Tuple[int, ...]]]:
        if limit is not None and self.leg_count > limit:
            return None
        return [self.leg_target(j) for j in range(self.leg_count)]

    def row(self, i: int) -> Interval:
        return Interval(self.grid_point(i - 1), self.grid_point(i))

    def _dilated(self, interval: Interval) -> Interval:
        pad = self.inflation * interval.width / 2
        return Interval(interval.lo - pad, interval.hi + pad)

    def leg_image_box(self, j: int) -> Box:
        """Image of the j-th odd slab: [a, b] x H, dilated by 1 + inflation."""
        first = self._dilated(Interval(self.lo, self.hi))
        return Box((first,) + tuple(self._dilated(self.row(i)) for i in self.leg_target(j)))

    # -----------------------------------------------------------------------
    # Dynamics
    # -----------------------------------------------------------------------

    def _leg_map(self, j: int, point: Point) -> Point:
        l = 2 * j + 1
        slab = self.slab(l)
        image = self.leg_image_box(j)
        first = image.sides[0]
        u = (point[0] - slab.lo) / slab.width
        if j % 2 == 1:
            u = 1 - u
        out = [first.lo + u * first.width]
        for y, side in zip(point[1:], image.sides[1:]):
            out.append(side.lo + (y - self.lo) / self.side * side.width)
        return tuple(out)

    def _even_map(self, l: int, point: Point) -> Point:
        slab = self.slab(l)
        j_left, j_right = (l - 1) // 2, (l + 1) // 2
        u = (point[0] - slab.lo) / slab.width
        left_end = self._leg_map(j_left, (slab.lo,) + tuple(point[1:]))
        right_start = self._leg_map(j_right, (slab.hi,) + tuple(point[1:]))
        base = left_end[0]
        # adjacent legs meet at the same x_1 value; bulge away from E through the gap
        sign = 1 if base >= self.hi else -1
        x1 = base + sign * self.escape_gap * (1 - abs(2 * u - 1))
        stable = tuple((1 - u) * a + u * b for a, b in zip(left_end[1:], right_start[1:]))
        return (x1,) + stable

    def __call__(self, point: Sequence) -> Point:
        point = tuple(Fraction(x) for x in point)
        if len(point) != self.m:
            raise DomainError(f"point has {len(point)} coordinates, block has {self.m}")
        if not self.box.contains(point):
            raise DomainError("point outside the block's cube")
        l = self.slab_of(point[0])
        if l % 2 == 1:
            return self._leg_map((l - 1) // 2, point)
        return self._even_map(l, point)

    evaluate = __call__

    @property
    def reach(self) -> Fraction:
        """How far images can leave E in the max metric."""
        return self.escape_gap + self.inflation * self.side / 2

    # -----------------------------------------------------------------------
    # Orbits and box images
    # -----------------------------------------------------------------------

    def orbit(self, point: Sequence, n: int) -> List[Point]:
        """x, phi(x), .., phi^{n-1}(x). Only the first n-1 points must lie in E."""
        current = tuple(Fraction(x) for x in point)
        out = [current]
        for _ in range(n - 1):
            current = self(current)
            out.append(current)
        return out

    def _slab_pieces(self, box: Box) -> List[Tuple[int, Box]]:
        first, rest = box.sides[0], box.sides[1:]
        if first.width == 0:
            return [(self.slab_of(first.lo), box)]
        pieces: List[Tuple[int, Box]] = []
        l = self.slab_of(first.lo)
        while l <= self.slab_count and self.slab_endpoint(l - 1) < first.hi:
            part = Interval(max(first.lo, self.slab_endpoint(l - 1)), min(first.hi, self.slab_endpoint(l)))
            if part.width > 0:
                pieces.append((l, Box((part,) + rest)))
            l += 1
        return pieces

    @staticmethod
    def _hull(points: Sequence[Point]) -> Box:
        return Box(tuple(Interval(min(p[d] for p in points), max(p[d] for p in points))
                         for d in range(len(points[0]))))

    def _corners(self, box: Box) -> List[Point]:
        return [tuple(c) for c in product(*((s.lo, s.hi) for s in box.sides))]

    def image_boxes(self, box: Box) -> List[Tuple[Box, bool]]:
        """
        Split the box along the slabs and map each piece. Odd-slab pieces map
        onto boxes; even slabs are cut at their fold and each half contributes
        the coordinate ranges of its image, flagged True because it has left E.
        """
        if len(box.sides) != self.m:
            raise DomainError(f"box has {len(box.sides)} sides, block has {self.m}")
        if any(s.lo < self.lo or s.hi > self.hi for s in box.sides):
            raise DomainError("box leaves the block's cube")
        out: List[Tuple[Box, bool]] = []
        for l, piece in self._slab_pieces(box):
            if l % 2 == 1:
                j = (l - 1) // 2
                out.append((self._hull([self._leg_map(j, c) for c in self._corners(piece)]), False))
                continue
            fold = self.slab(l).midpoint
            first = piece.sides[0]
            halves = [(first.lo, min(first.hi, fold)), (max(first.lo, fold), first.hi)]
            if first.width == 0:
                halves = [(first.lo, first.hi)]
            for a, b in halves:
                if b < a or (b == a and first.width > 0):
                    continue
                part = Box((Interval(a, b),) + piece.sides[1:])
                out.append((self._hull([self._even_map(l, c) for c in self._corners(part)]), True))
        return out

    def leg_preimage(self, j: int, box: Box) -> Box:
        """Points of the j-th odd slab that leg j sends into the box (which must lie in its image)."""
        slab = self.slab(2 * j + 1)
        image = self.leg_image_box(j)
        first = image.sides[0]
        ends = []
        for x in (box.sides[0].lo, box.sides[0].hi):
            u = (x - first.lo) / first.width
            if j % 2 == 1:
                u = 1 - u
            ends.append(slab.lo + u * slab.width)
        sides = [Interval(min(ends), max(ends))]
        for wanted, side in zip(box.sides[1:], image.sides[1:]):
            sides.append(Interval(self.lo + (wanted.lo - side.lo) * self.side / side.width,
                                  self.lo + (wanted.hi - side.lo) * self.side / side.width))
        return Box(tuple(sides))

    def cylinders(self, n: int, budget: Optional[int] = None) -> List[Box]:
        return cube_cylinders(self, n, budget)

    def to_dict(self, assignment_limit: int = 4096) -> Dict[str, Any]:
        assignment = self.leg_assignment(assignment_limit)
        return {
            "k": self.index,
            "kappa": self.kappa,
            "bounds": [format_rational(self.lo), format_rational(self.hi)],
            "inflation": format_rational(self.inflation),
            "leg_count": self.leg_count,
            "leg_assignment": [list(t) for t in assignment] if assignment is not None else None,
        }


def make_cube_block(m: int, kappa: int, bounds: Sequence = (0, 1), inflation=0,
                    escape_gap=None, index: int = 0) -> CubeBlock:
    lo, hi = parse_rational(bounds[0], "bounds"), parse_rational(bounds[1], "bounds")
    return CubeBlock(m=int(m), kappa=int(kappa), lo=lo, hi=hi,
                     inflation=parse_rational(inflation, "inflation"),
                     escape_gap=None if escape_gap is None else parse_rational(escape_gap, "escape_gap"),
                     index=index)


def kappa_for(k: int) -> int:
    """2*kappa + 1 = 3^k cells per axis in the odd rows."""
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    return (3 ** k - 1) // 2


# ═══════════════════════════════════════════════════════════════════════════════
# Cylinders
# ═══════════════════════════════════════════════════════════════════════════════

def cube_cylinder_count(block: CubeBlock, n: int) -> int:
    """Index tuples (i^(n), .., i^(1)) of odd rows and leg slabs: (2k+1)^{nm}."""
    if n < 1:
        raise InvalidParameterError(f"horizon n must be >= 1, got {n}")
    return block.per_axis ** (n * block.m)


def cube_itinerary_count(block: CubeBlock, n: int) -> int:
    """
    Non-empty cylinders: the stable rows are free at time 0 only, after that
    each leg fixes the row its image lands in, so (2k+1)^{(m-1)(n+1)}.
    """
    if n < 1:
        raise InvalidParameterError(f"horizon n must be >= 1, got {n}")
    return block.per_axis ** ((block.m - 1) * (n + 1))


def _overlap(a: Box, b: Box) -> Optional[Box]:
    sides = []
    for u, v in zip(a.sides, b.sides):
        lo, hi = max(u.lo, v.lo), min(u.hi, v.hi)
        if hi <= lo:
            return None
        sides.append(Interval(lo, hi))
    return Box(tuple(sides))


def _first_step(block: CubeBlock) -> List[Tuple[int, Tuple[int, ...], Box]]:
    out = []
    for rows in product(range(1, block.cells + 1, 2), repeat=block.m - 1):
        for j in range(block.leg_count):
            box = Box((block.slab(2 * j + 1),) + tuple(block.row(i) for i in rows))
            out.append((j, rows, box))
    return out


def cube_cylinders(block: CubeBlock, n: int, budget: Optional[int] = None) -> List[Box]:
    """
    FUNCTION: cube_cylinders

    DESCRIPTION:
    Non-empty depth-n cylinders of the block map, lexicographic in the
    itinerary. Depth 1 is an odd row box times a leg slab; depth t+1 is
    D ∩ phi_j^{-1}(Z) for a depth-1 box D in leg j and a depth-t cylinder Z,
    taken through the exact inverse of the leg map, so every cylinder is a box.

    RAISES:
    BudgetExceededError : more non-empty cylinders than the budget
    """
    count = cube_itinerary_count(block, n)
    budget = budget or get_settings().enumeration_budget
    if count > budget:
        raise BudgetExceededError(f"{count} cube cylinders requested, enumeration budget is {budget}")
    first = _first_step(block)
    current: List[Tuple[Tuple[int, ...], Box]] = [(rows, box) for _, rows, box in first]
    for _ in range(1, n):
        by_rows: Dict[Tuple[int, ...], List[Box]] = {}
        for rows, box in current:
            by_rows.setdefault(rows, []).append(box)
        refined: List[Tuple[Tuple[int, ...], Box]] = []
        for j, rows, box in first:
            image = block._hull([block._leg_map(j, c) for c in block._corners(box)])
            for later_rows, later in by_rows.items():
                if any(_overlap_1d(block.row(i), side) is None for i, side in zip(later_rows, image.sides[1:])):
                    continue
                for z in later:
                    meet = _overlap(image, z)
                    if meet is not None:
                        refined.append((rows, block.leg_preimage(j, meet)))
        current = refined
    logger.debug(f"[Cubes] {len(current)} cylinders at depth {n} for block {block.index}")
    return [box for _, box in current]


def _overlap_1d(a: Interval, b: Interval) -> Optional[Interval]:
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    return Interval(lo, hi) if hi > lo else None


def cube_stage_dimension(block: CubeBlock, n: int) -> float:
    """log (2k+1)^{nm} / log(1/delta); normalized by n it tends to the cube limit."""
    if block.delta >= 1:
        raise InvalidParameterError("cell width must be below 1")
    return n * block.m * math.log(block.per_axis) / -log_rational(block.delta)


# ═══════════════════════════════════════════════════════════════════════════════
# Nested cube map
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class CubeSchedule:
    m: int
    rule: str
    B: Fraction
    K: int
    r: Optional[Fraction] = None

    def __post_init__(self):
        if self.rule not in ("power", "quadratic"):
            raise InvalidParameterError(f"cube rule must be power or quadratic, got {self.rule!r}")
        if self.rule == "power" and (self.r is None or Fraction(self.r) <= 0):
            raise InvalidParameterError(f"r must be positive, got {self.r}")
        if Fraction(self.B) <= 0:
            raise InvalidParameterError("B must be positive")
        if self.K < 1:
            raise InvalidParameterError(f"K must be >= 1, got {self.K}")

    def side(self, k: int) -> Fraction:
        if self.rule == "power":
            return Fraction(self.B) * rational_power(3, -k * Fraction(self.r))
        return Fraction(self.B) / (k * k)

    def describe(self) -> Dict[str, Any]:
        out = {"m": self.m, "rule": self.rule, "B": format_rational(self.B), "K": self.K}
        if self.r is not None:
            out["r"] = format_rational(self.r)
        return out


def cube_stage_value(m: int, k: int, rule: str, B, r=None) -> float:
    """Normalized stage value log 3^{km} / log((2*3^k - 1)/|E_k|), without building anything."""
    schedule = CubeSchedule(m=m, rule=rule, B=parse_rational(B, "B"), K=max(k, 1),
                            r=None if r is None else parse_rational(r, "r"))
    eps = schedule.side(k) / (2 * 3 ** k - 1)
    return k * m * math.log(3) / -log_rational(eps)


@dataclass(frozen=True)
class AnnulusExtension:
    """Radial max-norm interpolation on E'\\E between a block map on dE and the identity on dE'."""
    inner: Tuple[Fraction, Fraction]
    outer: Tuple[Fraction, Fraction]
    block: Optional[CubeBlock] = None
    m: int = 2

    @property
    def centre(self) -> Fraction:
        return (self.inner[0] + self.inner[1]) / 2

    def __call__(self, point: Sequence) -> Point:
        point = tuple(Fraction(x) for x in point)
        c = self.centre
        rho = (self.inner[1] - self.inner[0]) / 2
        big_r = (self.outer[1] - self.outer[0]) / 2
        radius = max(abs(x - c) for x in point)
        if radius < rho or radius > big_r:
            raise DomainError("point is not in the annulus between the two cubes")
        t = (radius - rho) / (big_r - rho)
        on_inner = tuple(c + (x - c) * rho / radius for x in point)
        on_outer = tuple(c + (x - c) * big_r / radius for x in point)
        inner_image = self.block(on_inner) if self.block is not None else on_inner
        return tuple((1 - t) * u + t * v for u, v in zip(inner_image, on_outer))

    evaluate = __call__


def extend_identity_boundary(block: Optional[CubeBlock], outer: Sequence,
                             inner: Optional[Sequence] = None, m: Optional[int] = None) -> AnnulusExtension:
    """
    FUNCTION: extend_identity_boundary

    DESCRIPTION:
    Continuous extension of the block map to the outer cube that is the
    identity on the outer boundary. The cubes must be concentric.

    RAISES:
    ConstructionError : outer cube not strictly larger, not concentric, or
                        too small for the block's escape bulges
    """
    o_lo, o_hi = Fraction(outer[0]), Fraction(outer[1])
    if block is not None:
        i_lo, i_hi, dim = block.lo, block.hi, block.m
    else:
        if inner is None:
            raise InvalidParameterError("an identity extension needs the inner cube bounds")
        i_lo, i_hi, dim = Fraction(inner[0]), Fraction(inner[1]), int(m or 2)
    if not (o_lo < i_lo and i_hi < o_hi):
        raise ConstructionError("outer cube must strictly contain the inner cube")
    if o_lo + o_hi != i_lo + i_hi:
        raise ConstructionError("inner and outer cubes must be concentric")
    if block is not None and block.reach > i_lo - o_lo:
        raise ConstructionError(
            f"gap {format_rational(i_lo - o_lo)} is smaller than the block's reach {format_rational(block.reach)}"
        )
    return AnnulusExtension(inner=(i_lo, i_hi), outer=(o_lo, o_hi), block=block, m=dim)


@dataclass(frozen=True)
class CubeMap:
    schedule: CubeSchedule
    offsets: Tuple[Fraction, ...]

    @property
    def m(self) -> int:
        return self.schedule.m

    def outer_bounds(self, k: int) -> Tuple[Fraction, Fraction]:
        start = self.offsets[k - 1]
        return start, start + 3 * self.schedule.side(k)

    def block(self, k: int) -> CubeBlock:
        if k < 1 or k > self.schedule.K:
            raise InvalidParameterError(f"block {k} outside 1..{self.schedule.K}")
        w = self.schedule.side(k)
        start = self.offsets[k - 1]
        return CubeBlock(m=self.m, kappa=kappa_for(k), lo=start + w, hi=start + 2 * w,
                         escape_gap=w / 2, index=k)

    def blocks(self) -> List[CubeBlock]:
        return [self.block(k) for k in range(1, self.schedule.K + 1)]

    def __call__(self, point: Sequence) -> Point:
        point = tuple(Fraction(x) for x in point)
        if len(point) != self.m or any(x < 0 or x > 1 for x in point):
            raise DomainError("point outside [0, 1]^m")
        for k in range(1, self.schedule.K + 1):
            o_lo, o_hi = self.outer_bounds(k)
            if all(o_lo <= x <= o_hi for x in point):
                block = self.block(k)
                if block.box.contains(point):
                    return block(point)
                return extend_identity_boundary(block, (o_lo, o_hi))(point)
        return point

    evaluate = __call__

    def stage(self, k: int, n: int) -> DimensionStage:
        block = self.block(k)
        dim = cube_stage_dimension(block, n)
        return DimensionStage(k=k, n=n, eps=block.delta, dim=dim, normalized=dim / n)

    def to_document(self, assignment_limit: int = 4096) -> Dict[str, Any]:
        doc = self.schedule.describe()
        doc["blocks"] = [b.to_dict(assignment_limit) for b in self.blocks()]
        return doc


def make_nested_cube_map(m: int, rule: str, B, K: int, r=None) -> CubeMap:
    """
    FUNCTION: make_nested_cube_map

    DESCRIPTION:
    Block k is an m-dimensional 3^{k(m-1)}-leg horseshoe on a cube E_k of side
    B/3^{kr} (power) or B/k^2 (quadratic), centred in E_k' of three times
    the side. The E_k' sit consecutively along the diagonal from the origin;
    the map is the identity outside them.

    RAISES:
    ConstructionError : the outer cubes do not fit in [0, 1]^m
    """
    schedule = CubeSchedule(m=int(m), rule=rule, B=parse_rational(B, "B"), K=int(K),
                            r=None if r is None else parse_rational(r, "r"))
    offsets: List[Fraction] = []
    position = Fraction(0)
    for k in range(1, schedule.K + 1):
        offsets.append(position)
        position += 3 * schedule.side(k)
    if position > 1:
        raise ConstructionError(
            f"outer cubes need {format_rational(position)} along the diagonal, more than 1"
        )
    logger.info(f"[Cubes] nested cube map m={m} rule={rule} K={K}, diagonal used {float(position):.6f}")
    return CubeMap(schedule=schedule, offsets=tuple(offsets))


# ═══════════════════════════════════════════════════════════════════════════════
# Supplementary stage values
# ═══════════════════════════════════════════════════════════════════════════════

def strong_cube_stage_dimension(m: int, k: int, i: int) -> float:
    """Normalized value with 3^{k i} legs per axis at scale 1/(i^2 (2*3^{k i} - 1))."""
    eps = Fraction(1, i * i * (2 * 3 ** (k * i) - 1))
    return k * i * m * math.log(3) / -log_rational(eps)


def cube_span_bound(m: int, k: int, n: int, eps) -> Fraction:
    """span(n, 4 eps) <= k * 3^{knm} / eps."""
    eps = Fraction(eps)
    if eps <= 0:
        raise InvalidParameterError("eps must be positive")
    return k * Fraction(3 ** (k * n * m)) / eps


def cube_mdim_M_upper_stage(m: int, k: int, r, B) -> float:
    """log 3^{km} / log(4 (2*3^k - 1) 3^{kr} / B); tends to m/(1+r)."""
    r, B = parse_rational(r, "r"), parse_rational(B, "B")
    scale = 4 * (2 * 3 ** k - 1) / (B * rational_power(3, -k * r))
    return k * m * math.log(3) / log_rational(scale)


# ═══════════════════════════════════════════════════════════════════════════════
# Strong cube detector
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class CubeCert:
    side: Fraction
    eps: Fraction
    legs: int
    margin: Fraction
    escape_margin: Fraction

    def to_dict(self) -> Dict[str, Any]:
        return {"result": "certificate", "side": format_rational(self.side), "eps": format_rational(self.eps),
                "legs": self.legs, "margin": format_rational(self.margin),
                "escape_margin": format_rational(self.escape_margin)}


def _box_margin(inner: Box, outer: Box) -> Fraction:
    return min(min(i.lo - o.lo, o.hi - i.hi) for i, o in zip(inner.sides, outer.sides))


def is_strong_cube_horseshoe(block: CubeBlock, E: Optional[Box], eps, kappa: Optional[int] = None,
                             budget: Optional[int] = None) -> Union[CubeCert, Refusal]:
    """
    FUNCTION: is_strong_cube_horseshoe

    DESCRIPTION:
    |E| > eps; every odd row box H lies in the interior of the image of an
    odd slab; every even slab is mapped outside E. Leg images are taken from
    the 2^m corners of each slab, where the leg maps are affine.

    RETURNS:
    CubeCert, or Refusal("size" | "count" | "strictness" | "escape", ...)
    """
    eps = Fraction(eps)
    if E is not None and E != block.box:
        raise DomainError("E must be the block's cube")
    if block.side <= eps:
        return Refusal("size", f"|E| = {format_rational(block.side)} is not above eps", block.side - eps)
    if kappa is not None and kappa != block.kappa:
        return Refusal("count", f"block has leg parameter {block.kappa}, {kappa} required",
                       Fraction(block.kappa - kappa))
    budget = budget or get_settings().enumeration_budget
    if block.leg_count * 2 ** block.m > budget:
        raise BudgetExceededError(f"{block.leg_count} legs exceed the enumeration budget")

    margin: Optional[Fraction] = None
    for j in range(block.leg_count):
        slab = block.slab(2 * j + 1)
        corners = [block((x1,) + rest) for x1 in (slab.lo, slab.hi)
                   for rest in product((block.lo, block.hi), repeat=block.m - 1)]
        image = Box(tuple(Interval(min(c[d] for c in corners), max(c[d] for c in corners))
                          for d in range(block.m)))
        target = Box((Interval(block.lo, block.hi),) + tuple(block.row(i) for i in block.leg_target(j)))
        leg_margin = _box_margin(target, image)
        margin = leg_margin if margin is None else min(margin, leg_margin)
        if leg_margin <= 0:
            return Refusal("strictness", f"row {block.leg_target(j)} is not inside the open image of leg {j}",
                           leg_margin)

    escape: Optional[Fraction] = None
    for l in range(2, block.slab_count, 2):
        slab = block.slab(l)
        lo_image = block._even_map(l, (slab.lo,) + (block.lo,) * (block.m - 1))[0]
        outside = lo_image - block.hi if lo_image >= block.hi else block.lo - lo_image
        escape = outside if escape is None else min(escape, outside)
        if outside <= 0:
            return Refusal("escape", f"even slab {l} touches E", outside)

    return CubeCert(side=block.side, eps=eps, legs=block.leg_count, margin=margin or Fraction(0),
                    escape_margin=escape if escape is not None else block.escape_gap)

"""
estimators.py
-------------
Bowen metrics, covers, separated sets and the finite-stage mean-dimension
estimators built on them.

A BowenContext pairs a system with a horizon n: d_n(x, y) is the largest
distance between the first n points of the two orbits. Systems are PAMaps or
cube blocks (anything exposing ``image_boxes``), which are iterated through
their own map under the max metric.

Usage:
    from modules.estimators import BowenContext, critical_exponent
    ctx = BowenContext.for_stage(phi, n=2)
    dim = critical_exponent(ctx, eps, block.interval)
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import bisect

from modules.configManager import get_settings
from modules.exceptions import BudgetExceededError, DomainError, InvalidParameterError
from modules.logging_config import logger
from modules.maps1d import HorseshoeBlock, PAMap, Schedule, check_full_legs, compose_power, lap_nodes
from modules.rational import Box, Interval, format_rational, log_rational
from modules.symbolic import cylinder_endpoints

Target = Union[Interval, Box]


# ═══════════════════════════════════════════════════════════════════════════════
# Types
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class BowenContext:
    system: Any
    horizon: int

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidParameterError(f"Bowen horizon must be >= 1, got {self.horizon}")

    @classmethod
    def for_stage(cls, system: Any, n: int) -> "BowenContext":
        """Stage n looks at iterates 0..n, the depth at which an s-leg block has s^{n+1} cylinders."""
        if n < 0:
            raise InvalidParameterError(f"stage n must be >= 0, got {n}")
        return cls(system, n + 1)

    @property
    def is_cube(self) -> bool:
        return hasattr(self.system, "image_boxes")


@dataclass(frozen=True)
class Cover:
    elements: Tuple[Target, ...]
    diameters: Tuple[Fraction, ...]

    @classmethod
    def from_elements(cls, ctx: BowenContext, elements: Iterable[Target]) -> "Cover":
        elements = tuple(elements)
        return cls(elements, tuple(bowen_diameter(ctx, e) for e in elements))

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def max_diameter(self) -> Fraction:
        return max(self.diameters, default=Fraction(0))

    def groups(self) -> List[Tuple[Fraction, int]]:
        return sorted(Counter(self.diameters).items())


@dataclass(frozen=True)
class UniformCover:
    """count elements of one diameter; never enumerated."""
    count: int
    diameter: Fraction

    @property
    def size(self) -> int:
        return self.count

    @property
    def max_diameter(self) -> Fraction:
        return self.diameter if self.count else Fraction(0)

    def groups(self) -> List[Tuple[Fraction, int]]:
        return [(self.diameter, self.count)] if self.count else []


AnyCover = Union[Cover, UniformCover]


@dataclass(frozen=True)
class DimensionStage:
    k: int
    n: int
    eps: Fraction
    dim: float
    normalized: float

    def as_row(self) -> Dict[str, Any]:
        return {"k": self.k, "n": self.n, "eps": format_rational(self.eps),
                "dim": self.dim, "normalized": self.normalized}


@dataclass
class DimEstimate:
    kind: str
    stages: List[DimensionStage]
    lower: float
    upper: float
    growth_rates: Dict[str, float] = field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "kind": self.kind,
            "lower": self.lower,
            "upper": self.upper,
            "stages": [s.as_row() for s in self.stages],
        }
        if self.growth_rates:
            out["growth_rates"] = dict(self.growth_rates)
        return out


@dataclass(frozen=True)
class SeparationResult:
    count: int
    flag: str
    points: Tuple[Fraction, ...] = ()


# ═══════════════════════════════════════════════════════════════════════════════
# Bowen metric
# ═══════════════════════════════════════════════════════════════════════════════

def bowen_distance(ctx: BowenContext, x, y) -> float:
    if ctx.is_cube:
        m = ctx.system.m
        if len(tuple(x)) != m or len(tuple(y)) != m:
            raise DomainError(f"points must have {m} coordinates")
        pairs = zip(ctx.system.orbit(x, ctx.horizon), ctx.system.orbit(y, ctx.horizon))
        return float(max(max(abs(u - v) for u, v in zip(p, q)) for p, q in pairs))
    phi: PAMap = ctx.system
    orbit_x, orbit_y = phi.orbit(Fraction(x), ctx.horizon), phi.orbit(Fraction(y), ctx.horizon)
    return float(max(abs(u - v) for u, v in zip(orbit_x, orbit_y)))


def _interval_diameter(phi: PAMap, interval: Interval, horizon: int) -> Fraction:
    best = interval.width
    current = interval
    for _ in range(horizon - 1):
        current = phi.image_interval(current)
        best = max(best, current.width)
    return best


def _spread(boxes: Sequence[Box]) -> Fraction:
    """rho-diameter of a union of boxes: the widest coordinate range."""
    return max(max(b.sides[d].hi for b in boxes) - min(b.sides[d].lo for b in boxes)
               for d in range(len(boxes[0].sides)))


def _box_diameter(block: Any, box: Box, horizon: int) -> Fraction:
    best = box.width
    pieces = [box]
    for step in range(1, horizon):
        images: List[Box] = []
        for piece in pieces:
            for image, escaped in block.image_boxes(piece):
                if escaped and step < horizon - 1:
                    raise DomainError("box leaves the cube before the horizon")
                images.append(image)
        best = max(best, _spread(images))
        pieces = images
    return best


def bowen_diameter(ctx: BowenContext, target: Optional[Target]) -> Fraction:
    """Exact d_n-diameter of an interval (or, for cube systems, a box)."""
    if target is None:
        return Fraction(0)
    if ctx.is_cube:
        if not isinstance(target, Box):
            raise DomainError("cube systems measure boxes, not intervals")
        return _box_diameter(ctx.system, target, ctx.horizon)
    if isinstance(target, Box):
        raise DomainError("interval maps measure intervals, not boxes")
    return _interval_diameter(ctx.system, target, ctx.horizon)


# ═══════════════════════════════════════════════════════════════════════════════
# Hausdorff sums and covers
# ═══════════════════════════════════════════════════════════════════════════════

def _term(count: int, diameter: Fraction, s: float) -> float:
    if count == 0:
        return 0.0
    if diameter == 0:
        return float(count) if s == 0 else 0.0
    if s == 0:
        return float(count) if count.bit_length() < 1000 else math.inf
    exponent = math.log(count) + s * log_rational(diameter)
    return math.exp(exponent) if exponent < 709 else math.inf


def hausdorff_sum(cover: AnyCover, s: float) -> float:
    """sum diam^s over the cover, with 0^0 = 1."""
    if s < 0:
        raise InvalidParameterError(f"exponent must be >= 0, got {s}")
    return math.fsum(_term(c, d, s) for d, c in cover.groups())


def _check_eps(eps) -> Fraction:
    eps = Fraction(eps)
    if eps <= 0:
        raise InvalidParameterError(f"scale must be positive, got {eps}")
    return eps


def cylinder_cover(ctx: BowenContext, eps, target: Target, budget: Optional[int] = None) -> AnyCover:
    """
    FUNCTION: cylinder_cover

    DESCRIPTION:
    Declared block: its legs are checked against the map first, then its s^h
    cylinders at horizon h are measured with the Bowen metric (all of them up
    to the brute grid cap, else the first one stands for the equal rest) and
    split evenly when eps is finer. Cube systems: the non-empty cylinders of
    the block map, measured the same way. Anything else: the lap cover, i.e.
    the pieces on which every iterate below the horizon is affine, each split
    evenly to diameter <= eps.

    RAISES:
    InvalidParameterError : a declared block whose legs are not full, or a
                            scale finer than the cube cylinders
    BudgetExceededError   : more cover elements than the budget
    """
    eps = _check_eps(eps)
    settings = get_settings()
    budget = budget or settings.enumeration_budget
    if ctx.is_cube:
        if not isinstance(target, Box) or target != ctx.system.box:
            raise DomainError("cube systems are covered on the block's cube")
        cover = Cover.from_elements(ctx, ctx.system.cylinders(ctx.horizon, budget))
        if cover.max_diameter > eps:
            raise InvalidParameterError(
                f"scale {format_rational(eps)} is finer than the cube cylinders ({format_rational(cover.max_diameter)})"
            )
        return cover

    phi: PAMap = ctx.system
    if not isinstance(target, Interval):
        raise DomainError("interval maps are covered by intervals")
    if target.lo < phi.lo or target.hi > phi.hi:
        raise DomainError("target leaves the domain")
    if target.lo == target.hi:
        return Cover((target,), (Fraction(0),))
    block = phi.find_block(target)
    if block is not None:
        problems = _leg_problems(phi, block)
        if problems:
            raise InvalidParameterError(f"declared block {block.index} is not a full-leg block: {problems[0]}")
        count = block.legs ** ctx.horizon
        if count <= settings.brute_grid_cap:
            return _measured_cover(ctx, cylinder_endpoints(block, ctx.horizon - 1, budget), eps, budget)
        first = Interval(block.left, block.left + block.width / count)
        return _split_uniform(count, bowen_diameter(ctx, first), eps)

    points = [x for x in lap_nodes(phi, ctx.horizon) if target.lo < x < target.hi]
    points = [target.lo] + points + [target.hi]
    return _measured_cover(ctx, [Interval(u, v) for u, v in zip(points, points[1:])], eps, budget)


@lru_cache(maxsize=256)
def _leg_problems(phi: PAMap, block: HorseshoeBlock) -> Tuple[str, ...]:
    return tuple(check_full_legs(phi, block))


def _measured_cover(ctx: BowenContext, pieces: Sequence[Interval], eps: Fraction, budget: int) -> Cover:
    """Each piece measured once and split evenly to diameter <= eps (pieces are monotone laps)."""
    elements: List[Interval] = []
    diameters: List[Fraction] = []
    for piece in pieces:
        d = bowen_diameter(ctx, piece)
        parts = max(1, math.ceil(d / eps))
        if len(elements) + parts > budget:
            raise BudgetExceededError(f"cover needs more than {budget} elements")
        step = piece.width / parts
        for i in range(parts):
            elements.append(Interval(piece.lo + i * step, piece.lo + (i + 1) * step))
            diameters.append(d / parts)
    return Cover(tuple(elements), tuple(diameters))


def _split_uniform(count: int, diameter: Fraction, eps: Fraction) -> UniformCover:
    if diameter <= eps:
        return UniformCover(count, diameter)
    parts = math.ceil(diameter / eps)
    return UniformCover(count * parts, diameter / parts)


def brute_grid(ctx: BowenContext, target: Interval, refinement: int = 3,
               cap: Optional[int] = None) -> List[Fraction]:
    """Cylinder endpoints of the target at the context horizon, each gap split into `refinement` parts."""
    cap = cap or get_settings().brute_grid_cap
    base = [x for x in lap_nodes(ctx.system, ctx.horizon + 1) if target.lo < x < target.hi]
    base = [target.lo] + base + [target.hi]
    size = (len(base) - 1) * refinement + 1
    if size > cap:
        raise BudgetExceededError(f"brute grid of {size} points exceeds cap {cap}")
    grid: List[Fraction] = []
    for u, v in zip(base, base[1:]):
        step = (v - u) / refinement
        grid.extend(u + i * step for i in range(refinement))
    grid.append(base[-1])
    return grid


def brute_min_cover(ctx: BowenContext, eps, s: float, target: Interval,
                    grid: Optional[Sequence[Fraction]] = None,
                    cap: Optional[int] = None) -> Tuple[float, Cover]:
    """Cheapest cover by consecutive grid intervals of d_n-diameter <= eps (shortest path)."""
    if ctx.is_cube:
        raise InvalidParameterError("brute cover search runs on interval maps only")
    eps = _check_eps(eps)
    cap = cap or get_settings().brute_grid_cap
    points = sorted(set(grid)) if grid is not None else brute_grid(ctx, target, cap=cap)
    if len(points) > cap:
        raise BudgetExceededError(f"brute grid of {len(points)} points exceeds cap {cap}")
    if points[0] != target.lo or points[-1] != target.hi:
        raise InvalidParameterError("brute grid must start and end at the target endpoints")
    if len(points) == 1:
        return _term(1, Fraction(0), s), Cover((target,), (Fraction(0),))

    size = len(points)
    best = [math.inf] * size
    prev = [-1] * size
    diam = [Fraction(0)] * size
    best[0] = 0.0
    for i in range(size - 1):
        if best[i] == math.inf:
            continue
        for j in range(i + 1, size):
            d = _interval_diameter(ctx.system, Interval(points[i], points[j]), ctx.horizon)
            if d > eps:
                break
            cost = best[i] + _term(1, d, s)
            if cost < best[j]:
                best[j], prev[j], diam[j] = cost, i, d
    if best[-1] == math.inf:
        raise InvalidParameterError(f"grid too coarse: no cover of diameter <= {format_rational(eps)}")

    elements: List[Interval] = []
    diameters: List[Fraction] = []
    j = size - 1
    while j > 0:
        elements.append(Interval(points[prev[j]], points[j]))
        diameters.append(diam[j])
        j = prev[j]
    return best[-1], Cover(tuple(reversed(elements)), tuple(reversed(diameters)))


def min_hausdorff_sum(ctx: BowenContext, eps, s: float, target: Target,
                      strategy: str = "cylinder", grid: Optional[Sequence[Fraction]] = None) -> float:
    if strategy == "cylinder":
        return hausdorff_sum(cylinder_cover(ctx, eps, target), s)
    if strategy == "brute":
        value, _ = brute_min_cover(ctx, eps, s, target, grid)
        return value
    raise InvalidParameterError(f"unknown cover strategy {strategy!r}")


# ═══════════════════════════════════════════════════════════════════════════════
# Critical exponents
# ═══════════════════════════════════════════════════════════════════════════════

def cover_exponent(cover: AnyCover, tol: Optional[float] = None) -> float:
    """The s at which the cover's s-sum crosses 1; 0 when the 0-sum is already below 1."""
    tol = tol or get_settings().bisection_tolerance
    groups = cover.groups()
    total = sum(c for _, c in groups)
    if total <= 1:
        return 0.0
    positive = [(d, c) for d, c in groups if d > 0]
    if not positive:
        return 0.0
    if any(d >= 1 for d, _ in positive):
        raise InvalidParameterError("cover elements of diameter >= 1 have no finite critical exponent")
    if len(positive) == 1:
        d, c = positive[0]
        return math.log(c) / -log_rational(d)

    def excess(s: float) -> float:
        return math.fsum(_term(c, d, s) for d, c in groups) - 1.0

    hi = 1.0
    while excess(hi) > 0:
        hi *= 2
        if hi > 2 ** 20:
            raise InvalidParameterError("critical exponent bracket did not close")
    return float(bisect(excess, 0.0, hi, xtol=tol))


def critical_exponent(ctx: BowenContext, eps, target: Target, strategy: str = "cylinder",
                      grid: Optional[Sequence[Fraction]] = None, tol: Optional[float] = None) -> float:
    tol = tol or get_settings().bisection_tolerance
    if strategy == "cylinder":
        return cover_exponent(cylinder_cover(ctx, eps, target), tol)
    if strategy != "brute":
        raise InvalidParameterError(f"unknown cover strategy {strategy!r}")

    def excess(s: float) -> float:
        return brute_min_cover(ctx, eps, s, target, grid)[0] - 1.0

    if excess(0.0) < 0:
        return 0.0
    hi = 1.0
    while excess(hi) > 0:
        hi *= 2
        if hi > 64:
            raise InvalidParameterError("critical exponent bracket did not close")
    return float(bisect(excess, 0.0, hi, xtol=tol))


# ═══════════════════════════════════════════════════════════════════════════════
# Separated sets
# ═══════════════════════════════════════════════════════════════════════════════

def max_separated(ctx: BowenContext, eps, target: Optional[Interval] = None,
                  budget: Optional[int] = None, refinement: Optional[int] = None) -> SeparationResult:
    """
    FUNCTION: max_separated

    DESCRIPTION:
    Greedy (n, eps)-separated set, scanning left to right over the lap
    endpoints at horizon n+1 refined by `refinement`. A candidate is kept when
    its d_n-distance to every kept point exceeds eps; only kept points within
    eps in position can fail that test.

    RETURNS:
    SeparationResult with flag "exact" only when the count meets a proven
    upper bound (see separation_upper_bound), "lower-bound" otherwise.

    RAISES:
    BudgetExceededError : scan grid larger than the budget
    """
    if ctx.is_cube:
        raise InvalidParameterError("separated sets are computed on interval maps")
    eps = _check_eps(eps)
    phi: PAMap = ctx.system
    target = target or phi.domain
    settings = get_settings()
    budget = budget or settings.enumeration_budget
    refinement = refinement or settings.grid_refinement

    base = [x for x in lap_nodes(phi, ctx.horizon + 1, settings.node_cap) if target.lo < x < target.hi]
    base = [target.lo] + base + [target.hi]
    size = (len(base) - 1) * refinement + 1
    if size > budget:
        raise BudgetExceededError(f"separation grid of {size} points exceeds budget {budget}")

    kept: List[Fraction] = []
    orbits: List[List[Fraction]] = []
    window = 0

    def consider(x: Fraction) -> None:
        nonlocal window
        while window < len(kept) and x - kept[window] > eps:
            window += 1
        orbit = phi.orbit(x, ctx.horizon)
        for other in orbits[window:]:
            if max(abs(u - v) for u, v in zip(orbit, other)) <= eps:
                return
        kept.append(x)
        orbits.append(orbit)

    for u, v in zip(base, base[1:]):
        step = (v - u) / refinement
        for i in range(refinement):
            consider(u + i * step)
    consider(base[-1])

    bound = separation_upper_bound(ctx, eps, target)
    flag = "exact" if bound is not None and len(kept) >= bound else "lower-bound"
    return SeparationResult(count=len(kept), flag=flag, points=tuple(kept))


def separation_upper_bound(ctx: BowenContext, eps, target: Interval) -> Optional[int]:
    """
    A proven ceiling on sep(n, eps) over the target, or None. A target of
    d_n-diameter <= eps holds one point; at horizon 1 d_n is the distance on
    the line, so N points need N-1 gaps above eps and N <= ceil(|target|/eps).
    """
    eps = _check_eps(eps)
    if bowen_diameter(ctx, target) <= eps:
        return 1
    if ctx.horizon == 1:
        return max(1, math.ceil(target.width / eps))
    return None


def separated_growth_rate(phi: PAMap, eps, n_max: int, target: Optional[Interval] = None) -> float:
    """Least-squares slope of log sep(n, eps) over n = 1..n_max."""
    counts = [max_separated(BowenContext(phi, n), eps, target).count for n in range(1, n_max + 1)]
    return _slope(counts)


def _slope(counts: Sequence[int]) -> float:
    if len(counts) < 2:
        return 0.0
    ns = np.arange(1, len(counts) + 1, dtype=float)
    logs = np.log(np.asarray(counts, dtype=float))
    slope, _ = np.polyfit(ns, logs, 1)
    return float(slope)


# ═══════════════════════════════════════════════════════════════════════════════
# Estimators
# ═══════════════════════════════════════════════════════════════════════════════

def top_tertile(stages: List[DimensionStage], key: str = "k") -> Tuple[float, float]:
    if not stages:
        return 0.0, 0.0
    keys = sorted({getattr(s, key) for s in stages})
    keep = set(keys[len(keys) - max(1, math.ceil(len(keys) / 3)):])
    values = [s.normalized for s in stages if getattr(s, key) in keep]
    return min(values), max(values)


def mdim_H_estimate(phi: Optional[PAMap], schedule: Optional[Schedule],
                    stage_grid: Iterable[Tuple[int, int]]) -> DimEstimate:
    """
    FUNCTION: mdim_H_estimate

    DESCRIPTION:
    For each stage (k, n) the critical exponent of block k at horizon n+1 and
    scale eps_k = |I_k|/s_k, normalized by n+1. Blocks come from the schedule
    when given, else from the map's declared blocks. A map without blocks is
    measured on its whole domain at eps_k = 3^-k. lower/upper are the min and
    max normalized values over the top third of k.

    RAISES:
    InvalidParameterError : k beyond the truncation, or a staged block that is
                            not a full-leg block of the map
    """
    if phi is None and schedule is None:
        raise InvalidParameterError("mdim_H_estimate needs a map or a schedule")
    stages: List[DimensionStage] = []
    checked: Dict[int, bool] = {}
    for k, n in stage_grid:
        if n < 0:
            raise InvalidParameterError(f"stage n must be >= 0, got {n}")
        block = None
        if schedule is not None:
            block = schedule.block(k)
        elif phi is not None and phi.blocks:
            block = phi.block_by_index(k)

        if block is not None:
            if phi is not None and k not in checked:
                declared = phi.find_block(block.interval)
                if declared is None or declared.legs != block.legs or check_full_legs(phi, declared):
                    raise InvalidParameterError(f"block {k} is not a declared full-leg block of the map")
                checked[k] = True
            eps = block.leg_width
            if phi is not None:
                cover = cylinder_cover(BowenContext.for_stage(phi, n), eps, block.interval)
            else:
                cover = UniformCover(block.legs ** (n + 1), eps)
        else:
            eps = Fraction(1, 3 ** k)
            cover = cylinder_cover(BowenContext.for_stage(phi, n), eps, phi.domain)
        dim = cover_exponent(cover)
        stages.append(DimensionStage(k=k, n=n, eps=eps, dim=dim, normalized=dim / (n + 1)))

    lower, upper = top_tertile(stages)
    logger.info(f"[Estimator] mdim_H over {len(stages)} stages: [{lower:.6f}, {upper:.6f}]")
    return DimEstimate(kind="H", stages=stages, lower=lower, upper=upper)


def mdim_M_estimate(phi: PAMap, eps_schedule: Sequence, n_max: int,
                    target: Optional[Interval] = None) -> DimEstimate:
    """
    FUNCTION: mdim_M_estimate

    DESCRIPTION:
    Per eps (index i) the growth rate of sep(n, eps) in n, divided by
    |log eps|. Row (i, n) carries dim = log sep(n, eps) / |log eps| and, as
    normalized, the least-squares slope of log sep over 1..n divided by
    |log eps| (at n = 1 the single count log sep(1, eps) stands in for the
    slope). Normalized values are clamped to [0, 1], the dimension of the
    interval. The n = n_max row of each eps feeds lower/upper; growth_rates
    holds the unscaled slopes.

    RAISES:
    InvalidParameterError : empty, non-decreasing or out-of-range eps values,
                            or n_max < 1
    BudgetExceededError   : as in max_separated
    """
    scales = [Fraction(e) for e in eps_schedule]
    if not scales:
        raise InvalidParameterError("eps schedule is empty")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise InvalidParameterError("eps schedule must be strictly decreasing")
    if any(e <= 0 or e >= 1 for e in scales):
        raise InvalidParameterError("eps values must lie in (0, 1)")
    if n_max < 1:
        raise InvalidParameterError(f"n_max must be >= 1, got {n_max}")

    stages: List[DimensionStage] = []
    summary_stages: List[DimensionStage] = []
    growth: Dict[str, float] = {}
    for i, eps in enumerate(scales):
        counts: List[int] = []
        scale = -log_rational(eps)
        for n in range(1, n_max + 1):
            sep = max_separated(BowenContext(phi, n), eps, target)
            counts.append(sep.count)
            rate = _slope(counts) if n > 1 else math.log(sep.count)
            stage = DimensionStage(k=i, n=n, eps=eps, dim=math.log(sep.count) / scale,
                                   normalized=min(1.0, max(0.0, rate / scale)))
            stages.append(stage)
            logger.debug(f"[Estimator] sep(n={n}, eps={format_rational(eps)}) = {sep.count} ({sep.flag})")
        summary_stages.append(stages[-1])
        growth[format_rational(eps)] = _slope(counts) if n_max > 1 else math.log(counts[0])

    lower, upper = top_tertile(summary_stages)
    logger.info(f"[Estimator] mdim_M over {len(scales)} scales, n <= {n_max}: [{lower:.6f}, {upper:.6f}]")
    return DimEstimate(kind="M", stages=stages, lower=lower, upper=upper, growth_rates=growth)


def ordering_diagnostic(h_estimate: DimEstimate, m_estimate: DimEstimate,
                        slack: Optional[float] = None) -> List[Dict[str, Any]]:
    """
    Soft check of mdim_H <= mdim_M stage by stage. H stage n looks at horizon
    n+1, so it is paired with the M stage of horizon n+1 at the largest scale
    not above its eps. Returns the violating pairs.
    """
    slack = get_settings().ordering_slack if slack is None else slack
    violations: List[Dict[str, Any]] = []
    for h in h_estimate.stages:
        candidates = [m for m in m_estimate.stages if m.n == h.n + 1 and m.eps <= h.eps]
        if not candidates:
            continue
        m = max(candidates, key=lambda st: st.eps)
        if h.normalized > m.normalized + slack:
            violations.append({"k": h.k, "n": h.n, "mdim_H": h.normalized, "mdim_M": m.normalized,
                               "excess": h.normalized - m.normalized})
    if violations:
        logger.warning(f"[Estimator] ordering diagnostic: {len(violations)} stage(s) above mdim_M + {slack}")
    return violations


def power_bound_check(phi: PAMap, p: int, stages: Iterable[Tuple[int, int]]) -> List[Dict[str, Any]]:
    """Stage form of mdim_H(phi^p) <= p * mdim_H(phi) on the declared blocks."""
    if p < 1:
        raise InvalidParameterError(f"power must be >= 1, got {p}")
    powered = compose_power(phi, p)
    rows: List[Dict[str, Any]] = []
    for k, n in stages:
        base = phi.block_by_index(k)
        block = powered.block_by_index(k)
        if check_full_legs(powered, block):
            raise InvalidParameterError(f"block {k} of the {p}-th power is not full-leg")
        base_value = cover_exponent(UniformCover(base.legs ** (n + 1), base.leg_width)) / (n + 1)
        power_value = cover_exponent(UniformCover(block.legs ** (n + 1), block.leg_width)) / (n + 1)
        rows.append({"k": k, "n": n, "power_value": power_value, "bound": p * base_value,
                     "holds": power_value <= p * base_value + 1e-12})
    return rows

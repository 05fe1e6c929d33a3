"""
surgery.py
----------
Strong-horseshoe detection and the density splice.

The splice replaces a map near one of its fixed points by a shrunken copy
of a horseshoe-schedule map of prescribed dimension, moving the map by less
than a given sup distance. Detectors return a certificate or a Refusal value;
they never raise for a failed condition.

Usage:
    from modules.surgery import splice_with_certificate
    psi, cert = splice_with_certificate(make_identity(), Fraction(1, 2), Fraction(1, 2), Fraction(1, 10))
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from modules.configManager import get_settings
from modules.exceptions import (
    BudgetExceededError,
    ConstructionError,
    DomainError,
    InvalidParameterError,
    NotFixedPointError,
)
from modules.logging_config import logger
from modules.maps1d import HorseshoeBlock, PAMap, Schedule, make_schedule_map
from modules.rational import Interval, format_rational, log_rational
from modules.symbolic import closed_form_limit

CONDITIONS = ("size", "count", "containment", "disjointness", "thickness", "covering")


# ═══════════════════════════════════════════════════════════════════════════════
# Results
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class LegCheck:
    leg: Interval
    middle: Interval
    image: Interval
    margin: Fraction


@dataclass(frozen=True)
class StrongHorseshoeCert:
    J: Interval
    eps: Fraction
    k: int
    checks: Tuple[LegCheck, ...]

    @property
    def margin(self) -> Fraction:
        return min(c.margin for c in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "result": "certificate",
            "J": list(self.J.as_strings()),
            "eps": format_rational(self.eps),
            "k": self.k,
            "margin": format_rational(self.margin),
            "legs": [
                {"leg": list(c.leg.as_strings()), "middle": list(c.middle.as_strings()),
                 "image": list(c.image.as_strings()), "margin": format_rational(c.margin)}
                for c in self.checks
            ],
        }


@dataclass(frozen=True)
class Refusal:
    condition: str
    detail: str
    margin: Fraction

    def to_dict(self) -> Dict[str, Any]:
        return {"result": "refusal", "condition": self.condition, "detail": self.detail,
                "margin": format_rational(self.margin)}


@dataclass(frozen=True)
class SpliceCertificate:
    p: Fraction
    target: Fraction
    eps: Fraction
    delta: Fraction
    window: Interval
    bridge: Interval
    sup_distance: Fraction
    schedule: Optional[Dict[str, Any]] = None
    limit: Optional[float] = None
    blocks: Tuple[HorseshoeBlock, ...] = field(default=())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": format_rational(self.p),
            "target": format_rational(self.target),
            "eps": format_rational(self.eps),
            "delta": format_rational(self.delta),
            "window": list(self.window.as_strings()),
            "bridge": list(self.bridge.as_strings()),
            "sup_distance": format_rational(self.sup_distance),
            "schedule": self.schedule,
            "limit": self.limit,
        }


# ═══════════════════════════════════════════════════════════════════════════════
# Strong horseshoes
# ═══════════════════════════════════════════════════════════════════════════════

def middle_third(J: Interval) -> Interval:
    if J.width <= 0:
        raise InvalidParameterError("middle third of a degenerate interval")
    return Interval((2 * J.lo + J.hi) / 3, (J.lo + 2 * J.hi) / 3)


def equal_legs(J: Interval, k: int) -> List[Interval]:
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    w = J.width / k
    return [Interval(J.lo + i * w, J.lo + (i + 1) * w) for i in range(k)]


def is_strong_horseshoe(phi: PAMap, J: Interval, legs: Sequence[Interval], eps, k: int
                        ) -> Union[StrongHorseshoeCert, Refusal]:
    """
    FUNCTION: is_strong_horseshoe

    DESCRIPTION:
    Checks, in order: |J| > eps; k legs inside J; disjoint interiors;
    |J_i| > |J|/(2k); J inside the interior of phi(middle third of J_i).

    RETURNS:
    StrongHorseshoeCert with per-leg margins, or a Refusal naming the first
    failed condition and the signed margin by which it fails.
    """
    eps = Fraction(eps)
    if J.width <= eps:
        return Refusal("size", f"|J| = {format_rational(J.width)} is not above eps = {format_rational(eps)}",
                       J.width - eps)
    if len(legs) != k:
        return Refusal("count", f"{len(legs)} legs given, {k} required", Fraction(len(legs) - k))
    for leg in legs:
        if not J.contains_interval(leg):
            slack = min(leg.lo - J.lo, J.hi - leg.hi)
            return Refusal("containment", f"leg {list(leg.as_strings())} leaves J", slack)

    ordered = sorted(legs, key=lambda leg: (leg.lo, leg.hi))
    for left, right in zip(ordered, ordered[1:]):
        if not left.interiors_disjoint(right):
            overlap = min(left.hi, right.hi) - max(left.lo, right.lo)
            return Refusal("disjointness", f"legs {list(left.as_strings())} and {list(right.as_strings())} overlap",
                           -overlap)

    floor = J.width / (2 * k)
    for leg in legs:
        if leg.width <= floor:
            return Refusal("thickness", f"leg {list(leg.as_strings())} is not thicker than |J|/(2k)",
                           leg.width - floor)

    checks: List[LegCheck] = []
    for leg in legs:
        middle = middle_third(leg)
        image = phi.image_interval(middle)
        margin = min(J.lo - image.lo, image.hi - J.hi)
        if margin <= 0:
            return Refusal("covering",
                           f"phi({list(middle.as_strings())}) = {list(image.as_strings())} does not cover J strictly",
                           margin)
        checks.append(LegCheck(leg=leg, middle=middle, image=image, margin=margin))

    cert = StrongHorseshoeCert(J=J, eps=eps, k=k, checks=tuple(checks))
    logger.debug(f"[Surgery] strong ({format_rational(eps)}, {k})-horseshoe, margin {format_rational(cert.margin)}")
    return cert


def make_strong_horseshoe_map(J: Interval, k: int, ambient: Tuple = (0, 1),
                              node_cap: Optional[int] = None) -> PAMap:
    """
    FUNCTION: make_strong_horseshoe_map

    DESCRIPTION:
    k equal legs on J. The middle third of each leg maps affinely onto
    [a - mu, b + mu] (orientation alternating), the outer thirds are plateaus,
    and linear bridges meet the identity mu away from J, where
    mu = min(|J|/4, distance of J to the ambient boundary).

    RAISES:
    ConstructionError : J touches the ambient boundary
    """
    lo, hi = Fraction(ambient[0]), Fraction(ambient[1])
    if not (lo <= J.lo and J.hi <= hi) or J.width <= 0:
        raise ConstructionError("J must be a non-degenerate subinterval of the ambient interval")
    mu = min(J.width / 4, J.lo - lo, hi - J.hi)
    if mu <= 0:
        raise ConstructionError("J touches the ambient boundary; no room for a strict superset image")
    if 4 * k + 4 > (node_cap or get_settings().node_cap):
        raise BudgetExceededError(f"{k} legs exceed the node cap")

    bottom, top = J.lo - mu, J.hi + mu
    nodes: List[Fraction] = []
    values: List[Fraction] = []

    def put(x: Fraction, v: Fraction) -> None:
        if nodes and nodes[-1] == x:
            values[-1] = v
            return
        nodes.append(x)
        values.append(v)

    if lo < bottom:
        put(lo, lo)
    put(bottom, bottom)
    for i, leg in enumerate(equal_legs(J, k)):
        start, end = (bottom, top) if i % 2 == 0 else (top, bottom)
        third = leg.width / 3
        put(leg.lo, start)
        put(leg.lo + third, start)
        put(leg.lo + 2 * third, end)
        put(leg.hi, end)
    put(top, top)
    if top < hi:
        put(hi, hi)

    return PAMap(
        nodes=tuple(nodes), values=tuple(values),
        provenance={"construction": "strong_horseshoe",
                    "parameters": {"J": list(J.as_strings()), "k": k,
                                   "ambient": [format_rational(lo), format_rational(hi)]}},
    )


def strong_horseshoe_stage(cert: StrongHorseshoeCert, n: int) -> Dict[str, Any]:
    """Stage value with every leg counted at the widest leg: (n+1) log k / log(1/eps)."""
    widest = max(c.leg.width for c in cert.checks)
    if widest >= 1 or cert.k < 2:
        raise InvalidParameterError("stage value needs k >= 2 legs of width below 1")
    dim = (n + 1) * math.log(cert.k) / -log_rational(widest)
    return {"n": n, "eps": format_rational(widest), "dim": dim, "normalized": dim / (n + 1),
            "margin": format_rational(cert.margin)}


def make_dense_witness(k: int, i: int, ambient: Tuple = (0, 1)) -> Tuple[PAMap, StrongHorseshoeCert]:
    """A certified map with a strong (1/i^2, 3^{k i})-horseshoe centred in the ambient interval."""
    lo, hi = Fraction(ambient[0]), Fraction(ambient[1])
    eps = Fraction(1, i * i)
    width = 2 * eps
    if width >= hi - lo:
        raise ConstructionError(f"i = {i} leaves no room for |J| > 1/i^2 inside the ambient interval")
    centre = (lo + hi) / 2
    J = Interval(centre - width / 2, centre + width / 2)
    legs = 3 ** (k * i)
    phi = make_strong_horseshoe_map(J, legs, ambient)
    result = is_strong_horseshoe(phi, J, equal_legs(J, legs), eps, legs)
    if isinstance(result, Refusal):
        raise ConstructionError(f"dense witness failed its own check: {result.condition}")
    return phi, result


# ═══════════════════════════════════════════════════════════════════════════════
# Sup distance
# ═══════════════════════════════════════════════════════════════════════════════

def sup_distance(f: PAMap, g: PAMap) -> Fraction:
    """Exact sup |f - g|; both are affine between consecutive nodes of the union."""
    if f.lo != g.lo or f.hi != g.hi:
        raise DomainError("sup distance needs maps on the same domain")
    points = sorted(set(f.nodes) | set(g.nodes))
    return max(abs(f(x) - g(x)) for x in points)


def sampled_sup_distance(f: PAMap, g: PAMap, points: int = 10_001) -> float:
    """Float lower bound of sup |f - g| on a uniform grid."""
    if f.lo != g.lo or f.hi != g.hi:
        raise DomainError("sup distance needs maps on the same domain")
    grid = np.linspace(float(f.lo), float(f.hi), points)
    fx = np.interp(grid, [float(x) for x in f.nodes], [float(v) for v in f.values])
    gx = np.interp(grid, [float(x) for x in g.nodes], [float(v) for v in g.values])
    return float(np.max(np.abs(fx - gx)))


# ═══════════════════════════════════════════════════════════════════════════════
# Splice
# ═══════════════════════════════════════════════════════════════════════════════

def block_schedule_for(target: Fraction, blocks: Optional[int] = None) -> Optional[Schedule]:
    """power_law(1, (1-a)/a) for a in (0, 1), quadratic(1) for a = 1, None for a = 0."""
    target = Fraction(target)
    if target < 0 or target > 1:
        raise InvalidParameterError(f"target dimension must lie in [0, 1], got {format_rational(target)}")
    blocks = blocks or get_settings().surgery_blocks
    if target == 0:
        return None
    if target == 1:
        return Schedule.quadratic(1, blocks)
    return Schedule.power_law(1, (1 - target) / target, blocks)


def choose_window(phi0: PAMap, p: Fraction, eps: Fraction) -> Fraction:
    """Largest 2^-j below eps with p + 2^-j in the domain and phi0 within eps/2 of p on [p - 2^-j, p + 2^-j]."""
    max_j = get_settings().max_dyadic_exponent
    for j in range(max_j + 1):
        delta = Fraction(1, 2 ** j)
        if delta >= eps or p + delta > phi0.hi:
            continue
        window = Interval(max(phi0.lo, p - delta), p + delta)
        image = phi0.image_interval(window)
        if max(image.hi - p, p - image.lo) < eps / 2:
            return delta
    raise ConstructionError(f"no dyadic window up to 2^-{max_j} keeps phi0 within eps/2 of p")


def splice_with_certificate(phi0: PAMap, p, a, eps, blocks: Optional[int] = None
                            ) -> Tuple[PAMap, SpliceCertificate]:
    """
    FUNCTION: splice_with_certificate

    DESCRIPTION:
    psi = phi0 on [lo, p] and [p + delta, hi]; on [p, p + delta/2] the block
    map of dimension a, conjugated affinely from [0, 1]; on
    [p + delta/2, p + delta] the affine bridge to phi0(p + delta).

    RAISES:
    NotFixedPointError    : phi0(p) != p
    ConstructionError     : p at the right end, or no admissible window
    InvalidParameterError : eps <= 0, a outside [0, 1]
    """
    p, a, eps = Fraction(p), Fraction(a), Fraction(eps)
    if eps <= 0:
        raise InvalidParameterError(f"eps must be positive, got {format_rational(eps)}")
    if phi0(p) != p:
        raise NotFixedPointError(f"phi0({format_rational(p)}) = {format_rational(phi0(p))}, not a fixed point")
    if p >= phi0.hi:
        raise ConstructionError("the fixed point is the right end of the domain; no room for a window")
    schedule = block_schedule_for(a, blocks)
    delta = choose_window(phi0, p, eps)
    half = delta / 2
    window = Interval(p, p + half)
    bridge = Interval(p + half, p + delta)

    if schedule is None:
        logger.info(f"[Surgery] target dimension 0: phi0 returned unchanged")
        cert = SpliceCertificate(p=p, target=a, eps=eps, delta=delta, window=window, bridge=bridge,
                                 sup_distance=Fraction(0), schedule=None, limit=0.0)
        return phi0, cert

    block_map = make_schedule_map(schedule)
    nodes: List[Fraction] = []
    values: List[Fraction] = []
    for x, v in zip(phi0.nodes, phi0.values):
        if x < p:
            nodes.append(x)
            values.append(v)
    for x, v in zip(block_map.nodes, block_map.values):
        nodes.append(p + half * x)
        values.append(p + half * v)
    nodes.append(p + delta)
    values.append(phi0(p + delta))
    for x, v in zip(phi0.nodes, phi0.values):
        if x > p + delta:
            nodes.append(x)
            values.append(v)

    moved = tuple(
        HorseshoeBlock(left=p + half * b.left, right=p + half * b.right, legs=b.legs, index=b.index)
        for b in block_map.blocks
    )
    psi = PAMap(
        nodes=tuple(nodes), values=tuple(values), blocks=moved,
        provenance={"construction": "splice",
                    "parameters": {"p": format_rational(p), "target": format_rational(a),
                                   "eps": format_rational(eps), "delta": format_rational(delta)}},
    )
    distance = sup_distance(psi, phi0)
    if distance >= eps:
        raise ConstructionError(
            f"spliced map is {format_rational(distance)} from phi0, not below eps = {format_rational(eps)}"
        )
    cert = SpliceCertificate(
        p=p, target=a, eps=eps, delta=delta, window=window, bridge=bridge,
        sup_distance=distance, schedule=schedule.describe(),
        limit=closed_form_limit(schedule), blocks=moved,
    )
    logger.info(
        f"[Surgery] spliced dimension {format_rational(a)} at p={format_rational(p)}, "
        f"delta={format_rational(delta)}, sup distance {format_rational(distance)}"
    )
    return psi, cert


def splice(phi0: PAMap, p, a, eps, blocks: Optional[int] = None) -> PAMap:
    return splice_with_certificate(phi0, p, a, eps, blocks)[0]

"""
maps1d.py
---------
Exact piecewise-affine interval maps and the horseshoe-schedule family built
on them.

A PAMap is the continuous map that interpolates (nodes[i], values[i])
linearly. All arithmetic is rational; nothing here rounds.

Usage:
    from modules.maps1d import make_phi_sr, compose_power
    phi = make_phi_sr(1, 1, 4)
    phi2 = compose_power(phi, 2)
"""

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from modules.configManager import get_settings
from modules.exceptions import (
    BudgetExceededError,
    ConstructionError,
    DomainError,
    InvalidParameterError,
)
from modules.logging_config import logger
from modules.rational import (
    Interval,
    format_rational,
    parse_rational,
    rational_power,
)

RULES = ("power_law", "quadratic", "odd_legs", "explicit")


@lru_cache(maxsize=64)
def _quadratic_constant(K: int, normalization: str = "exact") -> Fraction:
    if normalization == "basel":
        return Fraction(6 / math.pi ** 2).limit_denominator(10**12)
    return 1 / sum((Fraction(1, i * i) for i in range(1, K + 1)), Fraction(0))


# ═══════════════════════════════════════════════════════════════════════════════
# Blocks and schedules
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class HorseshoeBlock:
    left: Fraction
    right: Fraction
    legs: int
    index: int = 0
    start_increasing: bool = True

    def __post_init__(self):
        if self.right <= self.left:
            raise ConstructionError(
                f"block {self.index} has non-positive width "
                f"[{format_rational(self.left)}, {format_rational(self.right)}]"
            )
        if self.legs < 1:
            raise InvalidParameterError(f"block {self.index}: legs must be >= 1, got {self.legs}")

    @property
    def width(self) -> Fraction:
        return self.right - self.left

    @property
    def leg_width(self) -> Fraction:
        return self.width / self.legs

    @property
    def interval(self) -> Interval:
        return Interval(self.left, self.right)

    def leg_endpoints(self) -> List[Fraction]:
        eps = self.leg_width
        return [self.left + j * eps for j in range(self.legs + 1)]

    def leg_value(self, j: int) -> Fraction:
        """Value at the j-th leg endpoint of the alternating full-leg map."""
        up = (j % 2 == 0) == self.start_increasing
        return self.left if up else self.right

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "left": format_rational(self.left),
            "right": format_rational(self.right),
            "legs": self.legs,
            "orientation": "up" if self.start_increasing else "down",
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "HorseshoeBlock":
        return cls(
            left=parse_rational(raw["left"], "block.left"),
            right=parse_rational(raw["right"], "block.right"),
            legs=int(raw["legs"]),
            index=int(raw.get("index", 0)),
            start_increasing=raw.get("orientation", "up") == "up",
        )


@dataclass(frozen=True)
class Schedule:
    """
    CLASS: Schedule

    DESCRIPTION:
    A rule producing block widths and leg counts, truncated after K blocks.
    power_law blocks are indexed 0..K-1; every other rule indexes 1..K.

    PARAMETERS:
    rule (str)            : power_law | quadratic | odd_legs | explicit
    s (int)               : leg exponent (unused by explicit)
    r (Fraction)          : width decay exponent of power_law
    K (int)               : truncation
    explicit (tuple)      : ((width, legs), ...) for the explicit rule, declared order kept
    """
    rule: str
    K: int
    s: int = 1
    r: Optional[Fraction] = None
    explicit: Tuple[Tuple[Fraction, int], ...] = ()

    def __post_init__(self):
        if self.rule not in RULES:
            raise InvalidParameterError(f"unknown schedule rule {self.rule!r}; expected one of {RULES}")
        if self.rule == "explicit":
            if not self.explicit:
                raise InvalidParameterError("explicit schedule needs at least one (width, legs) entry")
            object.__setattr__(self, "K", len(self.explicit))
        if self.K < 1:
            raise InvalidParameterError(f"truncation K must be >= 1, got {self.K}")
        if self.rule != "explicit" and self.s < 1:
            raise InvalidParameterError(f"s must be a positive integer, got {self.s}")
        if self.rule == "power_law":
            if self.r is None or Fraction(self.r) <= 0:
                raise InvalidParameterError(f"r must be positive, got {self.r}")
            object.__setattr__(self, "r", Fraction(self.r))

    # -----------------------------------------------------------------------
    # Constructors
    # -----------------------------------------------------------------------

    @classmethod
    def power_law(cls, s: int, r, K: int) -> "Schedule":
        return cls(rule="power_law", s=int(s), r=parse_rational(r, "r"), K=int(K))

    @classmethod
    def quadratic(cls, s: int, K: int) -> "Schedule":
        return cls(rule="quadratic", s=int(s), K=int(K))

    @classmethod
    def odd_legs(cls, s: int, K: int) -> "Schedule":
        return cls(rule="odd_legs", s=int(s), K=int(K))

    @classmethod
    def from_entries(cls, entries: Sequence[Tuple[Any, int]]) -> "Schedule":
        parsed = tuple((parse_rational(w, "width"), int(legs)) for w, legs in entries)
        return cls(rule="explicit", K=len(parsed), explicit=parsed)

    # -----------------------------------------------------------------------
    # Block data
    # -----------------------------------------------------------------------

    @property
    def first_index(self) -> int:
        return 0 if self.rule == "power_law" else 1

    def indices(self) -> range:
        return range(self.first_index, self.first_index + self.K)

    def legs(self, k: int) -> int:
        self._check_index(k)
        if self.rule == "power_law":
            return 3 ** (self.s * (k + 1))
        if self.rule == "quadratic":
            return 3 ** (self.s * k)
        if self.rule == "odd_legs":
            return (2 * k + 1) ** self.s
        return self.explicit[k - 1][1]

    def width(self, k: int) -> Fraction:
        self._check_index(k)
        if self.rule == "power_law":
            return self._tail_mass(k) - self._tail_mass(k + 1)
        if self.rule in ("quadratic", "odd_legs"):
            return self.quadratic_constant() / (k * k)
        return self.explicit[k - 1][0]

    def quadratic_constant(self) -> Fraction:
        """c_K = 1 / sum_{i<=K} i^-2, so the K quadratic widths fill [0, 1]; 6/pi^2 under "basel"."""
        return _quadratic_constant(self.K, get_settings().quadratic_normalization)

    def block(self, k: int) -> HorseshoeBlock:
        # power_law widths telescope, so its left end is 1 - tail
        if self.rule == "power_law":
            left = 1 - self._tail_mass(k)
        elif self.rule in ("quadratic", "odd_legs"):
            c = self.quadratic_constant()
            left = c * sum((Fraction(1, i * i) for i in range(1, k)), Fraction(0))
        else:
            left = sum((w for w, _ in self.explicit[: k - 1]), Fraction(0))
        return HorseshoeBlock(left=left, right=left + self.width(k), legs=self.legs(k), index=k)

    def blocks(self) -> Tuple[HorseshoeBlock, ...]:
        out: List[HorseshoeBlock] = []
        left = Fraction(0)
        for k in self.indices():
            w = self.width(k)
            out.append(HorseshoeBlock(left=left, right=left + w, legs=self.legs(k), index=k))
            left += w
        return tuple(out)

    def total_legs(self) -> int:
        return sum(self.legs(k) for k in self.indices())

    def describe(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"rule": self.rule, "K": self.K}
        if self.rule != "explicit":
            out["s"] = self.s
        if self.r is not None:
            out["r"] = format_rational(self.r)
        if self.explicit:
            out["entries"] = [[format_rational(w), legs] for w, legs in self.explicit]
        return out

    def _tail_mass(self, k: int) -> Fraction:
        # sum_{n>=k} |I_n| = 3^{-kr}; rationalized when r is not an integer
        return rational_power(3, -k * self.r)

    def _check_index(self, k: int) -> None:
        if k not in self.indices():
            raise InvalidParameterError(
                f"block index {k} outside truncation {self.first_index}..{self.first_index + self.K - 1}"
            )


# ═══════════════════════════════════════════════════════════════════════════════
# PAMap
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class PAMap:
    nodes: Tuple[Fraction, ...]
    values: Tuple[Fraction, ...]
    blocks: Tuple[HorseshoeBlock, ...] = field(default=(), compare=False)
    provenance: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        nodes = tuple(Fraction(x) for x in self.nodes)
        values = tuple(Fraction(v) for v in self.values)
        if len(nodes) < 2 or len(nodes) != len(values):
            raise ConstructionError(
                f"a map needs >= 2 nodes and one value per node, got {len(nodes)} nodes, {len(values)} values"
            )
        for left, right in zip(nodes, nodes[1:]):
            if right <= left:
                raise ConstructionError(
                    f"nodes must be strictly increasing, {format_rational(left)} >= {format_rational(right)}"
                )
        lo, hi = nodes[0], nodes[-1]
        for v in values:
            if v < lo or v > hi:
                raise ConstructionError(
                    f"value {format_rational(v)} leaves the domain [{format_rational(lo)}, {format_rational(hi)}]"
                )
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def lo(self) -> Fraction:
        return self.nodes[0]

    @property
    def hi(self) -> Fraction:
        return self.nodes[-1]

    @property
    def domain(self) -> Interval:
        return Interval(self.lo, self.hi)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def piece(self, x: Fraction) -> int:
        i = bisect_right(self.nodes, x) - 1
        return min(max(i, 0), len(self.nodes) - 2)

    def slope(self, i: int) -> Fraction:
        return (self.values[i + 1] - self.values[i]) / (self.nodes[i + 1] - self.nodes[i])

    def __call__(self, x) -> Fraction:
        x = Fraction(x)
        if x < self.lo or x > self.hi:
            raise DomainError(
                f"point {format_rational(x)} outside domain [{format_rational(self.lo)}, {format_rational(self.hi)}]"
            )
        i = self.piece(x)
        x0, v0 = self.nodes[i], self.values[i]
        if x == x0:
            return v0
        return v0 + (self.values[i + 1] - v0) * (x - x0) / (self.nodes[i + 1] - x0)

    evaluate = __call__

    def orbit(self, x, n: int) -> List[Fraction]:
        x = Fraction(x)
        self(x)
        out: List[Fraction] = []
        for _ in range(n):
            out.append(x)
            x = self(x)
        return out

    def image_interval(self, interval: Interval) -> Interval:
        """Exact image of [a, b]: endpoint values and interior node values."""
        a, b = interval.lo, interval.hi
        fa, fb = self(a), self(b)
        lo, hi = min(fa, fb), max(fa, fb)
        start = bisect_right(self.nodes, a)
        stop = bisect_left(self.nodes, b)
        if start < stop:
            inner = self.values[start:stop]
            lo = min(lo, min(inner))
            hi = max(hi, max(inner))
        return Interval(lo, hi)

    def nodes_within(self, interval: Interval) -> List[Fraction]:
        """Nodes strictly inside the interval, with its endpoints added."""
        start = bisect_right(self.nodes, interval.lo)
        stop = bisect_left(self.nodes, interval.hi)
        inner = list(self.nodes[start:stop])
        if interval.lo == interval.hi:
            return [interval.lo]
        return [interval.lo] + inner + [interval.hi]

    def is_identity(self) -> bool:
        return all(x == v for x, v in zip(self.nodes, self.values))

    def find_block(self, interval: Interval) -> Optional[HorseshoeBlock]:
        for block in self.blocks:
            if block.left == interval.lo and block.right == interval.hi:
                return block
        return None

    def block_by_index(self, k: int) -> HorseshoeBlock:
        for block in self.blocks:
            if block.index == k:
                return block
        raise InvalidParameterError(f"map has no declared block with index {k}")

    # -----------------------------------------------------------------------
    # Documents
    # -----------------------------------------------------------------------

    def to_document(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {
            "domain": [format_rational(self.lo), format_rational(self.hi)],
            "nodes": [format_rational(x) for x in self.nodes],
            "values": [format_rational(v) for v in self.values],
        }
        if self.provenance:
            doc["construction"] = self.provenance.get("construction")
            doc["parameters"] = dict(self.provenance.get("parameters", {}))
        if self.blocks:
            doc["blocks"] = [b.to_dict() for b in self.blocks]
        return doc

    @classmethod
    def from_document(cls, doc: Mapping[str, Any]) -> "PAMap":
        nodes = tuple(parse_rational(x, "nodes") for x in doc["nodes"])
        values = tuple(parse_rational(v, "values") for v in doc["values"])
        domain = doc.get("domain")
        if domain is not None:
            lo, hi = parse_rational(domain[0], "domain"), parse_rational(domain[1], "domain")
            if nodes and (nodes[0] != lo or nodes[-1] != hi):
                raise DomainError("declared domain does not match the first and last node")
        blocks = tuple(HorseshoeBlock.from_dict(b) for b in doc.get("blocks", []))
        provenance: Dict[str, Any] = {}
        if doc.get("construction"):
            provenance = {"construction": doc["construction"], "parameters": dict(doc.get("parameters") or {})}
        return cls(nodes=nodes, values=values, blocks=blocks, provenance=provenance)


# ═══════════════════════════════════════════════════════════════════════════════
# Constructions
# ═══════════════════════════════════════════════════════════════════════════════

def make_identity(lo=0, hi=1) -> PAMap:
    lo, hi = parse_rational(lo, "lo"), parse_rational(hi, "hi")
    return PAMap(nodes=(lo, hi), values=(lo, hi),
                 provenance={"construction": "identity",
                             "parameters": {"lo": format_rational(lo), "hi": format_rational(hi)}})


def make_tent_g() -> PAMap:
    """The 3-leg full tent on [0, 1]: 0 -> 0, 1/3 -> 1, 2/3 -> 0, 1 -> 1."""
    thirds = tuple(Fraction(i, 3) for i in range(4))
    return PAMap(
        nodes=thirds,
        values=(Fraction(0), Fraction(1), Fraction(0), Fraction(1)),
        blocks=(HorseshoeBlock(Fraction(0), Fraction(1), 3, index=0),),
        provenance={"construction": "tent_g", "parameters": {}},
    )


def make_schedule_map(schedule: Schedule, node_cap: Optional[int] = None,
                      lo=0, hi=1, provenance: Optional[Mapping[str, Any]] = None) -> PAMap:
    """
    FUNCTION: make_schedule_map

    DESCRIPTION:
    Lays the schedule's blocks out from the left end of [lo, hi]. Each block
    carries an alternating full-leg horseshoe starting increasing, so block
    endpoints are fixed. The rest of the domain is the identity.

    RAISES:
    InvalidParameterError : even leg count
    ConstructionError     : widths exceeding the domain
    BudgetExceededError   : more nodes than the node cap
    """
    cap = node_cap or get_settings().node_cap
    lo, hi = Fraction(lo), Fraction(hi)
    entries = [(k, schedule.width(k), schedule.legs(k)) for k in schedule.indices()]
    for k, w, legs in entries:
        if legs % 2 == 0:
            raise InvalidParameterError(
                f"block {k} has an even leg count {legs}; alternating legs starting up would not fix both endpoints"
            )
        if w <= 0:
            raise ConstructionError(f"block {k} has non-positive width {format_rational(w)}")
    total_width = sum((w for _, w, _ in entries), Fraction(0))
    if total_width > hi - lo:
        raise ConstructionError(
            f"block widths sum to {format_rational(total_width)}, larger than the domain width {format_rational(hi - lo)}"
        )
    needed = sum(legs for _, _, legs in entries) + 2
    if needed > cap:
        raise BudgetExceededError(f"schedule needs {needed} nodes, node cap is {cap}")

    nodes: List[Fraction] = [lo]
    values: List[Fraction] = [lo]
    blocks: List[HorseshoeBlock] = []
    left = lo
    for k, w, legs in entries:
        block = HorseshoeBlock(left=left, right=left + w, legs=legs, index=k)
        eps = block.leg_width
        for j in range(1, legs + 1):
            nodes.append(left + j * eps)
            values.append(block.leg_value(j))
        blocks.append(block)
        left = block.right
    if left < hi:
        nodes.append(hi)
        values.append(hi)

    logger.debug(f"[Maps] schedule {schedule.rule} K={schedule.K}: {len(nodes)} nodes, {len(blocks)} blocks")
    return PAMap(
        nodes=tuple(nodes),
        values=tuple(values),
        blocks=tuple(blocks),
        provenance=provenance or {"construction": "schedule", "parameters": schedule.describe()},
    )


def make_phi_sr(s: int, r, K: int, node_cap: Optional[int] = None) -> PAMap:
    if int(s) <= 0:
        raise InvalidParameterError(f"s must be a positive integer, got {s}")
    schedule = Schedule.power_law(s, r, K)
    return make_schedule_map(
        schedule, node_cap,
        provenance={"construction": "phi_sr",
                    "parameters": {"s": int(s), "r": format_rational(schedule.r), "K": int(K)}},
    )


def make_quadratic_map(s: int, K: int, node_cap: Optional[int] = None) -> PAMap:
    return make_schedule_map(
        Schedule.quadratic(s, K), node_cap,
        provenance={"construction": "quadratic", "parameters": {"s": int(s), "K": int(K)}},
    )


def make_odd_legs_map(s: int, K: int, node_cap: Optional[int] = None) -> PAMap:
    return make_schedule_map(
        Schedule.odd_legs(s, K), node_cap,
        provenance={"construction": "odd_legs", "parameters": {"s": int(s), "K": int(K)}},
    )


# ═══════════════════════════════════════════════════════════════════════════════
# Composition
# ═══════════════════════════════════════════════════════════════════════════════

def compose(f: PAMap, h: PAMap, node_cap: Optional[int] = None) -> PAMap:
    """Exact f o h. Breakpoints are h's nodes plus the h-preimages of f's nodes."""
    if f.lo != h.lo or f.hi != h.hi:
        raise DomainError("compose needs maps on the same domain")
    cap = node_cap or get_settings().node_cap
    nodes: List[Fraction] = [h.nodes[0]]
    values: List[Fraction] = [f(h.values[0])]
    for i in range(len(h.nodes) - 1):
        x0, x1 = h.nodes[i], h.nodes[i + 1]
        v0, v1 = h.values[i], h.values[i + 1]
        if v0 != v1:
            lo_v, hi_v = min(v0, v1), max(v0, v1)
            start = bisect_right(f.nodes, lo_v)
            stop = bisect_left(f.nodes, hi_v)
            idx: Iterator[int] = iter(range(start, stop)) if v1 > v0 else iter(range(stop - 1, start - 1, -1))
            for j in idx:
                y = f.nodes[j]
                nodes.append(x0 + (y - v0) * (x1 - x0) / (v1 - v0))
                values.append(f.values[j])
        nodes.append(x1)
        values.append(f(v1))
        if len(nodes) > cap:
            raise BudgetExceededError(f"composition exceeds node cap {cap}")
    return PAMap(nodes=tuple(nodes), values=tuple(values))


def compose_power(phi: PAMap, p: int, node_cap: Optional[int] = None) -> PAMap:
    """
    FUNCTION: compose_power

    DESCRIPTION:
    p-fold composition phi^p, exact. Declared full-leg blocks stay invariant
    and become s^p-leg blocks of the power.

    RAISES:
    InvalidParameterError : p < 0
    BudgetExceededError   : node count above the cap
    """
    if p < 0:
        raise InvalidParameterError(f"power must be >= 0, got {p}")
    cap = node_cap or get_settings().node_cap
    if p == 0:
        result = make_identity(phi.lo, phi.hi)
    else:
        result = phi
        for _ in range(p - 1):
            result = compose(phi, result, cap)
    parameters = {"power": p}
    if phi.provenance:
        parameters["base"] = dict(phi.provenance)
    return PAMap(
        nodes=result.nodes,
        values=result.values,
        blocks=tuple(replace(b, legs=b.legs ** p) for b in phi.blocks) if p >= 1 else (),
        provenance={"construction": "compose_power", "parameters": parameters},
    )


def lap_nodes(phi: PAMap, horizon: int, node_cap: Optional[int] = None) -> Tuple[Fraction, ...]:
    """Endpoints of the maximal pieces on which phi^0 .. phi^{horizon-1} are all affine."""
    if horizon < 1:
        raise InvalidParameterError(f"horizon must be >= 1, got {horizon}")
    if horizon == 1:
        return (phi.lo, phi.hi)
    return compose_power(phi, horizon - 1, node_cap).nodes


def orbit(phi: PAMap, x, n: int) -> List[Fraction]:
    return phi.orbit(x, n)


def leg_endpoints(phi: PAMap, block: HorseshoeBlock) -> List[Tuple[Fraction, Fraction]]:
    """(x, phi(x)) at the leg endpoints of a declared block."""
    return [(x, phi(x)) for x in block.leg_endpoints()]


def check_full_legs(phi: PAMap, block: HorseshoeBlock) -> List[str]:
    """Violations of the full-leg law on the block; empty when it holds exactly."""
    problems: List[str] = []
    if block.left < phi.lo or block.right > phi.hi:
        return [f"block {block.index} is outside the domain"]
    for j, (x, fx) in enumerate(leg_endpoints(phi, block)):
        expected = block.leg_value(j)
        if fx != expected:
            problems.append(
                f"block {block.index} leg endpoint {format_rational(x)} maps to {format_rational(fx)}, "
                f"expected {format_rational(expected)}"
            )
    if problems:
        return problems
    # affine on each leg: no interior node may leave the leg's line
    slope = block.legs
    for j in range(block.legs):
        a = block.left + j * block.leg_width
        leg = Interval(a, a + block.leg_width)
        expected_slope = slope if (j % 2 == 0) == block.start_increasing else -slope
        fa = phi(a)
        for x in phi.nodes_within(leg)[1:-1]:
            if phi(x) != fa + expected_slope * (x - a):
                problems.append(f"block {block.index} leg {j} is not affine at {format_rational(x)}")
                break
    return problems

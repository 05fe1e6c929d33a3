"""
builders.py
-----------
Named constructions: turns a build request ({"construction": ..., params})
into a map. Used by the build command and by the provenance check of the
verifier, so a map document can always be rebuilt from its own header.
"""

from typing import Any, Callable, Dict, Mapping

from modules.exceptions import InvalidParameterError
from modules.logging_config import logger
from modules.maps1d import (
    PAMap,
    Schedule,
    make_identity,
    make_odd_legs_map,
    make_phi_sr,
    make_quadratic_map,
    make_schedule_map,
    make_tent_g,
)
from modules.rational import Interval, format_rational, parse_rational
from modules.surgery import make_strong_horseshoe_map


def _int(params: Mapping[str, Any], key: str, default: Any = None) -> int:
    value = params.get(key, default)
    if value is None:
        raise InvalidParameterError(f"missing parameter {key!r}")
    if isinstance(value, bool) or isinstance(value, float):
        raise InvalidParameterError(f"parameter {key!r} must be an integer, got {value!r}")
    try:
        return int(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"parameter {key!r} must be an integer, got {value!r}")


def _schedule_map(params: Mapping[str, Any]) -> PAMap:
    entries = params.get("entries")
    if not entries:
        raise InvalidParameterError("schedule construction needs 'entries': [[width, legs], ...]")
    schedule = Schedule.from_entries([(w, _int({"legs": legs}, "legs")) for w, legs in entries])
    return make_schedule_map(
        schedule,
        provenance={"construction": "schedule",
                    "parameters": {"entries": [[format_rational(w), legs] for w, legs in schedule.explicit]}},
    )


def _strong_horseshoe(params: Mapping[str, Any]) -> PAMap:
    J = params.get("J")
    if not J or len(J) != 2:
        raise InvalidParameterError("strong_horseshoe construction needs 'J': [a, b]")
    ambient = params.get("ambient", ["0", "1"])
    return make_strong_horseshoe_map(
        Interval(parse_rational(J[0], "J"), parse_rational(J[1], "J")),
        _int(params, "k"),
        (parse_rational(ambient[0], "ambient"), parse_rational(ambient[1], "ambient")),
    )


CONSTRUCTIONS: Dict[str, Callable[[Mapping[str, Any]], PAMap]] = {
    "tent_g": lambda p: make_tent_g(),
    "identity": lambda p: make_identity(parse_rational(p.get("lo", 0), "lo"), parse_rational(p.get("hi", 1), "hi")),
    "phi_sr": lambda p: make_phi_sr(_int(p, "s"), parse_rational(p.get("r", "1"), "r"), _int(p, "K")),
    "quadratic": lambda p: make_quadratic_map(_int(p, "s", 1), _int(p, "K")),
    "odd_legs": lambda p: make_odd_legs_map(_int(p, "s", 1), _int(p, "K")),
    "schedule": _schedule_map,
    "strong_horseshoe": _strong_horseshoe,
}


def build_map(request: Mapping[str, Any]) -> PAMap:
    """
    FUNCTION: build_map

    DESCRIPTION:
    Builds the construction named by request["construction"]. Parameters may
    sit at the top level or under request["parameters"].

    RAISES:
    InvalidParameterError : unknown construction, missing or float parameters
    """
    name = request.get("construction")
    if name not in CONSTRUCTIONS:
        raise InvalidParameterError(f"unknown construction {name!r}; expected one of {sorted(CONSTRUCTIONS)}")
    params = dict(request.get("parameters") or {})
    params.update({k: v for k, v in request.items() if k not in ("construction", "parameters")})
    phi = CONSTRUCTIONS[name](params)
    logger.info(f"[Build] {name}: {phi.node_count} nodes, {len(phi.blocks)} blocks")
    return phi

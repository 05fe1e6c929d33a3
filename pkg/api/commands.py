"""
commands.py
-----------
Command layer behind main.py. Every cmd_* function reads its inputs, runs the
engine and writes its artefacts, returning the process exit code. Engine
errors propagate as MeanDimError and are rendered by main.py.

Usage:
    from api.commands import cmd_build
    code = cmd_build("phi.json", out="map.json")
"""

import json
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type, TypeVar

import pandas as pd
from pydantic import BaseModel, ValidationError

from modules.builders import build_map
from modules.cubes import is_strong_cube_horseshoe, make_nested_cube_map
from modules.estimators import DimensionStage, mdim_H_estimate, mdim_M_estimate, top_tertile
from modules.exceptions import BudgetExceededError, InvalidParameterError, SpecFileError
from modules.logging_config import logger
from modules.maps1d import PAMap, Schedule
from modules.rational import Interval, format_rational, parse_rational
from modules.schemas import (
    BuildRequest,
    CubeMapDocument,
    DetectRequest,
    EstimateSummary,
    MapDocument,
    SpliceCertificateDocument,
    StageRow,
    VerifyReport,
)
from modules.surgery import equal_legs, is_strong_horseshoe, splice_with_certificate
from modules.symbolic import closed_form_limit, convergence_gap, cube_limit
from modules.verification import VerificationService

STAGE_COLUMNS = ["k", "n", "eps", "dim", "normalized"]
DEFAULT_M_SCALES = ("1/4", "1/10", "1/28")

Model = TypeVar("Model", bound=BaseModel)


# ═══════════════════════════════════════════════════════════════════════════════
# I/O helpers
# ═══════════════════════════════════════════════════════════════════════════════

def _read_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SpecFileError(f"{path}: cannot read ({e.strerror})")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecFileError(f"{path}: {e.msg} at line {e.lineno}, column {e.colno}")


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(text: str, out=None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    logger.info(f"[CLI] wrote {out}")


def _validated(model: Type[Model], data: Any) -> Model:
    """Pydantic validation with the first violated constraint reported as an InvalidParameterError."""
    if not isinstance(data, dict):
        raise InvalidParameterError(f"{model.__name__}: expected a JSON object")
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first.get("loc", ())) or model.__name__
        raise InvalidParameterError(f"{where}: {first.get('msg')}")


def _is_cube_document(doc: Any) -> bool:
    return isinstance(doc, dict) and "m" in doc and "rule" in doc


def _load_map(path) -> Tuple[PAMap, Dict[str, Any]]:
    doc = _read_json(path)
    _validated(MapDocument, doc)
    return PAMap.from_document(doc), doc


def _stage_csv(stages: Sequence[DimensionStage], truncated: Optional[str] = None) -> str:
    frame = pd.DataFrame([s.as_row() for s in stages], columns=STAGE_COLUMNS)
    text = frame.to_csv(index=False, lineterminator="\n")
    if truncated:
        text += f"# TRUNCATED: {truncated}\n"
    return text


def _summary_path(out, summary) -> Optional[Path]:
    if summary is not None:
        return Path(summary)
    if out is not None:
        return Path(out).with_suffix(".json")
    return None


# ═══════════════════════════════════════════════════════════════════════════════
# Argument grammars
# ═══════════════════════════════════════════════════════════════════════════════

def _int_range(text: str) -> List[int]:
    values: List[int] = []
    for part in text.split(","):
        part = part.strip()
        try:
            if "-" in part[1:]:
                cut = part.index("-", 1)
                lo, hi = int(part[:cut]), int(part[cut + 1:])
                values.extend(range(lo, hi + 1))
            else:
                values.append(int(part))
        except ValueError:
            raise InvalidParameterError(f"{text!r} is not a range like '1-5' or '1,3,5'")
    return values


def parse_stage_grid(text: str) -> List[Tuple[int, int]]:
    """'1-20x0-2' -> every (k, n) with 1 <= k <= 20 and 0 <= n <= 2, k-major."""
    if "x" not in text:
        raise InvalidParameterError(f"stage grid {text!r} must look like '<k range>x<n range>'")
    ks, ns = text.split("x", 1)
    return [(k, n) for k in _int_range(ks) for n in _int_range(ns)]


def parse_rationals(text: str, name: str) -> List[Fraction]:
    return [parse_rational(part.strip(), name) for part in text.split(",") if part.strip()]


def parse_rule(text: str) -> Tuple[str, Dict[str, str]]:
    """'power_law:s=1,r=1/2' -> ('power_law', {'s': '1', 'r': '1/2'})."""
    name, _, rest = text.partition(":")
    params: Dict[str, str] = {}
    for part in filter(None, (p.strip() for p in rest.split(","))):
        key, sep, value = part.partition("=")
        if not sep:
            raise InvalidParameterError(f"rule parameter {part!r} must look like key=value")
        params[key.strip()] = value.strip()
    return name.strip(), params


def _parse_legs(text: Optional[str]) -> Optional[List[Interval]]:
    if not text:
        return None
    legs = []
    for part in text.split(";"):
        bounds = parse_rationals(part, "legs")
        if len(bounds) != 2:
            raise InvalidParameterError(f"leg {part!r} must be 'lo,hi'")
        legs.append(Interval(*bounds))
    return legs


# ═══════════════════════════════════════════════════════════════════════════════
# Commands
# ═══════════════════════════════════════════════════════════════════════════════

def cmd_build(spec_file, out=None) -> int:
    request = _validated(BuildRequest, _read_json(spec_file))
    phi = build_map(request.flattened())
    doc = phi.to_document()
    _validated(MapDocument, doc)
    schedule = [f"{b.index}:{b.legs}x{format_rational(b.width)}" for b in phi.blocks[:6]]
    logger.info(
        f"[CLI] built {request.construction}: {phi.node_count} nodes, {len(phi.blocks)} blocks"
        + (f" ({', '.join(schedule)}{', ...' if len(phi.blocks) > 6 else ''})" if schedule else "")
    )
    _emit(_dumps(doc), out)
    return 0


def _default_h_grid(phi: PAMap) -> List[Tuple[int, int]]:
    if phi.blocks:
        return [(b.index, n) for b in phi.blocks for n in range(3)]
    return [(k, n) for k in range(1, 5) for n in range(2)]


def _run_h(phi: PAMap, grid: Sequence[Tuple[int, int]]) -> Tuple[List[DimensionStage], Optional[str]]:
    stages: List[DimensionStage] = []
    for k, n in grid:
        try:
            stages.extend(mdim_H_estimate(phi, None, [(k, n)]).stages)
        except BudgetExceededError as e:
            logger.warning(f"[CLI] stage (k={k}, n={n}) stopped the run: {e.detail}")
            return stages, f"stage k={k} n={n}: {e.detail}"
    return stages, None


def _run_m(phi: PAMap, scales: Sequence[Fraction], n_max: int
           ) -> Tuple[List[DimensionStage], List[DimensionStage], Dict[str, float], Optional[str]]:
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise InvalidParameterError("eps schedule must be strictly decreasing")
    stages: List[DimensionStage] = []
    last: List[DimensionStage] = []
    growth: Dict[str, float] = {}
    for i, eps in enumerate(scales):
        try:
            estimate = mdim_M_estimate(phi, [eps], n_max)
        except BudgetExceededError as e:
            logger.warning(f"[CLI] scale {format_rational(eps)} stopped the run: {e.detail}")
            return stages, last, growth, f"eps={format_rational(eps)}: {e.detail}"
        reindexed = [replace(s, k=i) for s in estimate.stages]
        stages.extend(reindexed)
        last.append(reindexed[-1])
        growth.update(estimate.growth_rates)
    return stages, last, growth, None


def cmd_estimate(map_file, mdim: str = "H", stages: Optional[str] = None, eps: Optional[str] = None,
                 n_max: int = 3, out=None, summary=None) -> int:
    """
    FUNCTION: cmd_estimate

    DESCRIPTION:
    Writes the stage CSV (k, n, eps, dim, normalized) and the JSON summary.
    A stage that exceeds the budget ends the run: the CSV keeps the finished
    stages, gains a '# TRUNCATED: <reason>' line and the exit code is 3.
    """
    phi, _ = _load_map(map_file)
    mdim = mdim.upper()
    growth: Dict[str, float] = {}
    if mdim == "H":
        grid = parse_stage_grid(stages) if stages else _default_h_grid(phi)
        rows, truncated = _run_h(phi, grid)
        lower, upper = top_tertile(rows)
    elif mdim == "M":
        scales = parse_rationals(eps, "eps") if eps else [Fraction(e) for e in DEFAULT_M_SCALES]
        if not scales:
            raise InvalidParameterError("eps schedule is empty")
        rows, last, growth, truncated = _run_m(phi, scales, int(n_max))
        lower, upper = top_tertile(last)
    else:
        raise InvalidParameterError(f"--mdim must be H or M, got {mdim!r}")

    report = EstimateSummary(
        kind=mdim, lower=lower, upper=upper,
        stages=[StageRow(**s.as_row()) for s in rows],
        growth_rates=growth, truncated=truncated,
    )
    _emit(_stage_csv(rows, truncated), out)
    target = _summary_path(out, summary)
    if target is not None:
        _emit(_dumps(report.model_dump(exclude_none=True)), target)
    logger.info(f"[CLI] mdim_{mdim} over {len(rows)} stages: [{lower:.6f}, {upper:.6f}]")
    return BudgetExceededError.exit_code if truncated else 0


def cmd_verify(map_file, out=None) -> int:
    doc = _read_json(map_file)
    _validated(CubeMapDocument if _is_cube_document(doc) else MapDocument, doc)
    report = VerifyReport.model_validate(VerificationService().verify_document(doc))
    _emit(_dumps(report.model_dump()), out)
    if report.status != "pass":
        logger.error(f"[CLI] verification failed: {report.failed} check(s)")
        return 5
    return 0


def cmd_predict(rule: str, k: Optional[int] = None, out=None) -> int:
    """
    Limit of the normalized stage values for a rule:
    power_law:s=1,r=1 | quadratic:s=1 | odd_legs:s=1 | cube:m=2,r=1 | cube_quadratic:m=2.
    With k, also the stage value of block k and its distance from the limit.
    """
    name, params = parse_rule(rule)
    result: Dict[str, Any] = {"rule": name, "parameters": params}
    schedule: Optional[Schedule] = None
    s = int(params.get("s", 1))
    K = max(int(k or 1), 1)
    if name == "power_law":
        # blocks are indexed from 0
        schedule = Schedule.power_law(s, params.get("r", "1"), K + 1)
    elif name == "quadratic":
        schedule = Schedule.quadratic(s, K)
    elif name == "odd_legs":
        schedule = Schedule.odd_legs(s, K)
    elif name == "cube":
        result["limit"] = cube_limit(int(params.get("m", 2)), "power", parse_rational(params.get("r", "1"), "r"))
    elif name == "cube_quadratic":
        result["limit"] = cube_limit(int(params.get("m", 2)), "quadratic")
    else:
        raise InvalidParameterError(
            f"unknown rule {name!r}; expected power_law, quadratic, odd_legs, cube or cube_quadratic"
        )
    if schedule is not None:
        result["limit"] = closed_form_limit(schedule)
        if k is not None:
            result["stage"] = convergence_gap(schedule, int(k))
    logger.info(f"[CLI] predict {name}: {result['limit']:.12f}")
    _emit(_dumps(result), out)
    return 0


def cmd_splice(map_file, fixed_point, target, eps, out=None, certificate=None) -> int:
    phi0, _ = _load_map(map_file)
    psi, cert = splice_with_certificate(
        phi0,
        parse_rational(fixed_point, "fixed-point"),
        parse_rational(target, "target"),
        parse_rational(eps, "eps"),
    )
    cert_doc = SpliceCertificateDocument.model_validate(cert.to_dict())
    _emit(_dumps(psi.to_document()), out)
    if certificate is not None:
        _emit(_dumps(cert_doc.model_dump()), certificate)
    else:
        logger.info(f"[CLI] splice certificate: {cert_doc.model_dump_json()}")
    return 0


def cmd_detect(map_file, J: Sequence[str], eps: str, k: int, legs: Optional[str] = None, out=None) -> int:
    """
    Strong-horseshoe certificate or refusal. For a cube document, block k of
    the nested cube map is tested against its own cube instead of J.
    """
    doc = _read_json(map_file)
    if _is_cube_document(doc):
        _validated(CubeMapDocument, doc)
        cube = make_nested_cube_map(int(doc["m"]), doc["rule"], doc["B"], int(doc["K"]), doc.get("r"))
        result = is_strong_cube_horseshoe(cube.block(int(k)), None, parse_rational(eps, "eps"))
    else:
        request = _validated(DetectRequest, {"J": list(J), "eps": eps, "k": k})
        _validated(MapDocument, doc)
        phi = PAMap.from_document(doc)
        interval = Interval(parse_rational(request.J[0], "J"), parse_rational(request.J[1], "J"))
        pieces = _parse_legs(legs) or equal_legs(interval, request.k)
        result = is_strong_horseshoe(phi, interval, pieces, parse_rational(request.eps, "eps"), request.k)
    payload = result.to_dict()
    logger.info(f"[CLI] detect: {payload['result']}")
    _emit(_dumps(payload), out)
    return 0


def cmd_cube(m: int, rule: str, B: str, K: int, stages: Optional[str] = None, out=None, document=None) -> int:
    """Stage CSV of the nested cube map; rule is 'power:r=1' or 'quadratic'."""
    name, params = parse_rule(rule)
    r = params.get("r") if name == "power" else None
    if name == "power" and r is None:
        r = "1"
    cube = make_nested_cube_map(int(m), name, B, int(K), r)
    grid = parse_stage_grid(stages) if stages else [(k, n) for k in range(1, int(K) + 1) for n in (1, 2)]
    if any(n < 1 for _, n in grid):
        raise InvalidParameterError("cube stages need n >= 1")
    rows = [cube.stage(k, n) for k, n in grid]
    _emit(_stage_csv(rows), out)
    if document is not None:
        _emit(_dumps(cube.to_document()), document)
    limit = cube_limit(cube.m, name, None if r is None else parse_rational(r, "r"))
    last = rows[-1].normalized if rows else 0.0
    logger.info(f"[CLI] cube m={cube.m} {name}: last stage {last:.6f}, limit {limit:.6f}")
    return 0

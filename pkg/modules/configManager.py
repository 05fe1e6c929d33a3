import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

import xmltodict  # type: ignore
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from modules.exceptions import InvalidParameterError
from modules.logging_config import logger

load_dotenv()

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config" / "meandimConfig.xml"

REQUIRED_SECTIONS = [
    "configuration",
    "configuration.limits",
    "configuration.limits.nodeCap",
    "configuration.limits.enumerationBudget",
    "configuration.numerics",
    "configuration.numerics.bisectionTolerance",
]

OPTIONAL_SECTIONS = [
    "configuration.limits.bruteGridCap",
    "configuration.numerics.orderingSlack",
    "configuration.numerics.quadraticNormalization",
    "configuration.separation.gridRefinement",
    "configuration.surgery.blocks",
    "configuration.surgery.maxDyadicExponent",
]


class EngineSettings(BaseModel):
    """
    CLASS: EngineSettings

    DESCRIPTION:
    Merged engine limits and numeric tolerances. XML values first,
    environment variables on top.

    PARAMETERS:
    node_cap (int)            : Maximum node count of any constructed or composed map.
    enumeration_budget (int)  : Maximum number of enumerated cylinders, boxes or grid points.
    brute_grid_cap (int)      : Maximum grid size for the brute-force cover search.
    bisection_tolerance (float): Tolerance of the critical-exponent bisection.
    ordering_slack (float)    : Slack of the mdim_H <= mdim_M diagnostic.
    quadratic_normalization   : "exact" fills [0, 1] with the K quadratic widths, "basel" uses 6/pi^2.
    grid_refinement (int)     : Refinement factor of the separated-set scan grid.
    surgery_blocks (int)      : Truncation K used for splice block schedules.
    max_dyadic_exponent (int) : Largest j tried when choosing the splice window 2^-j.
    """
    model_config = ConfigDict(frozen=True)

    node_cap: int = Field(10_000_000, gt=0)
    enumeration_budget: int = Field(1_000_000, gt=0)
    brute_grid_cap: int = Field(4096, gt=1)
    bisection_tolerance: float = Field(1e-6, gt=0)
    ordering_slack: float = Field(0.05, ge=0)
    quadratic_normalization: str = Field("exact", pattern="^(exact|basel)$")
    grid_refinement: int = Field(2, ge=1)
    surgery_blocks: int = Field(6, ge=1)
    max_dyadic_exponent: int = Field(60, ge=1)


def xml_to_dict(xml_file) -> Dict[str, Any]:
    """
    Parses the engine XML configuration into a flat dict of EngineSettings fields.

    Args:
        xml_file (str | Path): Path to the XML file.

    Returns:
        dict: keys matching EngineSettings; sections absent from the file are left out.

    Notes:
        - Expects the XML to have this structure:
          <configuration>
            <limits><nodeCap/><enumerationBudget/><bruteGridCap/></limits>
            <numerics><bisectionTolerance/><orderingSlack/><quadraticNormalization/></numerics>
            <separation><gridRefinement/></separation>
            <surgery><blocks/><maxDyadicExponent/></surgery>
          </configuration>
    """
    with open(xml_file, "r", encoding="utf-8") as file:
        config_dict = xmltodict.parse(file.read())

    root = config_dict.get("configuration") or {}
    limits = root.get("limits") or {}
    numerics = root.get("numerics") or {}
    separation = root.get("separation") or {}
    surgery = root.get("surgery") or {}

    raw = {
        "node_cap": limits.get("nodeCap"),
        "enumeration_budget": limits.get("enumerationBudget"),
        "brute_grid_cap": limits.get("bruteGridCap"),
        "bisection_tolerance": numerics.get("bisectionTolerance"),
        "ordering_slack": numerics.get("orderingSlack"),
        "quadratic_normalization": numerics.get("quadraticNormalization"),
        "grid_refinement": separation.get("gridRefinement"),
        "surgery_blocks": surgery.get("blocks"),
        "max_dyadic_exponent": surgery.get("maxDyadicExponent"),
    }
    return {key: value.strip() for key, value in raw.items() if value is not None}


def validate_xml_config(xml_file) -> Dict[str, Any]:
    """
    Validates that the XML configuration file has all required sections.

    Args:
        xml_file (str | Path): Path to the XML file

    Returns:
        dict: Validation results with status and any missing sections
    """
    try:
        with open(xml_file, "r", encoding="utf-8") as file:
            config_dict = xmltodict.parse(file.read())

        validation_result = {
            "valid": True,
            "missing_sections": [],
            "warnings": [],
        }

        for section in REQUIRED_SECTIONS:
            if _lookup(config_dict, section) is None:
                validation_result["valid"] = False
                validation_result["missing_sections"].append(section)

        for section in OPTIONAL_SECTIONS:
            if _lookup(config_dict, section) is None:
                validation_result["warnings"].append(f"Optional section missing: {section}")

        return validation_result

    except Exception as e:
        return {
            "valid": False,
            "error": f"Failed to parse XML: {str(e)}",
            "missing_sections": [],
            "warnings": [],
        }


def load_settings(xml_file: Optional[Path] = None) -> EngineSettings:
    """Reads XML, applies MEANDIM_* environment overrides and validates the result."""
    path = Path(xml_file or os.getenv("MEANDIM_CONFIG") or DEFAULT_CONFIG_PATH)
    values: Dict[str, Any] = {}
    if path.exists():
        check = validate_xml_config(path)
        if not check["valid"]:
            logger.warning(f"[Config] {path} incomplete: {check.get('missing_sections') or check.get('error')}")
        else:
            values = xml_to_dict(path)
        for warning in check["warnings"]:
            logger.debug(f"[Config] {warning}")
    else:
        logger.warning(f"[Config] {path} not found, using built-in defaults")

    budget = _env_int("MEANDIM_BUDGET")
    if budget is not None:
        values["enumeration_budget"] = budget
        values["brute_grid_cap"] = max(2, min(budget, 1 << 16))
    node_cap = _env_int("MEANDIM_NODE_CAP")
    if node_cap is not None:
        values["node_cap"] = node_cap

    try:
        settings = EngineSettings(**values)
    except ValidationError as e:
        first = e.errors()[0]
        field_name = ".".join(str(p) for p in first.get("loc", ()))
        raise InvalidParameterError(f"setting {field_name}: {first.get('msg')}") from e
    logger.debug(f"[Config] Loaded settings from {path}: {settings.model_dump()}")
    return settings


def _env_int(name: str) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return None
    try:
        return int(raw.strip())
    except ValueError:
        raise InvalidParameterError(f"{name} must be an integer, got {raw!r}") from None


@lru_cache(maxsize=1)
def _cached_settings() -> EngineSettings:
    return load_settings()


def get_settings(refresh: bool = False) -> EngineSettings:
    if refresh:
        _cached_settings.cache_clear()
    return _cached_settings()


def _lookup(config_dict: Dict[str, Any], dotted: str) -> Any:
    current: Any = config_dict
    for key in dotted.split("."):
        try:
            current = current[key]
        except (KeyError, TypeError):
            return None
    return current


if __name__ == "__main__":
    print("=" * 60)
    print("Engine configuration")
    print("=" * 60)
    print(validate_xml_config(DEFAULT_CONFIG_PATH))
    print(get_settings().model_dump())

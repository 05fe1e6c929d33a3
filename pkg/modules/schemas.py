from pydantic import BaseModel, ConfigDict, Field, field_validator
from typing import Any, Dict, List, Optional

from modules.exceptions import InvalidParameterError
from modules.rational import parse_rational


def _rational_text(value: Any) -> str:
    if isinstance(value, float):
        raise ValueError(f"float {value!r} refused, use a 'p/q' string")
    parse_rational(value)
    return str(value) if not isinstance(value, str) else value


class BlockDocument(BaseModel):
    """
    CLASS: BlockDocument

    DESCRIPTION:
    One declared horseshoe block of an interval map.

    PARAMETERS:
    index (int)        : Block index within its schedule.
    left (str)         : Left endpoint, "p/q".
    right (str)        : Right endpoint, "p/q".
    legs (int)         : Number of full legs (odd).
    orientation (str)  : "up" when the first leg is increasing.
    """
    index: int = Field(0, description="Block index within its schedule")
    left: str = Field(..., description="Left endpoint as 'p/q'")
    right: str = Field(..., description="Right endpoint as 'p/q'")
    legs: int = Field(..., ge=1, description="Number of full legs")
    orientation: str = Field("up", description="'up' when the first leg is increasing")

    _check_endpoints = field_validator("left", "right", mode="before")(_rational_text)


class MapDocument(BaseModel):
    """
    CLASS: MapDocument

    DESCRIPTION:
    Serialized piecewise-affine interval map. Loads back exactly: every
    number is a "p/q" string.

    USAGE:
    doc = MapDocument(domain=["0", "1"], nodes=["0", "1/3", "2/3", "1"], values=["0", "1", "0", "1"])

    PARAMETERS:
    domain (list[str])         : [lo, hi]
    nodes (list[str])          : Strictly increasing nodes.
    values (list[str])         : Value at each node.
    construction (str)         : Name of the construction that built the map.
    parameters (dict)          : Construction parameters.
    blocks (list[BlockDocument]): Declared horseshoe blocks.

    RAISES:
    ValidationError : float literals, malformed rationals, missing fields.
    """
    domain: List[str] = Field(..., min_length=2, max_length=2, description="[lo, hi]")
    nodes: List[str] = Field(..., min_length=2, description="Strictly increasing nodes")
    values: List[str] = Field(..., min_length=2, description="Value at each node")
    construction: Optional[str] = Field(None, description="Construction that built the map")
    parameters: Optional[Dict[str, Any]] = Field(None, description="Construction parameters")
    blocks: List[BlockDocument] = Field(default_factory=list, description="Declared horseshoe blocks")

    @field_validator("domain", "nodes", "values", mode="before")
    @classmethod
    def _rationals(cls, value):
        return [_rational_text(v) for v in value]

    class Config:
        json_schema_extra = {
            "example": {
                "domain": ["0", "1"],
                "nodes": ["0", "1/3", "2/3", "1"],
                "values": ["0", "1", "0", "1"],
                "construction": "tent_g",
                "parameters": {},
                "blocks": [{"index": 0, "left": "0", "right": "1", "legs": 3, "orientation": "up"}],
            }
        }


class BuildRequest(BaseModel):
    """
    CLASS: BuildRequest

    DESCRIPTION:
    Input of the build command. Parameters may be given at the top level or
    under "parameters"; extra keys are kept.

    USAGE:
    req = BuildRequest(construction="phi_sr", s=1, r="1", K=4)
    """
    model_config = ConfigDict(extra="allow")

    construction: str = Field(..., description="tent_g | phi_sr | quadratic | odd_legs | schedule | identity | strong_horseshoe")
    parameters: Dict[str, Any] = Field(default_factory=dict, description="Construction parameters")

    @field_validator("parameters", mode="before")
    @classmethod
    def _no_floats(cls, value):
        for key, v in (value or {}).items():
            if isinstance(v, float):
                raise ValueError(f"parameter {key!r}: float {v!r} refused, use a 'p/q' string")
        return value or {}

    def flattened(self) -> Dict[str, Any]:
        extra = dict(self.model_extra or {})
        for key, v in extra.items():
            if isinstance(v, float):
                raise InvalidParameterError(f"parameter {key!r}: float {v!r} refused, use a 'p/q' string")
        return {"construction": self.construction, "parameters": {**self.parameters, **extra}}


class CubeBlockDocument(BaseModel):
    k: int = Field(..., ge=1, description="Block index; 3^k cells per axis in the odd rows")
    kappa: int = Field(..., ge=1, description="Leg parameter, 2*kappa + 1 = 3^k")
    bounds: List[str] = Field(..., min_length=2, max_length=2, description="[a, b] of E_k")
    inflation: str = Field("0", description="Leg target dilation")
    leg_count: int = Field(..., ge=1, description="3^{k(m-1)}")
    leg_assignment: Optional[List[List[int]]] = Field(None, description="Odd row multi-index per odd slab")


class CubeMapDocument(BaseModel):
    """
    CLASS: CubeMapDocument

    DESCRIPTION:
    Serialized nested cube map: the rule and its parameters rebuild the map,
    the block list records the geometry that was built.

    RAISES:
    ValidationError : unknown rule, missing fields.
    """
    m: int = Field(..., ge=2, description="Dimension")
    rule: str = Field(..., pattern="^(power|quadratic)$", description="power | quadratic")
    B: str = Field(..., description="Scale constant, 'p/q'")
    K: int = Field(..., ge=1, description="Number of blocks")
    r: Optional[str] = Field(None, description="Decay exponent of the power rule")
    blocks: List[CubeBlockDocument] = Field(default_factory=list)

    class Config:
        json_schema_extra = {
            "example": {"m": 2, "rule": "power", "B": "1/2", "K": 3, "r": "1", "blocks": []}
        }


class StageRow(BaseModel):
    k: int = Field(..., description="Block or scale index")
    n: int = Field(..., description="Stage depth")
    eps: str = Field(..., description="Scale, 'p/q'")
    dim: float = Field(..., ge=0, description="Finite-stage dimension")
    normalized: float = Field(..., ge=0, description="Dimension divided by the horizon")


class EstimateSummary(BaseModel):
    """
    CLASS: EstimateSummary

    DESCRIPTION:
    JSON summary written next to the stage CSV.

    PARAMETERS:
    kind (str)           : "H" or "M"
    lower (float)        : Smallest normalized value over the top tertile
    upper (float)        : Largest normalized value over the top tertile
    stages (list)        : Every stage, in computation order
    growth_rates (dict)  : Fitted slope of log sep(n) per scale (kind "M")
    truncated (str)      : Reason the run stopped early, if it did
    """
    kind: str = Field(..., pattern="^(H|M|cube)$")
    lower: float
    upper: float
    stages: List[StageRow] = Field(default_factory=list)
    growth_rates: Dict[str, float] = Field(default_factory=dict)
    truncated: Optional[str] = None


class SpliceCertificateDocument(BaseModel):
    p: str = Field(..., description="Fixed point")
    target: str = Field(..., description="Prescribed dimension")
    eps: str = Field(..., description="Sup-distance bound")
    delta: str = Field(..., description="Dyadic window width")
    window: List[str] = Field(..., description="Interval carrying the block map")
    bridge: List[str] = Field(..., description="Interval carrying the affine bridge")
    sup_distance: str = Field(..., description="Exact sup distance to the original map")
    schedule: Optional[Dict[str, Any]] = None
    limit: Optional[float] = None


class DetectRequest(BaseModel):
    """
    CLASS: DetectRequest

    DESCRIPTION:
    Strong-horseshoe query. Legs default to k equal subintervals of J.
    """
    J: List[str] = Field(..., min_length=2, max_length=2)
    eps: str
    k: int = Field(..., ge=1)
    legs: Optional[List[List[str]]] = None

    @field_validator("J", mode="before")
    @classmethod
    def _interval(cls, value):
        return [_rational_text(v) for v in value]

    @field_validator("eps", mode="before")
    @classmethod
    def _eps(cls, value):
        return _rational_text(value)


class CheckRow(BaseModel):
    check: str
    subject: str
    status: str = Field(..., pattern="^(pass|fail|skip)$")
    label: str
    detail: str = ""
    value: Optional[float] = None


class VerifyReport(BaseModel):
    status: str = Field(..., pattern="^(pass|fail)$")
    passed: int
    failed: int
    skipped: int
    checks: List[CheckRow]


class ErrorResponse(BaseModel):
    """
    CLASS: ErrorResponse

    DESCRIPTION:
    Error document printed on stderr when a command fails.
    """
    status: str = "error"
    code: int = Field(..., description="Process exit code")
    error: str = Field(..., description="Machine readable error tag")
    message: str = Field(..., description="Human readable detail")

    class Config:
        json_schema_extra = {
            "example": {"status": "error", "code": 2, "error": "invalid_parameter",
                        "message": "r must be positive, got 0"}
        }

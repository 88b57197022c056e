import json
from typing import Any, Dict, List, Literal, Optional, Union

import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .constants import DEFAULT_DT, DEFAULT_HORIZON, DEFAULT_MU, DEFAULT_RECORD_STRIDE, ControllerKind, Wiring
from .exceptions import ScenarioError

# Scalar, diagonal entries or a full row-major matrix
Matrix = Union[float, List[float], List[List[float]]]
Vector = Union[float, List[float]]


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemSection(Section):
    builtin: Optional[Literal["planar2dof"]] = None
    mass: Optional[Matrix] = None
    damping: Optional[Matrix] = None
    input_matrix: Optional[Vector] = None
    stiffness: Optional[Matrix] = None
    offset: Optional[Vector] = None

    @model_validator(mode="after")
    def check_source(self) -> "SystemSection":
        inline = [name for name in ("mass", "damping", "input_matrix", "stiffness") if getattr(self, name) is not None]
        if self.builtin is not None and inline:
            raise ValueError(f"builtin system does not accept {', '.join(inline)}")
        if self.builtin is None and (self.mass is None or self.damping is None):
            raise ValueError("either 'builtin' or both 'mass' and 'damping' are required")
        return self


class DeadZoneSection(Section):
    r_b: Vector
    l_b: Vector
    beta: Vector = 0.0


class GainsSection(Section):
    K_P: Matrix
    K_I: Matrix
    K_Z: Optional[Matrix] = None
    mu: Matrix = DEFAULT_MU
    beta_comp: Vector = 0.0
    q_star: List[float]


class SimSection(Section):
    dt: float = DEFAULT_DT
    horizon: float = DEFAULT_HORIZON
    x0: Optional[List[float]] = None
    wiring: Wiring = Wiring.IDEAL
    controller: ControllerKind = ControllerKind.PIDZ
    record_stride: int = DEFAULT_RECORD_STRIDE


class ScenarioDocument(Section):
    """Structured scenario file: `system`, `dead_zone`, `gains`, `sim` sections plus a `label`."""

    label: str = Field(min_length=1)
    case: Optional[str] = None
    system: SystemSection
    dead_zone: Optional[DeadZoneSection] = None
    gains: GainsSection
    sim: SimSection = Field(default_factory=SimSection)


def _location(loc: Any) -> str:
    # pydantic reports union members as extra path entries, e.g. ('gains', 'K_I', 'float')
    parts = [str(part) for part in loc if not isinstance(part, int)]
    if len(parts) > 2 and parts[0] in ("system", "dead_zone", "gains", "sim"):
        parts = parts[:2]
    return ".".join(parts) or "document"


def validate_document(data: Any) -> ScenarioDocument:
    try:
        return ScenarioDocument.model_validate(data)
    except pydantic.ValidationError as exc:
        error = exc.errors()[0]
        message = str(error["msg"])
        if error["type"] == "extra_forbidden":
            message = "unknown key"
        raise ScenarioError(message, location=_location(error["loc"])) from None


def parse_document(text: str) -> ScenarioDocument:
    """Parse a UTF-8 JSON scenario document.

    Syntax errors report the line, schema errors the dotted key (e.g. `gains.K_I`).
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg} (column {exc.colno})", location=f"line {exc.lineno}") from None
    return validate_document(data)


def render_document(document: ScenarioDocument) -> str:
    data: Dict[str, Any] = document.model_dump(mode="json", exclude_none=True)
    return json.dumps(data, indent=2) + "\n"

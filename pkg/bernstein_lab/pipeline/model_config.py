"""Model configuration files.

A model is described by a flat ``key=value`` file, one pair per line, with
``#`` starting a comment:

    # Example 1 of the unit interval
    geometry=interval
    horizon=1
    phi=example1_phi
    psi=unit
    potential=0

``phi`` and ``psi`` take a named preset or an inline comma-separated list of
expansion coefficients (one per Neumann mode, constant mode first). The
truncation keys ``max_modes``, ``min_gap``, ``tail_tol``, ``image_count`` and
``prune_tol`` override the default :class:`TruncationPolicy`.

Files ending in ``.yaml``/``.yml`` are read with PyYAML instead; they carry
the same keys, optionally with the truncation keys nested under
``truncation:``. Both formats go through the same pydantic validation and
report errors with the line and key that caused them.

Example:
    >>> config = parse_config("geometry=interval\\nphi=example1_phi\\npsi=unit")
    >>> model = build_model(config)
    >>> model.horizon
    1.0
"""

import math
from pathlib import Path
from typing import Any

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)
import yaml

from ..config import logger
from ..core.bernstein_model import BernsteinModel
from ..core.spectral_core import Geometry, TruncationPolicy
from ..errors import ConfigParseError

# name -> (geometry it belongs to, or None for both; expansion coefficients)
PRESETS: dict[str, tuple[Geometry | None, tuple[float, ...]]] = {
    "unit": (None, (1.0,)),
    "example1_phi": (Geometry.INTERVAL, (1.0, 0.5)),
    "cosine_quarter": (Geometry.INTERVAL, (1.0, 0.25)),
    "example2_phi": (Geometry.DISK_RADIAL, (1.0 / math.pi, 1.0 / math.pi)),
    "bessel_quarter": (Geometry.DISK_RADIAL, (1.0, 0.25)),
}

TRUNCATION_KEYS = tuple(TruncationPolicy.model_fields)
MODEL_KEYS = ("geometry", "horizon", "phi", "psi", "potential")

DatumSpec = str | tuple[float, ...]


def parse_datum(value: Any) -> DatumSpec:
    """Read a preset name or a coefficient list from a raw config value.

    Raises:
        ValueError: If the value is neither a known preset nor a list of reals
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (float(value),)
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        text = str(value).strip()
        if text in PRESETS:
            return text
        items = [item.strip() for item in text.split(",")]
    try:
        coefficients = tuple(float(item) for item in items)
    except (TypeError, ValueError):
        raise ValueError(
            f"{value!r} is neither a preset ({', '.join(PRESETS)}) nor a list of reals"
        ) from None
    if not coefficients:
        raise ValueError("coefficient list is empty")
    if not all(math.isfinite(c) for c in coefficients):
        raise ValueError(f"coefficients must be finite, got {coefficients}")
    return coefficients


class ModelConfig(BaseModel):
    """Validated model description.

    Attributes:
        geometry: interval or disk
        horizon: Final time T
        phi: Preset name or coefficient list of the initial datum
        psi: Preset name or coefficient list of the final datum
        potential: Constant potential V0
        truncation: Spectral truncation policy
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    geometry: Geometry = Field(..., description="State space: interval or disk")
    horizon: float = Field(1.0, gt=0.0, allow_inf_nan=False, description="Final time T")
    phi: DatumSpec = Field(..., description="Initial datum: preset or coefficients")
    psi: DatumSpec = Field(..., description="Final datum: preset or coefficients")
    potential: float = Field(0.0, allow_inf_nan=False, description="Constant potential V0")
    truncation: TruncationPolicy = Field(default_factory=TruncationPolicy,
                                         description="Truncation overrides")

    @field_validator("phi", "psi", mode="before")
    @classmethod
    def validate_datum(cls, v: Any) -> DatumSpec:
        return parse_datum(v)

    @model_validator(mode="after")
    def check_preset_geometry(self) -> "ModelConfig":
        for key in ("phi", "psi"):
            spec = getattr(self, key)
            if isinstance(spec, str):
                home = PRESETS[spec][0]
                if home is not None and home != self.geometry:
                    raise ValueError(
                        f"{key}: preset '{spec}' is defined on the {home.value}, "
                        f"not the {self.geometry.value}"
                    )
            elif len(spec) > self.truncation.max_modes:
                raise ValueError(
                    f"{key}: {len(spec)} coefficients exceed max_modes={self.truncation.max_modes}"
                )
        return self

    def coefficients(self, key: str) -> tuple[float, ...]:
        """Expansion coefficients of ``phi`` or ``psi``."""
        spec = getattr(self, key)
        return PRESETS[spec][1] if isinstance(spec, str) else spec


def _config_error(error: ValidationError, lines: dict[str, int]) -> ConfigParseError:
    first = error.errors()[0]
    loc = [str(part) for part in first["loc"]]
    message = first["msg"]
    if not loc:
        # model-level validator: the message starts with the key it concerns
        key = message.removeprefix("Value error, ").split(":")[0]
        key = key if key in lines else "phi"
    elif loc[0] == "truncation" and len(loc) > 1:
        key = loc[1]
    else:
        key = loc[0]
    line = lines.get(key, lines.get("truncation", 0))
    if key == "truncation" and not line:
        # flat file: point at the first truncation override
        line = min((lines[k] for k in TRUNCATION_KEYS if k in lines), default=0)
    if first["type"] == "missing":
        return ConfigParseError(0, key, "missing required key")
    return ConfigParseError(line, key, message)


def _validate(values: dict[str, Any], lines: dict[str, int]) -> ModelConfig:
    if "geometry" not in values:
        raise ConfigParseError(0, "geometry", "missing required key")
    values = dict(values)
    overrides = {k: values.pop(k) for k in TRUNCATION_KEYS if k in values}
    if overrides:
        nested = values.get("truncation") or {}
        if not isinstance(nested, dict):
            raise ConfigParseError(lines.get("truncation", 0), "truncation", "expected a mapping")
        values["truncation"] = {**nested, **overrides}
    try:
        return ModelConfig(**values)
    except ValidationError as e:
        raise _config_error(e, lines) from None


def parse_config(text: str) -> ModelConfig:
    """Parse the flat ``key=value`` model format.

    Args:
        text: File contents

    Returns:
        Validated ModelConfig with defaults applied (T = 1, V0 = 0, default truncation)

    Raises:
        ConfigParseError: On an unknown or repeated key, a malformed line, an
            unparsable value or a missing geometry, naming the line and key
    """
    values: dict[str, str] = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(number, line, "expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in MODEL_KEYS and key not in TRUNCATION_KEYS:
            raise ConfigParseError(number, key, "unknown key")
        if key in values:
            raise ConfigParseError(number, key, f"repeated key (first set on line {lines[key]})")
        if not value:
            raise ConfigParseError(number, key, "empty value")
        values[key] = value
        lines[key] = number
    return _validate(values, lines)


def parse_yaml_config(text: str) -> ModelConfig:
    """Parse the YAML model format (same keys, truncation optionally nested).

    Raises:
        ConfigParseError: On YAML syntax errors or invalid values
    """
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigParseError(mark.line + 1 if mark else 0, "", f"invalid YAML: {e}") from None
    if data is None:
        data, root = {}, None
    if not isinstance(data, dict):
        raise ConfigParseError(1, "", "top level must be a mapping")

    lines: dict[str, int] = {}
    if isinstance(root, yaml.MappingNode):
        for key_node, value_node in root.value:
            lines[str(key_node.value)] = key_node.start_mark.line + 1
            if key_node.value == "truncation" and isinstance(value_node, yaml.MappingNode):
                for sub_key, _ in value_node.value:
                    lines[str(sub_key.value)] = sub_key.start_mark.line + 1
    for key in data:
        if key not in MODEL_KEYS and key not in TRUNCATION_KEYS and key != "truncation":
            raise ConfigParseError(lines.get(str(key), 0), str(key), "unknown key")
    return _validate(data, lines)


def load_config(config_path: str | Path) -> ModelConfig:
    """Load and validate a model configuration file.

    Args:
        config_path: ``.yaml``/``.yml`` for YAML, anything else for key=value

    Returns:
        Validated ModelConfig

    Raises:
        FileNotFoundError: If the file doesn't exist
        ConfigParseError: If the contents are invalid
    """
    config_path = Path(config_path)
    text = config_path.read_text(encoding="utf-8")
    if config_path.suffix.lower() in (".yaml", ".yml"):
        return parse_yaml_config(text)
    return parse_config(text)


def build_model(config: ModelConfig) -> BernsteinModel:
    """Construct the normalized BernsteinModel described by ``config``."""
    return BernsteinModel.from_data(
        config.geometry,
        config.horizon,
        list(config.coefficients("phi")),
        list(config.coefficients("psi")),
        potential=config.potential,
        policy=config.truncation,
    )


def _describe(spec: DatumSpec) -> str:
    return spec if isinstance(spec, str) else ", ".join(f"{c:g}" for c in spec)


def print_config_summary(config: ModelConfig, model: BernsteinModel | None = None) -> None:
    """Log the resolved model configuration.

    Args:
        config: Validated configuration
        model: Built model, to report the normalization scale applied to psi
    """
    logger.info("=" * 80)
    logger.info("MODEL CONFIGURATION")
    logger.info("=" * 80)
    logger.info(f"  Geometry:   {config.geometry.value}")
    logger.info(f"  Horizon T:  {config.horizon:g}")
    logger.info(f"  phi:        {_describe(config.phi)}")
    logger.info(f"  psi:        {_describe(config.psi)}")
    logger.info(f"  Potential:  {config.potential:g}")
    policy = config.truncation
    logger.info("Truncation:")
    logger.info(f"  Modes:      {policy.max_modes}")
    logger.info(f"  Min gap:    {policy.min_gap:g}")
    logger.info(f"  Tail tol:   {policy.tail_tol:g}")
    logger.info(f"  Images:     {policy.image_count}")
    if model is not None:
        logger.info(f"  psi scale:  {model.normalization_scale:.12g}")
    logger.info("=" * 80)

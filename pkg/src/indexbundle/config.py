"""Run configuration: one flat YAML (or JSON) document per run."""

from dataclasses import asdict, dataclass, fields

import numpy as np
import yaml

from .errors import ConfigError, ValidationError
from .hamiltonian import DEFAULT_HORIZON, DEFAULT_TOL_ANGLE, DEFAULT_TOL_HYPERBOLIC

COMMANDS = ("parity", "loop-parity", "w1", "scan", "verify", "scenario-report")

# scenarios accepted by each command; the first one is the default
COMMAND_SCENARIOS = {
    "parity": ("tilde_l1",),
    "loop-parity": ("tilde_l",),
    "w1": ("moebius", "pejsachowicz"),
    "scan": ("pejsachowicz", "moebius"),
    "scenario-report": ("pejsachowicz", "moebius"),
    "verify": (None,),
}


@dataclass
class RunConfig:
    command: str
    scenario: str | None = None
    m: int = 1
    a_plus: float = 1.0
    a_minus: float = 1.0
    profile_scale: float = 1.0
    inert_dims: int = 0
    horizon: float = DEFAULT_HORIZON
    resolution: list | None = None
    tol_angle: float = DEFAULT_TOL_ANGLE
    tol_hyperbolic: float = DEFAULT_TOL_HYPERBOLIC
    window_n: int = 4
    samples: int = 16
    loop_samples: int = 64
    workers: int = 1
    seed: int = 0
    out: str = "out"
    figures: bool = True

    @property
    def torus_dim(self):
        if self.scenario == "pejsachowicz":
            return self.m
        if self.scenario == "moebius":
            return 1 + self.inert_dims
        return 0

    def to_dict(self):
        return asdict(self)


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _key_lines(text):
    """Line numbers (1-based) of top-level keys, for error messages."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def _where(key, lines):
    return f"field {key!r}" + (f" (line {lines[key]})" if key in lines else "")


def _coerce(key, value, lines):
    ftype = FIELD_TYPES[key]
    where = _where(key, lines)
    if key == "resolution":
        if value is None:
            return None
        if isinstance(value, str):
            value = [v for v in value.replace(" ", "").split(",") if v]
        if not isinstance(value, (list, tuple)):
            value = [value]
        try:
            out = [int(v) for v in value]
        except (TypeError, ValueError):
            raise ValidationError(f"{where}: expected an integer or list of integers, got {value!r}") from None
        if any(o != float(v) for o, v in zip(out, value) if not isinstance(v, str)):
            raise ValidationError(f"{where}: resolutions must be integers")
        return out
    if ftype is bool:
        if not isinstance(value, bool):
            raise ValidationError(f"{where}: expected true/false, got {value!r}")
        return value
    if ftype is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ValidationError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    if ftype is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if value is not None and not isinstance(value, str):
        raise ValidationError(f"{where}: expected a string, got {value!r}")
    return value


def validate(cfg, lines=None):
    """Fill scenario-dependent defaults and range-check every knob."""
    lines = lines or {}

    def bad(key, msg):
        raise ValidationError(f"{_where(key, lines)}: {msg}")

    if cfg.command not in COMMANDS:
        bad("command", f"unknown command {cfg.command!r}; expected one of {', '.join(COMMANDS)}")
    allowed = COMMAND_SCENARIOS[cfg.command]
    if cfg.scenario is None:
        cfg.scenario = allowed[0]
    elif cfg.scenario not in allowed:
        bad("scenario", f"unknown scenario {cfg.scenario!r} for command {cfg.command!r}; expected one of {allowed}")
    if cfg.m < 1 or cfg.m > 6:
        bad("m", "must be between 1 and 6")
    if cfg.a_plus == 0 or cfg.a_minus == 0:
        bad("a_plus" if cfg.a_plus == 0 else "a_minus", "must be nonzero")
    if cfg.profile_scale <= 0:
        bad("profile_scale", "must be positive")
    if not 0 <= cfg.inert_dims <= 3:
        bad("inert_dims", "must be between 0 and 3")
    if not 0 < cfg.horizon <= 500:
        bad("horizon", "must lie in (0, 500]")
    if not 0 < cfg.tol_angle < np.pi / 4:
        bad("tol_angle", "must lie in (0, pi/4)")
    if not 0 < cfg.tol_hyperbolic < 1:
        bad("tol_hyperbolic", "must lie in (0, 1)")
    if not 1 <= cfg.window_n <= 64:
        bad("window_n", "must lie in [1, 64]")
    if cfg.command == "loop-parity" and cfg.window_n % 2:
        bad("window_n", f"must be even for loop-parity, got {cfg.window_n}")
    if not 8 <= cfg.samples <= 100000:
        bad("samples", "must lie in [8, 100000]")
    if not 4 <= cfg.loop_samples <= 100000:
        bad("loop_samples", "must lie in [4, 100000]")
    if not 1 <= cfg.workers <= 256:
        bad("workers", "must lie in [1, 256]")
    if cfg.seed < 0:
        bad("seed", "must be nonnegative")
    if cfg.torus_dim:
        if cfg.resolution is None:
            cfg.resolution = [256 if cfg.torus_dim == 1 else 64] * cfg.torus_dim
        elif len(cfg.resolution) == 1:
            cfg.resolution = cfg.resolution * cfg.torus_dim
        if len(cfg.resolution) != cfg.torus_dim:
            bad("resolution", f"need {cfg.torus_dim} resolutions for this scenario, got {len(cfg.resolution)}")
        if any(not 2 <= r <= 4096 for r in cfg.resolution):
            bad("resolution", "each resolution must lie in [2, 4096]")
    return cfg


def parse_config(text, overrides=None):
    """Parse a configuration document and apply ``overrides`` (e.g. CLI flags).

    Raises ``ConfigError`` for malformed documents and ``ValidationError``
    for unknown keys or out-of-range values.
    """
    try:
        doc = yaml.safe_load(text) if text and text.strip() else {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"malformed config{where}: {getattr(exc, 'problem', exc)}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config must be a mapping of keys to values, got {type(doc).__name__}")
    lines = _key_lines(text or "")
    doc = {str(k).replace("-", "_"): v for k, v in doc.items()}
    for k, v in (overrides or {}).items():
        if v is not None:
            doc[k] = v
    unknown = sorted(set(doc) - set(FIELD_TYPES))
    if unknown:
        raise ValidationError("unknown key(s): " + ", ".join(_where(k, lines) for k in unknown))
    if "command" not in doc:
        raise ValidationError("field 'command' is required")
    values = {k: _coerce(k, v, lines) for k, v in doc.items()}
    return validate(RunConfig(**values), lines)

"""Flat ``key = value`` run configuration with optional unit suffixes."""

from dataclasses import dataclass, field, fields, replace
import hashlib
import math

from .errors import ConfigParseError, ConfigurationError, DomainError
from .physics import CONSTANTS, WavePacketParams

__all__ = ["RunConfig", "parse_config", "load_config", "serialize_config", "config_hash", "UNITS"]

# unit name -> (dimension, factor to SI)
UNITS = {
    "m": ("length", 1.0),
    "cm": ("length", 1e-2),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "m/s": ("velocity", 1.0),
    "mm/s": ("velocity", 1e-3),
    "m/s2": ("acceleration", 1.0),
    "m/s^2": ("acceleration", 1.0),
    "kg": ("mass", 1.0),
    "u": ("mass", CONSTANTS.amu),
    "s": ("time", 1.0),
}

_LIST_OF_FLOATS = "floats"
_LIST_OF_INTS = "ints"


@dataclass(frozen=True)
class RunConfig:
    """Every setting of a run. Lengths in m, velocities in m/s, masses in kg."""

    m: float = field(default=CONSTANTS.hydrogen_mass, metadata={"dim": "mass"})
    g: float = field(default=9.81, metadata={"dim": "acceleration"})
    z0: float = field(default=1e-3, metadata={"dim": "length"})
    v0: float = field(default=-0.0915, metadata={"dim": "velocity"})
    sigma_z: float = field(default=0.4e-6, metadata={"dim": "length"})
    V: float = field(default=1.0, metadata={"dim": "velocity"})
    d: float = field(default=0.03, metadata={"dim": "length"})
    D: float = field(default=0.3, metadata={"dim": "length"})
    # 0 selects the truncation search with truncation_tol
    n_gqs: int = field(default=12000, metadata={"kind": int})
    truncation_tol: float = 1e-4
    # 0 selects safety * Nyquist bound
    delta_z: float = field(default=0.0, metadata={"dim": "length"})
    safety: float = 0.25
    # 3: cubic Hermite spline on the mirror, 5: quintic
    spline_order: int = field(default=3, metadata={"kind": int})
    max_points: int = field(default=2**26, metadata={"kind": int})
    family_window_sigmas: float = 10.0
    family_points: int = field(default=41, metadata={"kind": int})
    density_tail: float = 1e-7
    N: int = field(default=1000, metadata={"kind": int})
    M: int = field(default=500, metadata={"kind": int})
    seed: int = field(default=0, metadata={"kind": int})
    reflection: float = 1.0
    sigma_det: float = field(default=0.0, metadata={"dim": "length"})
    fisher_step_rel: float = 1e-7
    fisher_tolerance: float = 0.05
    n_list: tuple = field(default=(50, 100, 200, 500, 1000), metadata={"kind": _LIST_OF_INTS})
    shift_rel: float = 1e-4
    snapshot_x: tuple = field(default=(0.0, 0.015, 0.03, 0.1, 0.3), metadata={"kind": _LIST_OF_FLOATS, "dim": "length"})
    histogram_bins: int = field(default=41, metadata={"kind": int})
    csv_tail: float = 1e-4
    csv_stride: int = field(default=4, metadata={"kind": int})
    output_dir: str = field(default="out", metadata={"kind": str})

    def __post_init__(self):
        self.params  # validates the physical fields
        _check(self.n_gqs >= 0, "n_gqs must be >= 0 (0 selects the truncation search)")
        _check(0 < self.truncation_tol < 1, "truncation_tol must lie in (0, 1)")
        _check(self.delta_z >= 0, "delta_z must be >= 0 (0 selects safety * Nyquist)")
        _check(0 < self.safety <= 0.5, "safety must lie in (0, 0.5]")
        _check(self.spline_order in (3, 5), "spline_order must be 3 or 5")
        _check(self.max_points >= 2, "max_points must be >= 2")
        _check(self.family_window_sigmas > 0, "family_window_sigmas must be positive")
        _check(self.family_points >= 3 and self.family_points % 2 == 1, "family_points must be odd and >= 3")
        _check(0 < self.density_tail < 0.01, "density_tail must lie in (0, 0.01)")
        _check(self.N >= 1, "N must be >= 1")
        _check(self.M >= 1, "M must be >= 1")
        _check(self.seed >= 0, "seed must be >= 0")
        _check(0 < self.reflection <= 1, "reflection must lie in (0, 1]")
        _check(self.sigma_det >= 0, "sigma_det must be >= 0")
        _check(0 < self.fisher_step_rel < 1e-3, "fisher_step_rel must lie in (0, 1e-3)")
        _check(0 < self.fisher_tolerance < 1, "fisher_tolerance must lie in (0, 1)")
        _check(all(n >= 1 for n in self.n_list), "n_list entries must be >= 1")
        _check(0 < self.shift_rel < 0.1, "shift_rel must lie in (0, 0.1)")
        _check(all(0 <= x <= self.D for x in self.snapshot_x), "snapshot_x entries must lie in [0, D]")
        _check(self.histogram_bins >= 1, "histogram_bins must be >= 1")
        _check(0 < self.csv_tail < 0.5, "csv_tail must lie in (0, 0.5)")
        _check(self.csv_stride >= 1, "csv_stride must be >= 1")
        _check(bool(self.output_dir), "output_dir must not be empty")

    @property
    def params(self):
        try:
            return WavePacketParams(
                m=self.m, g=self.g, z0=self.z0, v0=self.v0, sigma_z=self.sigma_z,
                V=self.V, d=self.d, D=self.D,
            )
        except DomainError as exc:
            raise ConfigurationError(str(exc)) from None

    def with_values(self, **kw):
        return replace(self, **kw)


def _check(ok, message):
    if not ok:
        raise ConfigurationError(message)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _number(text, dim, key, line):
    parts = text.split()
    if len(parts) > 2 or not parts:
        raise ConfigParseError(f"cannot read a number from {text!r} for {key}", line)
    try:
        value = float(parts[0])
    except ValueError:
        raise ConfigParseError(f"{key}: {parts[0]!r} is not a number", line) from None
    if not math.isfinite(value):
        raise ConfigParseError(f"{key}: value must be finite", line)
    if len(parts) == 2:
        unit = parts[1]
        if unit not in UNITS:
            raise ConfigParseError(f"{key}: unknown unit {unit!r}", line)
        udim, factor = UNITS[unit]
        if udim != dim:
            raise ConfigParseError(f"{key}: unit {unit!r} is a {udim}, expected {dim or 'no unit'}", line)
        value *= factor
    return value


def _integer(text, key, line):
    try:
        value = float(text)
    except ValueError:
        raise ConfigParseError(f"{key}: {text!r} is not an integer", line) from None
    if not value.is_integer():
        raise ConfigParseError(f"{key}: {text!r} is not an integer", line)
    return int(value)


def _convert(key, text, line):
    f = _FIELDS[key]
    kind = f.metadata.get("kind", float)
    dim = f.metadata.get("dim")
    if kind is str:
        return text
    if kind is int:
        return _integer(text, key, line)
    if kind in (_LIST_OF_FLOATS, _LIST_OF_INTS):
        items = [s.strip() for s in text.split(",") if s.strip()]
        if kind == _LIST_OF_INTS:
            return tuple(_integer(s, key, line) for s in items)
        return tuple(_number(s, dim, key, line) for s in items)
    return _number(text, dim, key, line)


def parse_config(text):
    """Parse ``key = value`` lines; ``#`` starts a comment. Missing keys take defaults."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if not raw.isascii():
            raise ConfigParseError("non-ASCII content", lineno)
        if "=" not in stripped:
            raise ConfigParseError(f"expected 'key = value', got {stripped!r}", lineno)
        key, value = (s.strip() for s in stripped.split("=", 1))
        if key not in _FIELDS:
            raise ConfigParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigParseError(f"duplicate key {key!r}", lineno)
        if key != "output_dir" and not value and _FIELDS[key].metadata.get("kind") not in (_LIST_OF_FLOATS, _LIST_OF_INTS):
            raise ConfigParseError(f"missing value for {key!r}", lineno)
        values[key] = _convert(key, value, lineno)
    try:
        return RunConfig(**values)
    except ConfigurationError as exc:
        raise ConfigParseError(str(exc)) from None


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _format(value):
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg):
    """Canonical form: every key in declaration order, SI values, no units."""
    return "".join(f"{f.name} = {_format(getattr(cfg, f.name))}\n" for f in fields(cfg))


def config_hash(cfg):
    """SHA-256 of the canonical form, leaving out where outputs are written."""
    text = serialize_config(replace(cfg, output_dir="-"))
    return hashlib.sha256(text.encode("ascii")).hexdigest()

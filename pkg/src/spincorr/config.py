"""Flat ``key = value`` experiment configuration with command-line overrides."""

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction

EXPERIMENTS = (
    "regime_map",
    "relax",
    "variance_growth",
    "breaktime_scan",
    "scaling_scan",
    "ehrenfest_scan",
    "appendix_a",
)

MAX_QUANTUM_SPIN = 250


class ConfigError(ValueError):
    """Invalid or incomplete configuration (CLI exit code 2)."""


class CapacityError(RuntimeError):
    """Requested quantum dimensions beyond the supported range (exit code 3)."""


def _float(v):
    x = float(v)
    if not math.isfinite(x):
        raise ValueError("not finite")
    return x


def _int(v):
    x = float(v)
    if x != int(x):
        raise ValueError("not an integer")
    return int(x)


def _spin(v):
    x = Fraction(v)
    if (2 * x).denominator != 1 or x <= 0:
        raise ValueError("not a positive (half-)integer")
    return x


def _floats(v):
    return tuple(_float(p) for p in _split(v))


def _ints(v):
    return tuple(_int(p) for p in _split(v))


def _spins(v):
    return tuple(_spin(p) for p in _split(v))


def _grid(v):
    """Either a comma list or ``start:stop:count`` (inclusive, linear)."""
    if ":" in v:
        a, b, n = v.split(":")
        a, b, n = _float(a), _float(b), _int(n)
        if n < 1:
            raise ValueError("grid needs at least one point")
        if n == 1:
            return (a,)
        return tuple(a + (b - a) * k / (n - 1) for k in range(n))
    return _floats(v)


def _split(v):
    parts = [p.strip() for p in str(v).split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return parts


def _fraction(v):
    return Fraction(v)


# key -> (parser, default). ``None`` default marks a key every experiment
# that uses it must set.
SCHEMA = {
    "a": (_float, 5.0),
    "gamma": (_float, None),
    "s": (_spin, None),
    "l": (_spin, None),
    "ic": (_floats, None),
    "n_kicks": (_int, None),
    "n_traj": (_int, None),
    "master_seed": (_int, 0),
    "chunk_size": (_int, 2**16),
    "p": (_float, 0.1),
    "f": (_float, 0.25),
    "l_values": (_spins, None),
    "s_ratio": (_fraction, Fraction(10, 11)),
    "gamma_values": (_grid, None),
    "r_values": (_grid, None),
    "samples_per_cell": (_int, 50),
    "n_steps": (_int, 10_000),
    "lambda_cut": (_float, None),
    "window": (_ints, None),
    "snapshots": (_ints, None),
    "j_values": (_spins, None),
    "moments": (_ints, (2, 4)),
}

REQUIRED = {
    "regime_map": ("gamma_values", "r_values"),
    "relax": ("gamma", "s", "l", "ic", "n_kicks", "n_traj"),
    "variance_growth": ("gamma", "s", "l", "ic", "n_kicks", "n_traj"),
    "breaktime_scan": ("gamma", "l_values", "ic", "n_kicks", "n_traj"),
    "scaling_scan": ("gamma", "l_values", "ic", "window", "n_traj"),
    "ehrenfest_scan": ("gamma", "l_values", "ic", "n_kicks"),
    "appendix_a": ("j_values",),
}


def parse_lines(lines, source="<config>"):
    """Parse ``key = value`` lines. ``#`` starts a comment."""
    out = {}
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{num}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{num}: empty key")
        out[key] = value
    return out


def parse_overrides(items):
    pairs = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        pairs[k.strip()] = v.strip()
    return pairs


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    values: dict

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def ic_radians(self):
        return tuple(math.radians(x) for x in self.values["ic"])

    def canonical(self):
        """Stable text form used for hashing and echoing into outputs."""
        items = [("experiment", self.experiment)]
        items += sorted((k, _fmt(v)) for k, v in self.values.items() if v is not None)
        return "\n".join(f"{k}={v}" for k, v in items)

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def spins_for(self, l):
        """``(s, l)`` for a scan entry, with ``s = s_ratio * l``."""
        s = self.values["s_ratio"] * Fraction(l)
        if (2 * s).denominator != 1 or s <= 0:
            raise ConfigError(f"s = {self.values['s_ratio']} * {l} is not a (half-)integer")
        return s, Fraction(l)


def _fmt(v):
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def build_config(experiment, raw):
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    raw = dict(raw)
    raw.pop("experiment", None)
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    values = {}
    for key, (parser, default) in SCHEMA.items():
        if key in raw:
            try:
                values[key] = parser(raw[key])
            except (ValueError, ZeroDivisionError, TypeError) as exc:
                raise ConfigError(f"bad value for {key}: {raw[key]!r} ({exc})") from None
        else:
            values[key] = default
    missing = [k for k in REQUIRED[experiment] if values.get(k) is None]
    if missing:
        raise ConfigError(f"{experiment} requires: {', '.join(missing)}")
    cfg = ExperimentConfig(experiment, values)
    _validate(cfg)
    return cfg


def _validate(cfg):
    v = cfg.values
    if v["ic"] is not None and len(v["ic"]) != 4:
        raise ConfigError("ic needs four angles (theta_s, phi_s, theta_l, phi_l) in degrees")
    if v["ic"] is not None:
        if not (0 <= v["ic"][0] <= 180 and 0 <= v["ic"][2] <= 180):
            raise ConfigError("polar angles must lie in [0, 180] degrees")
    for key in ("n_kicks", "n_traj", "chunk_size", "samples_per_cell", "n_steps"):
        if v[key] is not None and v[key] < (0 if key == "n_kicks" else 1):
            raise ConfigError(f"{key} must be positive")
    if cfg.experiment == "regime_map" and v["samples_per_cell"] < 50:
        raise ConfigError("samples_per_cell must be at least 50")
    if cfg.experiment == "regime_map" and any(r < 1 for r in v["r_values"]):
        raise ConfigError("r values must be >= 1")
    if v["window"] is not None:
        if len(v["window"]) != 2 or not 0 <= v["window"][0] <= v["window"][1]:
            raise ConfigError("window must be 'first,last' with 0 <= first <= last")
    if v["f"] is not None and not 0 <= v["f"] <= 1:
        raise ConfigError("f must lie in [0, 1]")
    if v["p"] is not None and v["p"] < 0:
        raise ConfigError("p must be non-negative")
    if v["snapshots"] is not None and v["n_kicks"] is not None:
        if any(k < 0 or k > v["n_kicks"] for k in v["snapshots"]):
            raise ConfigError("snapshot kicks must lie in [0, n_kicks]")
    if cfg.experiment in ("breaktime_scan", "scaling_scan", "ehrenfest_scan"):
        for l in v["l_values"]:
            cfg.spins_for(l)


def check_capacity(*spins):
    for j in spins:
        if j > MAX_QUANTUM_SPIN:
            raise CapacityError(
                f"quantum runs are limited to spins <= {MAX_QUANTUM_SPIN}, got {j}")


def load_config(experiment, path=None, overrides=()):
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = parse_lines(fh, source=str(path))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    raw.update(parse_overrides(overrides))
    if "experiment" in raw and raw["experiment"] != experiment:
        raise ConfigError(
            f"config file is for {raw['experiment']!r}, command asked for {experiment!r}")
    return build_config(experiment, raw)

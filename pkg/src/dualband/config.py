"""Flat ``key = value`` run configuration.

One assignment per line, ``#`` starts a comment, lists use ``[a, b, c]``,
strings may be quoted or bare words, ``inf`` is accepted for SNR values.
Delays are in nanoseconds, frequencies in Hz.
"""

from __future__ import annotations

import ast
import math
from dataclasses import asdict, dataclass, field, fields, replace

from .freqgrid import ConfigurationError, DualBandConfig, FrequencyGrid, dual_band


class ConfigParseError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


def _default_snr_list():
    return [float(s) for s in range(-10, 40, 5)]


@dataclass
class RunConfig:
    # grid
    K: int = 1024
    delta_f_hz: float = 312.5e3
    f_carrier_hz: float = 5.2e9
    # bands
    N_sub: int = 128
    gap_subcarriers: int | None = None
    gap_hz: float | None = None
    start_index: int = 0
    # scenario
    targets_ns: list = field(default_factory=lambda: [66.0, 100.0, 133.0])
    gain_model: str = "rayleigh"
    fixed_gains: list | None = None
    delay_jitter_ns: float = 0.0
    snr_db: float = math.inf
    snr_list_db: list = field(default_factory=_default_snr_list)
    seed: int = 0
    # estimator
    method: str = "relax"
    methods: list = field(default_factory=lambda: ["relax"])
    L_max: int | None = None
    epsilon: float = 0.0
    osf: int = 16
    max_refinement_cycles: int = 20
    cycle_tolerance: float = 1e-8
    # sweep
    sweep: str = "snr"
    trials: int = 1000
    gap_list: list = field(default_factory=lambda: [128, 256, 384, 512, 640, 768, 896])
    snr_gaps: list | None = None
    # output
    out: str | None = None
    format: str = "csv"

    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.K, self.delta_f_hz, self.f_carrier_hz)

    def band(self, gap: int | None = None) -> DualBandConfig:
        g = self.gap_subcarriers if gap is None else gap
        if g is None:
            raise ConfigurationError("a gap (gap_subcarriers or gap_hz) is required for dual-band commands")
        return DualBandConfig(self.grid(), self.N_sub, g, self.start_index)

    def selection(self, gap: int | None = None):
        return dual_band(self.band(gap))

    def gains(self) -> list[complex] | None:
        if self.fixed_gains is None:
            return None
        return [complex(str(g).replace(" ", "")) for g in self.fixed_gains]


_TYPES = {
    "K": int, "delta_f_hz": float, "f_carrier_hz": float,
    "N_sub": int, "gap_subcarriers": int, "gap_hz": float, "start_index": int,
    "targets_ns": [float], "gain_model": str, "fixed_gains": [str],
    "delay_jitter_ns": float, "snr_db": float, "snr_list_db": [float], "seed": int,
    "method": str, "methods": [str], "L_max": int, "epsilon": float, "osf": int,
    "max_refinement_cycles": int, "cycle_tolerance": float,
    "sweep": str, "trials": int, "gap_list": [int], "snr_gaps": [int],
    "out": str, "format": str,
}
_CHOICES = {
    "gain_model": ("rayleigh", "fixed"),
    "method": ("relax", "omp", "mle"),
    "sweep": ("snr", "gap"),
    "format": ("csv",),
}


def _literal(text: str):
    text = text.strip()
    if text.lower() in ("inf", "+inf"):
        return math.inf
    if text.lower() == "-inf":
        return -math.inf
    if text.lower() in ("none", "null"):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        pass
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [_literal(t) for t in inner.split(",")] if inner else []
    if text and all(c.isalnum() or c in "_-.+" for c in text):
        return text
    raise ValueError(f"cannot parse value {text!r}")


def _coerce(key: str, value, line=None):
    kind = _TYPES[key]
    if value is None:
        return None
    if isinstance(kind, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigParseError(f"expected a list, got {value!r}", key, line)
        return [_coerce_scalar(key, kind[0], v, line) for v in value]
    return _coerce_scalar(key, kind, value, line)


def _coerce_scalar(key, kind, v, line):
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v != int(v):
            raise ConfigParseError(f"expected an integer, got {v!r}", key, line)
        return int(v)
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigParseError(f"expected a number, got {v!r}", key, line)
        return float(v)
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+}j"
    if not isinstance(v, str):
        if key == "fixed_gains" and isinstance(v, (int, float)):
            return str(v)
        raise ConfigParseError(f"expected a string, got {v!r}", key, line)
    return v


def validate(cfg: RunConfig, lines: dict | None = None) -> RunConfig:
    """Cross-field checks; resolves gap_hz into gap_subcarriers."""
    lines = lines or {}

    def fail(msg, key):
        raise ConfigParseError(msg, key, lines.get(key))

    for key, choices in _CHOICES.items():
        if getattr(cfg, key) not in choices:
            fail(f"must be one of {choices}, got {getattr(cfg, key)!r}", key)
    for m in cfg.methods:
        if m not in _CHOICES["method"]:
            fail(f"unknown method {m!r}", "methods")
    try:
        grid = cfg.grid()
    except ConfigurationError as e:
        fail(str(e), "K" if "K" in str(e) else "delta_f_hz")
    if cfg.gap_hz is not None:
        ratio = cfg.gap_hz / cfg.delta_f_hz
        g = round(ratio)
        if abs(ratio - g) > 1e-9 * max(1.0, abs(ratio)):
            fail(f"gap_hz={cfg.gap_hz:g} is not a multiple of delta_f_hz={cfg.delta_f_hz:g}", "gap_hz")
        if cfg.gap_subcarriers is not None and cfg.gap_subcarriers != g:
            fail(f"gap_hz implies {g} subcarriers but gap_subcarriers={cfg.gap_subcarriers}", "gap_hz")
        cfg = replace(cfg, gap_subcarriers=int(g), gap_hz=None)
    if cfg.gap_subcarriers is not None:
        try:
            cfg.band()
        except ConfigurationError as e:
            fail(str(e), "gap_subcarriers")
    for key in ("gap_list", "snr_gaps"):
        for g in getattr(cfg, key) or ():
            try:
                cfg.band(g)
            except ConfigurationError as e:
                fail(str(e), key)
    limit_ns = grid.max_delay * 1e9
    for t in cfg.targets_ns:
        if not (0 <= t and (t + cfg.delay_jitter_ns) < limit_ns):
            fail(f"delay {t} ns outside unambiguous range [0, {limit_ns:g}) ns", "targets_ns")
    if cfg.delay_jitter_ns < 0:
        fail("must be >= 0", "delay_jitter_ns")
    if cfg.gain_model == "fixed" and cfg.fixed_gains is not None:
        try:
            gains = cfg.gains()
        except ValueError as e:
            fail(str(e), "fixed_gains")
        if len(gains) != len(cfg.targets_ns):
            fail(f"{len(gains)} gains for {len(cfg.targets_ns)} targets", "fixed_gains")
    if math.isnan(cfg.snr_db) or cfg.snr_db == -math.inf:
        fail("must be finite or inf", "snr_db")
    if cfg.trials < 1:
        fail("must be >= 1", "trials")
    if cfg.osf < 1:
        fail("must be >= 1", "osf")
    if cfg.L_max is not None and cfg.L_max < 1:
        fail("must be >= 1", "L_max")
    if cfg.max_refinement_cycles < 1:
        fail("must be >= 1", "max_refinement_cycles")
    if cfg.epsilon < 0 or cfg.cycle_tolerance < 0:
        fail("must be >= 0", "epsilon" if cfg.epsilon < 0 else "cycle_tolerance")
    if not 0 <= cfg.seed < 2**64:
        fail("must be an unsigned 64-bit integer", "seed")
    return cfg


def parse_assignments(text: str, base: RunConfig | None = None) -> tuple[RunConfig, dict]:
    """Apply ``key = value`` lines on top of ``base`` without cross-field checks."""
    values = {}
    lines = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {raw.strip()!r}", line=n)
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _TYPES:
            raise ConfigParseError("unknown key", key, n)
        if key in values:
            raise ConfigParseError("duplicate key", key, n)
        try:
            parsed = _literal(value)
        except ValueError as e:
            raise ConfigParseError(str(e), key, n) from None
        values[key] = _coerce(key, parsed, n)
        lines[key] = n
    return replace(base or RunConfig(), **values), lines


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse and validate a configuration; omitted keys keep the 802.11-style defaults."""
    cfg, lines = parse_assignments(text, base)
    return validate(cfg, lines)


def _dump_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, float):
        return "inf" if v == math.inf else repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_dump_value(x) for x in v) + "]"
    return repr(v)


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_dump_value(getattr(cfg, f.name))}\n" for f in fields(cfg))


def as_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)


PRESETS = {
    "fig4": """
        targets_ns = [100]
        gain_model = fixed
        delay_jitter_ns = 3.125
        methods = [mle]
        method = mle
        osf = 64
        sweep = snr
        snr_gaps = [128, 384, 896]
        gap_subcarriers = 128
        trials = 1000
    """,
    "fig5": """
        gap_subcarriers = 896
        method = relax
        snr_db = 20
    """,
    "fig6": """
        gap_subcarriers = 896
        methods = [relax, omp]
        sweep = snr
        trials = 1000
    """,
    "fig7": """
        sweep = gap
        methods = [relax]
        snr_list_db = [5, 15]
        gap_subcarriers = 896
        trials = 1000
    """,
}


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigParseError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return parse_config(PRESETS[name])

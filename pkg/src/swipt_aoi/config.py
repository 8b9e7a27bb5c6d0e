"""Scenario parameters and the flat ``key = value`` config file format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Mapping

from .channel import LinkGeometry, path_loss_alpha, unit_gain_distance
from .fbl import LinkCode


class ConfigError(ValueError):
    """Invalid scenario parameter; ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class SystemConfig:
    """Every parameter of one scenario, in SI base units.

    Defaults reproduce the reference setup: 1 W sources 30 m from the relay at
    900 MHz, n = 200 and k = 32 on all links, 20 us symbols, -100 dBm noise,
    E_max = 1 mJ, P_min = 0.1 uW, rho = 0.5, eta = 0.9, equal weights.
    """

    p_a: float = 1.0
    p_b: float = 1.0
    d_ar: float = 30.0
    d_br: float = 30.0
    carrier_hz: float = 900e6
    t_s: float = 20e-6
    n_ar: int = 200
    n_br: int = 200
    n_ra: int = 200
    n_rb: int = 200
    k_ar: int = 32
    k_br: int = 32
    k_ra: int = 32
    k_rb: int = 32
    noise_r: float = 1e-13
    noise_a: float = 1e-13
    noise_b: float = 1e-13
    rho: float = 0.5
    eta: float = 0.9
    e_max: float = 1e-3
    p_min: float = 1e-7
    w_a: float = 0.5
    w_b: float = 0.5
    gcq_v: int = 100
    gcq_m: int = 100

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or math.isnan(v):
                raise ConfigError(f.name, f"expected a number, got {v!r}")
            if f.type == "int" and int(v) != v:
                raise ConfigError(f.name, f"expected an integer, got {v!r}")
        for key in ("p_a", "p_b", "p_min", "w_a", "w_b"):
            if getattr(self, key) < 0:
                raise ConfigError(key, "must be nonnegative")
        for key in ("d_ar", "d_br", "carrier_hz", "t_s", "noise_r", "noise_a", "noise_b", "e_max"):
            v = getattr(self, key)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(key, "must be positive and finite")
        for key in ("n_ar", "n_br", "n_ra", "n_rb", "k_ar", "k_br", "k_ra", "k_rb", "gcq_v", "gcq_m"):
            if getattr(self, key) < 1:
                raise ConfigError(key, "must be a positive integer")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError("rho", f"must lie in [0, 1], got {self.rho}")
        if not 0.0 < self.eta <= 1.0:
            raise ConfigError("eta", f"must lie in (0, 1], got {self.eta}")
        d0 = unit_gain_distance(self.carrier_hz)
        for key in ("d_ar", "d_br"):
            if getattr(self, key) < d0:
                raise ConfigError(key, f"below the unit-gain distance {d0:.4g} m (path gain > 1)")
        if not self.e_min < self.e_max:
            raise ConfigError("p_min", f"E_min = p_min * t2 = {self.e_min:.4g} J must be below e_max")

    # derived quantities

    @property
    def t1(self) -> float:
        # both sources transmit at once on orthogonal channels
        return max(self.n_ar, self.n_br) * self.t_s

    @property
    def t2(self) -> float:
        return (self.n_ra + self.n_rb) * self.t_s

    @property
    def cycle(self) -> float:
        return self.t1 + self.t2

    @property
    def e_min(self) -> float:
        return self.p_min * self.t2

    @property
    def alpha_ar(self) -> float:
        return path_loss_alpha(LinkGeometry(self.d_ar, self.carrier_hz))

    @property
    def alpha_br(self) -> float:
        return path_loss_alpha(LinkGeometry(self.d_br, self.carrier_hz))

    # the downlink reuses the uplink geometry
    alpha_ra = alpha_ar
    alpha_rb = alpha_br

    def power(self, source: str) -> float:
        return {"a": self.p_a, "b": self.p_b}[source]

    def uplink_alpha(self, source: str) -> float:
        return {"a": self.alpha_ar, "b": self.alpha_br}[source]

    def downlink_alpha(self, dest: str) -> float:
        return {"a": self.alpha_ra, "b": self.alpha_rb}[dest]

    def dest_noise(self, dest: str) -> float:
        return {"a": self.noise_a, "b": self.noise_b}[dest]

    def uplink_code(self, source: str) -> LinkCode:
        if source == "a":
            return LinkCode(self.n_ar, self.k_ar)
        return LinkCode(self.n_br, self.k_br)

    def downlink_code(self, dest: str) -> LinkCode:
        if dest == "a":
            return LinkCode(self.n_ra, self.k_ra)
        return LinkCode(self.n_rb, self.k_rb)

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


FIELD_TYPES = {f.name: (int if f.type == "int" else float) for f in fields(SystemConfig)}


def other(source: str) -> str:
    return "b" if source == "a" else "a"


def _parse_value(key: str, text: str):
    if key not in FIELD_TYPES:
        raise ConfigError(key, "unknown key")
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(key, f"non-numeric value {text!r}") from None
    if FIELD_TYPES[key] is int:
        if not value.is_integer():
            raise ConfigError(key, f"expected an integer, got {text!r}")
        return int(value)
    return value


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = _parse_value(key, value)
    return values


def load_config(path: str | Path | None = None, overrides: Mapping[str, object] | None = None) -> SystemConfig:
    """Build a config from defaults, then the file at ``path``, then ``overrides``.

    Override values may be numbers or strings; ``None`` entries are ignored
    so that unset command-line flags fall through to the file.
    """
    values = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    for key, v in (overrides or {}).items():
        if v is None:
            continue
        values[key] = _parse_value(key, str(v)) if isinstance(v, str) else _coerce(key, v)
    return SystemConfig(**values)


def _coerce(key: str, v):
    if key not in FIELD_TYPES:
        raise ConfigError(key, "unknown key")
    if FIELD_TYPES[key] is int:
        if float(v) != int(v):
            raise ConfigError(key, f"expected an integer, got {v!r}")
        return int(v)
    return float(v)


def format_config(cfg: SystemConfig, prefix: str = "") -> str:
    lines = [f"{prefix}{f.name} = {getattr(cfg, f.name)!r}" for f in fields(cfg)]
    return "\n".join(lines) + "\n"


def write_config(cfg: SystemConfig, path: str | Path) -> None:
    Path(path).write_text(format_config(cfg))


def config_keys() -> Iterable[str]:
    return FIELD_TYPES.keys()

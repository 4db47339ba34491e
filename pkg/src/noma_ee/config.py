"""System configuration.

Default values follow the usual simulation setup for this kind of
RSU-assisted NOMA downlink study: 10 MHz band, -114 dBm noise, 40 dBm
total BS power, 15-30 dBm RSU transmit power range, 30 dBm circuit
power, 1.5 bps/Hz per-vehicle rate floor, 500 m / 30 m cell radii,
60 km/h traffic and 8 dB log-normal shadowing.

A config can be loaded from a flat ``key = value`` text file (one key
per line, ``#`` comments) and dumped back in the same format.
"""

from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path


class PathlossModel(str, Enum):
    """``table1``: 128.1 + 37.6 log10(d_km) dB; ``generic_exponent``: d_m^-beta."""

    TABLE1 = "table1"
    GENERIC_EXPONENT = "generic_exponent"


@dataclass
class ScenarioConfig:
    bandwidth_hz: float = 10e6
    noise_power_dbm: float = -114.0
    bs_tx_power_dbm: float = 40.0          # total across B-VUs
    num_bvus: int = 4
    rsu_power_low_dbm: float = 15.0
    rsu_power_high_dbm: float = 30.0
    circuit_power_dbm: float = 30.0
    r_min_bps_per_hz: float = 1.5
    num_rsus: int = 1
    vehicles_per_rsu: int = 3
    sigma2_rsu: float = 0.01
    sigma2_bs: float = 0.1
    p_out: float = 0.05
    bs_radius_m: float = 500.0
    rsu_radius_m: float = 30.0
    min_bs_vehicle_dist_m: float = 250.0
    vehicle_speed_kmh: float = 60.0
    shadowing_std_db: float = 8.0
    pathloss_exponent: float = 3.76
    pathloss_model: PathlossModel = PathlossModel.TABLE1
    rng_seed: int = 0

    def __post_init__(self):
        if isinstance(self.pathloss_model, str):
            self.pathloss_model = PathlossModel(self.pathloss_model)
        self.validate()

    def validate(self) -> None:
        import math

        if not 0.0 < self.p_out < 1.0:
            raise ValueError(f"p_out must be in (0, 1), got {self.p_out}")
        for name in ("sigma2_rsu", "sigma2_bs"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {v}")
        if not self.rsu_power_low_dbm < self.rsu_power_high_dbm:
            raise ValueError("rsu_power_low_dbm must be below rsu_power_high_dbm")
        if self.vehicles_per_rsu < 1:
            raise ValueError("vehicles_per_rsu must be at least 1")
        if self.num_rsus < 1:
            raise ValueError("num_rsus must be at least 1")
        if self.num_bvus < 1:
            raise ValueError("num_bvus must be at least 1")
        for name in ("bandwidth_hz", "bs_radius_m", "rsu_radius_m",
                     "vehicle_speed_kmh", "shadowing_std_db"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.r_min_bps_per_hz < 0:
            raise ValueError("r_min_bps_per_hz must be non-negative")
        if not 0 < self.min_bs_vehicle_dist_m < self.bs_radius_m:
            raise ValueError("min_bs_vehicle_dist_m must lie in (0, bs_radius_m)")
        if self.pathloss_exponent <= 0:
            raise ValueError("pathloss_exponent must be positive")
        for name in ("noise_power_dbm", "bs_tx_power_dbm", "rsu_power_low_dbm",
                     "rsu_power_high_dbm", "circuit_power_dbm"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


def _coerce(field_type, raw: str, key: str):
    raw = raw.strip()
    if field_type is int:
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"field '{key}' expects an integer, got '{raw}'") from None
    if field_type is float:
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f"field '{key}' expects a number, got '{raw}'") from None
    if field_type is PathlossModel:
        try:
            return PathlossModel(raw)
        except ValueError:
            allowed = ", ".join(m.value for m in PathlossModel)
            raise ValueError(f"field '{key}' expects one of: {allowed}; got '{raw}'") from None
    return raw


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}
_TYPE_MAP = {"float": float, "int": int, "PathlossModel": PathlossModel}


def field_type(key: str):
    if key not in _FIELD_TYPES:
        raise KeyError(f"unknown config key '{key}'")
    t = _FIELD_TYPES[key]
    return _TYPE_MAP.get(t, t) if isinstance(t, str) else t


def parse_config_text(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse flat ``key = value`` lines into a config; unknown keys are errors."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got '{line.strip()}'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ValueError(f"line {lineno}: unknown config key '{key}'")
        try:
            values[key] = _coerce(field_type(key), raw, key)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    cfg = base if base is not None else ScenarioConfig()
    return cfg.with_overrides(**values)


def load_config(path: str | Path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    return parse_config_text(Path(path).read_text(), base=base)


def apply_override(cfg: ScenarioConfig, assignment: str) -> ScenarioConfig:
    """Apply a single ``key=value`` override (the CLI ``--set`` form)."""
    if "=" not in assignment:
        raise ValueError(f"override must look like key=value, got '{assignment}'")
    key, raw = (part.strip() for part in assignment.split("=", 1))
    if key not in _FIELD_TYPES:
        raise ValueError(f"unknown config key '{key}'")
    return cfg.with_overrides(**{key: _coerce(field_type(key), raw, key)})


def dump_config(cfg: ScenarioConfig) -> str:
    lines = []
    for f in fields(ScenarioConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, PathlossModel):
            value = value.value
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"

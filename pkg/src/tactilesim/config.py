"""Device configuration: JSON schema, defaults, and validation.

A device config is a JSON object (camelCase keys on disk, snake_case in
Python). Only ``deviceId``, ``rows`` and ``cols`` are required; everything
else takes the documented default. ``parse_config`` accepts a single
object, a JSON array of objects, or a ``{"devices": [...]}`` wrapper.

The gain potentiometer is a 128-step 50 kOhm part, so ``rPot`` must sit on
the 390.625 Ohm grid; off-grid values are rejected rather than silently
rounded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any

from .errors import ConfigError

POT_STEP_OHMS = 390.625  # 50 kOhm / 128 steps, exactly representable in binary
POT_MAX_OHMS = 50000.0
POT_STEPS = 128
UNITY_GAIN_OHMS = 3125.0  # fixed input resistance of the adaptive stage

PROTOCOLS = ("wifi", "ble", "espnow")

MAX_ROWS = 32
MAX_COLS = 32
MAX_NODES = 1024

Coord = tuple[int, int]


@dataclass(frozen=True)
class CalibrationSettings:
    duration_ms: int = 5000
    min_percentile: float = 1.0  # q: lowest q% of output voltages define vMin


@dataclass(frozen=True)
class DeviceConfig:
    device_id: int
    rows: int
    cols: int
    adc_bits: int = 12
    v_ref: float = 0.9
    v_supply: float = 3.3
    protocol: str = "wifi"
    p: int = 1
    d: int = 0
    intermittent: bool = False
    scan_delay_us: int = 0
    read_area: tuple[Coord, Coord] | None = None  # None = full matrix
    calibration: CalibrationSettings = field(default_factory=CalibrationSettings)
    r_pot: float = UNITY_GAIN_OHMS

    @property
    def full_scale(self) -> int:
        return (1 << self.adc_bits) - 1

    def area(self) -> tuple[int, int, int, int]:
        """Normalized scan rectangle (rowLo, colLo, rowHi, colHi), inclusive."""
        if self.read_area is None:
            return 0, 0, self.rows - 1, self.cols - 1
        (r0, c0), (r1, c1) = self.read_area
        return min(r0, r1), min(c0, c1), max(r0, r1), max(c0, c1)

    def area_shape(self) -> tuple[int, int]:
        r0, c0, r1, c1 = self.area()
        return r1 - r0 + 1, c1 - c0 + 1

    def with_r_pot(self, r_pot: float) -> "DeviceConfig":
        return replace(self, r_pot=r_pot)

    def to_json_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "deviceId": self.device_id,
            "rows": self.rows,
            "cols": self.cols,
            "adcBits": self.adc_bits,
            "vRef": self.v_ref,
            "vSupply": self.v_supply,
            "protocol": self.protocol,
            "p": self.p,
            "d": self.d,
            "intermittent": self.intermittent,
            "scanDelayUs": self.scan_delay_us,
            "calibration": {
                "durationMs": self.calibration.duration_ms,
                "minPercentile": self.calibration.min_percentile,
            },
            "rPot": self.r_pot,
        }
        if self.read_area is not None:
            out["readArea"] = [list(self.read_area[0]), list(self.read_area[1])]
        return out


def pot_step_for(r_pot: float) -> int:
    """Wiper step (1..128) for an on-grid resistance; raises if off-grid."""
    ratio = r_pot / POT_STEP_OHMS
    step = round(ratio)
    if abs(ratio - step) > 1e-9 or not 1 <= step <= POT_STEPS:
        raise ConfigError(
            f"rPot {r_pot} is not a multiple of {POT_STEP_OHMS} in "
            f"[{POT_STEP_OHMS}, {POT_MAX_OHMS}]"
        )
    return step


def _require_int(obj: dict, key: str, default=None):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{key} is required")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return value


def _check_coord(value, key: str, rows: int, cols: int) -> Coord:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise ConfigError(f"{key} must be a [readWire, groundWire] integer pair")
    r, c = value
    if not (0 <= r < rows and 0 <= c < cols):
        raise ConfigError(f"{key} coordinate {value} outside the {rows}x{cols} matrix")
    return int(r), int(c)


def device_config_from_dict(obj: dict[str, Any]) -> DeviceConfig:
    if not isinstance(obj, dict):
        raise ConfigError(f"device config must be an object, got {type(obj).__name__}")
    known = {
        "deviceId", "rows", "cols", "adcBits", "vRef", "vSupply", "protocol",
        "p", "d", "intermittent", "scanDelayUs", "readArea", "calibration",
        "rPot", "layout", "name",
    }
    for key in obj:
        if key not in known:
            raise ConfigError(f"unknown config field {key!r}")

    device_id = _require_int(obj, "deviceId")
    if not 0 <= device_id <= 255:
        raise ConfigError("deviceId must be in [0, 255]")

    rows = _require_int(obj, "rows")
    cols = _require_int(obj, "cols")
    for name, value, limit in (("rows", rows, MAX_ROWS), ("cols", cols, MAX_COLS)):
        if value < 1:
            raise ConfigError(f"{name} must be >= 1")
        if value > limit:
            raise ConfigError(f"{name} exceeds {limit}")
    if rows * cols > MAX_NODES:
        raise ConfigError(f"rows*cols exceeds {MAX_NODES}")

    adc_bits = _require_int(obj, "adcBits", 12)
    if not 1 <= adc_bits <= 16:
        raise ConfigError("adcBits must be in [1, 16]")

    v_ref = float(obj.get("vRef", 0.9))
    v_supply = float(obj.get("vSupply", 3.3))
    if not 0 < v_ref < v_supply:
        raise ConfigError("vRef must satisfy 0 < vRef < vSupply")

    protocol = obj.get("protocol", "wifi")
    if protocol not in PROTOCOLS:
        raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {protocol!r}")

    p = _require_int(obj, "p", 1)
    if p < 1:
        raise ConfigError("p must be >= 1")
    d = _require_int(obj, "d", 0)
    if d < 0:
        raise ConfigError("d must be >= 0")

    intermittent = obj.get("intermittent", False)
    if not isinstance(intermittent, bool):
        raise ConfigError("intermittent must be a boolean")

    scan_delay_us = _require_int(obj, "scanDelayUs", 0)
    if scan_delay_us < 0:
        raise ConfigError("scanDelayUs must be >= 0")

    read_area = None
    if "readArea" in obj and obj["readArea"] is not None:
        ra = obj["readArea"]
        if not isinstance(ra, (list, tuple)) or len(ra) != 2:
            raise ConfigError("readArea must be a pair of coordinates")
        read_area = (
            _check_coord(ra[0], "readArea", rows, cols),
            _check_coord(ra[1], "readArea", rows, cols),
        )

    calib = obj.get("calibration", {})
    if not isinstance(calib, dict):
        raise ConfigError("calibration must be an object")
    duration_ms = _require_int(calib, "durationMs", CalibrationSettings.duration_ms)
    if duration_ms <= 0:
        raise ConfigError("calibration.durationMs must be > 0")
    q = float(calib.get("minPercentile", CalibrationSettings.min_percentile))
    if not 0 < q <= 100:
        raise ConfigError("calibration.minPercentile must be in (0, 100]")

    r_pot = float(obj.get("rPot", UNITY_GAIN_OHMS))
    pot_step_for(r_pot)  # validates grid and range

    return DeviceConfig(
        device_id=device_id,
        rows=rows,
        cols=cols,
        adc_bits=adc_bits,
        v_ref=v_ref,
        v_supply=v_supply,
        protocol=protocol,
        p=p,
        d=d,
        intermittent=intermittent,
        scan_delay_us=scan_delay_us,
        read_area=read_area,
        calibration=CalibrationSettings(duration_ms=duration_ms, min_percentile=q),
        r_pot=r_pot,
    )


def parse_config(text: str) -> DeviceConfig | list[DeviceConfig]:
    """Parse JSON config text: one device object, an array, or a wrapper.

    Malformed JSON reports the line/column; invariant violations name the
    offending field.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if isinstance(data, dict) and "devices" in data:
        data = data["devices"]
    if isinstance(data, list):
        return [device_config_from_dict(item) for item in data]
    return device_config_from_dict(data)


def parse_devices(text: str) -> list[DeviceConfig]:
    """Like parse_config but always returns a list."""
    parsed = parse_config(text)
    return parsed if isinstance(parsed, list) else [parsed]


def serialize_config(config: DeviceConfig | list[DeviceConfig]) -> str:
    if isinstance(config, list):
        return json.dumps([c.to_json_dict() for c in config], indent=2)
    return json.dumps(config.to_json_dict(), indent=2)

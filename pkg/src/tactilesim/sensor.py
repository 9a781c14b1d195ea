"""Physical model of a resistive sensing matrix and its adaptive readout.

The chain per node is: applied force -> node resistance -> raw electrode
voltage in [vRef, vSupply] -> inverting variable-gain stage -> output
voltage in [0, vRef] -> ADC counts. Zero force reads full scale; pressing
harder drives the output toward zero, so counts are inversely correlated
with force.

Force model: node conductance grows linearly with force, with a steeper
slope below ``break_force_n`` than above it (resolution degrades in the
second regime). Raw voltage is vRef + (vSupply - vRef) * (1 - r(F)/r0).

Stimulus scripts describe force events over time; the renderer turns a
script into per-node raw-voltage fields. Rendering is a pure function of
(script, time, seed): the per-call noise stream is derived from both the
seed and the timestamp, so fields can be rendered in any order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .config import POT_MAX_OHMS, POT_STEP_OHMS, UNITY_GAIN_OHMS, pot_step_for
from .errors import ConfigError, GeometryError

PROFILES = ("step", "ramp", "sine")


@dataclass(frozen=True)
class MatrixModel:
    """Two-regime conductance model of one sensing node."""

    r0: float = 50_000.0  # unloaded node resistance, Ohm
    k_low: float = 2e-6   # conductance slope below the break, S/N
    k_high: float = 2e-7  # conductance slope above the break, S/N
    break_force_n: float = 100.0

    def __post_init__(self) -> None:
        if self.r0 <= 0:
            raise ConfigError("matrix model r0 must be > 0")
        if not self.k_low > self.k_high > 0:
            raise ConfigError("matrix model needs kLow > kHigh > 0")

    def _load(self, force_n):
        """Dimensionless r0 * (g(F) - g(0)); exactly 0 at zero force."""
        force = np.asarray(force_n, dtype=float)
        if np.any(force < 0):
            raise ConfigError("force must be >= 0")
        low = np.minimum(force, self.break_force_n)
        high = np.maximum(force - self.break_force_n, 0.0)
        return self.r0 * (self.k_low * low + self.k_high * high)

    def resistance(self, force_n):
        return self.r0 / (1.0 + self._load(force_n))


DEFAULT_MATRIX_MODEL = MatrixModel()


def node_raw_voltage(force_n, model: MatrixModel, v_ref: float, v_supply: float):
    """Raw electrode voltage for a given normal force; vectorized over force.

    Monotone non-decreasing, exactly vRef at zero force, approaches vSupply
    asymptotically. 1 - r(F)/r0 is evaluated as load/(1 + load) so zero
    force carries no rounding dust.
    """
    load = model._load(force_n)
    return v_ref + (v_supply - v_ref) * (load / (1.0 + load))


@dataclass(frozen=True)
class AdaptiveModule:
    """Inverting variable-gain stage between the readout MUX and the ADC."""

    r_pot: float = UNITY_GAIN_OHMS
    v_ref: float = 0.9
    v_supply: float = 3.3
    r_in: float = UNITY_GAIN_OHMS  # fixed input resistance, 3125 Ohm

    def __post_init__(self) -> None:
        pot_step_for(self.r_pot)
        if not 0 < self.v_ref < self.v_supply:
            raise ConfigError("vRef must satisfy 0 < vRef < vSupply")

    @property
    def gain(self) -> float:
        return self.r_pot / self.r_in


def adaptive_transfer(v_raw, module: AdaptiveModule):
    """Output voltage of the adaptive stage, clamped to [0, vRef].

    vOut = clamp(vRef - (rPot/3125) * (vRaw - vRef), 0, vRef); accepts a
    scalar or an array. Raises outside the valid input range [vRef, vSupply].
    """
    v = np.asarray(v_raw, dtype=float)
    eps = 1e-12
    if np.any(v < module.v_ref - eps) or np.any(v > module.v_supply + eps):
        raise GeometryError(
            f"raw voltage outside [{module.v_ref}, {module.v_supply}]"
        )
    out = np.clip(module.v_ref - module.gain * (v - module.v_ref), 0.0, module.v_ref)
    return float(out) if np.isscalar(v_raw) else out


def adc_quantize(v_out, v_ref: float, adc_bits: int):
    """Round-to-nearest quantization of [0, vRef] onto [0, 2^bits - 1]."""
    full_scale = (1 << adc_bits) - 1
    v = np.asarray(v_out, dtype=float)
    counts = np.floor(v / v_ref * full_scale + 0.5)
    counts = np.clip(counts, 0, full_scale).astype(np.int64)
    return int(counts) if np.isscalar(v_out) else counts


def saturating_r_pot(v_raw: float, module: AdaptiveModule) -> float | None:
    """Smallest on-grid rPot that drives this input to the 0 V clamp.

    Needs gain >= vRef/(vRaw - vRef); the pot tops out at 16x (50 kOhm /
    3125 Ohm), so inputs within vRef/16 of vRef cannot be saturated at all
    and None is returned. The analytic step is verified and bumped if
    rounding left the output a hair above the clamp.
    """
    if v_raw <= module.v_ref:
        return None
    needed = module.r_in * module.v_ref / (v_raw - module.v_ref)
    step = math.ceil(needed / POT_STEP_OHMS - 1e-9)
    max_step = int(POT_MAX_OHMS / POT_STEP_OHMS)
    while step <= max_step:
        candidate = step * POT_STEP_OHMS
        trial = AdaptiveModule(r_pot=candidate, v_ref=module.v_ref, v_supply=module.v_supply)
        if adaptive_transfer(v_raw, trial) == 0.0:
            return candidate
        step += 1
    return None


@dataclass(frozen=True)
class StimulusEvent:
    t_start_us: int
    t_end_us: int
    region: tuple[int, int, int, int]  # rowLo, colLo, rowHi, colHi inclusive
    force_n: float
    profile: str = "step"

    def __post_init__(self) -> None:
        if self.t_start_us >= self.t_end_us:
            raise ConfigError("event tStartUs must be < tEndUs")
        if self.force_n < 0:
            raise ConfigError("event forceN must be >= 0")
        if self.profile not in PROFILES:
            raise ConfigError(f"event profile must be one of {PROFILES}")
        r0, c0, r1, c1 = self.region
        if r0 > r1 or c0 > c1 or min(self.region) < 0:
            raise ConfigError("event region must be [rowLo, colLo, rowHi, colHi]")

    def force_at(self, t_us: int) -> float:
        if not self.t_start_us <= t_us < self.t_end_us:
            return 0.0
        span = self.t_end_us - self.t_start_us
        phase = (t_us - self.t_start_us) / span
        if self.profile == "step":
            return self.force_n
        if self.profile == "ramp":
            return self.force_n * phase
        # sine: one raised-cosine press, zero at both ends, peak mid-event
        return self.force_n * 0.5 * (1.0 - math.cos(2.0 * math.pi * phase))


@dataclass(frozen=True)
class StimulusScript:
    events: tuple[StimulusEvent, ...] = ()
    noise_std_counts: float = 0.0  # Gaussian, expressed in unity-gain ADC counts

    def horizon_us(self) -> int:
        return max((e.t_end_us for e in self.events), default=0)


def stimulus_from_dict(obj: dict[str, Any]) -> StimulusScript:
    events = []
    for i, ev in enumerate(obj.get("events", [])):
        try:
            events.append(
                StimulusEvent(
                    t_start_us=int(ev["tStartUs"]),
                    t_end_us=int(ev["tEndUs"]),
                    region=tuple(int(x) for x in ev["region"]),
                    force_n=float(ev["forceN"]),
                    profile=ev.get("profile", "step"),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"stimulus event {i} is missing {exc.args[0]}") from exc
    return StimulusScript(
        events=tuple(events),
        noise_std_counts=float(obj.get("noiseStdCounts", 0.0)),
    )


def load_stimulus(path: str | Path) -> StimulusScript:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed stimulus JSON: {exc}") from exc
    return stimulus_from_dict(data)


class StimulusRenderer:
    """Turns a stimulus script into raw-voltage fields for one device.

    One renderer per simulated device: it owns that device's noise stream.
    ``seed`` may be an int or a tuple of ints (scenario seed, device id).
    """

    def __init__(
        self,
        script: StimulusScript,
        rows: int,
        cols: int,
        v_ref: float = 0.9,
        v_supply: float = 3.3,
        model: MatrixModel = DEFAULT_MATRIX_MODEL,
        adc_bits: int = 12,
        seed: int | Sequence[int] = 0,
    ):
        self.script = script
        self.rows = rows
        self.cols = cols
        self.v_ref = v_ref
        self.v_supply = v_supply
        self.model = model
        self.seed = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
        # script noise is specified in unity-gain output counts
        self.noise_std_volts = script.noise_std_counts * v_ref / ((1 << adc_bits) - 1)
        for event in script.events:
            r0, c0, r1, c1 = event.region
            if r1 >= rows or c1 >= cols:
                raise GeometryError(
                    f"event region {event.region} outside the {rows}x{cols} matrix"
                )

    def force_field(self, t_us: int) -> np.ndarray:
        field_n = np.zeros((self.rows, self.cols))
        for event in self.script.events:
            force = event.force_at(t_us)
            if force > 0.0:
                r0, c0, r1, c1 = event.region
                field_n[r0 : r1 + 1, c0 : c1 + 1] += force
        return field_n

    def field_at(self, t_us: int) -> np.ndarray:
        """Raw voltage field at time t; pure function of (script, t, seed)."""
        raw = node_raw_voltage(self.force_field(t_us), self.model, self.v_ref, self.v_supply)
        if self.noise_std_volts > 0.0:
            rng = np.random.default_rng(self.seed + (int(t_us),))
            raw = raw + rng.normal(0.0, self.noise_std_volts, size=raw.shape)
        return np.clip(raw, self.v_ref, self.v_supply)

"""Simulated device program: scanning, calibration, and intermittent sending.

The intermittent-send contract is the heart of this module. The device
keeps a *shadow history*: the last two frames exactly as the receiver
knows them, i.e. frames that were actually sent plus, for every skipped
frame, the prediction the receiver will derive on its own. Predictions on
both ends use the same integer forecasting step

    predicted = last + trunc((last - prev) / p)

with division truncated toward zero and the result clamped to the ADC
range. No floating point touches this path, so device and receiver stay
bit-identical. A frame is sent only when the mean absolute error between
the actual scan and the prediction exceeds the threshold d; skipped
frames therefore never leave the receiver more than d counts off on
average. The packet counter advances for skipped frames too, which is how
the receiver detects and reconstructs them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .config import POT_MAX_OHMS, POT_STEP_OHMS, UNITY_GAIN_OHMS, DeviceConfig
from .errors import CalibrationError, GeometryError
from .sensor import AdaptiveModule, adaptive_transfer, adc_quantize
from .wire import Frame, encode_packet


class DeviceMode(enum.Enum):
    CONTINUOUS = "continuous"
    INTERMITTENT = "intermittent"
    CALIBRATING = "calibrating"


def trunc_div(numerator, p: int):
    """Integer division truncated toward zero, elementwise."""
    n = np.asarray(numerator)
    return np.sign(n) * (np.abs(n) // p)


def predict_frame(prev: Frame, last: Frame, p: int, full_scale: int) -> Frame:
    """One forecasting step; identical on device and receiver.

    The result reuses ``last``'s metadata with the packet id advanced and
    is flagged reconstructed.
    """
    if (prev.rows, prev.cols) != (last.rows, last.cols):
        raise GeometryError("prediction history frames disagree on geometry")
    if p < 1:
        raise ValueError("p must be >= 1")
    prev_v = prev.values.astype(np.int64)
    last_v = last.values.astype(np.int64)
    predicted = last_v + trunc_div(last_v - prev_v, p)
    predicted = np.clip(predicted, 0, full_scale).astype(np.uint16)
    return Frame(
        device_id=last.device_id,
        packet_id=(last.packet_id + 1) & 0xFFFFFFFF,
        timestamp_us=last.timestamp_us,
        rows=last.rows,
        cols=last.cols,
        values=predicted,
        reconstructed=True,
    )


def should_send(actual: Frame, predicted: Frame, d: int) -> bool:
    """True iff the mean absolute prediction error exceeds d counts.

    Integer arithmetic: send when sum|actual - predicted| > d * N, so a
    frame off by exactly d on average is still skipped.
    """
    if (actual.rows, actual.cols) != (predicted.rows, predicted.cols):
        raise GeometryError("frames disagree on geometry")
    if d < 0:
        raise ValueError("d must be >= 0")
    diff = actual.values.astype(np.int64) - predicted.values.astype(np.int64)
    n = actual.rows * actual.cols
    return int(np.abs(diff).sum()) > d * n


@dataclass(frozen=True)
class CalibrationResult:
    v_min: float              # mean of the lowest q% unity-gain outputs
    r_pot_solved: float       # exact solution before grid quantization
    r_pot_applied: float      # on the 128-step pot grid
    wiper_step: int


class DeviceState:
    """All mutable state of one simulated device; owned by one task."""

    def __init__(self, config: DeviceConfig, track_history: bool = False):
        self.config = config
        self.module = AdaptiveModule(
            r_pot=config.r_pot, v_ref=config.v_ref, v_supply=config.v_supply
        )
        self.mode = (
            DeviceMode.INTERMITTENT if config.intermittent else DeviceMode.CONTINUOUS
        )
        self.packet_counter = 0
        self.shadow_prev: Frame | None = None
        self.shadow_last: Frame | None = None
        # step-by-step introspection, refreshed by device_step
        self.last_scan: Frame | None = None
        self.last_prediction: Frame | None = None
        self.last_sent = False
        self.frames_sent = 0
        self.track_history = track_history
        self.shadow_log: list[Frame] = []

    def _push_shadow(self, frame: Frame) -> None:
        self.shadow_prev = self.shadow_last
        self.shadow_last = frame
        if self.track_history:
            self.shadow_log.append(frame)


def _area_slice(state: DeviceState):
    r0, c0, r1, c1 = state.config.area()
    if r1 >= state.config.rows or c1 >= state.config.cols:
        raise GeometryError(
            f"read area {state.config.area()} outside the "
            f"{state.config.rows}x{state.config.cols} matrix"
        )
    return r0, c0, r1, c1


def scan_array(state: DeviceState, raw_field: np.ndarray, t_us: int) -> Frame:
    """Scan the configured rectangular area into a frame of ADC counts.

    The frame's geometry is the area size; corner order does not matter.
    """
    if raw_field.shape != (state.config.rows, state.config.cols):
        raise GeometryError(
            f"raw field shape {raw_field.shape} != configured "
            f"{state.config.rows}x{state.config.cols}"
        )
    r0, c0, r1, c1 = _area_slice(state)
    window = raw_field[r0 : r1 + 1, c0 : c1 + 1]
    v_out = adaptive_transfer(window, state.module)
    counts = adc_quantize(v_out, state.config.v_ref, state.config.adc_bits)
    return Frame(
        device_id=state.config.device_id,
        packet_id=state.packet_counter,
        timestamp_us=t_us,
        rows=r1 - r0 + 1,
        cols=c1 - c0 + 1,
        values=counts.astype(np.uint16),
    )


def read_node(state: DeviceState, raw_field: np.ndarray, coord: tuple[int, int]) -> int:
    """Single-node readout at (readWire, groundWire)."""
    r, c = coord
    if not (0 <= r < state.config.rows and 0 <= c < state.config.cols):
        raise GeometryError(f"coordinate {coord} outside the matrix")
    v_out = adaptive_transfer(float(raw_field[r, c]), state.module)
    return adc_quantize(v_out, state.config.v_ref, state.config.adc_bits)


def device_step(state: DeviceState, t_us: int, raw_field: np.ndarray) -> bytes | None:
    """Run one scan/decide/emit cycle; returns the wire packet or None.

    The packet counter advances either way, so skipped frames show up as
    packet-id gaps at the receiver. Details of the step stay readable on
    the state (last_scan, last_prediction, last_sent).
    """
    actual = scan_array(state, raw_field, t_us)
    state.packet_counter += 1
    state.last_scan = actual
    state.last_prediction = None

    if state.mode is DeviceMode.INTERMITTENT and state.shadow_prev is not None:
        predicted = predict_frame(
            state.shadow_prev, state.shadow_last, state.config.p, state.config.full_scale
        )
        state.last_prediction = predicted
        if not should_send(actual, predicted, state.config.d):
            state.last_sent = False
            state._push_shadow(predicted)
            return None

    state.last_sent = True
    state.frames_sent += 1
    state._push_shadow(actual)
    return encode_packet(actual, adc_bits=state.config.adc_bits)


def solve_r_pot(v_ref: float, v_min: float) -> float:
    """Gain resistance that maps the strongest observed press to 0 V output."""
    if v_min >= v_ref:
        raise CalibrationError(
            "no dynamic range observed: minimum output equals vRef"
        )
    return UNITY_GAIN_OHMS * v_ref / (v_ref - v_min)


def quantize_r_pot(r_pot_solved: float) -> tuple[float, int]:
    """Floor onto the pot grid so the applied gain never exceeds the solved
    one, clamped to [1 step, 50 kOhm]. A 1e-9 step slack absorbs float dust
    from the back-solve."""
    step = int(r_pot_solved / POT_STEP_OHMS + 1e-9)
    step = max(1, min(step, int(POT_MAX_OHMS / POT_STEP_OHMS)))
    return step * POT_STEP_OHMS, step


def calibrate(
    state: DeviceState,
    raw_field_stream: Iterable[tuple[int, np.ndarray]],
    duration_ms: int | None = None,
    q: float | None = None,
) -> CalibrationResult:
    """Automatic gain calibration over a stream of (tUs, rawField) samples.

    Scans at unity gain (rPot = 3125 Ohm) for the duration, pools every
    per-node output voltage, averages the lowest q% into vMin, and solves
    rPot = 3125 * vRef / (vRef - vMin), floored onto the pot grid. The
    state's module is updated with the applied value. vMin depends only on
    the multiset of observations, never on their order.
    """
    cfg = state.config
    duration_ms = cfg.calibration.duration_ms if duration_ms is None else duration_ms
    q = cfg.calibration.min_percentile if q is None else q
    if not 0 < q <= 100:
        raise CalibrationError("minPercentile must be in (0, 100]")

    previous_mode = state.mode
    state.mode = DeviceMode.CALIBRATING
    unity = AdaptiveModule(r_pot=UNITY_GAIN_OHMS, v_ref=cfg.v_ref, v_supply=cfg.v_supply)
    r0, c0, r1, c1 = _area_slice(state)

    samples: list[np.ndarray] = []
    t_first: int | None = None
    try:
        for t_us, raw_field in raw_field_stream:
            if t_first is None:
                t_first = t_us
            if t_us - t_first >= duration_ms * 1000:
                break
            window = np.asarray(raw_field)[r0 : r1 + 1, c0 : c1 + 1]
            samples.append(adaptive_transfer(window, unity).reshape(-1))
    finally:
        state.mode = previous_mode

    if not samples:
        raise CalibrationError("calibration window too short: no frames observed")

    pool = np.sort(np.concatenate(samples))
    k = max(1, int(np.ceil(q / 100.0 * pool.size)))
    v_min = float(pool[:k].mean())
    solved = solve_r_pot(cfg.v_ref, v_min)
    applied, wiper = quantize_r_pot(solved)
    state.module = AdaptiveModule(r_pot=applied, v_ref=cfg.v_ref, v_supply=cfg.v_supply)
    state.config = state.config.with_r_pot(applied)
    return CalibrationResult(
        v_min=v_min, r_pot_solved=solved, r_pot_applied=applied, wiper_step=wiper
    )

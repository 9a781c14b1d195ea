"""Multi-sender ingestion: sessions, gap reconstruction, recording, replay.

Each sending device gets one session. Packet ids from a device increase by
one per scan whether or not a packet was sent, so a gap between the
expected and the received id means the device either skipped predictable
frames or the channel lost packets; the receiver cannot tell the two
apart, and does not need to: it fills every gap by iterating the same
forecasting step the device used, flagging those frames as reconstructed.
Late and duplicate packets (id below expected) are dropped and counted.

Reconstructed frames reuse the missing packet id; their timestamps are
interpolated linearly between the surrounding received frames, since no
scan clock is available for them. Reconstruction assumes in-order
delivery: with datagram transports a reordered packet is simply dropped
as late.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .config import DeviceConfig
from .errors import GeometryError
from .firmware import predict_frame
from .recording import RecordingWriter, iter_recording, read_header
from .wire import Frame, decode_packet


@dataclass
class SessionMetrics:
    frames_received: int = 0
    frames_reconstructed: int = 0
    frames_lost: int = 0  # late/duplicate arrivals dropped
    first_arrival_us: int | None = None
    last_arrival_us: int | None = None

    @property
    def throughput_fps(self) -> float:
        if (
            self.first_arrival_us is None
            or self.last_arrival_us is None
            or self.last_arrival_us <= self.first_arrival_us
            or self.frames_received < 2
        ):
            return 0.0
        span_s = (self.last_arrival_us - self.first_arrival_us) / 1e6
        return (self.frames_received - 1) / span_s

    @property
    def loss_pct(self) -> float:
        """Share of packet ids never received (device skips plus channel loss)."""
        total = self.frames_received + self.frames_reconstructed + self.frames_lost
        if total == 0:
            return 0.0
        return 100.0 * (self.frames_reconstructed + self.frames_lost) / total

    def to_json_dict(self) -> dict:
        return {
            "framesReceived": self.frames_received,
            "framesReconstructed": self.frames_reconstructed,
            "framesLost": self.frames_lost,
            "throughputFps": self.throughput_fps,
            "lossPct": self.loss_pct,
        }


class DeviceSession:
    """Receiver-side state for one sending device."""

    def __init__(self, config: DeviceConfig):
        self.config = config
        self.device_id = config.device_id
        self.rows, self.cols = config.area_shape()
        self.expected_packet_id: int | None = None
        self.hist_prev: Frame | None = None
        self.hist_last: Frame | None = None
        self.metrics = SessionMetrics()

    def _advance(self, frame: Frame) -> None:
        self.hist_prev = self.hist_last
        self.hist_last = frame

    def ingest(self, packet: bytes | Frame, t_arrival_us: int) -> list[Frame]:
        """Process one arriving packet; returns the frames it yields in order.

        A gap of g produces g reconstructed frames followed by the received
        one. Late or duplicate packets produce nothing and are counted.
        """
        frame = decode_packet(packet) if isinstance(packet, (bytes, bytearray)) else packet
        if frame.device_id != self.device_id:
            raise GeometryError(
                f"packet from device {frame.device_id} fed to session {self.device_id}"
            )
        if (frame.rows, frame.cols) != (self.rows, self.cols):
            raise GeometryError(
                f"packet geometry {frame.rows}x{frame.cols} != session "
                f"{self.rows}x{self.cols}"
            )

        if self.expected_packet_id is not None and frame.packet_id < self.expected_packet_id:
            self.metrics.frames_lost += 1
            return []

        emitted: list[Frame] = []
        if self.expected_packet_id is not None:
            gap = frame.packet_id - self.expected_packet_id
            if gap > 0 and self.hist_prev is not None:
                t_from = self.hist_last.timestamp_us
                t_span = frame.timestamp_us - t_from
                for i in range(gap):
                    predicted = predict_frame(
                        self.hist_prev, self.hist_last, self.config.p, self.config.full_scale
                    )
                    ts = t_from + (t_span * (i + 1)) // (gap + 1)
                    predicted = Frame(
                        device_id=predicted.device_id,
                        packet_id=self.expected_packet_id + i,
                        timestamp_us=ts,
                        rows=predicted.rows,
                        cols=predicted.cols,
                        values=predicted.values,
                        reconstructed=True,
                    )
                    emitted.append(predicted)
                    self._advance(predicted)
                    self.metrics.frames_reconstructed += 1
            elif gap > 0:
                # no usable history yet: the gap cannot be reconstructed
                self.metrics.frames_lost += gap

        emitted.append(frame)
        self._advance(frame)
        self.expected_packet_id = frame.packet_id + 1
        self.metrics.frames_received += 1
        if self.metrics.first_arrival_us is None:
            self.metrics.first_arrival_us = t_arrival_us
        self.metrics.last_arrival_us = t_arrival_us
        return emitted


class SessionRecorder:
    """Binds sessions to per-device recording files.

    Frames are written in arrival order; the stored timestamp is the
    arrival time at the receiver, and the reconstructed flag is persisted.
    """

    def __init__(self, out_dir: str | Path, configs: Sequence[DeviceConfig]):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.paths: dict[int, Path] = {}
        self._writers: dict[int, RecordingWriter] = {}
        for config in configs:
            rows, cols = config.area_shape()
            path = self.out_dir / f"device_{config.device_id}.wrs"
            self.paths[config.device_id] = path
            self._writers[config.device_id] = RecordingWriter(
                path, config.device_id, rows, cols, config.adc_bits
            )

    def on_frames(self, device_id: int, frames: Iterable[Frame], t_arrival_us: int) -> None:
        writer = self._writers[device_id]
        for frame in frames:
            stamped = Frame(
                device_id=frame.device_id,
                packet_id=frame.packet_id,
                timestamp_us=t_arrival_us,
                rows=frame.rows,
                cols=frame.cols,
                values=frame.values,
                reconstructed=frame.reconstructed,
            )
            writer.append(stamped)

    def close(self) -> None:
        for writer in self._writers.values():
            writer.close()

    def __enter__(self) -> "SessionRecorder":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def replay(
    path: str | Path,
    start_us: int | None = None,
    end_us: int | None = None,
    speed: float = 1.0,
) -> Iterator[Frame]:
    """Yield recorded frames, pacing inter-frame gaps at 1/speed real time.

    The window is half-open [start, end): start == end selects nothing.
    speed = math.inf (or any non-finite value) replays in batch mode with
    no pacing at all.
    """
    if not speed > 0:
        raise ValueError("speed must be > 0")
    read_header(path)  # fail fast on unreadable files
    paced = math.isfinite(speed)
    prev_ts: int | None = None
    for frame in iter_recording(path):
        ts = frame.timestamp_us
        if start_us is not None and ts < start_us:
            continue
        if end_us is not None and ts >= end_us:
            continue
        if paced and prev_ts is not None and ts > prev_ts:
            time.sleep((ts - prev_ts) / 1e6 / speed)
        prev_ts = ts
        yield frame


def nrmse(
    predicted: Sequence[Frame] | np.ndarray,
    truth: Sequence[Frame] | np.ndarray,
    adc_bits: int,
) -> float:
    """Root-mean-square error over all nodes and frames, normalized by the
    ADC full scale; 0 for identical streams, 1 for a full-scale offset."""

    def stack(frames) -> np.ndarray:
        if isinstance(frames, np.ndarray):
            return frames.astype(np.int64)
        return np.stack([f.values.astype(np.int64) for f in frames])

    a = stack(predicted)
    b = stack(truth)
    if a.shape != b.shape:
        raise GeometryError(f"stream shapes differ: {a.shape} vs {b.shape}")
    full_scale = (1 << adc_bits) - 1
    return float(np.sqrt(np.mean((a - b) ** 2.0)) / full_scale)

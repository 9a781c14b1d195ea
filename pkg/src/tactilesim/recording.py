"""Chunked binary recording container ("WRS1").

File layout, little-endian:

    magic    4 bytes  b"WRS1"
    version  u8       1
    deviceId u8
    rows     u8
    cols     u8
    adcBits  u8
    frames   back-to-back wire packets (see wire.py), arrival order

All frames in a file share the header geometry, so every frame occupies
the same number of bytes and the file is seekable by frame index. Frames
keep their CRC, which makes the container bit-exact and self-checking.
CSV and JSON exporters cover interchange with other tools.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CodecError, GeometryError, RecordingError
from .wire import Frame, decode_packet, encode_packet, packet_size

RECORDING_MAGIC = b"WRS1"
RECORDING_VERSION = 1
RECORDING_HEADER_SIZE = len(RECORDING_MAGIC) + 5


@dataclass(frozen=True)
class RecordingHeader:
    device_id: int
    rows: int
    cols: int
    adc_bits: int
    version: int = RECORDING_VERSION

    def to_bytes(self) -> bytes:
        return RECORDING_MAGIC + bytes(
            [self.version, self.device_id, self.rows, self.cols, self.adc_bits]
        )

    @classmethod
    def from_bytes(cls, raw: bytes) -> "RecordingHeader":
        if len(raw) < RECORDING_HEADER_SIZE:
            raise RecordingError("file shorter than the recording header")
        if raw[: len(RECORDING_MAGIC)] != RECORDING_MAGIC:
            raise RecordingError("not a WRS1 recording (bad magic)")
        version, device_id, rows, cols, adc_bits = raw[len(RECORDING_MAGIC) : RECORDING_HEADER_SIZE]
        if version != RECORDING_VERSION:
            raise RecordingError(f"unsupported recording version {version}")
        return cls(device_id=device_id, rows=rows, cols=cols, adc_bits=adc_bits, version=version)


class RecordingWriter:
    """Single-owner streaming writer; one file per device."""

    def __init__(self, path: str | Path, device_id: int, rows: int, cols: int, adc_bits: int):
        self.header = RecordingHeader(device_id=device_id, rows=rows, cols=cols, adc_bits=adc_bits)
        self._f = open(path, "wb")
        self._f.write(self.header.to_bytes())
        self.frames_written = 0

    def append(self, frame: Frame) -> None:
        if (frame.rows, frame.cols) != (self.header.rows, self.header.cols):
            raise GeometryError(
                f"frame is {frame.rows}x{frame.cols}, recording is "
                f"{self.header.rows}x{self.header.cols}"
            )
        if frame.device_id != self.header.device_id:
            raise RecordingError(
                f"frame from device {frame.device_id} in recording for "
                f"device {self.header.device_id}"
            )
        self._f.write(encode_packet(frame, adc_bits=self.header.adc_bits))
        self.frames_written += 1

    def close(self) -> None:
        if self._f is not None:
            self._f.close()
            self._f = None

    def __enter__(self) -> "RecordingWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_recording(
    path: str | Path,
    frames: Iterable[Frame],
    device_id: int | None = None,
    rows: int | None = None,
    cols: int | None = None,
    adc_bits: int = 12,
) -> RecordingHeader:
    """Write frames to a new recording; geometry defaults to the first frame's.

    An empty frame list needs explicit geometry and produces a header-only file.
    """
    frames = list(frames)
    if frames:
        first = frames[0]
        device_id = first.device_id if device_id is None else device_id
        rows = first.rows if rows is None else rows
        cols = first.cols if cols is None else cols
    if device_id is None or rows is None or cols is None:
        raise RecordingError("empty recording needs explicit device_id, rows, cols")
    with RecordingWriter(path, device_id, rows, cols, adc_bits) as writer:
        for frame in frames:
            writer.append(frame)
        return writer.header


def iter_recording(path: str | Path) -> Iterator[Frame]:
    """Stream frames from a recording, validating each packet's CRC."""
    with open(path, "rb") as f:
        header = RecordingHeader.from_bytes(f.read(RECORDING_HEADER_SIZE))
        frame_size = packet_size(header.rows, header.cols)
        index = 0
        while True:
            chunk = f.read(frame_size)
            if not chunk:
                return
            if len(chunk) < frame_size:
                raise RecordingError(f"truncated frame at index {index}")
            try:
                yield decode_packet(chunk)
            except CodecError as exc:
                raise RecordingError(f"bad frame at index {index}: {exc}") from exc
            index += 1


def read_recording(path: str | Path) -> tuple[RecordingHeader, list[Frame]]:
    with open(path, "rb") as f:
        header = RecordingHeader.from_bytes(f.read(RECORDING_HEADER_SIZE))
    return header, list(iter_recording(path))


def read_header(path: str | Path) -> RecordingHeader:
    with open(path, "rb") as f:
        return RecordingHeader.from_bytes(f.read(RECORDING_HEADER_SIZE))


def export_csv(recording_path: str | Path, dest_path: str | Path) -> int:
    """One row per frame: timestampUs, packetId, reconstructed, v0..vN-1."""
    header = read_header(recording_path)
    n = header.rows * header.cols
    count = 0
    with open(dest_path, "w", newline="") as out:
        writer = csv.writer(out)
        writer.writerow(["timestampUs", "packetId", "reconstructed"] + [f"v{i}" for i in range(n)])
        for frame in iter_recording(recording_path):
            writer.writerow(
                [frame.timestamp_us, frame.packet_id, int(frame.reconstructed)]
                + [int(v) for v in frame.values]
            )
            count += 1
    return count


def export_json(recording_path: str | Path, dest_path: str | Path) -> int:
    header = read_header(recording_path)
    frames = [
        {
            "timestampUs": frame.timestamp_us,
            "packetId": frame.packet_id,
            "reconstructed": frame.reconstructed,
            "values": [int(v) for v in frame.values],
        }
        for frame in iter_recording(recording_path)
    ]
    doc = {
        "deviceId": header.device_id,
        "rows": header.rows,
        "cols": header.cols,
        "adcBits": header.adc_bits,
        "frames": frames,
    }
    with open(dest_path, "w") as out:
        json.dump(doc, out, indent=2)
        out.write("\n")
    return len(frames)

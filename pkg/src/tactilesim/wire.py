"""Wire packet codec for tactile frames.

Every packet uses one fixed layout, little-endian throughout:

    offset  size  field
    0       2     magic, 0x5752
    2       1     version, currently 1
    3       1     deviceId
    4       4     packetId
    8       8     timestampUs
    16      1     rows
    17      1     cols
    18      1     flags (bit 0: frame was reconstructed, not measured)
    19      2*N   payload, N = rows*cols unsigned 16-bit counts, row-major
    19+2N   4     CRC-32 (zlib polynomial) over every preceding byte

Total size is 19 + 2*rows*cols + 4 bytes: 2071 bytes for a full 32x32
frame, 25 bytes for a single node. Encoding is deterministic, so equal
frames always produce identical bytes.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    CodecError,
    CrcMismatchError,
    EncodeRangeError,
    GeometryError,
    ProtocolMismatchError,
    TruncatedPacketError,
)

PACKET_MAGIC = 0x5752
PACKET_VERSION = 1
HEADER_SIZE = 19
CRC_SIZE = 4
FLAG_RECONSTRUCTED = 0x01

_HEADER = struct.Struct("<HBBIQBBB")
_CRC = struct.Struct("<I")


def packet_size(rows: int, cols: int) -> int:
    """Encoded size in bytes of a rows x cols frame."""
    return HEADER_SIZE + 2 * rows * cols + CRC_SIZE


@dataclass(eq=False)
class Frame:
    """One timestamped scan of (an area of) the sensing matrix, in ADC counts.

    ``values`` is row-major with ``rows * cols`` entries. Frames coming out
    of the codec hold read-only uint16 arrays; frames built by hand may use
    any integer dtype, range is checked at encode time.
    """

    device_id: int
    packet_id: int
    timestamp_us: int
    rows: int
    cols: int
    values: np.ndarray
    reconstructed: bool = False

    def __post_init__(self) -> None:
        values = np.asarray(self.values)
        if values.ndim == 2:
            values = values.reshape(-1)
        if values.ndim != 1:
            raise GeometryError("values must be a 1-D row-major array or a 2-D matrix")
        if self.rows < 1 or self.cols < 1:
            raise GeometryError("rows and cols must be >= 1")
        if values.size != self.rows * self.cols:
            raise GeometryError(
                f"values length {values.size} != rows*cols = {self.rows * self.cols}"
            )
        self.values = values

    def matrix(self) -> np.ndarray:
        return self.values.reshape(self.rows, self.cols)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.device_id == other.device_id
            and self.packet_id == other.packet_id
            and self.timestamp_us == other.timestamp_us
            and self.rows == other.rows
            and self.cols == other.cols
            and self.reconstructed == other.reconstructed
            and np.array_equal(self.values, other.values)
        )


def encode_packet(frame: Frame, adc_bits: int = 16) -> bytes:
    """Serialize a frame; deterministic for equal frames.

    ``adc_bits`` tightens the payload range check below the u16 wire limit.
    """
    if not 0 <= frame.device_id <= 0xFF:
        raise EncodeRangeError(f"deviceId {frame.device_id} does not fit u8")
    if not 0 <= frame.packet_id <= 0xFFFFFFFF:
        raise EncodeRangeError(f"packetId {frame.packet_id} does not fit u32")
    if not 0 <= frame.timestamp_us <= 0xFFFFFFFFFFFFFFFF:
        raise EncodeRangeError(f"timestampUs {frame.timestamp_us} does not fit u64")
    if frame.rows > 0xFF or frame.cols > 0xFF:
        raise EncodeRangeError("rows/cols do not fit u8")
    full_scale = min(0xFFFF, (1 << adc_bits) - 1)
    values = np.asarray(frame.values)
    if values.size and (int(values.min()) < 0 or int(values.max()) > full_scale):
        raise EncodeRangeError(
            f"frame value outside ADC range [0, {full_scale}]"
        )
    flags = FLAG_RECONSTRUCTED if frame.reconstructed else 0
    head = _HEADER.pack(
        PACKET_MAGIC,
        PACKET_VERSION,
        frame.device_id,
        frame.packet_id,
        frame.timestamp_us,
        frame.rows,
        frame.cols,
        flags,
    )
    body = head + values.astype("<u2").tobytes()
    return body + _CRC.pack(zlib.crc32(body))


def decode_packet(buf: bytes) -> Frame:
    """Parse one packet from an exactly-sized buffer.

    Errors are distinct so callers can tell protocol mismatch (bad magic or
    version) from short reads and from corruption (CRC failure).
    """
    if len(buf) < HEADER_SIZE + CRC_SIZE:
        raise TruncatedPacketError(
            f"buffer of {len(buf)} bytes is shorter than the minimum packet"
        )
    magic, version, device_id, packet_id, timestamp_us, rows, cols, flags = _HEADER.unpack_from(buf, 0)
    if magic != PACKET_MAGIC:
        raise ProtocolMismatchError(f"bad magic 0x{magic:04x}")
    if version != PACKET_VERSION:
        raise ProtocolMismatchError(f"unsupported version {version}")
    if rows < 1 or cols < 1:
        raise CodecError("packet declares an empty geometry")
    expected = packet_size(rows, cols)
    if len(buf) < expected:
        raise TruncatedPacketError(
            f"buffer of {len(buf)} bytes, packet header promises {expected}"
        )
    if len(buf) > expected:
        raise CodecError(f"{len(buf) - expected} trailing bytes after packet")
    (crc_stored,) = _CRC.unpack_from(buf, expected - CRC_SIZE)
    if zlib.crc32(buf[: expected - CRC_SIZE]) != crc_stored:
        raise CrcMismatchError("CRC-32 mismatch: packet corrupted")
    values = np.frombuffer(buf, dtype="<u2", count=rows * cols, offset=HEADER_SIZE)
    return Frame(
        device_id=device_id,
        packet_id=packet_id,
        timestamp_us=timestamp_us,
        rows=rows,
        cols=cols,
        values=values,
        reconstructed=bool(flags & FLAG_RECONSTRUCTED),
    )

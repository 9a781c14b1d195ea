"""Wire codec: golden bytes, size formula, round-trip, error taxonomy."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tactilesim.errors import (
    CodecError,
    CrcMismatchError,
    EncodeRangeError,
    GeometryError,
    ProtocolMismatchError,
    TruncatedPacketError,
)
from tactilesim.wire import Frame, decode_packet, encode_packet, packet_size


def crc32_reference(data: bytes) -> int:
    """Independent bitwise CRC-32 (reflected 0xEDB88320), for cross-checking."""
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ 0xEDB88320 if crc & 1 else crc >> 1
    return crc ^ 0xFFFFFFFF


def make_frame(rows=2, cols=3, device_id=1, packet_id=0, ts=0, values=None, reconstructed=False):
    if values is None:
        values = np.arange(rows * cols) % 4096
    return Frame(
        device_id=device_id,
        packet_id=packet_id,
        timestamp_us=ts,
        rows=rows,
        cols=cols,
        values=np.asarray(values, dtype=np.uint16),
        reconstructed=reconstructed,
    )


def test_golden_bytes_against_reference_crc():
    frame = make_frame(
        rows=1, cols=2, device_id=7, packet_id=258, ts=1_000_000,
        values=[0, 4095], reconstructed=True,
    )
    body = bytes.fromhex("5257" "01" "07" "02010000" "40420f0000000000" "01" "02" "01" "0000ff0f")
    expected = body + crc32_reference(body).to_bytes(4, "little")
    assert encode_packet(frame) == expected


def test_size_formula():
    assert packet_size(32, 32) == 2071
    assert packet_size(1, 1) == 25
    assert len(encode_packet(make_frame(32, 32, values=np.zeros(1024)))) == 2071
    assert len(encode_packet(make_frame(1, 1, values=[9]))) == 25


def test_encode_deterministic():
    f1 = make_frame(4, 4, packet_id=77, ts=123456789)
    f2 = make_frame(4, 4, packet_id=77, ts=123456789)
    assert encode_packet(f1) == encode_packet(f2)


def test_roundtrip_simple():
    frame = make_frame(3, 5, device_id=42, packet_id=2**32 - 1, ts=2**63)
    assert decode_packet(encode_packet(frame)) == frame


@settings(max_examples=200)
@given(
    rows=st.integers(1, 32),
    cols=st.integers(1, 32),
    device_id=st.integers(0, 255),
    packet_id=st.integers(0, 2**32 - 1),
    ts=st.integers(0, 2**64 - 1),
    reconstructed=st.booleans(),
    seed=st.integers(0, 2**31),
)
def test_roundtrip_property(rows, cols, device_id, packet_id, ts, reconstructed, seed):
    rng = np.random.default_rng(seed)
    frame = Frame(
        device_id=device_id,
        packet_id=packet_id,
        timestamp_us=ts,
        rows=rows,
        cols=cols,
        values=rng.integers(0, 65536, size=rows * cols, dtype=np.uint16),
        reconstructed=reconstructed,
    )
    encoded = encode_packet(frame)
    assert len(encoded) == packet_size(rows, cols)
    assert decode_packet(encoded) == frame


def test_flipped_payload_bit_fails_crc():
    encoded = bytearray(encode_packet(make_frame()))
    encoded[21] ^= 0x10  # inside the payload
    with pytest.raises(CrcMismatchError):
        decode_packet(bytes(encoded))


def test_truncation_errors():
    with pytest.raises(TruncatedPacketError):
        decode_packet(b"\x00" * 10)
    encoded = encode_packet(make_frame())
    with pytest.raises(TruncatedPacketError):
        decode_packet(encoded[:-3])


def test_bad_magic_and_version_are_protocol_mismatch():
    encoded = bytearray(encode_packet(make_frame()))
    wrong_magic = bytes([0xAA]) + bytes(encoded[1:])
    with pytest.raises(ProtocolMismatchError):
        decode_packet(wrong_magic)
    encoded[2] = 9  # version byte
    with pytest.raises(ProtocolMismatchError):
        decode_packet(bytes(encoded))


def test_trailing_bytes_rejected():
    with pytest.raises(CodecError):
        decode_packet(encode_packet(make_frame()) + b"\x00")


def test_value_out_of_adc_range():
    frame = Frame(1, 0, 0, 1, 1, np.array([70000], dtype=np.int64))
    with pytest.raises(EncodeRangeError):
        encode_packet(frame)
    ok_at_16 = Frame(1, 0, 0, 1, 1, np.array([5000], dtype=np.int64))
    encode_packet(ok_at_16)  # fits the wire
    with pytest.raises(EncodeRangeError):
        encode_packet(ok_at_16, adc_bits=12)  # but not a 12-bit ADC


def test_geometry_validation():
    with pytest.raises(GeometryError):
        Frame(1, 0, 0, 2, 2, np.zeros(3, dtype=np.uint16))
    with pytest.raises(GeometryError):
        Frame(1, 0, 0, 0, 1, np.zeros(0, dtype=np.uint16))


def test_matrix_view_and_2d_input():
    frame = Frame(1, 0, 0, 2, 3, np.arange(6, dtype=np.uint16).reshape(2, 3))
    assert frame.values.shape == (6,)
    assert frame.matrix().shape == (2, 3)
    assert frame.matrix()[1, 2] == 5

"""Real socket transports speaking the wire packet format.

Two kinds, matching the two broad protocol families the channel models:

* stream (TCP): ordered and reliable. Packets are framed with a u32
  little-endian length prefix followed by the packet bytes.
* datagram (UDP): unordered and lossy. One wire packet per datagram.

A listener accepts any number of concurrent senders; frames from all of
them land in one serialized queue tagged with an arrival timestamp, and
the consumer demultiplexes by deviceId. A packet that fails to decode is
surfaced through the error callback and counted, never fatal to the
session.
"""

from __future__ import annotations

import queue
import socket
import struct
import threading
import time
from typing import Callable, Iterable, Iterator

from .errors import CodecError
from .wire import Frame, decode_packet, encode_packet

_LEN = struct.Struct("<I")
MAX_PACKET_BYTES = 1 << 20


def _now_us() -> int:
    return time.time_ns() // 1000


class _ListenerBase:
    def __init__(self, on_error: Callable[[Exception], None] | None = None):
        self._queue: "queue.Queue[tuple[Frame, int] | None]" = queue.Queue()
        self._on_error = on_error
        self.decode_errors = 0
        self._closed = threading.Event()

    def _surface(self, exc: Exception) -> None:
        self.decode_errors += 1
        if self._on_error is not None:
            self._on_error(exc)

    def _push(self, raw: bytes) -> None:
        try:
            frame = decode_packet(raw)
        except CodecError as exc:
            self._surface(exc)
            return
        self._queue.put((frame, _now_us()))

    def packets(self, timeout: float | None = None) -> Iterator[tuple[Frame, int]]:
        """Yield (frame, arrivalUs) until the listener closes or times out."""
        while not self._closed.is_set() or not self._queue.empty():
            try:
                item = self._queue.get(timeout=timeout)
            except queue.Empty:
                return
            if item is None:
                return
            yield item

    def get(self, timeout: float | None = None) -> tuple[Frame, int] | None:
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            return None

    def close(self) -> None:
        self._closed.set()
        self._queue.put(None)

    def __enter__(self):
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class StreamListener(_ListenerBase):
    """TCP listener; one reader thread per accepted connection."""

    def __init__(self, port: int = 0, host: str = "127.0.0.1", on_error=None):
        super().__init__(on_error)
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen()
        self.port = self._sock.getsockname()[1]
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def _accept_loop(self) -> None:
        while not self._closed.is_set():
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            threading.Thread(target=self._read_loop, args=(conn,), daemon=True).start()

    def _read_loop(self, conn: socket.socket) -> None:
        with conn:
            buffer = b""
            while not self._closed.is_set():
                try:
                    chunk = conn.recv(65536)
                except OSError:
                    return
                if not chunk:
                    return
                buffer += chunk
                while len(buffer) >= _LEN.size:
                    (length,) = _LEN.unpack_from(buffer, 0)
                    if length > MAX_PACKET_BYTES:
                        self._surface(CodecError(f"frame length {length} too large"))
                        return
                    if len(buffer) < _LEN.size + length:
                        break
                    raw = buffer[_LEN.size : _LEN.size + length]
                    buffer = buffer[_LEN.size + length :]
                    self._push(raw)

    def close(self) -> None:
        super().close()
        try:
            self._sock.close()
        except OSError:
            pass


class DatagramListener(_ListenerBase):
    """UDP listener; one wire packet per datagram."""

    def __init__(self, port: int = 0, host: str = "127.0.0.1", on_error=None):
        super().__init__(on_error)
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind((host, port))
        self.port = self._sock.getsockname()[1]
        self._thread = threading.Thread(target=self._read_loop, daemon=True)
        self._thread.start()

    def _read_loop(self) -> None:
        while not self._closed.is_set():
            try:
                raw, _ = self._sock.recvfrom(MAX_PACKET_BYTES)
            except OSError:
                return
            self._push(raw)

    def close(self) -> None:
        super().close()
        try:
            self._sock.close()
        except OSError:
            pass


def transport_listen(kind: str, port: int = 0, host: str = "127.0.0.1", on_error=None):
    """Open a packet source; kind is "stream" or "datagram"."""
    if kind == "stream":
        return StreamListener(port=port, host=host, on_error=on_error)
    if kind == "datagram":
        return DatagramListener(port=port, host=host, on_error=on_error)
    raise ValueError(f"unknown transport kind {kind!r}")


class StreamSender:
    def __init__(self, host: str, port: int):
        self._sock = socket.create_connection((host, port))

    def send(self, packet: bytes | Frame) -> None:
        raw = encode_packet(packet) if isinstance(packet, Frame) else packet
        self._sock.sendall(_LEN.pack(len(raw)) + raw)

    def close(self) -> None:
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class DatagramSender:
    def __init__(self, host: str, port: int):
        self._addr = (host, port)
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)

    def send(self, packet: bytes | Frame) -> None:
        raw = encode_packet(packet) if isinstance(packet, Frame) else packet
        self._sock.sendto(raw, self._addr)

    def close(self) -> None:
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def send_frames(kind: str, host: str, port: int, frames: Iterable[Frame | bytes]) -> int:
    """Convenience sender used by tests and the CLI replay bridge."""
    sender = StreamSender(host, port) if kind == "stream" else DatagramSender(host, port)
    count = 0
    with sender:
        for frame in frames:
            sender.send(frame)
            count += 1
    return count

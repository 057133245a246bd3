"""Framed two-party message channels.

Every message on the wire is one frame:

    u32 big-endian length | u8 kind | payload

where length covers the kind byte plus the payload.  The in-process loopback
channel supports an injectable one-way delay so protocol latency can be
measured without real network distance; the TCP binding carries the same
frames over a socket.
"""

from __future__ import annotations

import queue
import socket
import struct
import threading
import time

# Message kinds.  Values are part of the wire format; do not renumber.
MSG_INPUT_SHARE = 1
MSG_AND_OPENING = 2
MSG_GARBLED_TABLES = 3
MSG_LABELS = 4
MSG_OUTPUT_SHARE = 5
MSG_SETUP_TRIPLES = 6
MSG_ENVELOPE = 7
MSG_ENVELOPE_ACK = 8
MSG_VERIFY_QUERY = 9
MSG_VERIFY_RESULT = 10
MSG_SUBSCRIBE = 11
MSG_NOTIFY_CHANGE = 12

KIND_NAMES = {
    MSG_INPUT_SHARE: "INPUT_SHARE",
    MSG_AND_OPENING: "AND_OPENING",
    MSG_GARBLED_TABLES: "GARBLED_TABLES",
    MSG_LABELS: "LABELS",
    MSG_OUTPUT_SHARE: "OUTPUT_SHARE",
    MSG_SETUP_TRIPLES: "SETUP_TRIPLES",
    MSG_ENVELOPE: "ENVELOPE",
    MSG_ENVELOPE_ACK: "ENVELOPE_ACK",
    MSG_VERIFY_QUERY: "VERIFY_QUERY",
    MSG_VERIFY_RESULT: "VERIFY_RESULT",
    MSG_SUBSCRIBE: "SUBSCRIBE",
    MSG_NOTIFY_CHANGE: "NOTIFY_CHANGE",
}

_HEADER = struct.Struct(">I")


class ChannelClosed(Exception):
    """The peer endpoint is gone; the session cannot continue."""


class ChannelTimeout(Exception):
    """No frame arrived within the endpoint's receive timeout."""


class ProtocolError(Exception):
    """A frame arrived but was not what the protocol state expected."""


def encode_frame(kind: int, payload: bytes) -> bytes:
    if not 0 <= kind < 256:
        raise ValueError("kind must fit one byte")
    return _HEADER.pack(1 + len(payload)) + bytes([kind]) + payload


def frame_size(payload_len: int) -> int:
    """Total on-wire bytes of a frame with the given payload length."""
    return 4 + 1 + payload_len


class LoopbackEnd:
    """One endpoint of an in-process channel pair.

    Frames become visible to the peer ``one_way_delay`` seconds after send;
    receive blocks until the frame's arrival time.
    """

    def __init__(self, inbox: "queue.Queue", outbox: "queue.Queue",
                 one_way_delay: float, timeout: float | None) -> None:
        self._inbox = inbox
        self._outbox = outbox
        self._delay = one_way_delay
        self._timeout = timeout
        self._closed = False

    @staticmethod
    def pair(one_way_delay: float = 0.0,
             timeout: float | None = 60.0) -> tuple["LoopbackEnd", "LoopbackEnd"]:
        q_ab: queue.Queue = queue.Queue()
        q_ba: queue.Queue = queue.Queue()
        a = LoopbackEnd(q_ba, q_ab, one_way_delay, timeout)
        b = LoopbackEnd(q_ab, q_ba, one_way_delay, timeout)
        return a, b

    def send(self, kind: int, payload: bytes) -> int:
        """Queue one frame; returns its on-wire size in bytes."""
        if self._closed:
            raise ChannelClosed("send on closed channel")
        frame = encode_frame(kind, payload)
        self._outbox.put((time.monotonic() + self._delay, frame))
        return len(frame)

    def recv(self) -> tuple[int, bytes, int]:
        """Return (kind, payload, frame_size); blocks until arrival time."""
        try:
            item = self._inbox.get(timeout=self._timeout)
        except queue.Empty:
            raise ChannelTimeout("no frame within timeout") from None
        if item is None:
            raise ChannelClosed("peer closed the channel")
        arrival, frame = item
        wait = arrival - time.monotonic()
        if wait > 0:
            time.sleep(wait)
        kind = frame[4]
        return kind, frame[5:], len(frame)

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._outbox.put(None)


class TcpChannel:
    """The same framing over a connected TCP socket."""

    def __init__(self, sock: socket.socket, timeout: float | None = 60.0) -> None:
        self._sock = sock
        self._sock.settimeout(timeout)

    @staticmethod
    def serve_one(host: str = "127.0.0.1", port: int = 0):
        """Bind, listen, and return (bound_port, accept) where accept() yields a channel."""
        srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        srv.bind((host, port))
        srv.listen(1)

        def accept() -> "TcpChannel":
            conn, _ = srv.accept()
            srv.close()
            return TcpChannel(conn)

        return srv.getsockname()[1], accept

    @staticmethod
    def connect(host: str, port: int, timeout: float | None = 60.0) -> "TcpChannel":
        sock = socket.create_connection((host, port), timeout=timeout)
        return TcpChannel(sock, timeout)

    def send(self, kind: int, payload: bytes) -> int:
        frame = encode_frame(kind, payload)
        try:
            self._sock.sendall(frame)
        except OSError as exc:
            raise ChannelClosed(str(exc)) from exc
        return len(frame)

    def _read_exact(self, n: int) -> bytes:
        buf = b""
        while len(buf) < n:
            try:
                chunk = self._sock.recv(n - len(buf))
            except socket.timeout:
                raise ChannelTimeout("no frame within timeout") from None
            except OSError as exc:
                raise ChannelClosed(str(exc)) from exc
            if not chunk:
                raise ChannelClosed("peer closed the connection")
            buf += chunk
        return buf

    def recv(self) -> tuple[int, bytes, int]:
        (length,) = _HEADER.unpack(self._read_exact(4))
        if length < 1:
            raise ProtocolError("frame length below minimum")
        body = self._read_exact(length)
        return body[0], body[1:], 4 + length

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def run_pair(fn_a, fn_b, close_on_error=()):
    """Run two party callables on two threads; return (result_a, result_b).

    If either side raises, the listed channels are closed so the peer cannot
    block forever, and the first exception is re-raised.
    """
    results: list = [None, None]
    errors: list = [None, None]

    def runner(idx, fn):
        try:
            results[idx] = fn()
        except BaseException as exc:  # noqa: BLE001 - must ferry everything
            errors[idx] = exc
            for ch in close_on_error:
                try:
                    ch.close()
                except Exception:
                    pass

    threads = [
        threading.Thread(target=runner, args=(0, fn_a), daemon=True),
        threading.Thread(target=runner, args=(1, fn_b), daemon=True),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for err in errors:
        if err is not None:
            raise err
    return results[0], results[1]

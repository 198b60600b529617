"""Client handle for a remote tuple space.

One multiplexed connection per (client, server) pair: every request carries a
strictly increasing request id and replies are correlated by it, so blocking
reads and fast probes coexist on the same socket without queueing behind each
other.  The handle is safe for concurrent use from multiple threads.

Operation semantics mirror LocalSpace exactly; see store.py.
"""

from __future__ import annotations

import math
import socket
import threading
import time
from dataclasses import dataclass

from . import wire
from .errors import (
    ConnectionLost,
    MalformedFrame,
    RemoteOpError,
    SpaceTimeout,
    Unreachable,
    VersionMismatch,
)
from .tuples import Template, Tuple


@dataclass(frozen=True)
class NodeAddress:
    host: str
    port: int
    name: str = ""

    def __str__(self):
        label = f" ({self.name})" if self.name else ""
        return f"{self.host}:{self.port}{label}"


CONNECT_ATTEMPTS = 5
CONNECT_RETRY_DELAY = 0.2


class PendingReply:
    """An in-flight request; completed exactly once by the reader thread."""

    __slots__ = ("request_id", "event", "kind", "payload", "on_done")

    def __init__(self, request_id: int, on_done=None):
        self.request_id = request_id
        self.event = threading.Event()
        self.kind = None  # 'tuple' | 'none' | 'err' | 'count' | 'lost'
        self.payload = None
        self.on_done = on_done

    def complete(self, kind: str, payload) -> None:
        self.kind = kind
        self.payload = payload
        self.event.set()
        if self.on_done is not None:
            self.on_done(self)

    def wait(self, timeout: float | None = None) -> bool:
        return self.event.wait(timeout)


def _timeout_to_ms(timeout: float | None) -> int:
    if timeout is None:
        return wire.INFINITE_MS
    if timeout <= 0:
        return 0
    return int(math.ceil(timeout * 1000.0))


class RemoteSpace:
    """A connected remote tuple space exposing the unified operation set."""

    def __init__(self, sock: socket.socket, address: NodeAddress, client_name: str):
        self.address = address
        self.client_name = client_name
        self._sock = sock
        self._file = sock.makefile("rb")
        self._send_lock = threading.Lock()
        self._plock = threading.Lock()
        self._pending: dict[int, PendingReply] = {}
        self._next_id = 1
        self._closed = False
        self._reader = threading.Thread(
            target=self._read_loop, name=f"reader-{address.host}:{address.port}", daemon=True
        )
        self._reader.start()

    # -- connection -------------------------------------------------------

    @classmethod
    def connect(cls, address: NodeAddress, client_name: str = "client",
                attempts: int = CONNECT_ATTEMPTS,
                retry_delay: float = CONNECT_RETRY_DELAY) -> "RemoteSpace":
        last_err = None
        for attempt in range(attempts):
            if attempt:
                time.sleep(retry_delay)
            try:
                sock = socket.create_connection((address.host, address.port), timeout=10.0)
                break
            except OSError as e:
                last_err = e
        else:
            raise Unreachable(f"cannot reach {address} after {attempts} attempts: {last_err}")
        sock.settimeout(None)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        try:
            cls._handshake(sock, client_name)
        except Exception:
            sock.close()
            raise
        return cls(sock, address, client_name)

    @staticmethod
    def _handshake(sock: socket.socket, client_name: str) -> None:
        sock.sendall(wire.build_frame(wire.MSG_HELLO, 0, wire.pack_hello(client_name)))
        f = sock.makefile("rb")
        frame = wire.read_frame(f)
        if frame is None:
            raise ConnectionLost("server closed during handshake")
        msg_type, _, body = frame
        if msg_type == wire.MSG_REPLY_ERR:
            code, msg = wire.unpack_err(body)
            raise VersionMismatch(f"server rejected handshake: {msg}")
        if msg_type != wire.MSG_HELLO:
            raise MalformedFrame(f"expected HELLO reply, got message type {msg_type}")
        version, _server_name = wire.unpack_hello(body)
        if version != wire.PROTOCOL_VERSION:
            raise VersionMismatch(f"server speaks version {version}, want {wire.PROTOCOL_VERSION}")

    def close(self) -> None:
        with self._plock:
            if self._closed:
                return
            self._closed = True
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._file.close()  # releases the fd the reader's makefile pins
        except OSError:
            pass
        self._sock.close()
        self._fail_pending(ConnectionLost("connection closed"))

    # -- plumbing ---------------------------------------------------------

    def _read_loop(self) -> None:
        try:
            while True:
                frame = wire.read_frame(self._file)
                if frame is None:
                    break
                msg_type, request_id, body = frame
                with self._plock:
                    pending = self._pending.pop(request_id, None)
                if pending is None:
                    continue  # late reply for a request we already resolved
                if msg_type == wire.MSG_REPLY_TUPLE:
                    pending.complete("tuple", wire.decode_tuple(body))
                elif msg_type == wire.MSG_REPLY_NONE:
                    pending.complete("none", None)
                elif msg_type == wire.MSG_REPLY_ERR:
                    pending.complete("err", wire.unpack_err(body))
                elif msg_type == wire.MSG_COUNT_REPLY:
                    pending.complete("count", wire.unpack_count_reply(body))
                else:
                    pending.complete("err", (wire.ERR_MALFORMED, f"unexpected reply type {msg_type}"))
        except (OSError, ValueError, MalformedFrame):
            pass
        try:
            self._file.close()
        except OSError:
            pass
        self._fail_pending(ConnectionLost(f"connection to {self.address} lost"))

    def _fail_pending(self, exc: Exception) -> None:
        with self._plock:
            pending = list(self._pending.values())
            self._pending.clear()
        for p in pending:
            p.complete("lost", exc)

    def _submit(self, msg_type: int, body: bytes, on_done=None) -> PendingReply:
        with self._plock:
            if self._closed:
                raise ConnectionLost(f"connection to {self.address} is closed")
            request_id = self._next_id
            self._next_id += 1
            pending = PendingReply(request_id, on_done)
            self._pending[request_id] = pending
        frame = wire.build_frame(msg_type, request_id, body)
        try:
            with self._send_lock:
                self._sock.sendall(frame)
        except OSError as e:
            with self._plock:
                self._pending.pop(request_id, None)
            raise ConnectionLost(f"send to {self.address} failed: {e}") from None
        return pending

    @staticmethod
    def _resolve(pending: PendingReply):
        pending.wait()
        kind = pending.kind
        if kind == "tuple":
            return pending.payload
        if kind == "none":
            return None
        if kind == "count":
            return pending.payload
        if kind == "lost":
            raise pending.payload
        code, msg = pending.payload
        if code == wire.ERR_TIMEOUT:
            raise SpaceTimeout(msg)
        if code == wire.ERR_SHUTTING_DOWN:
            raise ConnectionLost(f"server shutting down: {msg}")
        raise RemoteOpError(code, msg)

    # -- operations (contracts identical to LocalSpace) --------------------

    def out(self, tup: Tuple) -> None:
        self._resolve(self._submit(wire.MSG_OUT, wire.encode_tuple(tup)))

    def rdp(self, tpl: Template) -> Tuple | None:
        return self._resolve(self._submit(wire.MSG_RDP, wire.encode_template(tpl)))

    def inp(self, tpl: Template) -> Tuple | None:
        return self._resolve(self._submit(wire.MSG_INP, wire.encode_template(tpl)))

    def count(self, tpl: Template) -> int:
        return self._resolve(self._submit(wire.MSG_COUNT, wire.encode_template(tpl)))

    def rd(self, tpl: Template, timeout: float | None = None) -> Tuple:
        ms = _timeout_to_ms(timeout)
        got = self._resolve(self._submit(wire.MSG_RD, wire.pack_blocking(ms, tpl)))
        if got is None:
            raise SpaceTimeout(f"no match within {timeout!r}s on {self.address}")
        return got

    def in_(self, tpl: Template, timeout: float | None = None) -> Tuple:
        ms = _timeout_to_ms(timeout)
        got = self._resolve(self._submit(wire.MSG_IN, wire.pack_blocking(ms, tpl)))
        if got is None:
            raise SpaceTimeout(f"no match within {timeout!r}s on {self.address}")
        return got

    # -- async variants (broadcast-notify search) ---------------------------

    def rd_async(self, tpl: Template, timeout: float | None = None, on_done=None) -> PendingReply:
        """Issue a blocking RD without waiting; pair with cancel()."""
        ms = _timeout_to_ms(timeout)
        return self._submit(wire.MSG_RD, wire.pack_blocking(ms, tpl), on_done=on_done)

    def cancel(self, pending: PendingReply) -> None:
        """Best-effort deregistration of a blocking request on the server."""
        try:
            with self._send_lock:
                self._sock.sendall(wire.build_frame(wire.MSG_CANCEL, pending.request_id))
        except OSError:
            pass

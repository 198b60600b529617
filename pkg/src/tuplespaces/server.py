"""Tuple-space server: serves a LocalSpace over the wire protocol.

Each accepted connection gets a reader thread that decodes frames and
dispatches operations.  Fast operations (out / probes / count) are answered
inline; blocking RD/IN requests register a waiter on the store and reply from
whichever thread satisfies them, so a parked request never occupies the
connection and never delays later frames on it.  CANCEL deregisters a parked
waiter and answers REPLY_NONE when it wins the race against satisfaction.
"""

from __future__ import annotations

import socket
import threading

from . import wire
from .errors import AddressInUse, MalformedFrame
from .store import LocalSpace, Waiter


class _Connection:
    __slots__ = ("sock", "file", "write_lock", "waiters", "wlock", "peer_name")

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.file = sock.makefile("rb")
        self.write_lock = threading.Lock()
        self.waiters: dict[int, tuple[Waiter, threading.Timer | None]] = {}
        self.wlock = threading.Lock()
        self.peer_name = "?"

    def send(self, frame: bytes) -> bool:
        try:
            with self.write_lock:
                self.sock.sendall(frame)
            return True
        except OSError:
            return False

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.file.close()  # releases the fd the makefile pins
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass


class SpaceServer:
    """Accepts connections and exposes one LocalSpace at one address."""

    def __init__(self, space: LocalSpace, host: str = "127.0.0.1", port: int = 0,
                 name: str = "server"):
        self.space = space
        self.host = host
        self.name = name
        self._listener: socket.socket | None = None
        self._conns: list[_Connection] = []
        self._conns_lock = threading.Lock()
        self._stopping = False
        self.port = port

    def start(self) -> "SpaceServer":
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            listener.bind((self.host, self.port))
        except OSError as e:
            listener.close()
            raise AddressInUse(f"cannot bind {self.host}:{self.port}: {e}") from None
        listener.listen(128)
        self.port = listener.getsockname()[1]
        self._listener = listener
        threading.Thread(target=self._accept_loop, name=f"accept-{self.name}", daemon=True).start()
        return self

    def stop(self) -> None:
        self._stopping = True
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._conns_lock:
            conns = list(self._conns)
            self._conns.clear()
        for conn in conns:
            self._abort_waiters(conn)
            conn.close()

    def _abort_waiters(self, conn: _Connection) -> None:
        with conn.wlock:
            entries = list(conn.waiters.items())
            conn.waiters.clear()
        for request_id, (waiter, timer) in entries:
            if timer is not None:
                timer.cancel()
            if self.space.cancel_waiter(waiter):
                conn.send(wire.build_frame(
                    wire.MSG_REPLY_ERR, request_id,
                    wire.pack_err(wire.ERR_SHUTTING_DOWN, "server shutting down")))

    # -- accept / read loops ------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stopping:
            try:
                sock, _ = self._listener.accept()
            except OSError:
                return
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn = _Connection(sock)
            with self._conns_lock:
                self._conns.append(conn)
            threading.Thread(target=self._serve_conn, args=(conn,),
                             name=f"conn-{self.name}", daemon=True).start()

    def _serve_conn(self, conn: _Connection) -> None:
        try:
            if not self._hello(conn):
                return
            while True:
                frame = wire.read_frame(conn.file)
                if frame is None:
                    return
                self._dispatch(conn, *frame)
        except (OSError, ValueError, MalformedFrame):
            return  # stream no longer trustworthy; drop the connection
        finally:
            self._abort_waiters(conn)
            conn.close()
            with self._conns_lock:
                if conn in self._conns:
                    self._conns.remove(conn)

    def _hello(self, conn: _Connection) -> bool:
        frame = wire.read_frame(conn.file)
        if frame is None:
            return False
        msg_type, request_id, body = frame
        if msg_type != wire.MSG_HELLO:
            conn.send(wire.build_frame(wire.MSG_REPLY_ERR, request_id,
                                       wire.pack_err(wire.ERR_UNSUPPORTED, "expected HELLO")))
            return False
        version, peer_name = wire.unpack_hello(body)
        if version != wire.PROTOCOL_VERSION:
            conn.send(wire.build_frame(
                wire.MSG_REPLY_ERR, request_id,
                wire.pack_err(wire.ERR_UNSUPPORTED, f"unsupported protocol version {version}")))
            return False
        conn.peer_name = peer_name
        return conn.send(wire.build_frame(wire.MSG_HELLO, request_id, wire.pack_hello(self.name)))

    # -- dispatch -----------------------------------------------------------

    def _dispatch(self, conn: _Connection, msg_type: int, request_id: int, body: bytes) -> None:
        try:
            if msg_type == wire.MSG_OUT:
                self.space.out(wire.decode_tuple(body))
                conn.send(wire.build_frame(wire.MSG_REPLY_NONE, request_id))
            elif msg_type == wire.MSG_RDP:
                self._reply_probe(conn, request_id, self.space.rdp(wire.decode_template(body)))
            elif msg_type == wire.MSG_INP:
                self._reply_probe(conn, request_id, self.space.inp(wire.decode_template(body)))
            elif msg_type == wire.MSG_COUNT:
                n = self.space.count(wire.decode_template(body))
                conn.send(wire.build_frame(wire.MSG_COUNT_REPLY, request_id, wire.pack_count_reply(n)))
            elif msg_type in (wire.MSG_RD, wire.MSG_IN):
                self._blocking(conn, msg_type, request_id, body)
            elif msg_type == wire.MSG_CANCEL:
                self._cancel(conn, request_id)
            else:
                conn.send(wire.build_frame(wire.MSG_REPLY_ERR, request_id,
                                           wire.pack_err(wire.ERR_UNSUPPORTED,
                                                         f"unsupported message type {msg_type}")))
        except MalformedFrame as e:
            conn.send(wire.build_frame(wire.MSG_REPLY_ERR, request_id,
                                       wire.pack_err(wire.ERR_MALFORMED, str(e))))

    def _reply_probe(self, conn: _Connection, request_id: int, tup) -> None:
        if tup is None:
            conn.send(wire.build_frame(wire.MSG_REPLY_NONE, request_id))
        else:
            conn.send(wire.build_frame(wire.MSG_REPLY_TUPLE, request_id, wire.encode_tuple(tup)))

    def _blocking(self, conn: _Connection, msg_type: int, request_id: int, body: bytes) -> None:
        timeout_ms, tpl = wire.unpack_blocking(body)
        destructive = msg_type == wire.MSG_IN
        if timeout_ms == 0:
            # Degenerates to the non-blocking probe.
            probe = self.space.inp if destructive else self.space.rdp
            self._reply_probe(conn, request_id, probe(tpl))
            return

        def on_complete(w: Waiter) -> None:
            if not w.satisfied:
                return  # cancellation paths send their own replies
            with conn.wlock:
                entry = conn.waiters.pop(request_id, None)
            if entry is None:
                return  # another path already claimed the reply
            if entry[1] is not None:
                entry[1].cancel()
            conn.send(wire.build_frame(wire.MSG_REPLY_TUPLE, request_id,
                                       wire.encode_tuple(w.result)))

        waiter = self.space.register_waiter(tpl, destructive, on_complete=None)
        if waiter.satisfied:
            conn.send(wire.build_frame(wire.MSG_REPLY_TUPLE, request_id,
                                       wire.encode_tuple(waiter.result)))
            return
        waiter.on_complete = on_complete
        timer = None
        if timeout_ms != wire.INFINITE_MS:
            def on_timeout():
                if self.space.cancel_waiter(waiter):
                    with conn.wlock:
                        conn.waiters.pop(request_id, None)
                    conn.send(wire.build_frame(
                        wire.MSG_REPLY_ERR, request_id,
                        wire.pack_err(wire.ERR_TIMEOUT, f"no match within {timeout_ms} ms")))
            timer = threading.Timer(timeout_ms / 1000.0, on_timeout)
            timer.daemon = True
        with conn.wlock:
            conn.waiters[request_id] = (waiter, timer)
        if timer is not None:
            timer.start()
        # Waiter may have been satisfied between registration and callback
        # installation; complete it here if so (single reply is guaranteed by
        # the pop of conn.waiters).
        if waiter.satisfied:
            on_complete(waiter)

    def _cancel(self, conn: _Connection, request_id: int) -> None:
        with conn.wlock:
            entry = conn.waiters.get(request_id)
        if entry is None:
            return  # already satisfied or unknown: no extra reply
        waiter, timer = entry
        if not self.space.cancel_waiter(waiter):
            return  # satisfaction in flight; its callback will claim the reply
        with conn.wlock:
            conn.waiters.pop(request_id, None)
        if timer is not None:
            timer.cancel()
        conn.send(wire.build_frame(wire.MSG_REPLY_NONE, request_id))

"""Exception hierarchy shared by the store, the wire protocol and the bench."""


class TupleSpaceError(Exception):
    """Base class for every error raised by this package."""


class SpaceTimeout(TupleSpaceError):
    """A blocking read/take did not find a match within its finite timeout."""


class WaiterCancelled(TupleSpaceError):
    """A registered blocking request was cancelled before being satisfied."""


class MalformedFrame(TupleSpaceError):
    """Bytes on the wire do not decode to a valid frame, tuple or template."""


class PayloadTooLarge(TupleSpaceError):
    """An encoded frame would exceed the 64 MiB frame cap (caller error)."""


class AddressInUse(TupleSpaceError):
    """The listening address is already bound."""


class Unreachable(TupleSpaceError):
    """Connecting to a remote space failed after all retries."""


class VersionMismatch(TupleSpaceError):
    """The peer speaks a different protocol version."""


class ConnectionLost(TupleSpaceError):
    """The transport dropped; pending requests cannot complete."""


class RemoteOpError(TupleSpaceError):
    """The server rejected a request (malformed / unsupported / shutting down)."""

    def __init__(self, code: int, message: str):
        super().__init__(f"remote error {code}: {message}")
        self.code = code
        self.message = message


class DeadlineExceeded(TupleSpaceError):
    """A distributed search or a benchmark repetition ran out of time."""


class ParseError(TupleSpaceError):
    """A profiler dump file could not be parsed."""

    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no
        self.reason = reason

"""Binary wire protocol: tuple/template codec and length-prefixed frames.

Everything is little-endian and bit-exact.  A frame is

    u32 length | u8 msg_type | u64 request_id | body

where length covers msg_type + request_id + body (9 + len(body)).  Tuples
are encoded as u32 arity then tagged fields; templates reuse the value tags
for literals and use 0x10 for the any-wildcard and 0x10+tag for a type
wildcard.  Decoding is strict: unknown tags, truncation, oversized declared
lengths, trailing bytes and invalid UTF-8 all raise MalformedFrame rather
than ever mis-decoding.
"""

from __future__ import annotations

import struct

from .errors import MalformedFrame, PayloadTooLarge
from .tuples import (
    ALL_TAGS,
    ANY_WILDCARD,
    BYTES,
    FLOAT,
    FLOAT_ARRAY,
    INT,
    INT_ARRAY,
    LITERAL,
    STR,
    TYPE_WILDCARD,
    PatternField,
    Template,
    Tuple,
    Value,
)

PROTOCOL_VERSION = 1
MAX_FRAME = 64 * 1024 * 1024  # caller error beyond this
HEADER_LEN = 9  # msg_type + request_id

# Message types.
MSG_OUT = 1
MSG_RDP = 2
MSG_INP = 3
MSG_RD = 4
MSG_IN = 5
MSG_REPLY_TUPLE = 6
MSG_REPLY_NONE = 7
MSG_REPLY_ERR = 8
MSG_HELLO = 9
MSG_CANCEL = 10
MSG_COUNT = 11
MSG_COUNT_REPLY = 12

# REPLY_ERR codes.
ERR_MALFORMED = 1
ERR_UNSUPPORTED = 2
ERR_TIMEOUT = 3
ERR_SHUTTING_DOWN = 4

INFINITE_MS = (1 << 64) - 1  # u64 sentinel: block forever

_WILDCARD_BASE = 0x10

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_I64 = struct.Struct("<q")
_F64 = struct.Struct("<d")
_FRAME_HEAD = struct.Struct("<IBQ")


class _Reader:
    """Cursor over immutable bytes; every read is bounds-checked."""

    __slots__ = ("data", "pos")

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise MalformedFrame("truncated: declared length exceeds available bytes")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return _U16.unpack(self.take(2))[0]

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]

    def done(self) -> None:
        if self.pos != len(self.data):
            raise MalformedFrame(f"{len(self.data) - self.pos} trailing bytes")


def _encode_payload(buf: bytearray, v: Value) -> None:
    tag = v.tag
    if tag == INT:
        buf += _I64.pack(v.data)
    elif tag == FLOAT:
        buf += _F64.pack(v.data)
    elif tag == STR:
        raw = v.data.encode("utf-8")
        buf += _U32.pack(len(raw))
        buf += raw
    elif tag == BYTES:
        buf += _U32.pack(len(v.data))
        buf += v.data
    elif tag == INT_ARRAY:
        n = len(v.data)
        buf += _U32.pack(n)
        buf += struct.pack(f"<{n}q", *v.data)
    elif tag == FLOAT_ARRAY:
        n = len(v.data)
        buf += _U32.pack(n)
        buf += struct.pack(f"<{n}d", *v.data)
    else:  # pragma: no cover - construction prevents this
        raise MalformedFrame(f"unknown value tag {tag}")


def _decode_payload(r: _Reader, tag: int) -> Value:
    if tag == INT:
        return Value(INT, _I64.unpack(r.take(8))[0])
    if tag == FLOAT:
        return Value(FLOAT, _F64.unpack(r.take(8))[0])
    if tag == STR:
        raw = r.take(r.u32())
        try:
            return Value(STR, raw.decode("utf-8"))
        except UnicodeDecodeError as e:
            raise MalformedFrame(f"invalid UTF-8 in string field: {e}") from None
    if tag == BYTES:
        return Value(BYTES, bytes(r.take(r.u32())))
    if tag == INT_ARRAY:
        n = r.u32()
        return Value(INT_ARRAY, struct.unpack(f"<{n}q", r.take(8 * n)))
    if tag == FLOAT_ARRAY:
        n = r.u32()
        return Value(FLOAT_ARRAY, struct.unpack(f"<{n}d", r.take(8 * n)))
    raise MalformedFrame(f"unknown value tag {tag}")


def encode_tuple(tup: Tuple) -> bytes:
    buf = bytearray(_U32.pack(tup.arity))
    for v in tup.fields:
        buf.append(v.tag)
        _encode_payload(buf, v)
    return bytes(buf)


def _decode_tuple_at(r: _Reader) -> Tuple:
    arity = r.u32()
    if arity < 1:
        raise MalformedFrame("tuple arity must be >= 1")
    fields = []
    for _ in range(arity):
        fields.append(_decode_payload(r, r.u8()))
    return Tuple(fields)


def decode_tuple(data: bytes) -> Tuple:
    r = _Reader(data)
    tup = _decode_tuple_at(r)
    r.done()
    return tup


def encode_template(tpl: Template) -> bytes:
    buf = bytearray(_U32.pack(tpl.arity))
    for f in tpl.fields:
        if f.kind == LITERAL:
            buf.append(f.value.tag)
            _encode_payload(buf, f.value)
        elif f.kind == ANY_WILDCARD:
            buf.append(_WILDCARD_BASE)
        else:
            buf.append(_WILDCARD_BASE + f.tag)
    return bytes(buf)


def _decode_template_at(r: _Reader) -> Template:
    arity = r.u32()
    if arity < 1:
        raise MalformedFrame("template arity must be >= 1")
    fields = []
    for _ in range(arity):
        tag = r.u8()
        if tag == _WILDCARD_BASE:
            fields.append(PatternField(ANY_WILDCARD))
        elif _WILDCARD_BASE < tag <= _WILDCARD_BASE + max(ALL_TAGS):
            fields.append(PatternField(TYPE_WILDCARD, tag=tag - _WILDCARD_BASE))
        else:
            fields.append(PatternField(LITERAL, value=_decode_payload(r, tag)))
    return Template(fields)


def decode_template(data: bytes) -> Template:
    r = _Reader(data)
    tpl = _decode_template_at(r)
    r.done()
    return tpl


# -- frames ----------------------------------------------------------------

def build_frame(msg_type: int, request_id: int, body: bytes = b"") -> bytes:
    length = HEADER_LEN + len(body)
    if length > MAX_FRAME:
        raise PayloadTooLarge(f"frame of {length} bytes exceeds {MAX_FRAME}")
    return _FRAME_HEAD.pack(length, msg_type, request_id) + body


def parse_frame(data: bytes) -> tuple[int, int, bytes]:
    """Parse one complete frame from bytes (strict, full consumption)."""
    if len(data) < 4:
        raise MalformedFrame("truncated frame: no length prefix")
    (length,) = _U32.unpack(data[:4])
    if length < HEADER_LEN:
        raise MalformedFrame(f"frame length {length} below header size")
    if length > MAX_FRAME:
        raise MalformedFrame(f"frame length {length} exceeds cap")
    if len(data) - 4 != length:
        raise MalformedFrame("frame length prefix does not match payload")
    msg_type = data[4]
    (request_id,) = _U64.unpack(data[5:13])
    return msg_type, request_id, data[13:]


def read_frame(stream) -> tuple[int, int, bytes] | None:
    """Read one frame from a blocking binary stream; None on clean EOF."""
    head = stream.read(4)
    if not head:
        return None
    if len(head) < 4:
        raise MalformedFrame("truncated frame: short length prefix")
    (length,) = _U32.unpack(head)
    if length < HEADER_LEN or length > MAX_FRAME:
        raise MalformedFrame(f"bad frame length {length}")
    payload = stream.read(length)
    if len(payload) < length:
        raise MalformedFrame("truncated frame: stream ended mid-frame")
    msg_type = payload[0]
    (request_id,) = _U64.unpack(payload[1:9])
    return msg_type, request_id, payload[9:]


# -- body helpers ------------------------------------------------------------

def pack_hello(name: str, version: int = PROTOCOL_VERSION) -> bytes:
    raw = name.encode("utf-8")
    return _U16.pack(version) + _U32.pack(len(raw)) + raw


def unpack_hello(body: bytes) -> tuple[int, str]:
    r = _Reader(body)
    version = r.u16()
    raw = r.take(r.u32())
    r.done()
    try:
        return version, raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise MalformedFrame(f"invalid UTF-8 in hello name: {e}") from None


def pack_err(code: int, message: str) -> bytes:
    raw = message.encode("utf-8")
    return _U16.pack(code) + _U32.pack(len(raw)) + raw


def unpack_err(body: bytes) -> tuple[int, str]:
    r = _Reader(body)
    code = r.u16()
    raw = r.take(r.u32())
    r.done()
    return code, raw.decode("utf-8", errors="replace")


def pack_blocking(timeout_ms: int, tpl: Template) -> bytes:
    return _U64.pack(timeout_ms) + encode_template(tpl)


def unpack_blocking(body: bytes) -> tuple[int, Template]:
    r = _Reader(body)
    timeout_ms = r.u64()
    tpl = _decode_template_at(r)
    r.done()
    return timeout_ms, tpl


def pack_count_reply(n: int) -> bytes:
    return _U64.pack(n)


def unpack_count_reply(body: bytes) -> int:
    r = _Reader(body)
    n = r.u64()
    r.done()
    return n

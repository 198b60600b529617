"""Tuples, templates and the matching relation.

A tuple is an ordered, immutable sequence of typed values; a template is the
same shape with each position holding a literal, a type wildcard or the
any-wildcard.  ``match`` is the single pattern-matching relation every other
module builds on: position-wise, arity-exact, pure.

Value universe (six tags): 64-bit signed integers, IEEE-754 doubles, UTF-8
strings, opaque bytes, and flat arrays of the two numeric kinds.  Floats
compare by exact bit pattern: NaN equals NaN when the bits agree, and
0.0 does not equal -0.0.  Tolerant comparison belongs to benchmark
validation, never to the store.
"""

from __future__ import annotations

import struct
from typing import Iterable, Sequence

# Value tags (also the wire tags, see wire.py).
INT = 1
FLOAT = 2
STR = 3
BYTES = 4
INT_ARRAY = 5
FLOAT_ARRAY = 6

ALL_TAGS = (INT, FLOAT, STR, BYTES, INT_ARRAY, FLOAT_ARRAY)

TAG_NAMES = {
    INT: "int",
    FLOAT: "float",
    STR: "str",
    BYTES: "bytes",
    INT_ARRAY: "int_array",
    FLOAT_ARRAY: "float_array",
}

_INT64_MIN = -(1 << 63)
_INT64_MAX = (1 << 63) - 1

_PACK_D = struct.Struct("<d")


def _float_bits(x: float) -> int:
    return int.from_bytes(_PACK_D.pack(x), "little")


def _float_eq(a: float, b: float) -> bool:
    # Bit-pattern equality: exact, total, deterministic.
    return _PACK_D.pack(a) == _PACK_D.pack(b)


class Value:
    """One typed tuple field.  Immutable by convention (never mutate)."""

    __slots__ = ("tag", "data")

    def __init__(self, tag: int, data):
        self.tag = tag
        self.data = data

    def __eq__(self, other):
        if not isinstance(other, Value) or self.tag != other.tag:
            return NotImplemented if not isinstance(other, Value) else False
        tag = self.tag
        if tag == FLOAT:
            return _float_eq(self.data, other.data)
        if tag == FLOAT_ARRAY:
            a, b = self.data, other.data
            if len(a) != len(b):
                return False
            n = len(a)
            return struct.pack(f"<{n}d", *a) == struct.pack(f"<{n}d", *b)
        return self.data == other.data

    def __hash__(self):
        tag = self.tag
        if tag == FLOAT:
            return hash((tag, _float_bits(self.data)))
        if tag == FLOAT_ARRAY:
            return hash((tag, tuple(_float_bits(x) for x in self.data)))
        return hash((tag, self.data))

    def __repr__(self):
        return f"Value({TAG_NAMES[self.tag]}, {self.data!r})"


def _check_int64(x: int) -> int:
    if not (_INT64_MIN <= x <= _INT64_MAX):
        raise ValueError(f"integer out of signed 64-bit range: {x}")
    return x


def int_value(x: int) -> Value:
    return Value(INT, _check_int64(x))


def float_value(x: float) -> Value:
    return Value(FLOAT, float(x))


def str_value(x: str) -> Value:
    return Value(STR, x)


def bytes_value(x: bytes) -> Value:
    return Value(BYTES, bytes(x))


def int_array(xs: Iterable[int]) -> Value:
    data = tuple(xs)
    for x in data:
        if isinstance(x, bool) or not isinstance(x, int):
            raise TypeError("int_array elements must be plain ints")
        _check_int64(x)
    return Value(INT_ARRAY, data)


def float_array(xs: Iterable[float]) -> Value:
    data = tuple(float(x) for x in xs)
    return Value(FLOAT_ARRAY, data)


def value_of(x) -> Value:
    """Coerce a Python value to a Value, inferring its tag.

    Empty sequences are ambiguous; use int_array()/float_array() explicitly.
    """
    if isinstance(x, Value):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a tuple field type")
    if isinstance(x, int):
        return int_value(x)
    if isinstance(x, float):
        return float_value(x)
    if isinstance(x, str):
        return str_value(x)
    if isinstance(x, (bytes, bytearray)):
        return bytes_value(bytes(x))
    if isinstance(x, (list, tuple)):
        if not x:
            raise TypeError("empty sequence is ambiguous; use int_array/float_array")
        if all(isinstance(e, int) and not isinstance(e, bool) for e in x):
            return int_array(x)
        if all(isinstance(e, float) for e in x):
            return float_array(x)
        raise TypeError("array fields must be homogeneous ints or floats")
    raise TypeError(f"unsupported tuple field: {type(x).__name__}")


class Tuple:
    """An immutable ordered sequence of Values, arity >= 1."""

    __slots__ = ("fields",)

    def __init__(self, fields: Sequence[Value]):
        fields = tuple(fields)
        if not fields:
            raise ValueError("tuple arity must be >= 1")
        for f in fields:
            if not isinstance(f, Value):
                raise TypeError("Tuple fields must be Values")
        self.fields = fields

    @property
    def arity(self) -> int:
        return len(self.fields)

    def __eq__(self, other):
        return isinstance(other, Tuple) and self.fields == other.fields

    def __hash__(self):
        return hash(self.fields)

    def __repr__(self):
        inner = ", ".join(repr(f.data) for f in self.fields)
        return f"<{inner}>"


def make_tuple(*raw) -> Tuple:
    """Build a Tuple from Python values (see value_of for the coercions)."""
    return Tuple([value_of(x) for x in raw])


# Pattern field kinds.
LITERAL = 0
TYPE_WILDCARD = 1
ANY_WILDCARD = 2


class PatternField:
    __slots__ = ("kind", "tag", "value")

    def __init__(self, kind: int, tag: int | None = None, value: Value | None = None):
        if kind == LITERAL:
            assert value is not None
            tag = value.tag
        elif kind == TYPE_WILDCARD:
            if tag not in ALL_TAGS:
                raise ValueError(f"unknown value tag: {tag}")
        self.kind = kind
        self.tag = tag
        self.value = value

    def __eq__(self, other):
        return (
            isinstance(other, PatternField)
            and self.kind == other.kind
            and self.tag == other.tag
            and self.value == other.value
        )

    def __hash__(self):
        return hash((self.kind, self.tag, self.value))

    def __repr__(self):
        if self.kind == LITERAL:
            return f"lit({self.value.data!r})"
        if self.kind == TYPE_WILDCARD:
            return f"wildcard({TAG_NAMES[self.tag]})"
        return "ANY"


ANY = PatternField(ANY_WILDCARD)


def lit(x) -> PatternField:
    return PatternField(LITERAL, value=value_of(x))


def wildcard(tag: int) -> PatternField:
    return PatternField(TYPE_WILDCARD, tag=tag)


class Template:
    """An immutable ordered sequence of PatternFields, arity >= 1."""

    __slots__ = ("fields",)

    def __init__(self, fields: Sequence[PatternField]):
        fields = tuple(fields)
        if not fields:
            raise ValueError("template arity must be >= 1")
        for f in fields:
            if not isinstance(f, PatternField):
                raise TypeError("Template fields must be PatternFields")
        self.fields = fields

    @property
    def arity(self) -> int:
        return len(self.fields)

    def __eq__(self, other):
        return isinstance(other, Template) and self.fields == other.fields

    def __hash__(self):
        return hash(self.fields)

    def __repr__(self):
        return "<" + ", ".join(repr(f) for f in self.fields) + ">"


def template(*fields) -> Template:
    """Build a Template; non-PatternField arguments become literals."""
    out = []
    for f in fields:
        out.append(f if isinstance(f, PatternField) else lit(f))
    return Template(out)


def match(tpl: Template, tup: Tuple) -> bool:
    """True iff the template selects the tuple.

    Arity must be equal; per position a literal requires value equality
    (floats bit-exact), a type wildcard requires tag equality, and the
    any-wildcard always passes.  Pure and total.
    """
    tf = tpl.fields
    uf = tup.fields
    if len(tf) != len(uf):
        return False
    for pf, v in zip(tf, uf):
        kind = pf.kind
        if kind == ANY_WILDCARD:
            continue
        if kind == TYPE_WILDCARD:
            if pf.tag != v.tag:
                return False
        elif pf.value != v:
            return False
    return True


def template_of(tup: Tuple) -> Template:
    """The all-literal template of a tuple; matches its source by construction."""
    return Template([PatternField(LITERAL, value=v) for v in tup.fields])

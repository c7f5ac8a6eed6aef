"""BER (Basic Encoding Rules) codec for the SNMP subset of ASN.1.

Values are plain Python objects where possible (int, bytes, list) plus a
few thin wrapper types for the application-tagged SNMP kinds.  Decoding
dispatches on a (class, constructed, number) tag triple through a
TypeRegistry; triples with no registration decode to Raw, which keeps the
original bytes so re-encoding is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DecodingError, EncodingError, TruncatedError, UnsupportedFormError

# Tag classes
UNIVERSAL = 0
APPLICATION = 1
CONTEXT = 2
PRIVATE = 3

_CLASS_NAMES = {0: "universal", 1: "application", 2: "context", 3: "private"}


@dataclass(frozen=True)
class Tag:
    cls: int
    constructed: bool
    number: int

    def __post_init__(self):
        if not (0 <= self.cls <= 3):
            raise EncodingError(f"bad tag class {self.cls}")
        if not (0 <= self.number < 2 ** 31):
            raise EncodingError(f"bad tag number {self.number}")

    @property
    def triple(self):
        return (self.cls, 1 if self.constructed else 0, self.number)

    def __repr__(self):
        pc = "constructed" if self.constructed else "primitive"
        return f"Tag({_CLASS_NAMES[self.cls]}, {pc}, {self.number})"


# ---------------------------------------------------------------------------
# Value types

class OctetString(bytes):
    """OCTET STRING; a byte sequence with a text view."""

    def text(self, encoding="utf-8", errors="replace"):
        return self.decode(encoding, errors)


class IpAddress(bytes):
    """Four network-order octets."""

    def __new__(cls, value):
        if isinstance(value, str):
            value = bytes(int(p) for p in value.split("."))
        b = super().__new__(cls, value)
        if len(b) != 4:
            raise EncodingError(f"IpAddress needs 4 octets, got {len(b)}")
        return b

    def text(self):
        return ".".join(str(b) for b in self)


class Opaque(bytes):
    pass


class _Unsigned32(int):
    _limit = 2 ** 32

    def __new__(cls, value):
        v = super().__new__(cls, value)
        if not (0 <= v < cls._limit):
            raise EncodingError(f"{cls.__name__} out of range: {int(v)}")
        return v


class Counter32(_Unsigned32):
    pass


class Gauge32(_Unsigned32):
    pass


class TimeTicks(_Unsigned32):
    def __repr__(self):
        cs = int(self)
        return f"TimeTicks({cs}) {cs // 360000}:{cs // 6000 % 60:02d}:{cs // 100 % 60:02d}.{cs % 100:02d}"


class Counter64(_Unsigned32):
    _limit = 2 ** 64


class _Null:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NULL"

    def __bool__(self):
        return False


NULL = _Null()


class _Marker:
    """Valueless v2c exception marker (noSuchObject and friends)."""

    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name


NO_SUCH_OBJECT = _Marker("noSuchObject")
NO_SUCH_INSTANCE = _Marker("noSuchInstance")
END_OF_MIB_VIEW = _Marker("endOfMibView")

EXCEPTION_MARKERS = (NO_SUCH_OBJECT, NO_SUCH_INSTANCE, END_OF_MIB_VIEW)


@dataclass(frozen=True)
class Oid:
    """OBJECT IDENTIFIER as a bare arc tuple (registry-free)."""

    arcs: tuple

    def __init__(self, arcs):
        object.__setattr__(self, "arcs", tuple(int(a) for a in arcs))

    def __repr__(self):
        return "Oid(%s)" % ".".join(str(a) for a in self.arcs)


@dataclass(frozen=True)
class TaggedSequence:
    """A constructed value under a non-universal tag (e.g. an SNMP PDU)."""

    tag: Tag
    elements: tuple

    def __init__(self, tag, elements):
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "elements", tuple(elements))


@dataclass(frozen=True)
class Raw:
    """Undecodable TLV kept verbatim; re-encoding returns the exact bytes."""

    tag: Tag
    payload: bytes
    encoded: bytes = field(compare=False, default=b"")


# ---------------------------------------------------------------------------
# Length and tag primitives

def encode_length(n):
    """Definite-length field: short form for n <= 127, else minimal long form."""
    if n < 0:
        raise EncodingError(f"negative length {n}")
    if n <= 0x7F:
        return bytes([n])
    body = n.to_bytes((n.bit_length() + 7) // 8, "big")
    return bytes([0x80 | len(body)]) + body


def decode_length(data, offset=0):
    """Return (length, consumed).  Rejects the indefinite form 0x80."""
    if offset >= len(data):
        raise TruncatedError(1, 0)
    first = data[offset]
    if first == 0x80:
        raise UnsupportedFormError("indefinite lengths are not used by SNMP")
    if first <= 0x7F:
        return first, 1
    k = first & 0x7F
    if offset + 1 + k > len(data):
        raise TruncatedError(k, len(data) - offset - 1)
    return int.from_bytes(data[offset + 1:offset + 1 + k], "big"), 1 + k


def encode_tag(tag):
    first = (tag.cls << 6) | (0x20 if tag.constructed else 0)
    if tag.number <= 30:
        return bytes([first | tag.number])
    out = [first | 0x1F]
    n = tag.number
    chunk = [n & 0x7F]
    n >>= 7
    while n:
        chunk.append(0x80 | (n & 0x7F))
        n >>= 7
    out.extend(reversed(chunk))
    return bytes(out)


def decode_tag(data, offset=0):
    """Return (Tag, consumed); supports the multi-byte high-tag form."""
    if offset >= len(data):
        raise TruncatedError(1, 0)
    first = data[offset]
    cls = first >> 6
    constructed = bool(first & 0x20)
    number = first & 0x1F
    consumed = 1
    if number == 0x1F:
        number = 0
        while True:
            if offset + consumed >= len(data):
                raise TruncatedError(consumed + 1, consumed)
            b = data[offset + consumed]
            consumed += 1
            number = (number << 7) | (b & 0x7F)
            if not b & 0x80:
                break
    return Tag(cls, constructed, number), consumed


def _encode_signed_int(n):
    if n >= 0:
        length = n.bit_length() // 8 + 1
    else:
        length = (-n - 1).bit_length() // 8 + 1
    return n.to_bytes(length, "big", signed=True)


def _encode_oid_content(arcs):
    if not arcs:
        return b""
    if len(arcs) == 1:
        subids = [arcs[0] * 40]
    else:
        if arcs[0] > 2 or (arcs[0] < 2 and arcs[1] > 39):
            raise EncodingError(f"invalid leading OID arcs {arcs[:2]}")
        subids = [arcs[0] * 40 + arcs[1]] + list(arcs[2:])
    out = bytearray()
    for sub in subids:
        if sub < 0:
            raise EncodingError(f"negative OID arc {sub}")
        chunk = [sub & 0x7F]
        sub >>= 7
        while sub:
            chunk.append(0x80 | (sub & 0x7F))
            sub >>= 7
        out.extend(reversed(chunk))
    return bytes(out)


def _decode_oid_content(payload):
    subids = []
    cur = 0
    pending = False
    for b in payload:
        cur = (cur << 7) | (b & 0x7F)
        pending = True
        if not b & 0x80:
            subids.append(cur)
            cur = 0
            pending = False
    if pending:
        raise DecodingError("truncated OID sub-identifier")
    if not subids:
        return ()
    first = subids[0]
    if first < 40:
        head = (0, first)
    elif first < 80:
        head = (1, first - 40)
    else:
        head = (2, first - 80)
    return head + tuple(subids[1:])


# ---------------------------------------------------------------------------
# Type registry

TAG_INTEGER = Tag(UNIVERSAL, False, 2)
TAG_OCTET_STRING = Tag(UNIVERSAL, False, 4)
TAG_NULL = Tag(UNIVERSAL, False, 5)
TAG_OID = Tag(UNIVERSAL, False, 6)
TAG_SEQUENCE = Tag(UNIVERSAL, True, 16)
TAG_IPADDRESS = Tag(APPLICATION, False, 0)
TAG_COUNTER32 = Tag(APPLICATION, False, 1)
TAG_GAUGE32 = Tag(APPLICATION, False, 2)
TAG_TIMETICKS = Tag(APPLICATION, False, 3)
TAG_OPAQUE = Tag(APPLICATION, False, 4)
TAG_COUNTER64 = Tag(APPLICATION, False, 6)


class TypeRegistry:
    """Maps (class, constructed, number) triples to decode kinds.

    Lookups of unregistered triples return None, which makes decode fall
    back to Raw instead of failing.
    """

    def __init__(self, initial=None):
        self._table = dict(initial._table) if initial is not None else {}

    def register(self, cls, constructed, number, kind):
        self._table[(cls, int(bool(constructed)), number)] = kind

    def lookup(self, tag):
        return self._table.get(tag.triple)

    def copy(self):
        return TypeRegistry(self)


def _make_default_registry():
    r = TypeRegistry()
    r.register(*TAG_INTEGER.triple, "integer")
    r.register(*TAG_OCTET_STRING.triple, "octet-string")
    r.register(*TAG_NULL.triple, "null")
    r.register(*TAG_OID.triple, "oid")
    r.register(*TAG_SEQUENCE.triple, "sequence")
    r.register(*TAG_IPADDRESS.triple, "ip-address")
    r.register(*TAG_COUNTER32.triple, "counter32")
    r.register(*TAG_GAUGE32.triple, "gauge32")
    r.register(*TAG_TIMETICKS.triple, "timeticks")
    r.register(*TAG_OPAQUE.triple, "opaque")
    r.register(*TAG_COUNTER64.triple, "counter64")
    return r


DEFAULT_REGISTRY = _make_default_registry()


def register_type(registry, cls, constructed, number, kind):
    registry.register(cls, constructed, number, kind)


# ---------------------------------------------------------------------------
# Encoding

def _tlv(tag, content):
    return encode_tag(tag) + encode_length(len(content)) + content


_MARKER_TAGS = {
    id(NO_SUCH_OBJECT): Tag(CONTEXT, False, 0),
    id(NO_SUCH_INSTANCE): Tag(CONTEXT, False, 1),
    id(END_OF_MIB_VIEW): Tag(CONTEXT, False, 2),
}


def encode(value):
    """Encode one abstract value into a complete TLV octet string."""
    if value is None or value is NULL:
        return _tlv(TAG_NULL, b"")
    t = type(value)
    if t is Raw:
        if value.encoded:
            return bytes(value.encoded)
        return _tlv(value.tag, value.payload)
    if t is Counter32:
        return _tlv(TAG_COUNTER32, _encode_signed_int(int(value)))
    if t is Gauge32:
        return _tlv(TAG_GAUGE32, _encode_signed_int(int(value)))
    if t is TimeTicks:
        return _tlv(TAG_TIMETICKS, _encode_signed_int(int(value)))
    if t is Counter64:
        return _tlv(TAG_COUNTER64, _encode_signed_int(int(value)))
    if isinstance(value, bool):
        raise EncodingError("cannot encode value kind 'bool'")
    if isinstance(value, int):
        return _tlv(TAG_INTEGER, _encode_signed_int(value))
    if t is IpAddress:
        return _tlv(TAG_IPADDRESS, bytes(value))
    if t is Opaque:
        return _tlv(TAG_OPAQUE, bytes(value))
    if isinstance(value, bytes):
        return _tlv(TAG_OCTET_STRING, bytes(value))
    if isinstance(value, str):
        return _tlv(TAG_OCTET_STRING, value.encode("utf-8"))
    if t is Oid:
        return _tlv(TAG_OID, _encode_oid_content(value.arcs))
    if t is _Marker:
        return _tlv(_MARKER_TAGS[id(value)], b"")
    if t is TaggedSequence:
        return _tlv(value.tag, b"".join(encode(e) for e in value.elements))
    if isinstance(value, (list, tuple)):
        return _tlv(TAG_SEQUENCE, b"".join(encode(e) for e in value))
    arcs = getattr(value, "arcs", None)
    if arcs is not None:
        return _tlv(TAG_OID, _encode_oid_content(tuple(arcs)))
    raise EncodingError(f"cannot encode value kind {type(value).__name__!r}")


# ---------------------------------------------------------------------------
# Decoding

def decode(data, offset=0, registry=None):
    """Decode one TLV starting at offset; return (value, consumed)."""
    if registry is None:
        registry = DEFAULT_REGISTRY
    data = bytes(data) if not isinstance(data, (bytes, bytearray, memoryview)) else data
    tag, tag_len = decode_tag(data, offset)
    length, len_len = decode_length(data, offset + tag_len)
    header = tag_len + len_len
    if offset + header + length > len(data):
        raise TruncatedError(length, len(data) - offset - header)
    payload = bytes(data[offset + header:offset + header + length])
    consumed = header + length
    kind = registry.lookup(tag)
    if kind is None:
        encoded = bytes(data[offset:offset + consumed])
        return Raw(tag, payload, encoded), consumed
    return _decode_value(kind, tag, payload, registry), consumed


def _decode_children(payload, registry):
    out = []
    pos = 0
    while pos < len(payload):
        value, used = decode(payload, pos, registry)
        out.append(value)
        pos += used
    return out


def _decode_value(kind, tag, payload, registry):
    if kind == "integer":
        if not payload:
            raise DecodingError("empty INTEGER payload")
        return int.from_bytes(payload, "big", signed=True)
    if kind == "octet-string":
        return OctetString(payload)
    if kind == "null":
        return NULL
    if kind == "oid":
        return Oid(_decode_oid_content(payload))
    if kind == "sequence":
        return _decode_children(payload, registry)
    if kind == "ip-address":
        if len(payload) != 4:
            raise DecodingError(f"IpAddress payload of {len(payload)} octets")
        return IpAddress(payload)
    if kind == "counter32":
        return Counter32(int.from_bytes(payload, "big"))
    if kind == "gauge32":
        return Gauge32(int.from_bytes(payload, "big"))
    if kind == "timeticks":
        return TimeTicks(int.from_bytes(payload, "big"))
    if kind == "opaque":
        return Opaque(payload)
    if kind == "counter64":
        return Counter64(int.from_bytes(payload, "big"))
    if kind == "no-such-object":
        return NO_SUCH_OBJECT
    if kind == "no-such-instance":
        return NO_SUCH_INSTANCE
    if kind == "end-of-mib-view":
        return END_OF_MIB_VIEW
    if kind == "tagged-sequence":
        return TaggedSequence(tag, _decode_children(payload, registry))
    raise DecodingError(f"no decoder for registered kind {kind!r}")

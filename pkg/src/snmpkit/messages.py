"""PDU and message structures for SNMPv1/v2c/v3 and their BER mapping."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import ber
from .errors import DecodingError, SnmpError
from .oids import OidRef

V1 = 0
V2C = 1
V3 = 3

# PDU type numbers (context-class constructed tags)
GET_REQUEST = 0
GET_NEXT_REQUEST = 1
RESPONSE = 2
SET_REQUEST = 3
TRAP_V1 = 4
GET_BULK_REQUEST = 5
INFORM_REQUEST = 6
SNMPV2_TRAP = 7
REPORT = 8

PDU_TYPE_NAMES = {
    GET_REQUEST: "get-request",
    GET_NEXT_REQUEST: "get-next-request",
    RESPONSE: "response",
    SET_REQUEST: "set-request",
    TRAP_V1: "trap-v1",
    GET_BULK_REQUEST: "get-bulk-request",
    INFORM_REQUEST: "inform-request",
    SNMPV2_TRAP: "snmpv2-trap",
    REPORT: "report",
}

ERROR_STATUS_NAMES = {
    0: "noError", 1: "tooBig", 2: "noSuchName", 3: "badValue", 4: "readOnly",
    5: "genErr", 6: "noAccess", 7: "wrongType", 8: "wrongLength",
    9: "wrongEncoding", 10: "wrongValue", 11: "noCreation",
    12: "inconsistentValue", 13: "resourceUnavailable", 14: "commitFailed",
    15: "undoFailed", 16: "authorizationError", 17: "notWritable",
    18: "inconsistentName",
}

MAX_UDP_PAYLOAD = 65507
DEFAULT_MAX_MSG_SIZE = MAX_UDP_PAYLOAD

# USM statistics OIDs signalled in Report PDUs (RFC 3414 usmStats group)
USM_STATS_PREFIX = (1, 3, 6, 1, 6, 3, 15, 1, 1)
USM_STATS_UNKNOWN_ENGINE_IDS = USM_STATS_PREFIX + (4, 0)
USM_STATS_NOT_IN_TIME_WINDOWS = USM_STATS_PREFIX + (2, 0)
USM_STATS_WRONG_DIGESTS = USM_STATS_PREFIX + (5, 0)


@dataclass
class SnmpDefaults:
    """Process-wide defaults, adjustable at runtime."""

    port: int = 161
    community: str = "public"
    version: int = V2C
    context: str = ""


defaults = SnmpDefaults()


def _snmp_registry():
    r = ber.DEFAULT_REGISTRY.copy()
    for n in range(9):
        r.register(ber.CONTEXT, 1, n, "tagged-sequence")
    r.register(ber.CONTEXT, 0, 0, "no-such-object")
    r.register(ber.CONTEXT, 0, 1, "no-such-instance")
    r.register(ber.CONTEXT, 0, 2, "end-of-mib-view")
    return r


SNMP_REGISTRY = _snmp_registry()


@dataclass
class VarBind:
    name: object  # OidRef or ber.Oid
    value: object = ber.NULL

    @property
    def arcs(self):
        return tuple(self.name.arcs)


@dataclass
class Pdu:
    pdu_type: int
    request_id: int
    error_status: int = 0
    error_index: int = 0
    bindings: list = field(default_factory=list)

    # get-bulk reuses the two error slots
    @property
    def non_repeaters(self):
        return self.error_status

    @property
    def max_repetitions(self):
        return self.error_index


@dataclass
class TrapV1Pdu:
    enterprise: object  # OidRef or ber.Oid
    agent_addr: ber.IpAddress
    generic_trap: int
    specific_trap: int
    timestamp: int
    bindings: list = field(default_factory=list)
    pdu_type: int = TRAP_V1


@dataclass
class CommunityMessage:
    version: int  # 0 = v1, 1 = v2c
    community: bytes
    pdu: object  # Pdu or TrapV1Pdu


@dataclass
class UsmParams:
    engine_id: bytes = b""
    engine_boots: int = 0
    engine_time: int = 0
    user_name: bytes = b""
    auth_params: bytes = b""
    priv_params: bytes = b""


@dataclass
class ScopedPdu:
    context_engine_id: bytes = b""
    context_name: bytes = b""
    pdu: Pdu | None = None


FLAG_AUTH = 0x01
FLAG_PRIV = 0x02
FLAG_REPORTABLE = 0x04


@dataclass
class V3Message:
    msg_id: int
    flags: int
    usm: UsmParams
    scoped_pdu: ScopedPdu | None = None
    encrypted_pdu: bytes | None = None  # ciphertext when the priv flag is set
    msg_max_size: int = DEFAULT_MAX_MSG_SIZE
    msg_version: int = V3
    msg_security_model: int = 3  # USM


# ---------------------------------------------------------------------------
# PDU <-> BER


def _binding_to_ber(vb):
    name = vb.name if isinstance(vb.name, ber.Oid) else ber.Oid(vb.name.arcs)
    value = vb.value
    if isinstance(value, OidRef):
        value = ber.Oid(value.arcs)
    return [name, value]


def pdu_to_ber(pdu):
    tag = ber.Tag(ber.CONTEXT, True, pdu.pdu_type)
    if isinstance(pdu, TrapV1Pdu):
        ent = pdu.enterprise if isinstance(pdu.enterprise, ber.Oid) \
            else ber.Oid(pdu.enterprise.arcs)
        return ber.TaggedSequence(tag, [
            ent, pdu.agent_addr, pdu.generic_trap, pdu.specific_trap,
            ber.TimeTicks(pdu.timestamp),
            [_binding_to_ber(vb) for vb in pdu.bindings],
        ])
    return ber.TaggedSequence(tag, [
        pdu.request_id, pdu.error_status, pdu.error_index,
        [_binding_to_ber(vb) for vb in pdu.bindings],
    ])


def _binding_from_ber(item, registry):
    if not isinstance(item, list) or len(item) != 2 or not isinstance(item[0], ber.Oid):
        raise DecodingError(f"malformed variable binding {item!r}")
    name = item[0]
    if registry is not None:
        name = registry.resolve(name.arcs)
    return VarBind(name, item[1])


def pdu_from_ber(ts, registry=None, version=None):
    if isinstance(ts, ber.Raw):
        raise DecodingError(f"unknown PDU tag {ts.tag!r}")
    if not isinstance(ts, ber.TaggedSequence) or ts.tag.cls != ber.CONTEXT:
        raise DecodingError(f"expected a PDU, got {ts!r}")
    pdu_type = ts.tag.number
    if pdu_type not in PDU_TYPE_NAMES:
        raise DecodingError(f"unknown PDU tag number {pdu_type}")
    els = list(ts.elements)
    if pdu_type == TRAP_V1:
        if len(els) != 6:
            raise DecodingError("trap-v1 PDU needs 6 elements")
        ent, addr, generic, specific, stamp, bindings = els
        if not isinstance(ent, ber.Oid) or not isinstance(addr, ber.IpAddress):
            raise DecodingError("malformed trap-v1 header")
        return TrapV1Pdu(ent if registry is None else registry.resolve(ent.arcs),
                         addr, int(generic), int(specific), int(stamp),
                         [_binding_from_ber(b, registry) for b in bindings])
    if len(els) != 4:
        raise DecodingError(f"PDU needs 4 elements, got {len(els)}")
    request_id, error_status, error_index, bindings = els
    if not all(isinstance(x, int) for x in (request_id, error_status, error_index)):
        raise DecodingError("malformed PDU header")
    if not isinstance(bindings, list):
        raise DecodingError("malformed variable-bindings list")
    vbs = [_binding_from_ber(b, registry) for b in bindings]
    if version == V1:
        for vb in vbs:
            if vb.value in ber.EXCEPTION_MARKERS:
                raise DecodingError(
                    f"v2 exception value {vb.value!r} in a v1 message")
    return Pdu(pdu_type, int(request_id), int(error_status), int(error_index), vbs)


# ---------------------------------------------------------------------------
# Messages <-> BER


def encode_message(msg):
    """Serialize a CommunityMessage or V3Message to wire bytes."""
    if isinstance(msg, CommunityMessage):
        community = msg.community if isinstance(msg.community, bytes) \
            else msg.community.encode("utf-8")
        return ber.encode([msg.version, ber.OctetString(community),
                           pdu_to_ber(msg.pdu)])
    if isinstance(msg, V3Message):
        if msg.flags & FLAG_PRIV and not msg.flags & FLAG_AUTH:
            raise SnmpError("priv flag requires the auth flag")
        usm = msg.usm
        sec_params = ber.encode([
            ber.OctetString(usm.engine_id), usm.engine_boots, usm.engine_time,
            ber.OctetString(usm.user_name), ber.OctetString(usm.auth_params),
            ber.OctetString(usm.priv_params),
        ])
        if msg.flags & FLAG_PRIV:
            if msg.encrypted_pdu is None:
                raise SnmpError("priv flag set but no encrypted scoped PDU")
            msg_data = ber.OctetString(msg.encrypted_pdu)
        else:
            sp = msg.scoped_pdu
            msg_data = [ber.OctetString(sp.context_engine_id),
                        ber.OctetString(sp.context_name), pdu_to_ber(sp.pdu)]
        return ber.encode([
            msg.msg_version,
            [msg.msg_id, msg.msg_max_size,
             ber.OctetString(bytes([msg.flags])), msg.msg_security_model],
            ber.OctetString(sec_params),
            msg_data,
        ])
    raise SnmpError(f"cannot encode message of type {type(msg).__name__}")


def encode_scoped_pdu(scoped):
    return ber.encode([ber.OctetString(scoped.context_engine_id),
                       ber.OctetString(scoped.context_name),
                       pdu_to_ber(scoped.pdu)])


def decode_scoped_pdu(data, registry=None):
    value, consumed = ber.decode(data, registry=SNMP_REGISTRY)
    if not isinstance(value, list) or len(value) != 3:
        raise DecodingError("malformed scoped PDU")
    engine_id, context, pdu_ts = value
    return ScopedPdu(bytes(engine_id), bytes(context),
                     pdu_from_ber(pdu_ts, registry)), consumed


def decode_message(data, registry=None, expected_version=None):
    """Parse one complete SNMP message; inverse of encode_message."""
    outer, consumed = ber.decode(data, registry=SNMP_REGISTRY)
    if not isinstance(outer, list) or not outer or not isinstance(outer[0], int):
        raise DecodingError("message is not SEQUENCE { version, ... }")
    version = outer[0]
    if expected_version is not None and version != expected_version:
        raise DecodingError(
            f"version mismatch: got {version}, expected {expected_version}")
    if version in (V1, V2C):
        if len(outer) != 3:
            raise DecodingError("community message needs 3 elements")
        _, community, pdu_ts = outer
        if not isinstance(community, bytes):
            raise DecodingError("community is not an OCTET STRING")
        return CommunityMessage(version, bytes(community),
                                pdu_from_ber(pdu_ts, registry, version))
    if version == V3:
        if len(outer) != 4:
            raise DecodingError("v3 message needs 4 elements")
        _, global_data, sec_bytes, msg_data = outer
        if not isinstance(global_data, list) or len(global_data) != 4:
            raise DecodingError("malformed msgGlobalData")
        msg_id, max_size, flags_octet, sec_model = global_data
        if not isinstance(flags_octet, bytes) or len(flags_octet) != 1:
            raise DecodingError("malformed msgFlags")
        flags = flags_octet[0]
        sec, _ = ber.decode(bytes(sec_bytes), registry=SNMP_REGISTRY)
        if not isinstance(sec, list) or len(sec) != 6:
            raise DecodingError("malformed USM security parameters")
        usm = UsmParams(bytes(sec[0]), int(sec[1]), int(sec[2]),
                        bytes(sec[3]), bytes(sec[4]), bytes(sec[5]))
        msg = V3Message(int(msg_id), flags, usm, msg_max_size=int(max_size),
                        msg_security_model=int(sec_model))
        if flags & FLAG_PRIV:
            if not flags & FLAG_AUTH:
                raise DecodingError("priv flag set without auth flag")
            if not isinstance(msg_data, bytes):
                raise DecodingError("encrypted scoped PDU must be an OCTET STRING")
            if len(usm.priv_params) == 0:
                raise DecodingError("priv flag set but priv_params empty")
            msg.encrypted_pdu = bytes(msg_data)
        else:
            if not isinstance(msg_data, list) or len(msg_data) != 3:
                raise DecodingError("malformed scoped PDU")
            engine_id, context, pdu_ts = msg_data
            msg.scoped_pdu = ScopedPdu(bytes(engine_id), bytes(context),
                                       pdu_from_ber(pdu_ts, registry))
        return msg
    raise DecodingError(f"unsupported SNMP version {version}")


# ---------------------------------------------------------------------------
# Request construction


def make_request_pdu(kind, bindings_spec, registry, request_id):
    """Build a request PDU from OID specs; bare specs get Null values."""
    if not bindings_spec:
        raise SnmpError("empty variable-bindings list")
    bindings = []
    for item in bindings_spec:
        if isinstance(item, tuple) and len(item) == 2 and \
                not all(isinstance(e, int) for e in item):
            oid_spec, value = item
        elif isinstance(item, list) and len(item) == 2 and \
                not all(isinstance(e, int) for e in item):
            oid_spec, value = item
        else:
            oid_spec, value = item, ber.NULL
        bindings.append(VarBind(registry.resolve(oid_spec), value))
    return Pdu(kind, request_id, bindings=bindings)


def response_for(pdu, bindings, error_status=0, error_index=0):
    return Pdu(RESPONSE, pdu.request_id, error_status, error_index, bindings)

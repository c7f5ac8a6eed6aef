"""Session-oriented SNMP manager API.

Sessions wrap an endpoint plus per-peer protocol state (community or v3
credential and discovered engine).  On top of the raw request primitive
sit get/get-next/set/bulk/inform/trap, the compound walk, and the
table-oriented select.
"""

from __future__ import annotations

import contextlib
import secrets
import time

from . import ber, messages, transport, usm
from .errors import (
    AuthenticationError, SnmpError, SnmpStatusError, UsmProtocolError,
)
from .messages import (
    FLAG_AUTH, FLAG_PRIV, FLAG_REPORTABLE,
    GET_BULK_REQUEST, GET_NEXT_REQUEST, GET_REQUEST, INFORM_REQUEST, REPORT,
    RESPONSE, SET_REQUEST, TRAP_V1,
    CommunityMessage, Pdu, ScopedPdu, TrapV1Pdu, UsmParams, V3Message,
    V1, V2C, V3, defaults,
)
from .smi import table_schema

WALK_BULK_REPETITIONS = 25


def _check_status(response):
    if response.error_status:
        name = messages.ERROR_STATUS_NAMES.get(response.error_status,
                                               str(response.error_status))
        raise SnmpStatusError(response.error_status, response.error_index, name)
    return response


class Session:
    """One SNMP peer: endpoint, protocol version and security state.

    A session supports one outstanding request at a time and must not be
    shared between threads; independent sessions are fully concurrent.
    """

    def __init__(self, host, port, version, community, credential,
                 registry, endpoint, estimator, context="",
                 clock=time.monotonic):
        self.host = host
        self.port = port
        self.version = version
        self.community = community
        self.credential = credential
        self.registry = registry
        self.endpoint = endpoint
        self.estimator = estimator
        self.context = context
        self.clock = clock
        self.engine = usm.EngineState()
        self._request_id = secrets.randbelow(2 ** 31 - 1) + 1
        self._opened_at = time.monotonic()

    @property
    def closed(self):
        return getattr(self.endpoint, "closed", False)

    def next_request_id(self):
        rid = self._request_id
        self._request_id = self._request_id % (2 ** 31 - 1) + 1
        return rid

    def __repr__(self):
        return (f"<Session {self.host}:{self.port} "
                f"v{ {V1: '1', V2C: '2c', V3: '3'}[self.version] }>")


def open_session(host, port=None, version=None, community=None, user=None,
                 auth=None, priv=None, registry=None, transport_factory=None,
                 rto_min=transport.RTO_MIN, rto_max=transport.RTO_MAX,
                 max_retries=transport.DEFAULT_MAX_RETRIES, context=None,
                 clock=time.monotonic):
    """Open a session to a peer; omitted arguments take process defaults."""
    port = defaults.port if port is None else port
    version = defaults.version if version is None else version
    community = defaults.community if community is None else community
    context = defaults.context if context is None else context
    if version not in (V1, V2C, V3):
        raise SnmpError(f"unsupported SNMP version {version!r}")
    credential = None
    if version == V3:
        if user is None:
            raise SnmpError("v3 session requires an explicit user")
        credential = usm.Credential.create(user, auth, priv)
    elif user is not None:
        raise SnmpError("user/auth/priv only apply to v3 sessions")
    if registry is None:
        from .mibs import default_registry
        registry = default_registry()
    factory = transport_factory or transport.open_endpoint
    endpoint = factory(host, port)
    estimator = transport.RttEstimator(rto_min, rto_max, max_retries)
    return Session(host, port, version, community, credential,
                   registry, endpoint, estimator, context, clock)


def close_session(session):
    """Close the session's endpoint; safe to call twice."""
    session.endpoint.close()


@contextlib.contextmanager
def with_session(host, **kwargs):
    session = open_session(host, **kwargs)
    try:
        yield session
    finally:
        close_session(session)


def _session_for(session_or_host, **kwargs):
    """(session, ephemeral?) — hostname strings open a throwaway session."""
    if isinstance(session_or_host, str):
        return open_session(session_or_host, **kwargs), True
    return session_or_host, False


# ---------------------------------------------------------------------------
# The core request primitive


def request(session, pdu_kind, bindings_spec, context=None):
    """Issue one request and return the response (OidRef, value) pairs.

    A non-zero error-status in the response raises SnmpStatusError.
    """
    pdu = messages.make_request_pdu(pdu_kind, bindings_spec,
                                    session.registry, session.next_request_id())
    response = _check_status(send_pdu(session, pdu, context))
    return [(vb.name, vb.value) for vb in response.bindings]


def send_pdu(session, pdu, context=None):
    """Transmit a prebuilt PDU and return the matched response PDU."""
    if session.version in (V1, V2C):
        return _community_exchange(session, pdu)
    return _v3_exchange(session, pdu, context)


def _community_exchange(session, pdu):
    payload = messages.encode_message(
        CommunityMessage(session.version, session.community.encode()
                         if isinstance(session.community, str)
                         else session.community, pdu))
    matched = {}

    def match(data):
        try:
            msg = messages.decode_message(data, session.registry)
        except Exception:
            return False
        if not isinstance(msg, CommunityMessage) or \
                not isinstance(msg.pdu, Pdu) or \
                msg.pdu.pdu_type != RESPONSE or \
                msg.pdu.request_id != pdu.request_id:
            return False
        matched["pdu"] = msg.pdu
        return True

    transport.exchange(session.endpoint, payload, session.estimator, match,
                       clock=session.clock)
    return matched["pdu"]


def _v3_exchange(session, pdu, context=None):
    if not session.engine.discovered:
        _discover_engine(session)
    response = _authenticated_exchange(session, pdu, context)
    if response.pdu_type == REPORT:
        # time-window (or similar) report: the engine clock was adopted
        # during verification, so one resend suffices
        pdu.request_id = session.next_request_id()
        response = _authenticated_exchange(session, pdu, context)
        if response.pdu_type == REPORT:
            raise UsmProtocolError(
                f"peer keeps reporting: {response.bindings!r}")
    return response


def _discover_engine(session):
    """Learn the peer engine id/clock from an unauthenticated Report."""
    probe = Pdu(GET_REQUEST, session.next_request_id())
    msg = V3Message(session.next_request_id(), FLAG_REPORTABLE, UsmParams(),
                    ScopedPdu(pdu=probe))
    reply = _raw_v3_exchange(session, msg)
    if reply.scoped_pdu is None or reply.scoped_pdu.pdu is None or \
            reply.scoped_pdu.pdu.pdu_type != REPORT:
        raise UsmProtocolError("engine discovery did not yield a Report")
    usm_params = reply.usm
    if not usm_params.engine_id:
        raise UsmProtocolError("discovery Report carries no engine id")
    session.engine.adopt(usm_params.engine_id, usm_params.engine_boots,
                         usm_params.engine_time, session.credential)


def _authenticated_exchange(session, pdu, context=None):
    cred = session.credential
    engine = session.engine
    context_name = (session.context if context is None else context)
    scoped = ScopedPdu(engine.engine_id, context_name.encode()
                       if isinstance(context_name, str) else context_name, pdu)
    flags = FLAG_REPORTABLE
    if cred.auth is not None:
        flags |= FLAG_AUTH
    if cred.priv is not None:
        flags |= FLAG_PRIV

    usm_params = UsmParams(
        engine_id=engine.engine_id,
        engine_boots=engine.engine_boots,
        engine_time=engine.current_time(),
        user_name=cred.user.encode(),
    )
    msg = V3Message(session.next_request_id(), flags, usm_params)
    if flags & FLAG_PRIV:
        plaintext = messages.encode_scoped_pdu(scoped)
        msg.encrypted_pdu, usm_params.priv_params = usm.encrypt_scoped_pdu(
            plaintext, engine.priv_key, engine.engine_boots)
    else:
        msg.scoped_pdu = scoped

    if flags & FLAG_AUTH:
        usm_params.auth_params = bytes(usm.MAC_LENGTH)
        wire = messages.encode_message(msg)
        mac = usm.sign(wire, engine.auth_key, cred.auth[0])
        usm_params.auth_params = mac
    reply = _raw_v3_exchange(session, msg, expected_request_id=pdu.request_id)
    return _open_reply(session, reply)


def _raw_v3_exchange(session, msg, expected_request_id=None):
    payload = messages.encode_message(msg)
    matched = {}

    def match(data):
        try:
            reply = messages.decode_message(data, session.registry)
        except Exception:
            return False
        if not isinstance(reply, V3Message):
            return False
        if reply.msg_id != msg.msg_id:
            # engines echo msg_id; reports about our request also match
            # on the inner request id when readable
            if expected_request_id is None or reply.scoped_pdu is None or \
                    reply.scoped_pdu.pdu is None or \
                    reply.scoped_pdu.pdu.request_id != expected_request_id:
                return False
        matched["msg"] = reply
        matched["wire"] = data
        return True

    transport.exchange(session.endpoint, payload, session.estimator, match,
                       clock=session.clock)
    return _verify_reply(session, matched["msg"], matched["wire"])


def _verify_reply(session, reply, wire):
    """Check the inbound MAC (when present) against the localized key."""
    if reply.flags & FLAG_AUTH and session.engine.auth_key is not None:
        mac = reply.usm.auth_params
        if len(mac) != usm.MAC_LENGTH:
            raise AuthenticationError("reply MAC has wrong length")
        reply.usm.auth_params = bytes(usm.MAC_LENGTH)
        blanked = messages.encode_message(reply)
        reply.usm.auth_params = mac
        if not usm.verify(blanked, session.engine.auth_key,
                          session.credential.auth[0], mac):
            raise AuthenticationError("reply failed message authentication")
    return reply


def _open_reply(session, reply):
    """Decrypt if needed, track the engine clock, return the inner PDU."""
    engine = session.engine
    if reply.usm.engine_id and reply.usm.engine_id == engine.engine_id:
        engine.adopt(reply.usm.engine_id, reply.usm.engine_boots,
                     reply.usm.engine_time, session.credential)
    if reply.flags & FLAG_PRIV:
        plaintext = usm.decrypt_scoped_pdu(
            reply.encrypted_pdu, engine.priv_key, reply.usm.priv_params)
        scoped, _ = messages.decode_scoped_pdu(plaintext, session.registry)
    else:
        scoped = reply.scoped_pdu
    if scoped is None or scoped.pdu is None:
        raise UsmProtocolError("reply carries no PDU")
    return scoped.pdu


# ---------------------------------------------------------------------------
# Operations


def get(session_or_host, oids, **session_kwargs):
    """Fetch values; the output shape mirrors the input shape.

    A single OID spec yields a single value, a list yields a list.  A
    hostname string in place of a session opens a temporary one.
    """
    session, ephemeral = _session_for(session_or_host, **session_kwargs)
    try:
        single = _is_single_spec(oids)
        specs = [oids] if single else list(oids)
        pairs = request(session, GET_REQUEST, specs)
        values = [value for _, value in pairs]
        return values[0] if single else values
    finally:
        if ephemeral:
            close_session(session)


def _is_single_spec(oids):
    if isinstance(oids, str):
        return True
    if isinstance(oids, (list, tuple)):
        # a bare arc tuple like (1,3,6,...) is one OID, not many
        return bool(oids) and all(isinstance(x, int) for x in oids)
    return True  # OidRef / OidNode / Oid


def get_next(session, oids):
    """One get-next step; returns (OidRef, value) pairs."""
    specs = [oids] if _is_single_spec(oids) else list(oids)
    return request(session, GET_NEXT_REQUEST, specs)


def set_values(session, pairs):
    """Set request from (oid-spec, value) pairs; returns the echoed pairs."""
    return request(session, SET_REQUEST, list(pairs))


def bulk(session, non_repeaters, max_repetitions, oids):
    """Get-bulk; requires v2c or later."""
    if session.version == V1:
        raise SnmpError("get-bulk requires SNMPv2c or later")
    specs = [oids] if _is_single_spec(oids) else list(oids)
    pdu = messages.make_request_pdu(GET_BULK_REQUEST, specs,
                                    session.registry, session.next_request_id())
    pdu.error_status = int(non_repeaters)
    pdu.error_index = int(max_repetitions)
    response = _check_status(send_pdu(session, pdu))
    return [(vb.name, vb.value) for vb in response.bindings]


def inform(session, bindings):
    """Inform-request (acknowledged notification); v2c or later."""
    if session.version == V1:
        raise SnmpError("inform requires SNMPv2c or later")
    return request(session, INFORM_REQUEST, list(bindings))


def trap_v1(session, enterprise, generic, specific, bindings=()):
    """Fire-and-forget SNMPv1 trap; only defined for v1 sessions."""
    if session.version != V1:
        raise SnmpError("trap-v1 is only defined for SNMPv1 sessions")
    try:
        local_ip = session.endpoint.local_address[0]
        addr = ber.IpAddress(bytes(int(p) for p in local_ip.split(".")))
    except Exception:
        addr = ber.IpAddress(b"\x00\x00\x00\x00")
    ticks = int((time.monotonic() - session._opened_at) * 100)
    vbs = [messages.VarBind(session.registry.resolve(spec), value)
           for spec, value in bindings]
    pdu = TrapV1Pdu(session.registry.resolve(enterprise), addr,
                    int(generic), int(specific), ticks, vbs)
    payload = messages.encode_message(
        CommunityMessage(V1, session.community.encode()
                         if isinstance(session.community, str)
                         else session.community, pdu))
    session.endpoint.send(payload)


def walk(session_or_host, subtree, **session_kwargs):
    """All (OidRef, value) pairs under a subtree, in lexicographic order."""
    session, ephemeral = _session_for(session_or_host, **session_kwargs)
    try:
        return _walk(session, subtree)
    finally:
        if ephemeral:
            close_session(session)


def _walk(session, subtree):
    prefix = tuple(session.registry.resolve(subtree).arcs)
    out = []
    cursor = prefix
    done = False
    while not done:
        if session.version == V1:
            step = get_next(session, [ber.Oid(cursor)])
        else:
            step = bulk(session, 0, WALK_BULK_REPETITIONS, [ber.Oid(cursor)])
        if not step:
            break
        progressed = False
        for name, value in step:
            arcs = tuple(name.arcs)
            if value is ber.END_OF_MIB_VIEW or arcs[:len(prefix)] != prefix \
                    or arcs <= cursor:
                done = True
                break
            out.append((name, value))
            cursor = arcs
            progressed = True
        if not progressed:
            break
    return out


# ---------------------------------------------------------------------------
# Table select


class TableRow:
    """One conceptual row: index arcs plus the ordered column cells."""

    def __init__(self, schema, index, cells):
        self.schema = schema
        self.index = tuple(index)
        self.cells = list(cells)  # [(column OidRef, value)] in column order

    def __repr__(self):
        idx = ".".join(map(str, self.index))
        head = ", ".join(f"{_leaf_name(ref)}={value!r}"
                         for ref, value in self.cells[:3])
        return f"<{self.schema.type_name}[{idx}] {head}...>"


def _leaf_name(ref):
    node = getattr(ref, "node", None)
    if node is not None and node.name:
        return node.name
    return ".".join(map(str, ref.arcs))


def plain_value(row):
    """The ordered (column OidRef, value) pairs of a row."""
    return list(row.cells)


def value_by_column(row, column):
    """Cell value by column name, OidRef or arcs."""
    want_arcs = None
    if not isinstance(column, str):
        want_arcs = tuple(getattr(column, "arcs", column))
    for ref, value in row.cells:
        if want_arcs is not None:
            base = tuple(ref.arcs)[:len(want_arcs)]
            if base == want_arcs:
                return value
        elif _leaf_name(ref) == column:
            return value
    raise SnmpError(f"row has no column {column!r}")


def select(table_name, from_, **session_kwargs):
    """Fetch a conceptual table as TableRow objects.

    Row indices are discovered by walking the first column only; each
    row is then fetched with a single multi-binding get, so a table of R
    rows costs at most R + 2 exchanges regardless of column count.
    """
    session, ephemeral = _session_for(from_, **session_kwargs)
    try:
        return _select(session, table_name)
    finally:
        if ephemeral:
            close_session(session)


def _select(session, table_name):
    registry = session.registry
    _, entry, schema = table_schema(registry, table_name)
    columns = [registry.resolve(entry.arcs + (arc,))
               for arc in sorted(registry.resolve(entry).node.children)]
    if not columns:
        raise SnmpError(f"table {table_name!r} has no columns")

    first = columns[0]
    first_arcs = tuple(first.arcs)
    indices = [tuple(name.arcs)[len(first_arcs):]
               for name, _ in _walk(session, first)]

    rows = []
    for index in indices:
        specs = [ber.Oid(tuple(col.arcs) + index) for col in columns]
        pdu = messages.make_request_pdu(GET_REQUEST, specs, registry,
                                        session.next_request_id())
        response = _check_status(send_pdu(session, pdu))
        cells = [(columns[i], vb.value)
                 for i, vb in enumerate(response.bindings)]
        rows.append(TableRow(schema, index, cells))
    return rows

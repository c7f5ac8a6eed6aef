"""Embeddable SNMPv1/v2c agent: handler dispatch tree and UDP service loop.

Variables are served by handler functions attached at base OIDs.  Called
with an empty rest-id list a handler enumerates its children (a ChildSpec:
a count, a flat arc list, or a list of arc lists); called with rest ids it
returns the value for that instance or None.
"""

from __future__ import annotations

import platform
import socket
import threading
import time

from . import ber, messages
from .errors import SnmpError, SnmpKitError, TransportError
from .messages import (
    GET_BULK_REQUEST, GET_NEXT_REQUEST, GET_REQUEST, RESPONSE, SET_REQUEST,
    Pdu, VarBind, V1, V2C,
)
from .oids import lexicographic_successor

DEFAULT_AGENT_PORT = 8161

# v1 error-status codes
NO_SUCH_NAME = 2
READ_ONLY = 4
GEN_ERR = 5


def expand_children(spec):
    """Expand a ChildSpec into an ordered, duplicate-free tuple of arc tuples.

    An integer N means instances 1..N, except N=0 which denotes the single
    scalar instance 0.
    """
    if isinstance(spec, int):
        if spec == 0:
            return ((0,),)
        return tuple((i,) for i in range(1, spec + 1))
    out = []
    seen = set()
    for item in spec:
        arcs = (item,) if isinstance(item, int) else tuple(item)
        if arcs not in seen:
            seen.add(arcs)
            out.append(arcs)
    return tuple(out)


class AgentContext:
    """Mutable per-agent state handlers may consult."""

    def __init__(self, port=DEFAULT_AGENT_PORT, address="0.0.0.0",
                 community="public", registry=None):
        self.port = port
        self.address = address
        self.community = community
        self.registry = registry
        self.start_time = time.monotonic()
        self.in_pkts = 0
        self.contact = ""
        self.name = socket.gethostname()
        self.location = ""

    def uptime_ticks(self):
        return ber.TimeTicks(int((time.monotonic() - self.start_time) * 100))


class DispatchTree:
    """Registered variable handlers keyed by base OID arcs."""

    def __init__(self):
        self._handlers = {}
        self._lock = threading.Lock()

    def register(self, oid_ref, handler, writable=False):
        """Attach handler at a base OID; re-registration replaces.

        Nesting one base under another is rejected -- the longest-prefix
        dispatch would shadow one of them.
        """
        base = tuple(oid_ref.arcs)
        with self._lock:
            for existing in self._handlers:
                if existing == base:
                    continue
                shorter, longer = sorted((existing, base), key=len)
                if longer[:len(shorter)] == shorter:
                    raise SnmpError(
                        f"base {'.'.join(map(str, base))} nests with "
                        f"registered {'.'.join(map(str, existing))}")
            self._handlers[base] = (handler, writable)

    def snapshot(self):
        with self._lock:
            return dict(self._handlers)

    def find(self, arcs):
        """Longest registered base prefix of arcs -> (base, handler, writable)."""
        arcs = tuple(arcs)
        best = None
        for base, (handler, writable) in self.snapshot().items():
            if arcs[:len(base)] == base:
                if best is None or len(base) > len(best[0]):
                    best = (base, handler, writable)
        return best


def register_variable(tree, oid_ref, handler, writable=False):
    tree.register(oid_ref, handler, writable)


def define_scalar(tree, registry, name, supplier):
    """Serve a scalar: instance 0, value recomputed on every query."""
    ref = registry.resolve(name)

    def handler(ctx, rest_ids):
        if not rest_ids:
            return 0
        if tuple(rest_ids) == (0,):
            return supplier(ctx)
        return None

    tree.register(ref, handler)
    return ref


def define_table_column(tree, registry, name, fn):
    """Serve one table column; fn follows the ChildSpec protocol."""
    ref = registry.resolve(name)

    def handler(ctx, rest_ids):
        return fn(ctx, tuple(rest_ids))

    tree.register(ref, handler)
    return ref


def _enumerate_instances(tree, ctx):
    """All (full arcs, handler) pairs, sorted lexicographically."""
    out = []
    for base, (handler, _) in tree.snapshot().items():
        try:
            spec = handler(ctx, ())
        except Exception:
            continue
        if spec is None:
            continue
        for rest in expand_children(spec):
            out.append((base + rest, handler, rest))
    out.sort(key=lambda item: item[0])
    return out


def _get_value(tree, ctx, arcs):
    """Value at an exact instance OID, or None."""
    found = tree.find(arcs)
    if found is None:
        return None
    base, handler, _ = found
    rest = tuple(arcs[len(base):])
    if not rest:
        return None  # the base itself is not an instance
    try:
        return handler(ctx, rest)
    except Exception:
        return None


def dispatch(tree, pdu, ctx, version=V2C):
    """Process one request PDU and build the response PDU.

    Errors are in-band: v1 sets error-status/index, v2c uses per-binding
    exception values.
    """
    if pdu.pdu_type == GET_REQUEST:
        return _dispatch_get(tree, pdu, ctx, version)
    if pdu.pdu_type == GET_NEXT_REQUEST:
        return _dispatch_next(tree, pdu, ctx, version)
    if pdu.pdu_type == GET_BULK_REQUEST:
        if version == V1:
            return messages.response_for(pdu, list(pdu.bindings), GEN_ERR, 0)
        return _dispatch_bulk(tree, pdu, ctx)
    if pdu.pdu_type == SET_REQUEST:
        return _dispatch_set(tree, pdu, ctx, version)
    return messages.response_for(pdu, list(pdu.bindings), GEN_ERR, 0)


def _dispatch_get(tree, pdu, ctx, version):
    out = []
    for i, vb in enumerate(pdu.bindings):
        value = _get_value(tree, ctx, vb.arcs)
        if value is None:
            if version == V1:
                return messages.response_for(pdu, list(pdu.bindings),
                                             NO_SUCH_NAME, i + 1)
            found = tree.find(vb.arcs)
            marker = ber.NO_SUCH_INSTANCE if found else ber.NO_SUCH_OBJECT
            out.append(VarBind(vb.name, marker))
        else:
            out.append(VarBind(vb.name, value))
    return messages.response_for(pdu, out)


def _next_pair(instances, arcs, ctx):
    ordered = [item[0] for item in instances]
    nxt = lexicographic_successor(ordered, arcs)
    while nxt is not None:
        idx = ordered.index(nxt)
        _, handler, rest = instances[idx]
        try:
            value = handler(ctx, rest)
        except Exception:
            value = None
        if value is not None:
            return nxt, value
        nxt = lexicographic_successor(ordered, nxt)
    return None, None


def _dispatch_next(tree, pdu, ctx, version):
    instances = _enumerate_instances(tree, ctx)
    out = []
    for i, vb in enumerate(pdu.bindings):
        arcs, value = _next_pair(instances, vb.arcs, ctx)
        if arcs is None:
            if version == V1:
                return messages.response_for(pdu, list(pdu.bindings),
                                             NO_SUCH_NAME, i + 1)
            out.append(VarBind(ber.Oid(vb.arcs), ber.END_OF_MIB_VIEW))
        else:
            out.append(VarBind(ber.Oid(arcs), value))
    return messages.response_for(pdu, out)


def _dispatch_bulk(tree, pdu, ctx):
    instances = _enumerate_instances(tree, ctx)
    non_repeaters = max(0, pdu.non_repeaters)
    max_repetitions = max(0, pdu.max_repetitions)
    out = []
    for vb in pdu.bindings[:non_repeaters]:
        arcs, value = _next_pair(instances, vb.arcs, ctx)
        if arcs is None:
            out.append(VarBind(ber.Oid(vb.arcs), ber.END_OF_MIB_VIEW))
        else:
            out.append(VarBind(ber.Oid(arcs), value))
    for vb in pdu.bindings[non_repeaters:]:
        arcs = tuple(vb.arcs)
        for _ in range(max_repetitions):
            arcs_next, value = _next_pair(instances, arcs, ctx)
            if arcs_next is None:
                out.append(VarBind(ber.Oid(arcs), ber.END_OF_MIB_VIEW))
                break
            out.append(VarBind(ber.Oid(arcs_next), value))
            arcs = arcs_next
    return messages.response_for(pdu, out)


def _dispatch_set(tree, pdu, ctx, version):
    for i, vb in enumerate(pdu.bindings):
        found = tree.find(vb.arcs)
        if found is None or not found[2]:
            return messages.response_for(pdu, list(pdu.bindings),
                                         READ_ONLY, i + 1)
    out = []
    for vb in pdu.bindings:
        base, handler, _ = tree.find(vb.arcs)
        rest = tuple(vb.arcs[len(base):])
        try:
            value = handler(ctx, rest, vb.value)
        except Exception:
            return messages.response_for(pdu, list(pdu.bindings), GEN_ERR, 0)
        out.append(VarBind(vb.name, value))
    return messages.response_for(pdu, out)


def handle_datagram(tree, ctx, data, community=None):
    """Full message-level handling of one inbound datagram.

    Returns the response bytes, or None when the datagram is dropped
    (bad community, undecodable, unsupported version).
    """
    ctx.in_pkts += 1
    if community is None:
        community = ctx.community
    try:
        msg = messages.decode_message(data)
    except SnmpKitError:
        return None
    if not isinstance(msg, messages.CommunityMessage):
        return None  # the agent speaks v1/v2c only
    if msg.community != (community.encode() if isinstance(community, str) else community):
        return None
    if not isinstance(msg.pdu, Pdu):
        return None
    response = dispatch(tree, msg.pdu, ctx, msg.version)
    return messages.encode_message(
        messages.CommunityMessage(msg.version, msg.community, response))


class ServiceHandle:
    """A running background SNMP service; stop() is idempotent."""

    def __init__(self, tree, ctx):
        self.tree = tree
        self.ctx = ctx
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            self._sock.bind((ctx.address, ctx.port))
        except OSError as exc:
            self._sock.close()
            raise TransportError(
                f"cannot bind {ctx.address}:{ctx.port}: {exc}") from exc
        self.bound_address = self._sock.getsockname()
        self._running = True
        self._thread = threading.Thread(target=self._loop, daemon=True,
                                        name=f"snmp-agent:{ctx.port}")
        self._thread.start()

    def _loop(self):
        self._sock.settimeout(0.2)
        while self._running:
            try:
                data, peer = self._sock.recvfrom(messages.MAX_UDP_PAYLOAD)
            except socket.timeout:
                continue
            except OSError:
                break
            reply = handle_datagram(self.tree, self.ctx, data)
            if reply is not None and self._running:
                try:
                    self._sock.sendto(reply, peer)
                except OSError:
                    pass

    @property
    def running(self):
        return self._running

    def stop(self):
        if self._running:
            self._running = False
            self._sock.close()
            self._thread.join(timeout=2)

    def __repr__(self):
        host, port = self.bound_address[:2]
        return f"<SnmpService at {host}:{port}>"


def enable_service(port=DEFAULT_AGENT_PORT, address="0.0.0.0",
                   community="public", tree=None, ctx=None, registry=None):
    """Start a background v1/v2c service; returns a stoppable handle."""
    if registry is None:
        from .mibs import default_registry
        registry = default_registry()
    if ctx is None:
        ctx = AgentContext(port, address, community, registry)
    else:
        ctx.port, ctx.address, ctx.community = port, address, community
    if tree is None:
        tree = DispatchTree()
        install_system_group(tree, ctx)
        install_enterprise_mib(tree, ctx)
    return ServiceHandle(tree, ctx)


def disable_service(handle):
    handle.stop()


# ---------------------------------------------------------------------------
# Built-in variable groups


def install_system_group(tree, ctx):
    """The six system-group scalars every walkable agent answers."""
    registry = ctx.registry

    def impl_descr(ctx):
        return ber.OctetString(
            f"{platform.python_implementation()} {platform.python_version()} "
            f"on {ctx.name}".encode())

    agent_oid = registry.resolve("appAgent")
    define_scalar(tree, registry, "sysDescr", impl_descr)
    define_scalar(tree, registry, "sysObjectID",
                  lambda ctx: ber.Oid(agent_oid.arcs))
    define_scalar(tree, registry, "sysUpTime", lambda ctx: ctx.uptime_ticks())
    define_scalar(tree, registry, "sysContact",
                  lambda ctx: ber.OctetString(ctx.contact.encode()))
    define_scalar(tree, registry, "sysName",
                  lambda ctx: ber.OctetString(ctx.name.encode()))
    define_scalar(tree, registry, "sysLocation",
                  lambda ctx: ber.OctetString(ctx.location.encode()))


def _feature_names():
    import sys
    return sorted(name for name in sys.modules if "." not in name)


def install_enterprise_mib(tree, ctx):
    """Runtime info of the host process under the enterprise subtree."""
    registry = ctx.registry
    define_scalar(tree, registry, "appImplementationType",
                  lambda ctx: ber.OctetString(
                      platform.python_implementation().encode()))
    define_scalar(tree, registry, "appImplementationVersion",
                  lambda ctx: ber.OctetString(platform.python_version().encode()))
    define_scalar(tree, registry, "appHostName",
                  lambda ctx: ber.OctetString(socket.gethostname().encode()))
    define_scalar(tree, registry, "appUptime", lambda ctx: ctx.uptime_ticks())
    define_scalar(tree, registry, "appUniversalTime",
                  lambda ctx: ber.OctetString(
                      time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()).encode()))

    def feature_index(ctx, ids):
        names = _feature_names()
        if not ids:
            return len(names)
        if len(ids) == 1 and 1 <= ids[0] <= len(names):
            return ids[0]
        return None

    def feature_name(ctx, ids):
        names = _feature_names()
        if not ids:
            return len(names)
        if len(ids) == 1 and 1 <= ids[0] <= len(names):
            return ber.OctetString(names[ids[0] - 1].encode())
        return None

    define_table_column(tree, registry, "appFeatureIndex", feature_index)
    define_table_column(tree, registry, "appFeatureName", feature_name)


def install_if_table(tree, registry, rows):
    """Serve an ifTable from static row dicts (demo/test data).

    Each row maps column names (ifIndex, ifDescr, ...) to values; row
    indices are 1..len(rows).
    """
    from .smi import table_schema

    _, entry, schema = table_schema(registry, "ifTable")

    def make_handler(column):
        def handler(ctx, ids):
            if not ids:
                return len(rows)
            if len(ids) == 1 and 1 <= ids[0] <= len(rows):
                return rows[ids[0] - 1].get(column)
            return None
        return handler

    for column, _syntax in schema.columns:
        define_table_column(tree, registry, column, make_handler(column))


def demo_if_rows():
    """Two plausible interfaces for the bundled demo/test table."""
    zero = ber.Oid((0, 0))
    base = {
        "ifType": 6, "ifMtu": 1500, "ifAdminStatus": 1, "ifOperStatus": 1,
        "ifLastChange": ber.TimeTicks(0), "ifInOctets": ber.Counter32(0),
        "ifInUcastPkts": ber.Counter32(0), "ifInNUcastPkts": ber.Counter32(0),
        "ifInDiscards": ber.Counter32(0), "ifInErrors": ber.Counter32(0),
        "ifInUnknownProtos": ber.Counter32(0),
        "ifOutOctets": ber.Counter32(0), "ifOutUcastPkts": ber.Counter32(0),
        "ifOutNUcastPkts": ber.Counter32(0), "ifOutDiscards": ber.Counter32(0),
        "ifOutErrors": ber.Counter32(0), "ifOutQLen": ber.Gauge32(0),
        "ifSpecific": zero,
    }
    lo = dict(base, ifIndex=1, ifDescr=ber.OctetString(b"lo"),
              ifType=24, ifMtu=65536, ifSpeed=ber.Gauge32(10000000),
              ifPhysAddress=ber.OctetString(b""))
    eth = dict(base, ifIndex=2, ifDescr=ber.OctetString(b"eth0"),
               ifSpeed=ber.Gauge32(1000000000),
               ifPhysAddress=ber.OctetString(bytes.fromhex("0242ac110002")),
               ifInOctets=ber.Counter32(123456), ifOutOctets=ber.Counter32(654321))
    return [lo, eth]

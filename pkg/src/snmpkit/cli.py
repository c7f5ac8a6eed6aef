"""Command-line front end: get/getnext/walk/set/bulk, table select, the
MIB compiler, and a standalone agent.

Flag spelling and output follow the familiar net-management tool
conventions: `-v 2c -c public host:port oid` and one
`MODULE::name.instance = TYPE: value` line per binding.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import agent as agent_mod, ber, client, smi, transport
from .errors import (
    ExchangeTimeout, MibError, OidResolutionError, SnmpKitError,
    SnmpStatusError, TransportError,
)
from .messages import V1, V2C, V3, defaults
from .oids import Registry

EXIT_OK = 0
EXIT_SNMP_ERROR = 1
EXIT_TIMEOUT = 2
EXIT_USAGE = 3

VERSION_FLAGS = {"1": V1, "2c": V2C, "3": V3}


class _UsageError(SnmpKitError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so we control exit codes."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# Output rendering


def format_oid(ref):
    """`MODULE::name.instance` when a named node covers the OID, else dotted."""
    node = getattr(ref, "node", None)
    rest = tuple(getattr(ref, "rest", ()))
    while node is not None and node.name is None:
        rest = (node.value,) + rest
        node = node.parent
    if node is None or node.parent is None or node.name is None:
        return "." + ".".join(str(a) for a in ref.arcs)
    text = f"{node.module or '?'}::{node.name}"
    if rest:
        text += "." + ".".join(str(a) for a in rest)
    return text


def _format_ticks(ticks):
    centis = int(ticks)
    days, rem = divmod(centis, 8640000)
    hours, rem = divmod(rem, 360000)
    minutes, rem = divmod(rem, 6000)
    seconds, hundredths = divmod(rem, 100)
    return (f"({centis}) {days} day{'s' if days != 1 else ''}, "
            f"{hours}:{minutes:02d}:{seconds:02d}.{hundredths:02d}")


def format_value(value, registry=None):
    """Net-management style `TYPE: rendering` of one binding value."""
    if value is ber.NO_SUCH_OBJECT:
        return "No Such Object available on this agent at this OID"
    if value is ber.NO_SUCH_INSTANCE:
        return "No Such Instance currently exists at this OID"
    if value is ber.END_OF_MIB_VIEW:
        return "No more variables left in this MIB View (It is past the end of the MIB tree)"
    if value is ber.NULL:
        return "NULL"
    if isinstance(value, ber.TimeTicks):
        return f"Timeticks: {_format_ticks(value)}"
    if isinstance(value, ber.Counter64):
        return f"Counter64: {int(value)}"
    if isinstance(value, ber.Counter32):
        return f"Counter32: {int(value)}"
    if isinstance(value, ber.Gauge32):
        return f"Gauge32: {int(value)}"
    if isinstance(value, ber.IpAddress):
        return "IpAddress: " + ".".join(str(b) for b in bytes(value))
    if isinstance(value, ber.Opaque):
        return "Opaque: 0x" + bytes(value).hex()
    if isinstance(value, ber.Oid):
        if registry is not None:
            try:
                return "OID: " + format_oid(registry.resolve(value.arcs))
            except OidResolutionError:
                pass
        return "OID: ." + ".".join(str(a) for a in value.arcs)
    if isinstance(value, ber.OctetString):
        raw = bytes(value)
        if all(32 <= b < 127 or b in (9, 10, 13) for b in raw):
            return "STRING: " + raw.decode("ascii")
        return "Hex-STRING: " + raw.hex(" ").upper()
    if isinstance(value, bool):
        return f"INTEGER: {int(value)}"
    if isinstance(value, int):
        return f"INTEGER: {value}"
    if isinstance(value, bytes):
        return "STRING: " + value.decode("utf-8", "replace")
    return f"UNKNOWN: {value!r}"


def format_binding(ref, value, registry=None):
    return f"{format_oid(ref)} = {format_value(value, registry)}"


# ---------------------------------------------------------------------------
# Configuration plumbing


def _add_common_options(parser):
    parser.add_argument("-v", "--version", dest="snmp_version",
                        choices=sorted(VERSION_FLAGS), default=None,
                        help="protocol version (default 2c)")
    parser.add_argument("-c", "--community", default=None)
    parser.add_argument("-u", "--user", default=None, help="v3 user name")
    parser.add_argument("-a", "--auth", default=None, metavar="PROTO:PASS",
                        help="v3 authentication, e.g. sha1:secret")
    parser.add_argument("-x", "--priv", default=None, metavar="PROTO:PASS",
                        help="v3 privacy, e.g. des:secret")
    parser.add_argument("-t", "--timeout", type=float, default=None,
                        help="fixed per-attempt timeout in seconds")
    parser.add_argument("-r", "--retries", type=int, default=None)
    parser.add_argument("-M", "--mib-path", default=None,
                        help="directories of compiled MIBs (also SNMP_MIB_PATH)")
    parser.add_argument("host", help="peer as host or host:port")


def _split_host(text):
    if ":" in text:
        host, _, port = text.rpartition(":")
        return host, int(port)
    return text, None


def _split_secret(text):
    if text is None:
        return None
    if ":" in text:
        proto, _, passphrase = text.partition(":")
        return (proto.lower(), passphrase)
    return text


def build_registry(mib_path=None):
    """The bundled corpus plus any compiled modules on the MIB path."""
    from .mibs import load_core

    registry = load_core(Registry())
    path = mib_path if mib_path is not None else os.environ.get("SNMP_MIB_PATH")
    if path:
        for directory in path.split(os.pathsep):
            if not os.path.isdir(directory):
                continue
            for entry in sorted(os.listdir(directory)):
                if entry.endswith(".cmib"):
                    with open(os.path.join(directory, entry), "rb") as fh:
                        module = smi.read_compiled(fh.read())
                    smi.load_records(registry, module)
    return registry


def _open_session(args, registry):
    host, port = _split_host(args.host)
    kwargs = {
        "port": port,
        "version": VERSION_FLAGS[args.snmp_version]
        if args.snmp_version else None,
        "community": args.community,
        "registry": registry,
    }
    version = kwargs["version"] if kwargs["version"] is not None else defaults.version
    if version == V3:
        kwargs.update(user=args.user, auth=_split_secret(args.auth),
                      priv=_split_secret(args.priv))
    if args.timeout is not None:
        kwargs.update(rto_min=args.timeout, rto_max=args.timeout)
    if args.retries is not None:
        kwargs["max_retries"] = args.retries
    return client.open_session(host, **kwargs)


# ---------------------------------------------------------------------------
# Commands


def _print_pairs(pairs, registry):
    for ref, value in pairs:
        print(format_binding(ref, value, registry))


def cmd_get(args, registry):
    with _session(args, registry) as session:
        specs = list(args.oids)
        pairs = client.request(session, 0, specs)
        _print_pairs(pairs, registry)
    return EXIT_OK


def cmd_getnext(args, registry):
    with _session(args, registry) as session:
        _print_pairs(client.get_next(session, list(args.oids)), registry)
    return EXIT_OK


def cmd_walk(args, registry):
    with _session(args, registry) as session:
        _print_pairs(client.walk(session, args.oid), registry)
    return EXIT_OK


_SET_CASTS = {
    "i": int,
    "s": lambda text: ber.OctetString(text.encode()),
    "o": str,  # resolved by the registry at request time
    "a": lambda text: ber.IpAddress(bytes(int(p) for p in text.split("."))),
    "t": lambda text: ber.TimeTicks(int(text)),
    "c": lambda text: ber.Counter32(int(text)),
    "g": lambda text: ber.Gauge32(int(text)),
    "u": lambda text: ber.Gauge32(int(text)),
}


def cmd_set(args, registry):
    if len(args.assignments) % 3:
        raise _UsageError("set needs OID TYPE VALUE triples")
    pairs = []
    for i in range(0, len(args.assignments), 3):
        oid, kind, text = args.assignments[i:i + 3]
        if kind not in _SET_CASTS:
            raise _UsageError(f"unknown value type {kind!r} "
                              f"(one of {''.join(sorted(_SET_CASTS))})")
        value = _SET_CASTS[kind](text)
        if kind == "o":
            value = ber.Oid(registry.resolve(value).arcs)
        pairs.append((oid, value))
    with _session(args, registry) as session:
        _print_pairs(client.set_values(session, pairs), registry)
    return EXIT_OK


def cmd_bulk(args, registry):
    with _session(args, registry) as session:
        pairs = client.bulk(session, args.non_repeaters,
                            args.max_repetitions, list(args.oids))
        _print_pairs(pairs, registry)
    return EXIT_OK


class _CountingEndpoint:
    """Endpoint proxy counting request datagrams (the exchange test hook)."""

    def __init__(self, inner):
        self.inner = inner
        self.sends = 0

    def send(self, payload):
        self.sends += 1
        self.inner.send(payload)

    def receive(self, timeout):
        return self.inner.receive(timeout)

    def close(self):
        self.inner.close()

    @property
    def closed(self):
        return self.inner.closed

    @property
    def local_address(self):
        return self.inner.local_address


def cmd_table(args, registry):
    with _session(args, registry) as session:
        counter = _CountingEndpoint(session.endpoint)
        session.endpoint = counter
        rows = client.select(args.table, session)
        if rows:
            columns = [format_oid(ref).split("::")[-1]
                       for ref, _ in rows[0].cells]
        else:
            _, _, schema = smi.table_schema(registry, args.table)
            columns = [name for name, _ in schema.columns]
        widths = [len(c) for c in columns]
        cells = []
        for row in rows:
            rendered = [format_value(v, registry).split(": ", 1)[-1]
                        for _, v in row.cells]
            cells.append(rendered)
            widths = [max(w, len(r)) for w, r in zip(widths, rendered)]
        print("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip())
        for rendered in cells:
            print("  ".join(r.ljust(w)
                            for r, w in zip(rendered, widths)).rstrip())
        if args.count_exchanges:
            print(f"exchanges: {counter.sends}")
    return EXIT_OK


def cmd_mibc(args, _registry):
    failures = 0
    for path in args.files:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                module = smi.compile_text(fh.read())
        except OSError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            failures += 1
            continue
        except MibError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            failures += 1
            continue
        for warning in module.warnings:
            print(f"{path}: warning: {warning}", file=sys.stderr)
        out_name = f"{module.header.name}.cmib"
        out_path = os.path.join(args.output_dir, out_name)
        with open(out_path, "wb") as fh:
            fh.write(smi.emit_bytes(module))
        print(f"{path} -> {out_path}")
    return EXIT_SNMP_ERROR if failures else EXIT_OK


def cmd_agent(args, registry):
    ctx = agent_mod.AgentContext(args.port, args.address,
                                 args.community or defaults.community,
                                 registry)
    tree = agent_mod.DispatchTree()
    agent_mod.install_system_group(tree, ctx)
    agent_mod.install_enterprise_mib(tree, ctx)
    if args.demo_table:
        agent_mod.install_if_table(tree, registry, agent_mod.demo_if_rows())
    try:
        handle = agent_mod.enable_service(args.port, args.address,
                                          ctx.community, tree, ctx, registry)
    except TransportError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_SNMP_ERROR
    host, port = handle.bound_address[:2]
    print(f"agent listening on {host}:{port}")
    try:
        while True:
            handle._thread.join(1)
    except KeyboardInterrupt:
        pass
    finally:
        agent_mod.disable_service(handle)
    return EXIT_OK


class _session:
    """Open a session from parsed args; always closed on the way out."""

    def __init__(self, args, registry):
        self.args = args
        self.registry = registry

    def __enter__(self):
        self.session = _open_session(self.args, self.registry)
        return self.session

    def __exit__(self, *exc):
        client.close_session(self.session)
        return False


# ---------------------------------------------------------------------------
# Entry point


def build_parser():
    parser = _Parser(prog="snmpkit",
                     description="SNMP client, agent and MIB compiler")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("get", help="fetch exact instances")
    _add_common_options(p)
    p.add_argument("oids", nargs="+")
    p.set_defaults(func=cmd_get)

    p = sub.add_parser("getnext", help="fetch lexicographic successors")
    _add_common_options(p)
    p.add_argument("oids", nargs="+")
    p.set_defaults(func=cmd_getnext)

    p = sub.add_parser("walk", help="enumerate a subtree")
    _add_common_options(p)
    p.add_argument("oid", nargs="?", default="mib-2")
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("set", help="write values (OID TYPE VALUE ...)")
    _add_common_options(p)
    p.add_argument("assignments", nargs="+")
    p.set_defaults(func=cmd_set)

    p = sub.add_parser("bulk", help="get-bulk retrieval")
    _add_common_options(p)
    p.add_argument("-n", "--non-repeaters", type=int, default=0)
    p.add_argument("-m", "--max-repetitions", type=int, default=10)
    p.add_argument("oids", nargs="+")
    p.set_defaults(func=cmd_bulk)

    p = sub.add_parser("table", help="fetch a conceptual table")
    _add_common_options(p)
    p.add_argument("table")
    p.add_argument("--count-exchanges", action="store_true",
                   help="append the request/response exchange count")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("mibc", help="compile SMI modules to .cmib files")
    p.add_argument("files", nargs="+")
    p.add_argument("-o", "--output-dir", default=".")
    p.add_argument("-M", "--mib-path", default=None)
    p.set_defaults(func=cmd_mibc)

    p = sub.add_parser("agent", help="run a standalone agent")
    p.add_argument("--port", type=int, default=agent_mod.DEFAULT_AGENT_PORT)
    p.add_argument("--address", default="0.0.0.0")
    p.add_argument("-c", "--community", default=None)
    p.add_argument("-M", "--mib-path", default=None)
    p.add_argument("--demo-table", action="store_true",
                   help="also serve the bundled two-row interface table")
    p.set_defaults(func=cmd_agent)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        registry = build_registry(getattr(args, "mib_path", None))
        return args.func(args, registry)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except OidResolutionError as exc:
        print(f"cannot resolve OID: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ExchangeTimeout as exc:
        print(f"timeout: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except (SnmpStatusError, SnmpKitError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_SNMP_ERROR
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

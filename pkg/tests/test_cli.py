import re
import socket

import pytest

from snmpkit import agent, ber, cli
from snmpkit.mibs import load_core
from snmpkit.oids import Registry


@pytest.fixture(scope="module")
def live_agent():
    """A real UDP agent on an ephemeral loopback port, shared per module."""
    registry = load_core(Registry())
    ctx = agent.AgentContext(0, "127.0.0.1", "public", registry)
    tree = agent.DispatchTree()
    agent.install_system_group(tree, ctx)
    agent.install_enterprise_mib(tree, ctx)
    agent.install_if_table(tree, registry, agent.demo_if_rows())
    handle = agent.ServiceHandle(tree, ctx)
    host, port = handle.bound_address[:2]
    yield f"{host}:{port}", ctx
    handle.stop()


class TestRendering:
    def test_format_oid_named(self, registry):
        assert cli.format_oid(registry.resolve("sysDescr.0")) == \
            "SNMPv2-MIB::sysDescr.0"

    def test_format_oid_numeric_fallback(self, registry):
        assert cli.format_oid(registry.resolve((2, 99, 1))) == ".2.99.1"

    def test_value_tags(self, registry):
        assert cli.format_value(ber.OctetString(b"hi")) == "STRING: hi"
        assert cli.format_value(7) == "INTEGER: 7"
        assert cli.format_value(ber.Counter32(9)) == "Counter32: 9"
        assert cli.format_value(ber.Gauge32(9)) == "Gauge32: 9"
        assert cli.format_value(ber.Counter64(9)) == "Counter64: 9"
        assert cli.format_value(
            ber.IpAddress(b"\x7f\x00\x00\x01")) == "IpAddress: 127.0.0.1"
        assert cli.format_value(ber.NULL) == "NULL"

    def test_binary_string_hex_dumped(self):
        out = cli.format_value(ber.OctetString(b"\x02\x42\xac"))
        assert out.startswith("Hex-STRING: 02 42 AC")

    def test_timeticks_rendering(self):
        out = cli.format_value(ber.TimeTicks(8640000 + 360000 + 150))
        assert out == "Timeticks: (9000150) 1 day, 1:00:01.50"

    def test_oid_value_uses_registry(self, registry):
        out = cli.format_value(ber.Oid((1, 3, 6, 1, 4, 1, 31609, 2, 1)),
                               registry)
        assert out == "OID: APP-MIB::appAgent"


class TestCommands:
    def test_get_line_shape(self, live_agent, capsys):
        address, ctx = live_agent
        code = cli.main(["get", "-v", "2c", "-c", "public", address,
                        "sysDescr.0"])
        out = capsys.readouterr().out
        assert code == cli.EXIT_OK
        assert re.fullmatch(r"SNMPv2-MIB::sysDescr\.0 = STRING: .+\n", out)

    def test_getnext(self, live_agent, capsys):
        address, _ = live_agent
        assert cli.main(["getnext", address, "sysDescr"]) == cli.EXIT_OK
        assert capsys.readouterr().out.startswith("SNMPv2-MIB::sysDescr.0 =")

    def test_walk_ordered(self, live_agent, capsys):
        address, _ = live_agent
        assert cli.main(["walk", address, "system"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        names = [line.split(" = ")[0] for line in lines]
        assert names == [
            "SNMPv2-MIB::sysDescr.0", "SNMPv2-MIB::sysObjectID.0",
            "SNMPv2-MIB::sysUpTime.0", "SNMPv2-MIB::sysContact.0",
            "SNMPv2-MIB::sysName.0", "SNMPv2-MIB::sysLocation.0"]

    def test_bulk(self, live_agent, capsys):
        address, _ = live_agent
        assert cli.main(["bulk", "-m", "2", address, "ifDescr"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines == ["IF-MIB::ifDescr.1 = STRING: lo",
                         "IF-MIB::ifDescr.2 = STRING: eth0"]

    def test_table(self, live_agent, capsys):
        address, _ = live_agent
        code = cli.main(["table", address, "ifTable", "--count-exchanges"])
        out = capsys.readouterr().out
        assert code == cli.EXIT_OK
        lines = out.splitlines()
        assert lines[0].split()[0:2] == ["ifIndex", "ifDescr"]
        assert len(lines) == 4  # header + 2 rows + exchange count
        count = int(lines[-1].split(":")[1])
        assert count <= 4


class TestExitCodes:
    def test_success_is_zero(self, live_agent):
        address, _ = live_agent
        assert cli.main(["get", address, "sysName.0"]) == 0

    def test_snmp_error_is_one(self, live_agent, capsys):
        address, _ = live_agent
        assert cli.main(["get", "-v", "1", address, "sysName.9"]) == 1
        assert "noSuchName" in capsys.readouterr().err

    def test_timeout_is_two(self, capsys):
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.bind(("127.0.0.1", 0))  # bound but never answering
        port = sock.getsockname()[1]
        try:
            code = cli.main(["get", "-t", "0.05", "-r", "0",
                             f"127.0.0.1:{port}", "sysName.0"])
        finally:
            sock.close()
        assert code == 2
        assert "timeout" in capsys.readouterr().err

    def test_usage_is_three(self, capsys):
        assert cli.main(["get"]) == 3
        assert cli.main(["get", "localhost", ]) == 3
        capsys.readouterr()

    def test_unknown_oid_is_usage(self, live_agent, capsys):
        address, _ = live_agent
        assert cli.main(["get", address, "noSuchObjectName.0"]) == 3
        assert "resolve" in capsys.readouterr().err


class TestMibCompilerCommand:
    def test_compile_and_reuse(self, tmp_path, capsys):
        source = tmp_path / "X-MIB.txt"
        source.write_text("""X-MIB DEFINITIONS ::= BEGIN
IMPORTS enterprises FROM SNMPv2-SMI;
xroot OBJECT IDENTIFIER ::= { enterprises 7701 }
END
""")
        code = cli.main(["mibc", str(source), "-o", str(tmp_path)])
        assert code == 0
        out_path = tmp_path / "X-MIB.cmib"
        assert out_path.exists()
        first = out_path.read_bytes()
        cli.main(["mibc", str(source), "-o", str(tmp_path)])
        assert out_path.read_bytes() == first  # recompile byte-identical
        capsys.readouterr()

    def test_bad_syntax_reports_position(self, tmp_path, capsys):
        bad = tmp_path / "BAD.txt"
        bad.write_text("BAD DEFINITIONS ::= BEGIN\nx ::= { }\nEND\n")
        assert cli.main(["mibc", str(bad), "-o", str(tmp_path)]) == 1
        assert "line" in capsys.readouterr().err

    def test_mib_path_loads_extra_modules(self, tmp_path, live_agent,
                                          monkeypatch, capsys):
        source = tmp_path / "Y-MIB.txt"
        source.write_text("""Y-MIB DEFINITIONS ::= BEGIN
IMPORTS enterprises FROM SNMPv2-SMI;
yroot OBJECT IDENTIFIER ::= { enterprises 7702 }
END
""")
        cli.main(["mibc", str(source), "-o", str(tmp_path)])
        capsys.readouterr()
        monkeypatch.setenv("SNMP_MIB_PATH", str(tmp_path))
        registry = cli.build_registry()
        assert registry.resolve("yroot").arcs[-1] == 7702

import io

import pytest

from snmpkit import smi
from snmpkit.errors import MibLexError, MibParseError, NotATableError
from snmpkit.mibs import CORE_MODULES, compile_bundled, load_core
from snmpkit.oids import Registry, number_list

SAMPLE = """
TEST-MIB DEFINITIONS ::= BEGIN

IMPORTS
    OBJECT-TYPE, enterprises
        FROM SNMPv2-SMI;

test OBJECT IDENTIFIER ::= { enterprises 7700 }

testScalar OBJECT-TYPE
    SYNTAX      OCTET STRING (SIZE (0..255))
    MAX-ACCESS  read-only
    STATUS      current
    DESCRIPTION
        "A scalar used by the
         compiler tests."
    ::= { test 1 }

testTable OBJECT-TYPE
    SYNTAX      SEQUENCE OF TestEntry
    MAX-ACCESS  not-accessible
    STATUS      current
    DESCRIPTION "A tiny table."
    ::= { test 2 }

testEntry OBJECT-TYPE
    SYNTAX      TestEntry
    MAX-ACCESS  not-accessible
    STATUS      current
    DESCRIPTION "One row."
    INDEX       { testIndex }
    ::= { testTable 1 }

TestEntry ::= SEQUENCE {
    testIndex   INTEGER,
    testName    OCTET STRING
}

testIndex OBJECT-TYPE
    SYNTAX      INTEGER (1..100)
    MAX-ACCESS  read-only
    STATUS      current
    DESCRIPTION "Row index."
    ::= { testEntry 1 }

testName OBJECT-TYPE
    SYNTAX      OCTET STRING
    MAX-ACCESS  read-only
    STATUS      current
    DESCRIPTION "Row name."
    ::= { testEntry 2 }

END
"""


class TestTokenizer:
    def test_comments_stripped(self):
        tokens = smi.tokenize("a -- comment to eol\nb -- inline -- c\n")
        texts = [t.text for t in tokens]
        assert texts == ["a", "b", "c"]

    def test_strings_keep_content(self):
        tokens = smi.tokenize('"line one\n  two"')
        assert tokens[0].kind == "string"
        assert "line one" in tokens[0].text

    def test_unterminated_string_positions(self):
        with pytest.raises(MibLexError) as exc:
            smi.tokenize('x ::= "never closed')
        assert exc.value.line == 1

    def test_assignment_token(self):
        kinds = [t.kind for t in smi.tokenize("a ::= { b 1 }")]
        assert "assign" in kinds


class TestCompile:
    def test_sample_module(self):
        module = smi.compile_text(SAMPLE)
        assert module.header.name == "TEST-MIB"
        names = [r.name for r in module.records
                 if isinstance(r, smi.OidAssignment)]
        assert names == ["test", "testScalar", "testTable", "testEntry",
                         "testIndex", "testName"]

    def test_description_whitespace_normalized(self):
        module = smi.compile_text(SAMPLE)
        scalar = next(r for r in module.records if r.name == "testScalar")
        assert scalar.description == "A scalar used by the compiler tests."

    def test_imports_recorded(self):
        module = smi.compile_text(SAMPLE)
        assert ("OBJECT-TYPE", "SNMPv2-SMI") in module.header.imports
        assert ("enterprises", "SNMPv2-SMI") in module.header.imports

    def test_row_schema_extracted(self):
        module = smi.compile_text(SAMPLE)
        schemas = [r for r in module.records if isinstance(r, smi.RowSchema)]
        assert len(schemas) == 1
        assert schemas[0].type_name == "TestEntry"
        assert schemas[0].column_names() == ["testIndex", "testName"]

    def test_parse_error_carries_position(self):
        with pytest.raises(MibParseError) as exc:
            smi.compile_text("BROKEN-MIB DEFINITIONS ::= BEGIN\nx ::= { }\nEND")
        assert exc.value.line is not None

    def test_trap_type_skipped_with_warning(self):
        source = """T DEFINITIONS ::= BEGIN
coldStartTrap TRAP-TYPE
    ENTERPRISE test
    DESCRIPTION "legacy"
    ::= 0
END"""
        module = smi.compile_text(source)
        assert any("TRAP-TYPE" in w for w in module.warnings)
        assert not [r for r in module.records
                    if isinstance(r, smi.OidAssignment)]


class TestEmitReload:
    def test_emit_read_round_trip(self):
        module = smi.compile_text(SAMPLE)
        data = smi.emit_bytes(module)
        assert data.decode("utf-8").splitlines()[0] == "CMIB 1"
        reloaded = smi.read_compiled(data)
        assert reloaded.header == module.header
        assert reloaded.records == module.records

    def test_emit_idempotent(self):
        module = smi.compile_text(SAMPLE)
        first = smi.emit_bytes(module)
        second = smi.emit_bytes(smi.read_compiled(first))
        assert first == second

    def test_escaping_survives(self):
        source = SAMPLE.replace("Row name.", "has\ttab and\nnewline-ish")
        module = smi.compile_text(source)
        reloaded = smi.read_compiled(smi.emit_bytes(module))
        assert reloaded.records == module.records

    def test_emit_to_sink(self):
        module = smi.compile_text(SAMPLE)
        sink = io.BytesIO()
        smi.emit(module, sink)
        assert sink.getvalue() == smi.emit_bytes(module)


class TestBundledCorpus:
    @pytest.mark.parametrize("name", CORE_MODULES)
    def test_compiles(self, name):
        module = compile_bundled(name)
        assert module.header.name == name

    @pytest.mark.parametrize("name", CORE_MODULES)
    def test_emit_idempotent(self, name):
        module = compile_bundled(name)
        first = smi.emit_bytes(module)
        second = smi.emit_bytes(smi.read_compiled(first))
        assert first == second

    def test_if_entry_has_22_ordered_columns(self, registry):
        _, _, schema = smi.table_schema(registry, "ifTable")
        assert len(schema.columns) == 22
        assert schema.column_names()[0] == "ifIndex"
        assert schema.column_names()[1] == "ifDescr"
        assert schema.column_names()[21] == "ifSpecific"

    def test_if_descr_at_arc_2(self, registry):
        assert number_list(registry.resolve("ifDescr"))[-1] == 2

    def test_enterprise_root(self, registry):
        assert number_list(registry.resolve("app")) == \
            (1, 3, 6, 1, 4, 1, 31609)


class TestLoad:
    def test_load_into_registry(self):
        registry = load_core(Registry())
        module = smi.compile_text(SAMPLE)
        smi.load_records(registry, module)
        assert number_list(registry.resolve("testName")) == \
            (1, 3, 6, 1, 4, 1, 7700, 2, 1, 2)
        assert registry.resolve("testScalar").node.max_access == "read-only"

    def test_load_compiled_text(self):
        registry = load_core(Registry())
        smi.load_compiled(registry, smi.emit_bytes(smi.compile_text(SAMPLE)))
        assert number_list(registry.resolve("testIndex"))[-2:] == (1, 1)

    def test_table_schema_lookup(self):
        registry = load_core(Registry())
        smi.load_records(registry, smi.compile_text(SAMPLE))
        table, entry, schema = smi.table_schema(registry, "testTable")
        assert table.name == "testTable"
        assert entry.name == "testEntry"
        assert schema.column_names() == ["testIndex", "testName"]

    def test_not_a_table(self, registry):
        with pytest.raises(NotATableError):
            smi.table_schema(registry, "sysDescr")

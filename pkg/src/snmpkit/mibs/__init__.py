"""Bundled MIB corpus and registry bootstrap helpers."""

from importlib import resources

from .. import smi
from ..oids import Registry

CORE_MODULES = ("SNMPv2-SMI", "SNMPv2-MIB", "IF-MIB", "APP-MIB")

_default_registry = None


def mib_source(name):
    """Raw SMI source text of a bundled module."""
    return resources.files(__package__).joinpath(f"{name}.txt").read_text("utf-8")


def compile_bundled(name):
    return smi.compile_text(mib_source(name))


def load_core(registry):
    """Compile and load the bundled corpus into a registry."""
    for name in CORE_MODULES:
        smi.load_records(registry, compile_bundled(name))
    return registry


def default_registry():
    """Process-wide registry with the bundled corpus loaded (cached)."""
    global _default_registry
    if _default_registry is None:
        _default_registry = load_core(Registry())
    return _default_registry

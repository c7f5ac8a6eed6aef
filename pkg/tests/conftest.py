import pytest

from snmpkit import agent
from snmpkit.mibs import load_core
from snmpkit.oids import Registry


@pytest.fixture()
def registry():
    """A fresh registry with the bundled corpus; safe to mutate."""
    return load_core(Registry())


@pytest.fixture()
def loopback_agent(registry):
    """(tree, ctx) serving the system group, enterprise MIB and demo table."""
    ctx = agent.AgentContext(registry=registry)
    tree = agent.DispatchTree()
    agent.install_system_group(tree, ctx)
    agent.install_enterprise_mib(tree, ctx)
    agent.install_if_table(tree, registry, agent.demo_if_rows())
    return tree, ctx

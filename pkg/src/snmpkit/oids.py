"""The MIB tree: named OID nodes plus resolution of every OID spelling.

A node stores only its own arc; full number lists are reconstructed by
walking parent links.  Unnamed instances (like ``sysDescr.0``) are never
inserted into the tree -- they live as OidRef values pointing at their
deepest named ancestor with the trailing arcs kept aside.
"""

from __future__ import annotations

import bisect

from .errors import OidConflictError, OidResolutionError

NODE_KINDS = ("plain", "object-type", "module-identity", "other")


class OidNode:
    """One arc of the MIB tree with parent link, children map and metadata."""

    __slots__ = (
        "name", "value", "parent", "children", "module",
        "node_kind", "syntax", "max_access", "status", "description",
    )

    def __init__(self, value, name=None, parent=None, module=None,
                 node_kind="plain", syntax=None, max_access=None,
                 status=None, description=None):
        self.value = int(value)
        self.name = name
        self.parent = parent
        self.children = {}
        self.module = module
        self.node_kind = node_kind
        self.syntax = syntax
        self.max_access = max_access
        self.status = status
        self.description = description

    @property
    def arcs(self):
        return number_list(OidRef(self))

    def __repr__(self):
        label = self.name if self.name else "?"
        mod = f"{self.module}::" if self.module else ""
        return f"<OidNode {mod}{label} ({self.value}) [{len(self.children)}]>"


class OidRef:
    """A resolved OID: deepest named ancestor plus unnamed trailing arcs."""

    __slots__ = ("node", "rest", "_arcs")

    def __init__(self, node, rest=()):
        self.node = node
        self.rest = tuple(int(a) for a in rest)
        self._arcs = None

    @property
    def arcs(self):
        if self._arcs is None:
            self._arcs = number_list(self)
        return self._arcs

    def child(self, *arcs):
        return OidRef(self.node, self.rest + tuple(arcs))

    def __eq__(self, other):
        if not isinstance(other, OidRef):
            return NotImplemented
        return self.node is other.node and self.rest == other.rest

    def __hash__(self):
        return hash((id(self.node), self.rest))

    def __repr__(self):
        return "<OidRef %s>" % ".".join(name_list(self)) if self.arcs else "<OidRef (root)>"

    def __str__(self):
        return ".".join(str(a) for a in self.arcs)


def number_list(ref):
    """Arcs from (but excluding) the root down to the ref, rest included."""
    node = ref.node if isinstance(ref, OidRef) else ref
    rest = ref.rest if isinstance(ref, OidRef) else ()
    arcs = []
    while node.parent is not None:
        arcs.append(node.value)
        node = node.parent
    arcs.reverse()
    return tuple(arcs) + rest


def name_list(ref):
    """Names of named ancestors root-to-leaf; unnamed arcs render as decimals."""
    node = ref.node if isinstance(ref, OidRef) else ref
    rest = ref.rest if isinstance(ref, OidRef) else ()
    names = []
    while node.parent is not None:
        names.append(node.name if node.name else str(node.value))
        node = node.parent
    names.reverse()
    names.extend(str(a) for a in rest)
    return names


def list_children(node):
    """Unordered snapshot of a node's children."""
    return list(node.children.values())


class Registry:
    """The single conceptual MIB tree plus name and module indexes."""

    def __init__(self):
        self.root = OidNode(0, name="zero")
        # name -> list of nodes, most recently registered module first
        self.name_index = {}
        # module -> name -> node
        self.module_index = {}
        # (module, type name) -> RowSchema (filled by the SMI loader)
        self.row_schemas = {}
        self.ambiguous_names = set()
        self._bootstrap()

    def _bootstrap(self):
        self.register(None, "iso", OidRef(self.root), 1)

    # -- registration -------------------------------------------------------

    def register(self, module, name, parent, arc, node_kind="plain",
                 syntax=None, max_access=None, status=None, description=None):
        """Idempotently attach (or revisit) a child node under parent.

        An existing child at the arc is returned with metadata merged onto
        absent fields; a differently-named existing child is a conflict.
        """
        parent_ref = self.resolve(parent)
        node = parent_ref.node
        for a in parent_ref.rest:
            nxt = node.children.get(a)
            if nxt is None:
                nxt = OidNode(a, parent=node)
                node.children[a] = nxt
            node = nxt
        arc = int(arc)
        child = node.children.get(arc)
        if child is None:
            child = OidNode(arc, name=name, parent=node, module=module,
                            node_kind=node_kind, syntax=syntax,
                            max_access=max_access, status=status,
                            description=description)
            node.children[arc] = child
        else:
            if child.name is not None and name is not None and child.name != name:
                raise OidConflictError(
                    f"arc {arc} under {'.'.join(name_list(OidRef(node)))} is "
                    f"{child.name!r}, cannot register {name!r}")
            if child.name is None:
                child.name = name
            if child.module is None:
                child.module = module
            if child.node_kind == "plain" and node_kind != "plain":
                child.node_kind = node_kind
            for attr, val in (("syntax", syntax), ("max_access", max_access),
                              ("status", status), ("description", description)):
                if getattr(child, attr) is None and val is not None:
                    setattr(child, attr, val)
        if name is not None:
            self._index(module, name, child)
        return child

    def _index(self, module, name, node):
        entries = self.name_index.setdefault(name, [])
        if node not in entries:
            if entries:
                self.ambiguous_names.add(name)
            entries.insert(0, node)
        if module is not None:
            self.module_index.setdefault(module, {})[name] = node

    # -- resolution ---------------------------------------------------------

    def resolve(self, spec):
        """Resolve any OID spelling (text, arc list, mixed list, node, ref)."""
        if isinstance(spec, OidRef):
            return spec
        if isinstance(spec, OidNode):
            return OidRef(spec)
        if isinstance(spec, str):
            return self._resolve_text(spec)
        if isinstance(spec, (list, tuple)):
            return self._resolve_sequence(spec)
        arcs = getattr(spec, "arcs", None)
        if arcs is not None:
            return self._resolve_arcs(tuple(arcs))
        raise OidResolutionError(f"cannot resolve OID spec {spec!r}")

    def _resolve_text(self, text):
        module = None
        if "::" in text:
            module, text = text.split("::", 1)
        segments = text.split(".")
        if segments and segments[0] == "":
            segments = segments[1:]
        if len(segments) > 1 and segments[0] == "0":
            segments = segments[1:]
        if not segments:
            return OidRef(self.root)
        if all(s.isdigit() for s in segments):
            try:
                arcs = tuple(int(s) for s in segments)
            except ValueError:
                raise OidResolutionError(f"malformed numeric OID {text!r}")
            return self._resolve_arcs(arcs)
        node = self._lookup_name(segments[0], module)
        return self._descend_named(node, segments[1:])

    def _lookup_name(self, name, module=None):
        if module is not None:
            table = self.module_index.get(module)
            if table is None or name not in table:
                raise OidResolutionError(
                    f"unknown name {module}::{name}", segment=name)
            return table[name]
        entries = self.name_index.get(name)
        if not entries:
            raise OidResolutionError(f"unknown OID name {name!r}", segment=name)
        return entries[0]

    def _descend_named(self, node, segments):
        rest = []
        for i, seg in enumerate(segments):
            if rest:
                if not seg.isdigit():
                    raise OidResolutionError(
                        f"name segment {seg!r} after numeric arcs", segment=seg)
                rest.append(int(seg))
                continue
            child = None
            for c in node.children.values():
                if c.name == seg:
                    child = c
                    break
            if child is not None:
                node = child
            elif seg.isdigit():
                arc = int(seg)
                child = node.children.get(arc)
                if child is not None and child.name is None:
                    node = child
                elif child is not None:
                    node = child
                else:
                    rest.append(arc)
            else:
                raise OidResolutionError(
                    f"cannot resolve segment {seg!r}", segment=seg)
        return OidRef(node, rest)

    def _resolve_arcs(self, arcs):
        node = self.root
        i = 0
        # A single leading 0 addresses the root itself when more arcs follow
        # and the first real arc exists beneath the root.
        if len(arcs) > 1 and arcs[0] == 0 and arcs[1] in self.root.children:
            i = 1
        while i < len(arcs):
            child = node.children.get(arcs[i])
            if child is None:
                break
            node = child
            i += 1
        return OidRef(node, arcs[i:])

    def _resolve_sequence(self, seq):
        if not seq:
            return OidRef(self.root)
        if all(isinstance(e, int) for e in seq):
            return self._resolve_arcs(tuple(seq))
        base = self.resolve(seq[0])
        rest = list(base.rest)
        node = base.node
        for e in seq[1:]:
            if isinstance(e, int):
                rest.append(e)
            elif isinstance(e, str) and e.isdigit():
                rest.append(int(e))
            elif isinstance(e, str) and not rest:
                ref = self._descend_named(node, [e])
                node, rest = ref.node, list(ref.rest)
            else:
                raise OidResolutionError(f"cannot resolve mixed element {e!r}")
        return OidRef(node, rest)


def lexicographic_successor(instances, arcs):
    """Smallest element of a sorted arc-tuple set strictly greater than arcs.

    Returns None when arcs is at or past the end.  The caller supplies the
    instance enumeration; this only orders over it.
    """
    arcs = tuple(arcs)
    i = bisect.bisect_right(instances, arcs)
    if i < len(instances):
        return instances[i]
    return None

"""Encoding trees: rooted partition trees over a graph's vertex set.

Every node carries its marker (a vertex set) plus cached statistics: the
marker's volume and its cut weight.  Children of an internal node partition
the parent marker; leaves are singletons; child order is by smallest vertex.
"""

from __future__ import annotations

from typing import Iterator

from .errors import GraphParseError, InvariantViolation
from .graph import Graph, VertexSet, cut_weight

STAT_TOL = 1e-9

NodePath = tuple  # child indices from the root; () is the root itself


class TreeNode:
    __slots__ = ("vertices", "vol", "cut", "children")

    def __init__(self, vertices, vol: float = 0.0, cut: float = 0.0, children=None):
        self.vertices: VertexSet = frozenset(vertices)
        self.vol = float(vol)
        self.cut = float(cut)
        self.children: list[TreeNode] = list(children) if children else []

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def vertex(self) -> int:
        if not self.is_leaf or len(self.vertices) != 1:
            raise InvariantViolation("node is not a singleton leaf")
        return next(iter(self.vertices))

    def min_vertex(self) -> int:
        return min(self.vertices)

    def height(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(c.height() for c in self.children)

    def copy(self) -> "TreeNode":
        return TreeNode(self.vertices, self.vol, self.cut, [c.copy() for c in self.children])

    def __repr__(self):
        kind = "leaf" if self.is_leaf else f"node[{len(self.children)}]"
        return f"<{kind} {sorted(self.vertices)} vol={self.vol:g} cut={self.cut:g}>"


class EncodingTree:
    """A rooted partition tree; the root marker is the whole vertex set."""

    __slots__ = ("root",)

    def __init__(self, root: TreeNode):
        self.root = root

    @property
    def n(self) -> int:
        return len(self.root.vertices)

    def copy(self) -> "EncodingTree":
        return EncodingTree(self.root.copy())

    def height(self) -> int:
        return self.root.height()

    def node_at(self, path) -> TreeNode:
        node = self.root
        for i in path:
            try:
                node = node.children[i]
            except IndexError:
                raise InvariantViolation(f"no node at path {format_path(path)}") from None
        return node

    def walk(self) -> Iterator[tuple[NodePath, TreeNode]]:
        """Preorder traversal yielding (path, node)."""
        stack = [((), self.root)]
        while stack:
            path, node = stack.pop()
            yield path, node
            for i in range(len(node.children) - 1, -1, -1):
                stack.append((path + (i,), node.children[i]))

    def edges(self) -> Iterator[tuple[TreeNode, TreeNode]]:
        """All (parent, child) pairs."""
        for _, node in self.walk():
            for child in node.children:
                yield node, child

    def leaf_paths(self) -> dict[int, NodePath]:
        out = {}
        for path, node in self.walk():
            if node.is_leaf:
                out[node.vertex] = path
        return out

    def __eq__(self, other):
        if not isinstance(other, EncodingTree):
            return NotImplemented
        return _same_shape(self.root, other.root)

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __repr__(self):
        return f"EncodingTree(n={self.n}, height={self.height()})"


def _same_shape(a: TreeNode, b: TreeNode) -> bool:
    if a.vertices != b.vertices or len(a.children) != len(b.children):
        return False
    return all(_same_shape(x, y) for x, y in zip(a.children, b.children))


def format_path(path) -> str:
    return "root" if not path else ".".join(str(i) for i in path)


def _leaf(g: Graph, v: int) -> TreeNode:
    d = g.degree[v]
    return TreeNode((v,), d, d)


def star_tree(g: Graph) -> EncodingTree:
    """Root with one leaf child per vertex, in index order."""
    root = TreeNode(range(g.n), g.volume, 0.0, [_leaf(g, v) for v in range(g.n)])
    return EncodingTree(root)


def from_partition(g: Graph, parts) -> EncodingTree:
    """Two-level tree over a partition; singleton parts become depth-1 leaves."""
    parts = [frozenset(p) for p in parts]
    if any(not p for p in parts):
        raise InvariantViolation("empty part")
    total = sum(len(p) for p in parts)
    union = frozenset().union(*parts)
    if total != len(union) or union != g.vertices():
        raise InvariantViolation("parts do not partition the vertex set")
    if len(parts) < 2:
        raise InvariantViolation("a partition tree needs at least 2 parts")
    children = []
    for part in sorted(parts, key=min):
        if len(part) == 1:
            children.append(_leaf(g, next(iter(part))))
        else:
            vol = sum(g.degree[v] for v in part)
            children.append(TreeNode(part, vol, cut_weight(g, part),
                                     [_leaf(g, v) for v in sorted(part)]))
    return EncodingTree(TreeNode(range(g.n), g.volume, 0.0, children))


def build_tree(g: Graph, spec) -> EncodingTree:
    """Build a tree from a nested spec: an int is a leaf, a list/tuple a node.

    Example: [[0, 1], [2, [3, 4]]] is a height-3 tree over 5 vertices.
    Stats are computed from the graph.
    """

    def rec(s) -> TreeNode:
        if isinstance(s, int):
            return _leaf(g, s)
        children = [rec(c) for c in s]
        if not children:
            raise InvariantViolation("empty node spec")
        vertices = frozenset().union(*(c.vertices for c in children))
        vol = sum(g.degree[v] for v in vertices)
        cut = 0.0 if len(vertices) == g.n else cut_weight(g, vertices)
        return TreeNode(vertices, vol, cut, children)

    return EncodingTree(rec(spec))


def refresh_stats(g: Graph, t: EncodingTree) -> None:
    """Recompute every cached vol and cut from the graph, in place."""
    for _, node in t.walk():
        node.vol = sum(g.degree[v] for v in node.vertices)
        node.cut = 0.0 if len(node.vertices) == g.n else cut_weight(g, node.vertices)


def validate_structure(t: EncodingTree, n: int) -> str | None:
    """Partition-tree shape checks alone (no graph): None if fine."""
    if t.root.vertices != frozenset(range(n)):
        return "root marker must be the whole item set (at root)"
    for path, node in t.walk():
        where = format_path(path)
        if node.is_leaf:
            if len(node.vertices) != 1:
                return f"leaf marker is not a singleton at {where}"
            continue
        if len(node.children) < 2:
            return f"internal node has fewer than 2 children at {where}"
        union: set[int] = set()
        total = 0
        for child in node.children:
            union.update(child.vertices)
            total += len(child.vertices)
        if total != len(union) or union != set(node.vertices):
            return f"children do not partition the marker at {where}"
    return None


def validate(g: Graph, t: EncodingTree) -> str | None:
    """Ground-truth check of all invariants; returns the first violation or None."""
    msg = validate_structure(t, g.n)
    if msg:
        return msg
    for path, node in t.walk():
        where = format_path(path)
        vol = sum(g.degree[v] for v in node.vertices)
        cut = 0.0 if len(node.vertices) == g.n else cut_weight(g, node.vertices)
        if abs(node.vol - vol) > STAT_TOL:
            return f"stale cached stats (vol {node.vol!r} vs {vol!r}) at {where}"
        if abs(node.cut - cut) > STAT_TOL:
            return f"stale cached stats (cut {node.cut!r} vs {cut!r}) at {where}"
    return None


def check_valid(g: Graph, t: EncodingTree) -> None:
    msg = validate(g, t)
    if msg:
        raise InvariantViolation(f"invalid encoding tree: {msg}")


def codeword(t: EncodingTree, v: int) -> NodePath:
    """Path of the unique leaf whose marker is {v}."""
    if v not in t.root.vertices:
        raise InvariantViolation(f"unknown vertex {v!r}")
    path: list[int] = []
    node = t.root
    while not node.is_leaf:
        for i, child in enumerate(node.children):
            if v in child.vertices:
                path.append(i)
                node = child
                break
        else:
            raise InvariantViolation(f"vertex {v!r} lost below {format_path(path)}")
    return tuple(path)


def serialize(g: Graph, t: EncodingTree) -> dict:
    """JSON-shaped document; stats are always emitted."""

    def rec(node: TreeNode) -> dict:
        if node.is_leaf:
            return {"vertex": g.vertex_ids[node.vertex], "vol": node.vol, "cut": node.cut}
        return {"children": [rec(c) for c in node.children], "vol": node.vol, "cut": node.cut}

    return rec(t.root)


def deserialize(g: Graph, doc) -> EncodingTree:
    """Rebuild a tree from a document; cached stats are recomputed, not trusted."""

    def rec(d) -> TreeNode:
        if not isinstance(d, dict):
            raise GraphParseError("tree document: node must be an object")
        if "vertex" in d:
            vid = str(d["vertex"])
            if vid not in g.index:
                raise GraphParseError(f"tree document: unknown vertex id {vid!r}")
            return TreeNode((g.index[vid],))
        if "children" not in d or not isinstance(d["children"], list) or not d["children"]:
            raise GraphParseError("tree document: node needs 'vertex' or a non-empty 'children'")
        children = [rec(c) for c in d["children"]]
        return TreeNode(frozenset().union(*(c.vertices for c in children)), children=children)

    t = EncodingTree(rec(doc))
    refresh_stats(g, t)
    return t

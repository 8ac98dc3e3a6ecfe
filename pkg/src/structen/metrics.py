"""Entropy and information functionals of a (graph, encoding tree) pair.

The tree functional is

    H(T) = -sum over non-root nodes a of (g_a / vol) * log2(V_a / V_parent)

where g_a is the cut weight of the node's marker and V_a its volume.
Replacing g_a by other set functions gives the module-function variants;
replacing it by V_a - g_a gives the compressed (eliminated) information.
Each dense formula is paired with an independent edgewise oracle that walks
codeword paths per edge, so the two routes can be cross-checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import InvariantViolation
from .graph import (Graph, VertexSet, check_distribution, conductance_exact,
                    cut_weight, one_dim_entropy, subset_volume)
from .tree import EncodingTree, TreeNode, check_valid, validate_structure

IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class ModuleFunction:
    """Weighting of tree-node markers: cut, volume, or a user-supplied map."""

    kind: str
    fn: Callable[[VertexSet], float] | None = None

    @classmethod
    def cut(cls) -> "ModuleFunction":
        return cls("cut")

    @classmethod
    def volume(cls) -> "ModuleFunction":
        return cls("volume")

    @classmethod
    def custom(cls, fn: Callable[[VertexSet], float]) -> "ModuleFunction":
        return cls("custom", fn)

    def __call__(self, g: Graph, marker: VertexSet) -> float:
        if self.kind == "cut":
            return cut_weight(g, marker)
        if self.kind == "volume":
            return subset_volume(g, marker)
        if self.kind == "custom" and self.fn is not None:
            value = float(self.fn(marker))
            if value < 0:
                raise InvariantViolation(f"module function returned {value!r} on {sorted(marker)}")
            return value
        raise InvariantViolation(f"unknown module function kind {self.kind!r}")


def _node_terms(t: EncodingTree):
    """Yield (node, parent) for every non-root node."""
    stack = [t.root]
    while stack:
        parent = stack.pop()
        for child in parent.children:
            yield child, parent
            if not child.is_leaf:
                stack.append(child)


def structural_entropy(g: Graph, t: EncodingTree, check: bool = True) -> float:
    """Uncertainty left in the graph under the tree's encoding (cut weighting)."""
    if check:
        check_valid(g, t)
    vol = g.volume
    return -sum(c.cut / vol * math.log2(c.vol / p.vol) for c, p in _node_terms(t))


def compressing_info(g: Graph, t: EncodingTree, check: bool = True) -> float:
    """Uncertainty eliminated by the tree: weights V_a - g_a instead of g_a."""
    if check:
        check_valid(g, t)
    vol = g.volume
    return -sum((c.vol - c.cut) / vol * math.log2(c.vol / p.vol) for c, p in _node_terms(t))


def module_entropy(g: Graph, t: EncodingTree, f: ModuleFunction, check: bool = True) -> float:
    """Generalized tree entropy with an arbitrary marker weighting."""
    if check:
        check_valid(g, t)
    vol = g.volume
    return -sum(f(g, c.vertices) / vol * math.log2(c.vol / p.vol) for c, p in _node_terms(t))


def decoding_info(g: Graph, t: EncodingTree, check: bool = True) -> float:
    """Information gained from the graph by the tree: H1 minus tree entropy."""
    return one_dim_entropy(g) - structural_entropy(g, t, check=check)


def distribution_entropy(p: Sequence[float], t: EncodingTree) -> float:
    """Tree entropy of a bare distribution; node mass plays both weights.

    Independent of the tree and equal to the Shannon entropy of p.
    """
    p = check_distribution(p)
    msg = validate_structure(t, len(p))
    if msg:
        raise InvariantViolation(f"invalid items tree: {msg}")

    masses: dict[int, float] = {}

    def mass(node: TreeNode) -> float:
        if node.is_leaf:
            m = p[node.vertex]
        else:
            m = sum(mass(c) for c in node.children)
        masses[id(node)] = m
        return m

    total = mass(t.root)
    acc = 0.0
    for child, parent in _node_terms(t):
        mc, mp = masses[id(child)], masses[id(parent)]
        if mc > 0:
            acc -= mc / total * math.log2(mc / mp)
    return acc


def _path_nodes(t: EncodingTree) -> dict[int, list[TreeNode]]:
    """For each vertex, the nodes along its root-to-leaf path (root first)."""
    out: dict[int, list[TreeNode]] = {}
    stack: list[tuple[TreeNode, list[TreeNode]]] = [(t.root, [t.root])]
    while stack:
        node, chain = stack.pop()
        if node.is_leaf:
            out[node.vertex] = chain
        else:
            for child in node.children:
                stack.append((child, chain + [child]))
    return out


def structural_entropy_edgewise(g: Graph, t: EncodingTree, check: bool = True) -> float:
    """Oracle for structural_entropy via per-edge codeword walks.

    Each undirected edge contributes in both directions, weighted by its
    weight: the cost of the path from just below the branch point of the two
    codewords down to the arrival leaf.
    """
    if check:
        check_valid(g, t)
    chains = _path_nodes(t)
    acc = 0.0
    for u, v, w in g.edges:
        for x, y in ((u, v), (v, u)):
            cx, cy = chains[x], chains[y]
            branch = 0
            while branch < len(cx) and branch < len(cy) and cx[branch] is cy[branch]:
                branch += 1
            for depth in range(branch, len(cy)):
                acc -= w * math.log2(cy[depth].vol / cy[depth - 1].vol)
    return acc / g.volume


def compressing_info_edgewise(g: Graph, t: EncodingTree, check: bool = True) -> float:
    """Oracle for compressing_info: per-edge shared-prefix (mutual) information."""
    if check:
        check_valid(g, t)
    chains = _path_nodes(t)
    acc = 0.0
    for u, v, w in g.edges:
        for x, y in ((u, v), (v, u)):
            cx, cy = chains[x], chains[y]
            branch = 0
            while branch < len(cx) and branch < len(cy) and cx[branch] is cy[branch]:
                branch += 1
            for depth in range(1, branch):
                acc -= w * math.log2(cy[depth].vol / cy[depth - 1].vol)
    return acc / g.volume


@dataclass(frozen=True)
class InfoReport:
    """Bundle of the information metrics of one (graph, tree) pair."""

    h1: float
    h_t: float
    compress: float
    decode: float
    ratio: float

    def to_dict(self) -> dict:
        return {"h1": self.h1, "h_t": self.h_t, "compress": self.compress,
                "decode": self.decode, "ratio": self.ratio}

    def to_text(self) -> str:
        lines = [f"{k} {v:.9f}" for k, v in self.to_dict().items()]
        return "\n".join(lines) + "\n"


def info_report(g: Graph, t: EncodingTree) -> InfoReport:
    check_valid(g, t)
    h1 = one_dim_entropy(g)
    h_t = structural_entropy(g, t, check=False)
    compress = compressing_info(g, t, check=False)
    decode = h1 - h_t
    if abs(compress - decode) > IDENTITY_TOL or abs(h1 - (h_t + compress)) > IDENTITY_TOL:
        raise InvariantViolation("compress/decode identity out of tolerance")
    return InfoReport(h1=h1, h_t=h_t, compress=compress, decode=decode, ratio=compress / h1)


def entropy_lower_bound(g: Graph, max_n: int = 24) -> float:
    """Conductance-based floor under every encoding tree: phi * (H1 - 1)."""
    phi, _ = conductance_exact(g, max_n=max_n)
    return phi * (one_dim_entropy(g) - 1.0)

"""Tree-entropy minimization: greedy merge/combine search plus exact oracles.

The greedy starts from the star tree and runs three phases:

  1. agglomerate: apply the sibling-pair operation with the largest
     positive entropy decrease, height-unbounded,
       * merge   - fuse two sibling modules into one (their children
                   become siblings under the fused node),
       * combine - insert a new common parent above two siblings;
  2. compress: while the tree exceeds the height cap, flatten the
     over-deep internal node whose removal costs the least entropy;
  3. polish: rerun phase 1 under the cap.

Restricting phase 1 to the cap traps the search in flat local optima
(merging across a bridge can beat completing a clique), which the
uncapped pass followed by compression avoids.  Only pairs with positive
cross weight are candidates, deltas are evaluated locally, and ties break
deterministically on (min vertex of A, min vertex of B) with merge
preferred over combine.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass

from .errors import InvariantViolation, SizeGuardExceeded
from .graph import Graph, one_dim_entropy
from .metrics import structural_entropy
from .tree import (EncodingTree, TreeNode, build_tree, format_path,
                   from_partition, star_tree)

DELTA_TOL = 1e-12


@dataclass(frozen=True)
class TraceStep:
    kind: str                # "merge", "combine" or "flatten"
    a: tuple[int, ...]       # path of the first operand when applied
    b: tuple[int, ...]       # second operand; the parent for a flatten
    delta: float

    def format(self, step: int) -> str:
        return f"{step} {self.kind} {format_path(self.a)} {format_path(self.b)} {self.delta:.9f}"


@dataclass(frozen=True)
class OptimizeResult:
    tree: EncodingTree
    entropy: float
    trace: tuple[TraceStep, ...]

    def partition(self) -> list[frozenset]:
        """Markers of the root's children, in child order."""
        return [c.vertices for c in self.tree.root.children]

    def trace_text(self) -> str:
        return "".join(s.format(i) + "\n" for i, s in enumerate(self.trace))


def cross_weight(g: Graph, a, b) -> float:
    """Total edge weight between two disjoint vertex sets."""
    a, b = frozenset(a), frozenset(b)
    if len(a) > len(b):
        a, b = b, a
    return sum(w for u in a for v, w in g.adj[u].items() if v in b)


def _flat_merge_delta(vol: float, v_parent: float, va: float, ga: float,
                      vb: float, gb: float, w_ab: float) -> float:
    # Entropy drop from fusing flat sibling modules A, B under a parent of
    # volume v_parent; the per-leaf d*log2(d) parts cancel.
    lp = math.log2(v_parent)
    la, lb = math.log2(va), math.log2(vb)
    vm = va + vb
    gm = ga + gb - 2.0 * w_ab
    lm = math.log2(vm)
    return (ga * (lp - la) + gb * (lp - lb) - gm * (lp - lm)
            + va * la + vb * lb - vm * lm) / vol


def _is_flat(node: TreeNode) -> bool:
    return node.is_leaf or all(c.is_leaf for c in node.children)


def merge_delta(g: Graph, t: EncodingTree, a, b) -> float:
    """Entropy decrease from fusing two flat sibling modules (or leaves).

    Positive means the merge improves.  Depends only on the two modules'
    volumes, cuts, their cross weight, the parent volume and vol(G).
    """
    pa, pb = tuple(a), tuple(b)
    if not pa or not pb or pa[:-1] != pb[:-1] or pa == pb:
        raise InvariantViolation("merge_delta needs two distinct sibling nodes")
    na, nb = t.node_at(pa), t.node_at(pb)
    if not (_is_flat(na) and _is_flat(nb)):
        raise InvariantViolation("merge_delta needs flat modules (children must be leaves)")
    parent = t.node_at(pa[:-1])
    w = cross_weight(g, na.vertices, nb.vertices)
    return _flat_merge_delta(g.volume, parent.vol, na.vol, na.cut, nb.vol, nb.cut, w)


def _general_merge_delta(vol: float, parent: TreeNode, a: TreeNode, b: TreeNode,
                         w_ab: float) -> float:
    # Local recomputation over the affected terms: the two operands, their
    # children (re-parented under the fused node), and nothing else.
    def contrib(cut, v, v_up):
        return -(cut / vol) * math.log2(v / v_up)

    before = contrib(a.cut, a.vol, parent.vol) + contrib(b.cut, b.vol, parent.vol)
    for c in a.children:
        before += contrib(c.cut, c.vol, a.vol)
    for c in b.children:
        before += contrib(c.cut, c.vol, b.vol)
    vm = a.vol + b.vol
    gm = a.cut + b.cut - 2.0 * w_ab
    after = contrib(gm, vm, parent.vol)
    for c in (a.children or [a]):
        after += contrib(c.cut, c.vol, vm)
    for c in (b.children or [b]):
        after += contrib(c.cut, c.vol, vm)
    return before - after


def _combine_delta(vol: float, v_parent: float, va: float, vb: float, w_ab: float) -> float:
    # Only the shared prefix changes: 2 w_ab * log2(V_parent / (V_a + V_b)) / vol.
    return 2.0 * w_ab / vol * math.log2(v_parent / (va + vb))


def _merged_node(a: TreeNode, b: TreeNode, w_ab: float) -> TreeNode:
    children = list(a.children or [a]) + list(b.children or [b])
    children.sort(key=TreeNode.min_vertex)
    return TreeNode(a.vertices | b.vertices, a.vol + b.vol,
                    a.cut + b.cut - 2.0 * w_ab, children)


def _combined_node(a: TreeNode, b: TreeNode, w_ab: float) -> TreeNode:
    children = sorted([a, b], key=TreeNode.min_vertex)
    return TreeNode(a.vertices | b.vertices, a.vol + b.vol,
                    a.cut + b.cut - 2.0 * w_ab, children)


def _replace_pair(parent: TreeNode, a: TreeNode, b: TreeNode, new: TreeNode) -> None:
    parent.children = [c for c in parent.children if c is not a and c is not b]
    parent.children.append(new)
    parent.children.sort(key=TreeNode.min_vertex)


def combine_apply(g: Graph, t: EncodingTree, a, b, height_cap: int | None = None) -> EncodingTree:
    """Insert a new parent above siblings a and b; returns a new tree."""
    pa, pb = tuple(a), tuple(b)
    if not pa or not pb or pa[:-1] != pb[:-1] or pa == pb:
        raise InvariantViolation("combine_apply needs two distinct sibling nodes")
    out = t.copy()
    parent = out.node_at(pa[:-1])
    if len(parent.children) < 3:
        raise InvariantViolation("combine would leave the parent with a single child")
    na, nb = out.node_at(pa), out.node_at(pb)
    if height_cap is not None:
        depth = len(pa) - 1
        new_height = depth + 2 + max(na.height(), nb.height())
        if new_height > height_cap:
            raise InvariantViolation(f"height cap exceeded ({new_height} > {height_cap})")
    w = cross_weight(g, na.vertices, nb.vertices)
    _replace_pair(parent, na, nb, _combined_node(na, nb, w))
    return out


def minimize_2d(g: Graph) -> OptimizeResult:
    """Greedy two-level minimization; the root children are the partition."""
    return minimize_kd(g, 2)


def _best_move(g: Graph, t: EncodingTree, k: int | None):
    # One pass over edges buckets cross weights by (parent path, child pair).
    leaf_paths = t.leaf_paths()
    cross: dict[tuple[tuple[int, ...], int, int], float] = defaultdict(float)
    for u, v, w in g.edges:
        pu, pv = leaf_paths[u], leaf_paths[v]
        depth = 0
        while pu[depth] == pv[depth]:
            depth += 1
        ia, ib = pu[depth], pv[depth]
        cross[(pu[:depth], min(ia, ib), max(ia, ib))] += w

    vol = g.volume
    best_key = None
    best = None
    for (ppath, ia, ib), w in cross.items():
        parent = t.node_at(ppath)
        if len(parent.children) < 3:
            continue
        a, b = parent.children[ia], parent.children[ib]
        ma, mb = a.min_vertex(), b.min_vertex()
        depth = len(ppath)
        leaf_ok = k is None or ((not a.is_leaf or depth + 2 <= k)
                                and (not b.is_leaf or depth + 2 <= k))
        if leaf_ok:
            if _is_flat(a) and _is_flat(b):
                d = _flat_merge_delta(vol, parent.vol, a.vol, a.cut, b.vol, b.cut, w)
            else:
                d = _general_merge_delta(vol, parent, a, b, w)
            key = (-d, ma, mb, 0)
            if best_key is None or key < best_key:
                best_key, best = key, ("merge", ppath, ia, ib, w, d)
        # A leaf-leaf combine builds the very tree the merge builds; skip it.
        combinable = not (a.is_leaf and b.is_leaf)
        if combinable and (k is None or depth + 2 + max(a.height(), b.height()) <= k):
            d = _combine_delta(vol, parent.vol, a.vol, b.vol, w)
            key = (-d, ma, mb, 1)
            if best_key is None or key < best_key:
                best_key, best = key, ("combine", ppath, ia, ib, w, d)
    return best


def _greedy_phase(g: Graph, t: EncodingTree, k: int | None,
                  trace: list[TraceStep]) -> None:
    while True:
        move = _best_move(g, t, k)
        if move is None or move[5] <= DELTA_TOL:
            return
        kind, ppath, ia, ib, w, d = move
        parent = t.node_at(ppath)
        a, b = parent.children[ia], parent.children[ib]
        new = _merged_node(a, b, w) if kind == "merge" else _combined_node(a, b, w)
        _replace_pair(parent, a, b, new)
        trace.append(TraceStep(kind, ppath + (ia,), ppath + (ib,), d))


def _flatten_delta(vol: float, parent: TreeNode, node: TreeNode) -> float:
    # Promoting the node's children to its parent undoes the node's share:
    # always <= 0, with magnitude 2*(internal cross weight)*log2(Vp/Vn)/vol.
    internal = sum(c.cut for c in node.children) - node.cut
    return internal / vol * math.log2(node.vol / parent.vol)


def _compress_phase(g: Graph, t: EncodingTree, k: int,
                    trace: list[TraceStep]) -> None:
    # While too tall, remove the over-deep internal node costing the least.
    vol = g.volume
    while t.height() > k:
        best_key = None
        best = None
        for path, node in t.walk():
            if not path or node.is_leaf:
                continue
            if len(path) + node.height() <= k:
                continue
            parent = t.node_at(path[:-1])
            d = _flatten_delta(vol, parent, node)
            key = (-d, node.min_vertex(), path)
            if best_key is None or key < best_key:
                best_key, best = key, (path, node, parent, d)
        assert best is not None
        path, node, parent, d = best
        parent.children = [c for c in parent.children if c is not node]
        parent.children.extend(node.children)
        parent.children.sort(key=TreeNode.min_vertex)
        trace.append(TraceStep("flatten", path, path[:-1], d))


def minimize_kd(g: Graph, k: int) -> OptimizeResult:
    """Greedy minimization over trees of height at most k.

    Agglomerates height-unbounded, compresses back to the cap, then
    polishes with capped moves.  Merge and combine trace deltas are
    positive; flatten deltas are the (non-positive) exact entropy change.
    """
    if k < 2:
        raise InvariantViolation("height cap must be at least 2")
    t = star_tree(g)
    trace: list[TraceStep] = []
    _greedy_phase(g, t, None, trace)
    _compress_phase(g, t, k, trace)
    _greedy_phase(g, t, k, trace)
    return OptimizeResult(t, structural_entropy(g, t), tuple(trace))


def _restricted_growth_strings(n: int):
    """All set partitions of range(n) as block assignments, canonical order."""
    a = [0] * n
    b = [0] * n
    while True:
        yield a
        j = n - 1
        while j > 0 and a[j] == b[j - 1] + 1:
            j -= 1
        if j == 0:
            return
        a[j] += 1
        b[j] = max(b[j - 1], a[j])
        for i in range(j + 1, n):
            a[i] = 0
            b[i] = b[j]


def brute_force_2d(g: Graph, max_n: int = 10) -> OptimizeResult:
    """Exact two-level optimum over all set partitions of the vertex set.

    The single-block partition is excluded (the root may not have one
    child).  Tie-break: lexicographically smallest canonical partition.
    """
    n = g.n
    if n > max_n:
        raise SizeGuardExceeded(f"brute_force_2d limited to {max_n} vertices (got {n})")
    deg = g.degree
    vol = g.volume
    lvol = math.log2(vol)
    dlogd = sum(d * math.log2(d) for d in deg)
    edges = g.edges

    best_h = math.inf
    best_key: tuple | None = None
    for a in _restricted_growth_strings(n):
        m = max(a) + 1
        if m == 1:
            continue
        vols = [0.0] * m
        cuts = [0.0] * m
        for v in range(n):
            vols[a[v]] += deg[v]
        for u, v, w in edges:
            if a[u] != a[v]:
                cuts[a[u]] += w
                cuts[a[v]] += w
        acc = 0.0
        for i in range(m):
            lb = math.log2(vols[i])
            acc += cuts[i] * (lvol - lb) + vols[i] * lb
        h = (acc - dlogd) / vol
        if h < best_h:
            best_h = h
            best_key = _partition_key(a, m)
        elif h == best_h:
            key = _partition_key(a, m)
            if best_key is None or key < best_key:
                best_key = key
    assert best_key is not None
    tree = from_partition(g, [frozenset(block) for block in best_key])
    return OptimizeResult(tree, structural_entropy(g, tree), ())


def _partition_key(assign, m) -> tuple:
    blocks: list[list[int]] = [[] for _ in range(m)]
    for v, b in enumerate(assign):
        blocks[b].append(v)
    return tuple(tuple(b) for b in blocks)


def _set_partitions(items: tuple, min_blocks: int = 2):
    """Set partitions of items with at least min_blocks blocks, canonical order."""
    n = len(items)
    for a in _restricted_growth_strings(n):
        m = max(a) + 1
        if m < min_blocks:
            continue
        blocks: list[list] = [[] for _ in range(m)]
        for pos, b in enumerate(a):
            blocks[b].append(items[pos])
        yield [tuple(b) for b in blocks]


def _nested_specs(block: tuple, budget: int):
    """All encoding subtrees over a vertex block within a height budget."""
    if len(block) == 1:
        yield block[0]
        return
    if budget < 1:
        return
    for parts in _set_partitions(block, min_blocks=2):
        for combo in itertools.product(*(_nested_specs(p, budget - 1) for p in parts)):
            yield list(combo)


def _spec_key(spec):
    if isinstance(spec, int):
        return ((spec,), ())
    members: list[int] = []
    child_keys = []
    for child in spec:
        ckey = _spec_key(child)
        members.extend(ckey[0])
        child_keys.append(ckey)
    return (tuple(sorted(members)), tuple(child_keys))


def brute_force_kd(g: Graph, k: int, max_n: int = 6, max_k: int = 3) -> OptimizeResult:
    """Exact optimum over all encoding trees of height at most k.

    Trees are enumerated as nested partitions; guards are configurable but
    the space grows hyper-exponentially.
    """
    if k < 2:
        raise InvariantViolation("height cap must be at least 2")
    if g.n > max_n:
        raise SizeGuardExceeded(f"brute_force_kd limited to {max_n} vertices (got {g.n})")
    if k > max_k:
        raise SizeGuardExceeded(f"brute_force_kd limited to height {max_k} (got {k})")

    best_h = math.inf
    best_spec = None
    best_key = None
    for spec in _nested_specs(tuple(range(g.n)), k):
        tree = build_tree(g, spec)
        h = structural_entropy(g, tree, check=False)
        if h < best_h:
            best_h, best_spec, best_key = h, spec, None
        elif h == best_h:
            if best_key is None:
                best_key = _spec_key(best_spec)
            key = _spec_key(spec)
            if key < best_key:
                best_spec, best_key = spec, key
    assert best_spec is not None
    tree = build_tree(g, best_spec)
    return OptimizeResult(tree, structural_entropy(g, tree), ())


def decoding_info_k(g: Graph, k: int) -> float:
    """Greedy estimate of the information decodable at height k: H1 - H_greedy."""
    return one_dim_entropy(g) - minimize_kd(g, k).entropy


def compressing_ratio_k(g: Graph, k: int) -> float:
    """Decodable fraction of the degree entropy at height k (greedy)."""
    return decoding_info_k(g, k) / one_dim_entropy(g)


def is_compressible(g: Graph, n: int, k: int, rho: float) -> bool:
    """Whether g is an (n, k, rho)-compressible graph."""
    if not 0 < rho < 1:
        raise InvariantViolation("rho must lie in (0, 1)")
    if k < 2:
        raise InvariantViolation("k must be at least 2")
    return g.n == n and compressing_ratio_k(g, k) >= rho

"""Structure-driven learning over data spaces.

Pipeline: connect observed points into a graph by sweeping an edge-count
parameter and keeping the value that maximizes decodable information; read
the minimizing tree as the space's decoder; annotate it with common feature
sets (knowledge tree); contract equal-feature edges (tree of abstractions);
then place newly observed points by abstraction matching followed by a
local entropy-driven re-fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import GraphParseError, InvariantViolation
from .graph import Graph, build_topk_graph, one_dim_entropy, positive_pairs
from .metrics import structural_entropy
from .optimize import decoding_info_k, minimize_kd
from .tree import EncodingTree, TreeNode, codeword, refresh_stats


@dataclass(frozen=True)
class FeatureSet:
    """Feature tokens of one data point, split into syntax and semantics."""

    syntax: frozenset = frozenset()
    semantics: frozenset = frozenset()

    @property
    def all(self) -> frozenset:
        return self.syntax | self.semantics

    def pick(self, source: str) -> frozenset:
        if source == "all":
            return self.all
        if source == "syntax":
            return self.syntax
        if source == "semantics":
            return self.semantics
        raise InvariantViolation(f"unknown feature source {source!r}")


class FeatureCatalog:
    """Per-vertex feature sets, keyed by external vertex id."""

    def __init__(self, entries: Mapping[str, FeatureSet] | None = None):
        self._entries: dict[str, FeatureSet] = dict(entries or {})

    def __contains__(self, vid) -> bool:
        return str(vid) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def ids(self):
        return self._entries.keys()

    def entry(self, vid) -> FeatureSet:
        try:
            return self._entries[str(vid)]
        except KeyError:
            raise InvariantViolation(f"missing catalog entry for vertex {vid!r}") from None

    def with_entry(self, vid, features: FeatureSet) -> "FeatureCatalog":
        out = dict(self._entries)
        out[str(vid)] = features
        return FeatureCatalog(out)

    def require_cover(self, g: Graph) -> None:
        for vid in g.vertex_ids:
            if vid not in self._entries:
                raise InvariantViolation(f"missing catalog entry for vertex {vid!r}")

    @classmethod
    def from_dict(cls, doc) -> "FeatureCatalog":
        if not isinstance(doc, dict):
            raise GraphParseError("feature catalog: expected an object of vertex entries")
        entries = {}
        for vid, entry in doc.items():
            if not isinstance(entry, dict):
                raise GraphParseError(f"feature catalog: entry for {vid!r} must be an object")
            syntax = entry.get("syntax", [])
            semantics = entry.get("semantics", [])
            if not isinstance(syntax, list) or not isinstance(semantics, list):
                raise GraphParseError(f"feature catalog: token lists expected for {vid!r}")
            entries[str(vid)] = FeatureSet(frozenset(map(str, syntax)),
                                           frozenset(map(str, semantics)))
        return cls(entries)

    def to_dict(self) -> dict:
        return {vid: {"syntax": sorted(fs.syntax), "semantics": sorted(fs.semantics)}
                for vid, fs in sorted(self._entries.items())}


@dataclass
class FeatureNode:
    """Node of a knowledge or abstraction tree."""

    features: frozenset
    vertices: frozenset
    decoder_path: tuple[int, ...]
    children: list["FeatureNode"] = field(default_factory=list)
    path: tuple[int, ...] = ()       # position in its own tree, set after build

    @property
    def is_leaf(self) -> bool:
        return not self.children


class _FeatureTree:
    __slots__ = ("root",)

    def __init__(self, root: FeatureNode):
        self.root = root
        _assign_positions(root, ())

    def walk(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def node_at(self, path) -> FeatureNode:
        node = self.root
        for i in path:
            node = node.children[i]
        return node


class KnowledgeTree(_FeatureTree):
    """Decoder annotated with the common features of each marker."""


class AbstractionTree(_FeatureTree):
    """Knowledge tree with equal-feature parent-child edges contracted."""


def _assign_positions(node: FeatureNode, path) -> None:
    node.path = path
    for i, child in enumerate(node.children):
        _assign_positions(child, path + (i,))


def knowledge_tree(g: Graph, t: EncodingTree, catalog: FeatureCatalog,
                   source: str = "all") -> KnowledgeTree:
    """Annotate every tree node with the intersection of member feature sets."""
    catalog.require_cover(g)

    def rec(node: TreeNode, path) -> FeatureNode:
        if node.is_leaf:
            feats = catalog.entry(g.vertex_ids[node.vertex]).pick(source)
            return FeatureNode(feats, node.vertices, path)
        children = [rec(c, path + (i,)) for i, c in enumerate(node.children)]
        feats = frozenset.intersection(*(c.features for c in children))
        return FeatureNode(feats, node.vertices, path, children)

    return KnowledgeTree(rec(t.root, ()))


def abstraction_tree(kt: KnowledgeTree) -> AbstractionTree:
    """Contract equal-feature parent-child edges; feature sets grow strictly."""

    def rec(node: FeatureNode) -> FeatureNode:
        out = FeatureNode(node.features, node.vertices, node.decoder_path)
        merged: list[FeatureNode] = []
        for child in (rec(c) for c in node.children):
            if child.features == node.features:
                merged.extend(child.children)  # absorb; grandchildren are strict already
            else:
                merged.append(child)
        merged.sort(key=lambda c: min(c.vertices))
        out.children = merged
        return out

    return AbstractionTree(rec(kt.root))


def check_strict_growth(at: AbstractionTree) -> str | None:
    for node in at.walk():
        for child in node.children:
            if not node.features < child.features:
                return f"feature sets do not grow strictly below {node.path}"
    return None


def flow_of_abstractions(ds: "DataSpace", vid) -> list[frozenset]:
    """Feature-set chain along the vertex's root-to-leaf path, root last."""
    v = _vertex_index(ds.graph, vid)
    path = codeword(ds.decoder, v)
    chain = [ds.knowledge.root.features]
    node = ds.knowledge.root
    for i in path:
        node = node.children[i]
        chain.append(node.features)
    chain.reverse()
    return chain


def least_common_abstraction(ds: "DataSpace", uid, vid) -> frozenset:
    """Features at the deepest common ancestor of two distinct vertices."""
    u = _vertex_index(ds.graph, uid)
    v = _vertex_index(ds.graph, vid)
    if u == v:
        raise InvariantViolation("least_common_abstraction needs two distinct vertices")
    pu, pv = codeword(ds.decoder, u), codeword(ds.decoder, v)
    node = ds.knowledge.root
    for a, b in zip(pu, pv):
        if a != b:
            break
        node = node.children[a]
    return node.features


def choose_abstraction(ds: "DataSpace", features: Iterable[str]) -> FeatureNode:
    """Deepest abstraction whose feature set is contained in the query.

    Empty feature sets never match; ties prefer the larger feature set and
    then the smaller tree position.  Falls back to the root.
    """
    query = frozenset(map(str, features))
    best = None
    best_key = None
    for node in ds.abstractions.walk():
        if node.features and node.features <= query:
            key = (-len(node.path), -len(node.features), node.path)
            if best_key is None or key < best_key:
                best_key, best = key, node
    return best if best is not None else ds.abstractions.root


def _vertex_index(g: Graph, vid) -> int:
    try:
        return g.index[str(vid)]
    except KeyError:
        raise InvariantViolation(f"unknown vertex {vid!r}") from None


@dataclass(frozen=True)
class DataSpace:
    """Graph, decoder and derived feature trees of one learned space."""

    graph: Graph
    decoder: EncodingTree
    knowledge: KnowledgeTree
    abstractions: AbstractionTree
    catalog: FeatureCatalog
    construction_k: int
    height: int
    sweep: tuple[tuple[int, float], ...] = ()
    abstraction_source: str = "syntax"


def _derive(g: Graph, decoder: EncodingTree, catalog: FeatureCatalog,
            construction_k: int, height: int, sweep, source: str) -> DataSpace:
    kt = knowledge_tree(g, decoder, catalog, source="all")
    at = abstraction_tree(knowledge_tree(g, decoder, catalog, source=source))
    return DataSpace(g, decoder, kt, at, catalog, construction_k, height,
                     tuple(sweep), source)


def build_data_space(sim, catalog: FeatureCatalog, height: int = 2,
                     ids: Sequence[str] | None = None,
                     abstraction_source: str = "syntax") -> DataSpace:
    """Sweep the kept-edge count and keep the graph with maximal decodable info.

    The sweep runs from the smallest count giving a connected graph up to
    every positive pair; ties prefer the smaller count.
    """
    sim = np.asarray(sim, dtype=float)
    pairs = positive_pairs(sim)
    n = sim.shape[0]
    ids = tuple(ids) if ids is not None else tuple(str(i) for i in range(n))

    k_min = _smallest_connected(n, pairs)
    if k_min is None:
        raise InvariantViolation("no edge count connects the samples (zero rows?)")

    sweep = []
    best_k = None
    best_d = -1.0
    for k in range(k_min, len(pairs) + 1):
        gk = build_topk_graph(sim, k, ids=ids)
        d = decoding_info_k(gk, height)
        sweep.append((k, d))
        if d > best_d:
            best_d, best_k = d, k
    graph = build_topk_graph(sim, best_k, ids=ids)
    decoder = minimize_kd(graph, height).tree
    return _derive(graph, decoder, catalog, best_k, height, sweep, abstraction_source)


def _smallest_connected(n: int, pairs) -> int | None:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    components = n
    for k, (_, i, j) in enumerate(pairs, start=1):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            components -= 1
            if components == 1:
                return k
    return None


@dataclass(frozen=True)
class InsertReport:
    """What happened while placing one new point."""

    abstraction: tuple[int, ...]   # position in the abstraction tree
    chosen_k: int
    module: tuple[str, ...]        # ids of the final module containing the point
    h_before: float
    h_after: float


def insert_point(ds: DataSpace, point_id, sims: Mapping[str, float],
                 syntax: Iterable[str] = (), semantics: Iterable[str] = ()
                 ) -> tuple[DataSpace, InsertReport]:
    """Stream one new point into the space.

    Abstraction matching selects the target module; the attachment edge
    count is swept for maximal decodable information with the point placed
    under that module; a local re-fit may then move the point's leaf within
    the module's subtree or to a sibling module.
    """
    point_id = str(point_id)
    g = ds.graph
    if point_id in g.index:
        raise InvariantViolation(f"vertex id {point_id!r} already present")
    weights = []
    for vid, w in sims.items():
        v = _vertex_index(g, vid)
        w = float(w)
        if w < 0:
            raise InvariantViolation(f"negative similarity for {vid!r}")
        if w > 0:
            weights.append((w, v))
    if not weights:
        raise InvariantViolation("all similarities are zero")
    weights.sort(key=lambda t: (-t[0], t[1]))

    features = FeatureSet(frozenset(map(str, syntax)), frozenset(map(str, semantics)))
    target = choose_abstraction(ds, features.pick(ds.abstraction_source))
    module_path = target.decoder_path

    h_before = structural_entropy(g, ds.decoder)
    x = g.n
    old_edges = [(g.vertex_ids[u], g.vertex_ids[v], w) for u, v, w in g.edges]
    ids2 = g.vertex_ids + (point_id,)

    def graph_with(k: int) -> Graph:
        extra = [(g.vertex_ids[v], point_id, w) for w, v in weights[:k]]
        return Graph(ids2, old_edges + extra)

    best_k = None
    best_d = -float("inf")
    for k in range(1, len(weights) + 1):
        gk = graph_with(k)
        tk = _placed(gk, ds.decoder, module_path, x)
        d = one_dim_entropy(gk) - structural_entropy(gk, tk, check=False)
        if d > best_d:
            best_d, best_k = d, k

    new_graph = graph_with(best_k)
    new_tree = _local_refit(new_graph, ds.decoder, module_path, x, ds.height)
    h_after = structural_entropy(new_graph, new_tree)

    catalog = ds.catalog.with_entry(point_id, features)
    out = _derive(new_graph, new_tree, catalog, ds.construction_k, ds.height,
                  ds.sweep, ds.abstraction_source)
    leaf_path = codeword(new_tree, x)
    if len(leaf_path) > 1:
        module = new_tree.node_at(leaf_path[:-1]).vertices
    else:
        module = frozenset((x,))
    report = InsertReport(abstraction=target.path, chosen_k=best_k,
                          module=tuple(sorted(new_graph.vertex_ids[v] for v in module)),
                          h_before=h_before, h_after=h_after)
    return out, report


def _placed(gx: Graph, decoder: EncodingTree, module_path, x: int) -> EncodingTree:
    """Decoder copy with x inserted as a leaf at the module node."""
    t = decoder.copy()
    node = t.node_at(module_path)
    leaf = TreeNode((x,))
    if node.is_leaf:
        # singleton module: grow it into a two-leaf module in place
        node.children = [TreeNode(node.vertices), leaf]
    else:
        node.children.append(leaf)
        node.children.sort(key=TreeNode.min_vertex)
    # the module marker and every ancestor marker gain x
    _add_to_ancestors(t.root, module_path, x)
    refresh_stats(gx, t)
    return t


def _add_to_ancestors(root: TreeNode, path, x: int) -> None:
    node = root
    node.vertices = node.vertices | {x}
    for i in path:
        node = node.children[i]
        node.vertices = node.vertices | {x}


def _candidate_positions(t: EncodingTree, module_path, cap: int):
    """Placement descriptors: ('child_of'|'pair_with', path), deterministic order."""
    seen = set()
    out = []

    def add(kind, path):
        if (kind, path) not in seen:
            seen.add((kind, path))
            out.append((kind, path))

    module = t.node_at(module_path)
    # whole subtree under the module node
    stack = [(module_path, module)]
    while stack:
        path, node = stack.pop()
        if node.is_leaf:
            if len(path) + 1 <= cap:
                add("pair_with", path)
        else:
            if len(path) + 1 <= cap:
                add("child_of", path)
            for i in range(len(node.children) - 1, -1, -1):
                stack.append((path + (i,), node.children[i]))
    if module_path:
        parent_path = module_path[:-1]
        parent = t.node_at(parent_path)
        add("child_of", parent_path)  # the point as its own singleton module
        for i, sib in enumerate(parent.children):
            sib_path = parent_path + (i,)
            if sib_path == module_path:
                continue
            if sib.is_leaf:
                if len(sib_path) + 1 <= cap:
                    add("pair_with", sib_path)
            elif len(sib_path) + 1 <= cap:
                add("child_of", sib_path)
    return out


def _apply_position(gx: Graph, decoder: EncodingTree, kind, path, x: int) -> EncodingTree:
    t = decoder.copy()
    node = t.node_at(path)
    leaf = TreeNode((x,))
    if kind == "pair_with":
        node.children = [TreeNode(node.vertices), leaf]
        node.vertices = node.vertices | {x}
    else:
        node.children.append(leaf)
        node.children.sort(key=TreeNode.min_vertex)
    _add_to_ancestors(t.root, path, x)
    refresh_stats(gx, t)
    return t


def _local_refit(gx: Graph, decoder: EncodingTree, module_path, x: int,
                 cap: int) -> EncodingTree:
    """Entropy-minimizing placement of x near the chosen module.

    Candidates are every slot inside the module's subtree plus the sibling
    modules; only the new point moves.  The intuitive placement wins ties.
    """
    intuitive = _placed(gx, decoder, module_path, x)
    best_tree = intuitive
    best_h = structural_entropy(gx, intuitive, check=False)
    module = decoder.node_at(module_path)
    intuitive_kind = "pair_with" if module.is_leaf else "child_of"
    for kind, path in _candidate_positions(decoder, module_path, cap):
        if (kind, path) == (intuitive_kind, module_path):
            continue
        tree = _apply_position(gx, decoder, kind, path, x)
        h = structural_entropy(gx, tree, check=False)
        if h < best_h - 1e-12:
            best_h, best_tree = h, tree
    return best_tree


def classify_by_abstraction(abstraction_sets: Sequence[tuple[str, Iterable[str]]],
                            sample: Mapping[str, float]) -> str:
    """Label whose abstraction set has the largest mean sample value.

    Tokens absent from the sample count as 0; ties keep the first label in
    input order.
    """
    best_label = None
    best_mean = -float("inf")
    for label, tokens in abstraction_sets:
        tokens = tuple(tokens)
        if not tokens:
            raise InvariantViolation(f"empty abstraction set for label {label!r}")
        mean = sum(float(sample.get(tok, 0.0)) for tok in tokens) / len(tokens)
        if mean > best_mean:
            best_mean, best_label = mean, label
    if best_label is None:
        raise InvariantViolation("no abstraction sets given")
    return best_label

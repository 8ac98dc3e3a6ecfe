"""Weighted undirected graphs: cuts, conductance, degree entropy, top-k construction.

Vertices carry external string identifiers and are indexed densely in
first-appearance order.  All cuts, degrees and volumes are weighted sums;
unit weights recover plain edge counting.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from typing import Iterable, Sequence

import numpy as np

from .errors import GraphParseError, InvariantViolation, SizeGuardExceeded

# dense vertex indices; frozenset keeps subsets hashable and immutable
VertexSet = frozenset

_VOLUME_REL_TOL = 1e-12
_DISTRIBUTION_TOL = 1e-9
_SYMMETRY_TOL = 1e-9


class Graph:
    """Immutable weighted undirected connected graph.

    `degree[v]` is the weighted degree of vertex v and `volume` is the sum
    of all degrees (2m for unit weights).  Construction validates every
    invariant: no self-loops, no duplicate edges, positive weights, at
    least one edge, and a single connected component.
    """

    __slots__ = ("vertex_ids", "index", "edges", "adj", "degree", "volume")

    def __init__(self, vertex_ids: Sequence[str], edges: Iterable[tuple[str, str, float]]):
        ids = tuple(str(v) for v in vertex_ids)
        if len(set(ids)) != len(ids):
            raise InvariantViolation("duplicate vertex identifier")
        if len(ids) < 2:
            raise InvariantViolation("a graph needs at least 2 vertices")
        self.vertex_ids = ids
        self.index = {v: i for i, v in enumerate(ids)}

        adj: list[dict[int, float]] = [dict() for _ in ids]
        edge_list: list[tuple[int, int, float]] = []
        for u_id, v_id, w in edges:
            u_id, v_id = str(u_id), str(v_id)
            if u_id not in self.index or v_id not in self.index:
                missing = u_id if u_id not in self.index else v_id
                raise InvariantViolation(f"edge endpoint {missing!r} is not a vertex")
            u, v = self.index[u_id], self.index[v_id]
            w = float(w)
            if u == v:
                raise InvariantViolation(f"self-loop at vertex {u_id!r}")
            if not w > 0:
                raise InvariantViolation(f"non-positive weight on edge {u_id!r}-{v_id!r}")
            if v in adj[u]:
                raise InvariantViolation(f"duplicate edge {u_id!r}-{v_id!r}")
            adj[u][v] = w
            adj[v][u] = w
            edge_list.append((min(u, v), max(u, v), w))
        if not edge_list:
            raise InvariantViolation("a graph needs at least one edge")

        self.adj = tuple(adj)
        self.edges = tuple(edge_list)
        self.degree = tuple(sum(nbrs.values()) for nbrs in adj)
        self.volume = sum(self.degree)

        if 0.0 in self.degree or not self._connected():
            raise InvariantViolation("graph is disconnected")
        twice_weight = 2.0 * sum(w for _, _, w in self.edges)
        if abs(self.volume - twice_weight) > _VOLUME_REL_TOL * self.volume:
            raise InvariantViolation("volume bookkeeping out of tolerance")

    @classmethod
    def from_index_edges(cls, n: int, edges: Iterable[tuple[int, int, float]],
                         ids: Sequence[str] | None = None) -> "Graph":
        """Build from integer-indexed edges; ids default to "0".."n-1"."""
        ids = tuple(ids) if ids is not None else tuple(str(i) for i in range(n))
        return cls(ids, [(ids[u], ids[v], w) for u, v, w in edges])

    @property
    def n(self) -> int:
        return len(self.vertex_ids)

    def vertices(self) -> VertexSet:
        return frozenset(range(self.n))

    def _connected(self) -> bool:
        seen = [False] * self.n
        queue = deque([0])
        seen[0] = True
        count = 1
        while queue:
            u = queue.popleft()
            for v in self.adj[u]:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    queue.append(v)
        return count == self.n


def load_graph(path) -> Graph:
    """Parse an edge-list file.

    One edge per line: `<u> <v> [<weight>]`, whitespace separated, weight
    defaulting to 1.0; lines starting with `#` and blank lines are skipped.
    Vertex order is first appearance.
    """
    ids: list[str] = []
    seen: set[str] = set()
    edges: list[tuple[str, str, float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) not in (2, 3):
                raise GraphParseError(f"{path}:{lineno}: expected 'u v [weight]', got {len(fields)} fields")
            u, v = fields[0], fields[1]
            if u == v:
                raise InvariantViolation(f"{path}:{lineno}: self-loop at vertex {u!r}")
            if len(fields) == 3:
                try:
                    w = float(fields[2])
                except ValueError:
                    raise GraphParseError(f"{path}:{lineno}: bad weight {fields[2]!r}") from None
            else:
                w = 1.0
            for x in (u, v):
                if x not in seen:
                    seen.add(x)
                    ids.append(x)
            edges.append((u, v, w))
    return Graph(ids, edges)


def _check_subset(g: Graph, s) -> VertexSet:
    s = frozenset(s)
    if not s:
        raise InvariantViolation("subset is empty")
    if not all(isinstance(v, int) and 0 <= v < g.n for v in s):
        raise InvariantViolation("subset contains an out-of-range vertex")
    if len(s) == g.n:
        raise InvariantViolation("subset equals the whole vertex set")
    return s


def cut_weight(g: Graph, s) -> float:
    """Total weight of edges with exactly one endpoint in s."""
    s = _check_subset(g, s)
    return sum(w for u, v, w in g.edges if (u in s) != (v in s))


def subset_volume(g: Graph, s) -> float:
    return sum(g.degree[v] for v in s)


def conductance_subset(g: Graph, s) -> float:
    """cut(s) divided by the volume of the lighter side."""
    s = _check_subset(g, s)
    cut = sum(w for u, v, w in g.edges if (u in s) != (v in s))
    vol_s = subset_volume(g, s)
    return cut / min(vol_s, g.volume - vol_s)


def conductance_exact(g: Graph, max_n: int = 24) -> tuple[float, VertexSet]:
    """Minimum conductance over all nonempty proper subsets, by enumeration.

    Returns (value, argmin subset); among tied argmins the subset with the
    lexicographically smallest membership vector wins.  Cost is
    O(2^(n-1) * (n + m)), hence the configurable size guard.
    """
    n = g.n
    if n > max_n:
        raise SizeGuardExceeded(f"conductance enumeration limited to {max_n} vertices (got {n})")
    deg = g.degree
    vol = g.volume
    edges = g.edges
    best: tuple[float, tuple[int, ...]] | None = None
    # The argmin set is closed under complement and one of each pair omits
    # vertex 0, so only even masks (bit0 = 0) need scanning.
    for mask in range(2, 1 << n, 2):
        vol_s = 0.0
        for i in range(1, n):
            if mask >> i & 1:
                vol_s += deg[i]
        cut = 0.0
        for u, v, w in edges:
            if (mask >> u & 1) != (mask >> v & 1):
                cut += w
        phi = cut / min(vol_s, vol - vol_s)
        if best is None or phi < best[0]:
            best = (phi, tuple(mask >> i & 1 for i in range(n)))
        elif phi == best[0]:
            vec = tuple(mask >> i & 1 for i in range(n))
            if vec < best[1]:
                best = (phi, vec)
    assert best is not None
    value, vec = best
    return value, frozenset(i for i, bit in enumerate(vec) if bit)


def check_distribution(p: Sequence[float]) -> tuple[float, ...]:
    p = tuple(float(x) for x in p)
    if not p:
        raise InvariantViolation("empty distribution")
    if any(x < 0 for x in p):
        raise InvariantViolation("distribution has a negative entry")
    if abs(sum(p) - 1.0) > _DISTRIBUTION_TOL:
        raise InvariantViolation(f"distribution sums to {sum(p)!r}, not 1")
    return p


def shannon_entropy(p: Sequence[float]) -> float:
    """-sum p_i log2 p_i with 0 log 0 = 0."""
    p = check_distribution(p)
    return -sum(x * math.log2(x) for x in p if x > 0)


def one_dim_entropy(g: Graph) -> float:
    """Shannon entropy of the degree distribution d_v / vol(G)."""
    return shannon_entropy(tuple(d / g.volume for d in g.degree))


def _check_similarity(sim) -> np.ndarray:
    a = np.asarray(sim, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvariantViolation("similarity matrix must be square")
    if a.shape[0] < 2:
        raise InvariantViolation("similarity matrix needs at least 2 rows")
    if np.abs(a - a.T).max() > _SYMMETRY_TOL:
        raise InvariantViolation("similarity matrix is not symmetric")
    off = a - np.diag(np.diag(a))
    if off.min() < 0:
        raise InvariantViolation("similarity matrix has a negative entry")
    return a


def positive_pairs(sim) -> list[tuple[float, int, int]]:
    """Off-diagonal pairs with positive weight, heaviest first, index ties first."""
    a = _check_similarity(sim)
    n = a.shape[0]
    pairs = [(float(a[i, j]), i, j) for i in range(n) for j in range(i + 1, n) if a[i, j] > 0]
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    return pairs


def build_topk_graph(sim, k: int, ids: Sequence[str] | None = None) -> Graph:
    """Keep exactly the k heaviest vertex pairs of a similarity matrix as edges.

    Ties break toward the smaller index pair.  The diagonal is ignored.
    Raises if fewer than k positive pairs exist or if the result is
    disconnected (k too small).
    """
    pairs = positive_pairs(sim)
    n = np.asarray(sim).shape[0]
    if not 1 <= k <= len(pairs):
        raise InvariantViolation(f"k={k} but only {len(pairs)} positive pairs are available")
    chosen = pairs[:k]
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for _, i, j in chosen:
        parent[find(i)] = find(j)
    if len({find(i) for i in range(n)}) != 1:
        raise InvariantViolation(f"top-{k} graph is disconnected (k too small)")
    return Graph.from_index_edges(n, [(i, j, w) for w, i, j in chosen], ids=ids)


def load_similarity_csv(path) -> tuple[tuple[str, ...], np.ndarray]:
    """Read a symmetric similarity matrix: first row and column are identifiers.

    The diagonal is ignored (zeroed).  Asymmetry, negative entries and shape
    problems are parse errors.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3:
        raise GraphParseError(f"{path}: similarity matrix needs at least 2 samples")
    ids = tuple(x.strip() for x in rows[0][1:])
    n = len(ids)
    values = np.zeros((n, n))
    if len(rows) != n + 1:
        raise GraphParseError(f"{path}: expected {n + 1} rows, got {len(rows)}")
    for r, row in enumerate(rows[1:]):
        if len(row) != n + 1:
            raise GraphParseError(f"{path}: row {r + 2} has {len(row)} fields, expected {n + 1}")
        if row[0].strip() != ids[r]:
            raise GraphParseError(f"{path}: row {r + 2} identifier {row[0]!r} does not match header")
        for c, cell in enumerate(row[1:]):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise GraphParseError(f"{path}: row {r + 2}: bad number {cell!r}") from None
    if np.abs(values - values.T).max() > _SYMMETRY_TOL:
        raise GraphParseError(f"{path}: similarity matrix is not symmetric")
    np.fill_diagonal(values, 0.0)
    if values.min() < 0:
        raise GraphParseError(f"{path}: similarity matrix has a negative entry")
    return ids, values

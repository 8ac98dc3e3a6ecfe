import random

import numpy as np
import pytest

import structen as st
from structen.tree import EncodingTree, TreeNode


@pytest.fixture
def triangle():
    return st.Graph.from_index_edges(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])


@pytest.fixture
def p3():
    return st.Graph.from_index_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])


@pytest.fixture
def k4():
    return complete_graph(4)


@pytest.fixture
def barbell():
    return st.Graph.from_index_edges(
        6,
        [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0),
         (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0), (2, 3, 1.0)])


def complete_graph(n, weight=1.0):
    edges = [(i, j, weight) for i in range(n) for j in range(i + 1, n)]
    return st.Graph.from_index_edges(n, edges)


def two_cliques(size, bridge=1.0):
    edges = [(i, j, 1.0) for i in range(size) for j in range(i + 1, size)]
    edges += [(size + i, size + j, 1.0) for i in range(size) for j in range(i + 1, size)]
    edges.append((size - 1, size, bridge))
    return st.Graph.from_index_edges(2 * size, edges)


def random_connected_graph(rng, n_lo=4, n_hi=12, weighted=True, extra=0.3):
    n = rng.randint(n_lo, n_hi)
    edges = set()
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        j = rng.randrange(i)
        edges.add((min(order[i], order[j]), max(order[i], order[j])))
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < extra:
                edges.add((u, v))
    weights = [0.5, 1.0, 1.0, 2.0] if weighted else [1.0]
    return st.Graph.from_index_edges(
        n, [(u, v, rng.choice(weights)) for u, v in sorted(edges)])


def random_nested_spec(rng, items):
    if len(items) == 1:
        return items[0]
    if len(items) == 2:
        return [items[0], items[1]]
    parts_n = rng.randint(2, min(len(items), 4))
    pool = list(items)
    rng.shuffle(pool)
    parts = [[] for _ in range(parts_n)]
    for i, v in enumerate(pool):
        parts[i % parts_n].append(v)
    return [random_nested_spec(rng, sorted(p)) for p in parts]


def random_encoding_tree(g, rng):
    return st.build_tree(g, random_nested_spec(rng, list(range(g.n))))


def items_tree(spec):
    """Partition tree over bare items (no graph), for distribution entropy."""

    def rec(s):
        if isinstance(s, int):
            return TreeNode((s,))
        children = [rec(c) for c in s]
        vertices = frozenset().union(*(c.vertices for c in children))
        return TreeNode(vertices, children=children)

    return EncodingTree(rec(spec))


def planted_similarity(blocks, within=1.0, cross=0.1):
    n = sum(len(b) for b in blocks)
    m = np.full((n, n), cross)
    np.fill_diagonal(m, 0.0)
    for block in blocks:
        for i in block:
            for j in block:
                if i != j:
                    m[i, j] = within
    return m


def partition_ids(g, tree):
    return sorted(sorted(g.vertex_ids[v] for v in c.vertices)
                  for c in tree.root.children)

"""Sparsity graphs, chordality certification and clique machinery.

Chordality is certified by maximum cardinality search: the reverse MCS
numbering is a perfect elimination ordering iff the graph is chordal.
All orderings here are lists ``order[k] = vertex eliminated k-th``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .symmat import SymMat


class NotChordalError(ValueError):
    """Operation requires a chordal graph with a valid elimination order."""


class SparsityGraph:
    """Undirected graph on nodes 0..n_nodes-1, no self loops."""

    __slots__ = ("n_nodes", "edges")

    def __init__(self, n_nodes, edges=()):
        self.n_nodes = int(n_nodes)
        self.edges = set()
        for i, j in edges:
            self.add_edge(i, j)

    def add_edge(self, i, j):
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"self loop at node {i}")
        if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
            raise ValueError(f"edge ({i},{j}) outside [0,{self.n_nodes})")
        self.edges.add((min(i, j), max(i, j)))

    def has_edge(self, i, j):
        return (min(i, j), max(i, j)) in self.edges

    def adjacency(self):
        adj = [set() for _ in range(self.n_nodes)]
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def copy(self):
        g = SparsityGraph(self.n_nodes)
        g.edges = set(self.edges)
        return g

    def n_edges(self):
        return len(self.edges)

    def __repr__(self):
        return f"SparsityGraph(n_nodes={self.n_nodes}, n_edges={len(self.edges)})"


@dataclass
class CliqueSet:
    """Maximal cliques of a chordal graph plus the witnessing elimination order."""

    cliques: list
    elimination_order: list

    def __post_init__(self):
        self.cliques = [tuple(sorted(c)) for c in self.cliques]
        self.elimination_order = list(self.elimination_order)


def sparsity_graph(A: SymMat, zero_tol=0.0):
    """Graph with an edge (i, j), i != j, wherever |A_ij| > zero_tol."""
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    g = SparsityGraph(A.n)
    for (i, j), v in A.entries.items():
        if i != j and abs(v) > zero_tol:
            g.add_edge(i, j)
    return g


def mcs_order(G: SparsityGraph):
    """Maximum cardinality search elimination order.

    Vertices are numbered n-1 down to 0, always picking the unnumbered
    vertex with the most numbered neighbours (smallest index on ties).
    The returned list is the elimination order: position 0 is eliminated
    first, and for chordal graphs it is a perfect elimination ordering.
    """
    n = G.n_nodes
    adj = G.adjacency()
    weight = [0] * n
    numbered = [False] * n
    order = [0] * n
    remaining = set(range(n))
    for pos in range(n - 1, -1, -1):
        z = max(remaining, key=lambda v: (weight[v], -v))
        remaining.remove(z)
        numbered[z] = True
        order[pos] = z
        for y in adj[z]:
            if not numbered[y]:
                weight[y] += 1
    return order


def is_perfect_elimination_order(G: SparsityGraph, order):
    """Zero fill-in test: later neighbours of each vertex form a clique."""
    n = G.n_nodes
    if sorted(order) != list(range(n)):
        raise ValueError("order is not a permutation of the nodes")
    pos = [0] * n
    for k, v in enumerate(order):
        pos[v] = k
    adj = G.adjacency()
    for v in order:
        later = [u for u in adj[v] if pos[u] > pos[v]]
        if not later:
            continue
        parent = min(later, key=lambda u: pos[u])
        rest = set(later) - {parent}
        if not rest <= adj[parent]:
            return False
    return True


def is_chordal(G: SparsityGraph):
    """(flag, order) where order is a perfect elimination ordering when chordal."""
    order = mcs_order(G)
    if is_perfect_elimination_order(G, order):
        return True, order
    return False, None


def chordal_extension(G: SparsityGraph, order):
    """Fill-in graph of symbolic elimination in the given order.

    The result is chordal, contains G, and admits ``order`` as a perfect
    elimination ordering.  A chordal G with its own perfect elimination
    order comes back unchanged.
    """
    n = G.n_nodes
    if sorted(order) != list(range(n)):
        raise ValueError("order is not a permutation of the nodes")
    pos = [0] * n
    for k, v in enumerate(order):
        pos[v] = k
    adj = G.adjacency()
    for v in order:
        later = sorted((u for u in adj[v] if pos[u] > pos[v]), key=lambda u: pos[u])
        for a in range(len(later)):
            for b in range(a + 1, len(later)):
                u, w = later[a], later[b]
                if w not in adj[u]:
                    adj[u].add(w)
                    adj[w].add(u)
    ext = SparsityGraph(n)
    for i in range(n):
        for j in adj[i]:
            if i < j:
                ext.edges.add((i, j))
    return ext


def maximal_cliques(G: SparsityGraph, order):
    """All maximal cliques of a chordal graph from its elimination order.

    Candidate cliques are {v} plus the later neighbourhood of v; a candidate
    is dropped when an earlier neighbour's candidate contains it.
    """
    if not is_perfect_elimination_order(G, order):
        raise NotChordalError("order is not a perfect elimination ordering of G")
    n = G.n_nodes
    pos = [0] * n
    for k, v in enumerate(order):
        pos[v] = k
    adj = G.adjacency()
    madj = [frozenset(u for u in adj[v] if pos[u] > pos[v]) for v in range(n)]
    cliques = []
    for v in order:
        dominated = any(
            pos[u] < pos[v] and len(madj[u]) > len(madj[v]) and madj[v] <= madj[u]
            for u in adj[v]
        )
        if not dominated:
            cliques.append(tuple(sorted(madj[v] | {v})))
    return CliqueSet(cliques=cliques, elimination_order=list(order))


def clique_graph(n_nodes, cliques):
    """Union of complete subgraphs on each clique."""
    g = SparsityGraph(n_nodes)
    for clique in cliques:
        nodes = sorted(clique)
        for a in range(len(nodes)):
            for b in range(a + 1, len(nodes)):
                g.add_edge(nodes[a], nodes[b])
    return g


def write_edge_list(G: SparsityGraph, path):
    lines = [f"{G.n_nodes} {len(G.edges)}"]
    for i, j in sorted(G.edges):
        lines.append(f"{i} {j}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_edge_list(path):
    with open(path) as fh:
        n_nodes, n_edges = (int(t) for t in fh.readline().split())
        g = SparsityGraph(n_nodes)
        for line in fh:
            line = line.strip()
            if not line:
                continue
            i, j = (int(t) for t in line.split())
            g.add_edge(i, j)
    if len(g.edges) != n_edges:
        raise ValueError(f"{path}: header says {n_edges} edges, found {len(g.edges)}")
    return g

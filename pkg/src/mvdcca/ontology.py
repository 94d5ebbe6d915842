"""Relation-typed code hierarchy with jump connections.

Each character of a fixed-width code refines its parent concept, so the
hierarchy is the prefix tree of the code list. Tree edges between level
``k`` and ``k + 1`` carry relation ``k``; a jump edge from a leaf to its
ancestor at level ``l`` carries relation ``depth + l``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import sparse

from .numeric import rng_stream


class OntologyError(ValueError):
    pass


@dataclass(frozen=True)
class CodeNode:
    id: int
    code: str
    level: int
    is_leaf: bool
    parent: int | None = None


@dataclass(frozen=True)
class TypedEdge:
    src: int
    dst: int
    relation: int


@dataclass(frozen=True)
class OntologyGraph:
    nodes: tuple[CodeNode, ...]
    edges: tuple[TypedEdge, ...]
    depth: int
    relation_count: int
    leaf_index: dict[str, int] = field(hash=False)
    has_jumps: bool = False

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def leaves(self) -> np.ndarray:
        return np.array(sorted(self.leaf_index.values()), dtype=np.int64)

    def ancestors(self, u: int) -> list[int]:
        """Proper ancestors of ``u`` from the root down."""
        out = []
        p = self.nodes[u].parent
        while p is not None:
            out.append(p)
            p = self.nodes[p].parent
        return out[::-1]

    def leaf_ids(self, codes: Iterable[str]) -> list[int]:
        ids = []
        for c in codes:
            try:
                ids.append(self.leaf_index[c])
            except KeyError:
                raise OntologyError(f"unknown code {c!r}") from None
        return ids

    @cached_property
    def adjacency(self) -> list[sparse.csr_matrix]:
        """Row-normalised adjacency per relation (index 0 is relation 1).

        Row ``u`` of matrix ``r - 1`` averages over ``N_u^r``; rows of nodes
        without relation-``r`` neighbours are empty.
        """
        return _normalized_adjacency(self)


def _normalized_adjacency(g: OntologyGraph) -> list[sparse.csr_matrix]:
    n = g.n_nodes
    mats = []
    for r in range(1, g.relation_count + 1):
        pairs = set()
        for e in g.edges:
            if e.relation == r:
                pairs.add((e.src, e.dst))
                pairs.add((e.dst, e.src))
        if pairs:
            rows, cols = map(np.array, zip(*sorted(pairs)))
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
        a = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        deg = np.asarray(a.sum(axis=1)).ravel()
        inv = np.divide(1.0, deg, out=np.zeros(n), where=deg > 0)
        mats.append(sparse.csr_matrix(sparse.diags(inv) @ a))
    return mats


def build_tree(codes: Iterable[str]) -> OntologyGraph:
    codes = list(codes)
    if not codes:
        raise OntologyError("empty code list")
    depth = len(codes[0])
    if depth < 1:
        raise OntologyError("codes must be non-empty strings")
    seen = set()
    for c in codes:
        if len(c) != depth:
            raise OntologyError(f"code {c!r} has length {len(c)}, expected {depth}")
        if c in seen:
            raise OntologyError(f"duplicate code {c!r}")
        seen.add(c)

    # breadth-first ids over sorted prefixes
    by_level: list[set[str]] = [set() for _ in range(depth + 1)]
    for c in codes:
        for k in range(depth + 1):
            by_level[k].add(c[:k])
    prefix_id: dict[str, int] = {}
    nodes: list[CodeNode] = []
    edges: list[TypedEdge] = []
    for k, level_prefixes in enumerate(by_level):
        for p in sorted(level_prefixes):
            nid = len(nodes)
            prefix_id[p] = nid
            parent = prefix_id[p[:-1]] if k > 0 else None
            nodes.append(CodeNode(nid, p, k + 1, k == depth, parent))
            if parent is not None:
                edges.append(TypedEdge(parent, nid, k))
    leaf_index = {c: prefix_id[c] for c in sorted(codes)}
    return OntologyGraph(tuple(nodes), tuple(edges), depth, depth, leaf_index)


def add_jump_connections(g: OntologyGraph) -> OntologyGraph:
    if g.has_jumps:
        raise OntologyError("jumps already present")
    d = g.depth
    edges = list(g.edges)
    for u in g.leaves:
        for anc in g.ancestors(int(u)):
            edges.append(TypedEdge(int(u), anc, d + g.nodes[anc].level))
    return OntologyGraph(g.nodes, tuple(edges), d, 2 * d, g.leaf_index, has_jumps=True)


def build_ontology(codes: Iterable[str], jumps: bool = True) -> OntologyGraph:
    g = build_tree(codes)
    return add_jump_connections(g) if jumps else g


def neighbors_by_relation(g: OntologyGraph, u: int, r: int) -> list[int]:
    if not 0 <= u < g.n_nodes:
        raise OntologyError(f"invalid node id {u}")
    if not 1 <= r <= g.relation_count:
        raise OntologyError(f"invalid relation {r}, expected 1..{g.relation_count}")
    out = set()
    for e in g.edges:
        if e.relation != r:
            continue
        if e.src == u:
            out.add(e.dst)
        elif e.dst == u:
            out.add(e.src)
    return sorted(out)


def shortest_paths_from(g: OntologyGraph, src: int) -> np.ndarray:
    """Undirected BFS hop counts from ``src`` (-1 when unreachable)."""
    adj: list[list[int]] = [[] for _ in range(g.n_nodes)]
    for e in g.edges:
        adj[e.src].append(e.dst)
        adj[e.dst].append(e.src)
    dist = np.full(g.n_nodes, -1, dtype=np.int64)
    dist[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def read_codes(path) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [s.strip() for s in lines if s.strip() and not s.lstrip().startswith("#")]


def write_codes(codes: Iterable[str], path, header: str | None = None) -> None:
    out = []
    if header:
        out.extend(f"# {h}" for h in header.splitlines())
    out.extend(codes)
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


ALPHABET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def random_codes(branching: list[int], seed: int) -> list[str]:
    """Random fixed-width code list; level ``k`` nodes get between
    ``ceil(b_k / 2)`` and ``b_k`` children."""
    if not branching or any(b < 1 or b > len(ALPHABET) for b in branching):
        raise OntologyError(f"branching factors must be in 1..{len(ALPHABET)}")
    rng = rng_stream(seed, 0)
    prefixes = [""]
    for b in branching:
        nxt = []
        for p in prefixes:
            k = int(rng.integers((b + 1) // 2, b + 1))
            chars = sorted(rng.choice(b, size=k, replace=False))
            nxt.extend(p + ALPHABET[c] for c in chars)
        prefixes = nxt
    return prefixes

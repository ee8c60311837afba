"""Directed graphs and two-level hierarchical collections of them.

Vertices are 0-based everywhere in memory; conversion to the 1-based labels
used in files and reports happens only at the I/O boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicateEdgeError,
    SelfLoopError,
    TwoCycleError,
    VertexOutOfRangeError,
)

__all__ = [
    "Digraph",
    "HierarchySpec",
    "Violation",
    "digraph_from_edges",
    "adjacency",
    "out_neighbors",
    "in_neighbors",
    "edge_list",
    "validate_digraph",
    "validate_hierarchy",
]


@dataclass(frozen=True)
class Digraph:
    """A directed graph on vertices 0..n_vertices-1 with an edge set.

    Construct through digraph_from_edges to get validation; instances built
    directly may violate the no-1-cycle / no-2-cycle requirements and can be
    checked with validate_digraph.
    """

    n_vertices: int
    edges: frozenset[tuple[int, int]]


@dataclass(frozen=True)
class HierarchySpec:
    """A superstructure digraph plus one substructure digraph per vertex."""

    superstructure: Digraph
    substructures: tuple[Digraph, ...]

    @property
    def n_super(self) -> int:
        return self.superstructure.n_vertices

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(g.n_vertices for g in self.substructures)

    @property
    def dimension(self) -> int:
        return self.n_super + sum(self.block_sizes)


@dataclass(frozen=True)
class Violation:
    """One validation failure, rendered with 1-based vertex labels."""

    kind: str
    where: str
    detail: str

    def __str__(self) -> str:
        return f"{self.where}: {self.kind} {self.detail}"


def _edge_label(i: int, k: int) -> str:
    return f"({i + 1},{k + 1})"


def digraph_from_edges(n_vertices, edges) -> Digraph:
    """Build a validated digraph from an iterable of 0-based ordered pairs.

    Raises on duplicate edges, out-of-range endpoints, self loops (1-cycles)
    and reciprocal edge pairs (2-cycles). Duplicates are an error rather than
    silently dropped because they almost always indicate a configuration typo.
    """
    n = int(n_vertices)
    if n <= 0:
        raise VertexOutOfRangeError(f"n_vertices must be positive, got {n}")
    seen: set[tuple[int, int]] = set()
    for pair in edges:
        i, k = int(pair[0]), int(pair[1])
        if (i, k) in seen:
            raise DuplicateEdgeError(f"duplicate edge {_edge_label(i, k)}")
        if not (0 <= i < n and 0 <= k < n):
            raise VertexOutOfRangeError(
                f"edge {_edge_label(i, k)} outside vertex range 1..{n}"
            )
        if i == k:
            raise SelfLoopError(f"self loop {_edge_label(i, k)}")
        if (k, i) in seen:
            raise TwoCycleError(f"2-cycle between {i + 1} and {k + 1}")
        seen.add((i, k))
    return Digraph(n, frozenset(seen))


def adjacency(d: Digraph) -> np.ndarray:
    """0/1 adjacency matrix; entry [i, k] = 1 iff edge (i, k)."""
    a = np.zeros((d.n_vertices, d.n_vertices), dtype=int)
    for i, k in d.edges:
        a[i, k] = 1
    return a


def out_neighbors(d: Digraph, i: int) -> set[int]:
    if not 0 <= i < d.n_vertices:
        raise VertexOutOfRangeError(f"vertex {i + 1} outside range 1..{d.n_vertices}")
    return {k for (a, k) in d.edges if a == i}


def in_neighbors(d: Digraph, k: int) -> set[int]:
    if not 0 <= k < d.n_vertices:
        raise VertexOutOfRangeError(f"vertex {k + 1} outside range 1..{d.n_vertices}")
    return {i for (i, b) in d.edges if b == k}


def edge_list(d: Digraph) -> list[tuple[int, int]]:
    """Edges in sorted order (stable representation for files and tests)."""
    return sorted(d.edges)


def validate_digraph(d: Digraph, where: str = "digraph") -> list[Violation]:
    """All invariant violations of a (possibly hand-built) digraph."""
    out: list[Violation] = []
    if d.n_vertices <= 0:
        out.append(Violation("VertexOutOfRange", where, f"n_vertices={d.n_vertices}"))
        return out
    for i, k in sorted(d.edges):
        if not (0 <= i < d.n_vertices and 0 <= k < d.n_vertices):
            out.append(Violation("VertexOutOfRange", where, _edge_label(i, k)))
        elif i == k:
            out.append(Violation("SelfLoop", where, _edge_label(i, k)))
        elif (k, i) in d.edges and i < k:
            out.append(Violation("TwoCycle", where, _edge_label(i, k)))
    return out


def validate_hierarchy(h: HierarchySpec) -> list[Violation]:
    """All violations across the hierarchy; empty list means valid."""
    out = validate_digraph(h.superstructure, "superstructure")
    n_super = h.superstructure.n_vertices
    if len(h.substructures) != n_super:
        out.append(
            Violation(
                "SubstructureCountMismatch",
                "substructures",
                f"expected {n_super}, got {len(h.substructures)}",
            )
        )
    for j, g in enumerate(h.substructures):
        out.extend(validate_digraph(g, f"substructure {j + 1}"))
    return out

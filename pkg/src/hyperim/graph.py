"""Undirected social graph: loading, validation, degree statistics.

Nodes are dense integers 0..n-1 internally; original edge-list labels are
kept in a side map so every downstream artifact stays joinable. Adjacency
is stored CSR-style (indptr + flat neighbor array) to keep million-node
graphs cheap.
"""

from __future__ import annotations

import numpy as np


class GraphFormatError(ValueError):
    """Raised for unparsable or degenerate edge-list input."""


class SocialGraph:
    """Immutable undirected graph with degree statistics.

    Construct via :func:`load_edge_list` or :meth:`from_edges`; instances
    are safe to share read-only across workers.
    """

    __slots__ = ("node_count", "edges", "indptr", "flat_neighbors", "degrees",
                 "max_degree", "labels", "label_to_id", "dropped_self_loops")

    def __init__(self, node_count, edges, indptr, flat_neighbors, degrees,
                 labels=None, dropped_self_loops=0):
        self.node_count = int(node_count)
        self.edges = edges                  # (m, 2) int array, u < v, lexsorted
        self.indptr = indptr                # (n+1,) int
        self.flat_neighbors = flat_neighbors  # (2m,) int, sorted per node
        self.degrees = degrees              # (n,) int
        self.max_degree = int(degrees.max()) if node_count else 0
        self.labels = labels                # list[str] or None (= identity)
        self.label_to_id = (
            {lab: i for i, lab in enumerate(labels)} if labels is not None else None
        )
        self.dropped_self_loops = int(dropped_self_loops)

    @classmethod
    def from_edges(cls, node_count: int, edges, labels=None, dedup: bool = False,
                   dropped_self_loops: int = 0) -> "SocialGraph":
        """Build a graph from an (m, 2) array of undirected edges.

        Edges are canonicalized to u < v. With dedup=False, duplicate or
        self-loop rows are rejected rather than collapsed.
        """
        node_count = int(node_count)
        if node_count <= 0:
            raise GraphFormatError("graph must contain at least one node")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= node_count):
            raise GraphFormatError("edge endpoint out of range")
        loops = edges[:, 0] == edges[:, 1]
        if loops.any():
            if not dedup:
                raise GraphFormatError("self-loops are not allowed")
            dropped_self_loops += int(loops.sum())
            edges = edges[~loops]
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        canon = np.stack([lo, hi], axis=1)
        if canon.shape[0]:
            order = np.lexsort((canon[:, 1], canon[:, 0]))
            canon = canon[order]
            keep = np.ones(canon.shape[0], dtype=bool)
            keep[1:] = (np.diff(canon[:, 0]) != 0) | (np.diff(canon[:, 1]) != 0)
            if not keep.all():
                if not dedup:
                    raise GraphFormatError("duplicate edges are not allowed")
                canon = canon[keep]
        if canon.shape[0] == 0:
            raise GraphFormatError("graph has no edges")

        endpoints = np.concatenate([canon[:, 0], canon[:, 1]])
        degrees = np.bincount(endpoints, minlength=node_count).astype(np.int64)
        indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.cumsum(degrees, out=indptr[1:])
        # directed both ways, grouped by source then neighbor id
        src = np.concatenate([canon[:, 0], canon[:, 1]])
        dst = np.concatenate([canon[:, 1], canon[:, 0]])
        order = np.lexsort((dst, src))
        flat = dst[order]
        return cls(node_count, canon, indptr, flat, degrees, labels=labels,
                   dropped_self_loops=dropped_self_loops)

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    def neighbor_array(self, u: int) -> np.ndarray:
        """Sorted neighbor ids as a read-only array view (hot-path accessor)."""
        return self.flat_neighbors[self.indptr[u]:self.indptr[u + 1]]

    def degree(self, u: int) -> int:
        return int(self.degrees[u])

    def label_of(self, u: int) -> str:
        return self.labels[u] if self.labels is not None else str(u)


def neighbors(g: SocialGraph, u: int) -> list[int]:
    """Sorted neighbor list of node u."""
    if not 0 <= u < g.node_count:
        raise ValueError(f"node {u} out of range (graph has {g.node_count} nodes)")
    return [int(x) for x in g.neighbor_array(u)]


def _sorted_labels(raw: set[str]) -> list[str]:
    try:
        return sorted(raw, key=lambda s: (int(s), s))
    except ValueError:
        return sorted(raw)


def load_edge_list(path) -> SocialGraph:
    """Load an undirected graph from an edge-list text file.

    One edge per line ("u v", whitespace separated), '#' comments ignored.
    Duplicate lines and reversed duplicates collapse to one undirected edge;
    self-loops are dropped (count kept on the returned graph). Labels may be
    arbitrary strings; ids are assigned by sorted label order (numeric when
    every label parses as an integer), which makes loading idempotent on the
    graph's own canonical serialization.
    """
    raw_edges: list[tuple[str, str]] = []
    label_set: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise GraphFormatError(
                    f"{path}:{lineno}: expected two tokens, got {len(parts)}: {stripped!r}"
                )
            raw_edges.append((parts[0], parts[1]))
            label_set.update(parts)
    if not raw_edges:
        raise GraphFormatError(f"{path}: no edges found")

    labels = _sorted_labels(label_set)
    ids = {lab: i for i, lab in enumerate(labels)}
    arr = np.array([(ids[a], ids[b]) for a, b in raw_edges], dtype=np.int64)
    try:
        return SocialGraph.from_edges(len(labels), arr, labels=labels, dedup=True)
    except GraphFormatError as exc:
        raise GraphFormatError(f"{path}: {exc}") from None


def save_edge_list(g: SocialGraph, path) -> None:
    """Write the canonical edge-list serialization (labels, sorted, one per line).

    Isolated nodes are not representable in an edge list; loaded graphs
    never contain them.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for u, v in g.edges:
            fh.write(f"{g.label_of(int(u))} {g.label_of(int(v))}\n")


def write_label_map(g: SocialGraph, path) -> None:
    """Persist the id<->label side map next to an output artifact."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(g.node_count):
            fh.write(f"{i} {g.label_of(i)}\n")

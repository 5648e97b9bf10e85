"""Synthetic graphs for benchmarks and property suites."""

from __future__ import annotations

import numpy as np

from . import rng as _rng
from .graph import SocialGraph


def preferential_attachment_graph(n: int, m: int, rng_seed: int) -> SocialGraph:
    """Scale-free graph: each new node attaches to m existing nodes by degree.

    Uses the repeated-endpoints trick; average degree approaches 2m. Starts
    from an m-node star so early nodes are connected.
    """
    if n <= m or m < 1:
        raise ValueError("need n > m >= 1")
    gen = _rng.generator(rng_seed, "preferential-attachment")
    edges = []
    repeated = []
    for v in range(1, m + 1):
        edges.append((0, v))
        repeated += [0, v]
    for v in range(m + 1, n):
        targets = set()
        while len(targets) < m:
            targets.add(repeated[int(gen.integers(len(repeated)))])
        for t in sorted(targets):
            edges.append((t, v))
            repeated += [t, v]
    return SocialGraph.from_edges(n, np.asarray(edges, dtype=np.int64))


def uniform_random_graph(n: int, edge_count: int, rng_seed: int) -> SocialGraph:
    """Sparse Erdos-Renyi-style graph with exactly edge_count distinct edges."""
    if edge_count < 1 or edge_count > n * (n - 1) // 2:
        raise ValueError("infeasible edge count")
    gen = _rng.generator(rng_seed, "uniform-graph")
    chosen = np.empty((0, 2), dtype=np.int64)
    need = edge_count
    while need > 0:
        cand = gen.integers(0, n, size=(int(need * 1.3) + 16, 2), dtype=np.int64)
        cand = cand[cand[:, 0] != cand[:, 1]]
        lo = np.minimum(cand[:, 0], cand[:, 1])
        hi = np.maximum(cand[:, 0], cand[:, 1])
        cand = np.stack([lo, hi], axis=1)
        merged = np.concatenate([chosen, cand])
        merged = np.unique(merged, axis=0)
        # keep first-come order irrelevant: unique sorts, which is deterministic
        chosen = merged[:edge_count] if merged.shape[0] >= edge_count else merged
        need = edge_count - chosen.shape[0]
    return SocialGraph.from_edges(n, chosen)

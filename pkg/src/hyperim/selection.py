"""Seed-set selection from a trained table, plus benchmark baselines.

Two embedding-driven strategies: take the k nodes nearest the origin
outright, or run the adaptive sliding window, which walks the
ascending distance-to-origin order while penalizing window candidates that
neighbor an already-picked seed (their score grows by a softmax-weighted
share of the pick's score). All ties break by smaller node id.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .graph import SocialGraph
from .embedding import EmbeddingTable
from .lorentz import sq_dist_batch

MIN_SQ_DIST = 1e-6   # clamp for near-coincident embeddings in the softmax


@dataclass(frozen=True)
class PickRecord:
    node: int
    score: float
    penalized: bool


@dataclass(frozen=True)
class SelectionResult:
    seeds: tuple
    score_trace: tuple   # one PickRecord per pick, in order
    method: str
    beta: float | None

    def __post_init__(self):
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("duplicate seeds in selection result")


def ldo_scores(table: EmbeddingTable) -> dict[int, float]:
    """Distance-to-origin score for every node."""
    values = table.ldo_all()
    return {u: float(values[u]) for u in range(table.node_count)}


def _check_k(k: int, node_count: int) -> None:
    if not 1 <= k <= node_count:
        raise ValueError(f"k={k} out of range for {node_count} nodes")


def select_him_md(table: EmbeddingTable, k: int) -> SelectionResult:
    """The k nodes with smallest distance-to-origin, ties by node id."""
    _check_k(k, table.node_count)
    scores = table.ldo_all()
    order = np.argsort(scores, kind="stable")[:k]
    trace = tuple(PickRecord(int(u), float(scores[u]), False) for u in order)
    return SelectionResult(tuple(int(u) for u in order), trace, "him_md", None)


def update_candidate_score(z_u: float, z_c: float, d_c: int, w_cu: float) -> float:
    """Penalized score: z_u + (w_cu / d_c) * z_c."""
    if d_c < 1:
        raise ValueError("picked node must have degree >= 1 to penalize")
    if not 0.0 < w_cu <= 1.0:
        raise ValueError("weight must lie in (0, 1]")
    return z_u + (w_cu / d_c) * z_c


def candidate_weights(table: EmbeddingTable, c: int, candidates) -> dict[int, float]:
    """Softmax over 1/d^2(x_c, x_u) across the candidate set (sums to 1)."""
    candidates = sorted(int(u) for u in candidates)
    if not candidates:
        raise ValueError("candidate set must be non-empty")
    d2 = sq_dist_batch(table.spatial[np.repeat(c, len(candidates))],
                       table.spatial[candidates], table.gamma)
    inv = 1.0 / np.maximum(d2, MIN_SQ_DIST)
    stable = inv - inv.max()
    weights = np.exp(stable)
    weights /= weights.sum()
    return {u: float(w) for u, w in zip(candidates, weights)}


def select_asw(g: SocialGraph, table: EmbeddingTable, k: int,
               beta: float) -> SelectionResult:
    """Adaptive sliding window over the ascending score order.

    Window size is ceil(beta * k), at least 1. Each iteration adds the
    current pick, penalizes window members adjacent to it, then pops the
    queue minimum and refills from the sorted tail (draining without refill
    once the tail is exhausted). Stale heap entries are skipped via
    score-matching.
    """
    if g.node_count != table.node_count:
        raise ValueError("graph / table node count mismatch")
    _check_k(k, g.node_count)
    if beta <= 0:
        raise ValueError("beta must be > 0")
    w = max(1, int(np.ceil(beta * k)))

    base = table.ldo_all()
    order = np.argsort(base, kind="stable")
    current = base.astype(np.float64).copy()
    penalized = np.zeros(g.node_count, dtype=bool)

    pick = int(order[0])
    pick_score = float(current[pick])
    tail = iter(int(u) for u in order[1:])
    heap: list[tuple[float, int]] = []
    members: set[int] = set()
    for u in tail:
        heapq.heappush(heap, (float(current[u]), u))
        members.add(u)
        if len(members) == w:
            break

    seeds: list[int] = []
    trace: list[PickRecord] = []
    while len(seeds) < k:
        seeds.append(pick)
        trace.append(PickRecord(pick, pick_score, bool(penalized[pick])))
        if len(seeds) == k:
            break
        hits = [int(v) for v in g.neighbor_array(pick) if v in members]
        if hits:
            weights = candidate_weights(table, pick, hits)
            d_pick = g.degree(pick)
            for v in hits:
                if weights[v] == 0.0:   # softmax underflow: penalty is exactly 0
                    continue
                current[v] = update_candidate_score(float(current[v]), pick_score,
                                                    d_pick, weights[v])
                penalized[v] = True
                heapq.heappush(heap, (float(current[v]), v))
        while True:
            score, v = heapq.heappop(heap)
            if v in members and score == current[v]:
                break
        members.remove(v)
        pick, pick_score = v, score
        nxt = next(tail, None)
        if nxt is not None:
            heapq.heappush(heap, (float(current[nxt]), nxt))
            members.add(nxt)
    return SelectionResult(tuple(seeds), tuple(trace), "him", float(beta))


def select_degree_topk(g: SocialGraph, k: int) -> SelectionResult:
    """Top-k nodes by degree, ties by node id."""
    _check_k(k, g.node_count)
    order = np.argsort(-g.degrees, kind="stable")[:k]
    trace = tuple(PickRecord(int(u), float(g.degrees[u]), False) for u in order)
    return SelectionResult(tuple(int(u) for u in order), trace, "degree", None)


def select_random(g: SocialGraph, k: int, rng_seed: int) -> SelectionResult:
    """Uniform sample without replacement, deterministic given rng_seed."""
    _check_k(k, g.node_count)
    gen = _rng.generator(rng_seed, "random-selection")
    picks = [int(u) for u in gen.choice(g.node_count, size=k, replace=False)]
    trace = tuple(PickRecord(u, 0.0, False) for u in picks)
    return SelectionResult(tuple(picks), trace, "random", None)


def save_seed_set(result: SelectionResult, path) -> None:
    """One node per line in pick order, after a '# method=... k=... beta=...' header."""
    beta = "none" if result.beta is None else repr(float(result.beta))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# method={result.method} k={len(result.seeds)} beta={beta}\n")
        for u in result.seeds:
            fh.write(f"{u}\n")


def load_seed_set(path) -> SelectionResult:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# method="):
            raise ValueError(f"{path}: bad seed-set header")
        fields = dict(part.split("=", 1) for part in header[2:].split())
        beta = None if fields.get("beta") == "none" else float(fields["beta"])
        seeds = []
        for line in fh:
            stripped = line.strip()
            if not stripped:
                continue
            seeds.append(int(stripped))
    if len(seeds) != int(fields.get("k", len(seeds))):
        raise ValueError(f"{path}: seed count does not match header k")
    trace = tuple(PickRecord(u, 0.0, False) for u in seeds)
    return SelectionResult(tuple(seeds), trace, fields.get("method", "unknown"), beta)

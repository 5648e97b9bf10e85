"""Hidden-parameter diffusion models and propagation-instance generation.

An IC or WLT *instance* is one frozen draw of a model's parameters (edge
probabilities, or per-node thresholds plus normalized in-weights). Given an
instance, cascades are simulated to record activation graphs — the training
signal — or replayed many times to estimate spread.

IC cascades draw the coin for directed edge (u, v) from a counter-based
hash of (run_seed, u, v), i.e. the run seed fixes a live-edge world up
front. Replays are order-independent, and two runs that share a seed share
every coin, so activated(S) is monotone in S for a fixed seed.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .graph import SocialGraph

IC_PROB_HIGH = 0.2          # per-edge activation probability ~ U[0, 0.2]
WLT_THRESHOLD_RANGE = (0.5, 0.9)
BRUTEFORCE_EDGE_LIMIT = 22


class _DirectedStructure:
    """Out-adjacency over directed edges (both orientations of each tie)."""

    __slots__ = ("node_count", "indptr", "targets")

    def __init__(self, node_count: int, indptr: np.ndarray, targets: np.ndarray):
        self.node_count = node_count
        self.indptr = indptr
        self.targets = targets

    @classmethod
    def from_graph(cls, g: SocialGraph) -> "_DirectedStructure":
        return cls(g.node_count, g.indptr.copy(), g.flat_neighbors.copy())

    @classmethod
    def from_directed_edges(cls, node_count: int, src: np.ndarray, dst: np.ndarray):
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        counts = np.bincount(src, minlength=node_count)
        indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return cls(node_count, indptr, dst.astype(np.int64)), order

    def out_edges(self, u: int):
        return self.targets[self.indptr[u]:self.indptr[u + 1]]

    def directed_edge_arrays(self):
        src = np.repeat(np.arange(self.node_count, dtype=np.int64),
                        np.diff(self.indptr))
        return src, self.targets


class IcInstance:
    """Independent-cascade parameters: one probability per directed edge."""

    __slots__ = ("structure", "probs")

    def __init__(self, structure: _DirectedStructure, probs: np.ndarray):
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise ValueError("IC probabilities must lie in [0, 1]")
        self.structure = structure
        self.probs = probs  # aligned with structure.targets

    @property
    def node_count(self) -> int:
        return self.structure.node_count

    @property
    def directed_edge_count(self) -> int:
        return int(self.structure.targets.shape[0])

    def prob(self, u: int, v: int) -> float:
        lo, hi = self.structure.indptr[u], self.structure.indptr[u + 1]
        j = np.searchsorted(self.structure.targets[lo:hi], v)
        if j == hi - lo or self.structure.targets[lo + j] != v:
            raise KeyError(f"no directed edge {u}->{v}")
        return float(self.probs[lo + j])

    @classmethod
    def constant(cls, g: SocialGraph, p: float) -> "IcInstance":
        """Test/fixture constructor: the same probability on every directed edge."""
        structure = _DirectedStructure.from_graph(g)
        return cls(structure, np.full(structure.targets.shape[0], float(p)))

    @classmethod
    def from_map(cls, g: SocialGraph, probs: dict) -> "IcInstance":
        """Test/fixture constructor from an explicit (u, v) -> p mapping."""
        structure = _DirectedStructure.from_graph(g)
        src, dst = structure.directed_edge_arrays()
        arr = np.array([probs[(int(u), int(v))] for u, v in zip(src, dst)])
        return cls(structure, arr)


class WltInstance:
    """Weighted linear-threshold parameters: thresholds plus normalized in-weights."""

    __slots__ = ("structure", "thresholds", "in_weights")

    def __init__(self, structure: _DirectedStructure, thresholds: np.ndarray,
                 in_weights: np.ndarray):
        # structure here is IN-adjacency: slice of node v lists its in-neighbors
        self.structure = structure
        self.thresholds = thresholds
        self.in_weights = in_weights  # aligned with structure.targets
        self._validate()

    def _validate(self):
        lo, hi = WLT_THRESHOLD_RANGE
        if np.any(self.thresholds < lo) or np.any(self.thresholds > hi):
            raise ValueError(f"thresholds must lie in [{lo}, {hi}]")
        if np.any(self.in_weights <= 0.0):
            raise ValueError("in-weights must be positive")
        counts = np.diff(self.structure.indptr)
        sums = np.zeros(self.structure.node_count)
        np.add.at(sums, np.repeat(np.arange(self.structure.node_count), counts),
                  self.in_weights)
        bad = (counts > 0) & (np.abs(sums - 1.0) > 1e-9)
        if bad.any():
            raise ValueError("in-weights of a node must sum to 1")

    @property
    def node_count(self) -> int:
        return self.structure.node_count

    def threshold(self, v: int) -> float:
        return float(self.thresholds[v])

    def in_weight(self, u: int, v: int) -> float:
        lo, hi = self.structure.indptr[v], self.structure.indptr[v + 1]
        j = np.searchsorted(self.structure.targets[lo:hi], u)
        if j == hi - lo or self.structure.targets[lo + j] != u:
            raise KeyError(f"no directed edge {u}->{v}")
        return float(self.in_weights[lo + j])

    @classmethod
    def from_maps(cls, g: SocialGraph, thresholds: dict, in_weights: dict) -> "WltInstance":
        """Test/fixture constructor from explicit threshold and weight maps."""
        structure = _DirectedStructure.from_graph(g)
        th = np.array([thresholds[v] for v in range(g.node_count)], dtype=np.float64)
        flat = []
        for v in range(g.node_count):
            for u in structure.out_edges(v):  # undirected: in-neighbors == neighbors
                flat.append(in_weights[v][int(u)])
        return cls(structure, th, np.asarray(flat, dtype=np.float64))


@dataclass(frozen=True)
class PropagationInstance:
    """One recorded cascade: seeds, every activated node, and activation edges."""

    seed_set: frozenset
    activated: frozenset
    activations: tuple  # ((u, v), ...) in activation order

    def validate(self) -> None:
        if not self.seed_set <= self.activated:
            raise ValueError("seeds must be activated")
        reached = set(self.seed_set)
        frontier = True
        edges = list(self.activations)
        while frontier:
            frontier = False
            rest = []
            for u, v in edges:
                if u in reached:
                    if v not in reached:
                        reached.add(v)
                        frontier = True
                else:
                    rest.append((u, v))
            edges = rest
        if edges:
            raise ValueError("activation edges with never-activated sources")
        if reached != set(self.activated):
            raise ValueError("activated set is not the closure of the activations")


def sample_ic_instance(g: SocialGraph, rng_seed: int) -> IcInstance:
    """Draw a fresh IC instance: p_uv ~ U[0, 0.2] independently per directed edge."""
    structure = _DirectedStructure.from_graph(g)
    gen = _rng.generator(rng_seed, "ic-instance")
    probs = IC_PROB_HIGH * gen.random(structure.targets.shape[0])
    return IcInstance(structure, probs)


def sample_wlt_instance(g: SocialGraph, rng_seed: int) -> WltInstance:
    """Draw a fresh WLT instance: thresholds ~ U[0.5, 0.9], in-weights normalized U(0,1]."""
    structure = _DirectedStructure.from_graph(g)
    gen = _rng.generator(rng_seed, "wlt-instance")
    lo, hi = WLT_THRESHOLD_RANGE
    thresholds = lo + (hi - lo) * gen.random(g.node_count)
    raw = 1.0 - gen.random(structure.targets.shape[0])  # (0, 1], keeps weights > 0
    sums = np.zeros(g.node_count)
    np.add.at(sums, np.repeat(np.arange(g.node_count), np.diff(structure.indptr)), raw)
    denom = np.repeat(np.where(sums > 0, sums, 1.0), np.diff(structure.indptr))
    return WltInstance(structure, thresholds, raw / denom)


def _check_seeds(seeds, node_count: int) -> list[int]:
    seeds = sorted(int(s) for s in seeds)
    if not seeds:
        raise ValueError("seed set must be non-empty")
    if seeds[0] < 0 or seeds[-1] >= node_count:
        raise ValueError("seed id out of range")
    if len(set(seeds)) != len(seeds):
        raise ValueError("duplicate seed ids")
    return seeds


def _live_edge_mask(inst: IcInstance, rng_seed: int) -> np.ndarray:
    src, dst = inst.structure.directed_edge_arrays()
    coins = _rng.uniform01(_rng.hash_u64(rng_seed, np.uint64(1), src, dst))
    return coins < inst.probs


def simulate_ic(inst: IcInstance, seeds, rng_seed: int) -> PropagationInstance:
    """One synchronous-round IC cascade.

    Each newly activated node attempts each currently inactive neighbor once;
    a node's recorded activator is the smallest-id frontier node whose
    attempt succeeded that round. Fully determined by rng_seed.
    """
    seeds = _check_seeds(seeds, inst.node_count)
    live = _live_edge_mask(inst, rng_seed)
    structure = inst.structure
    active = np.zeros(inst.node_count, dtype=bool)
    active[seeds] = True
    frontier = seeds
    activations = []
    while frontier:
        winners: dict[int, int] = {}
        for u in frontier:  # ascending ids => first writer is the smallest
            lo, hi = structure.indptr[u], structure.indptr[u + 1]
            for off in range(lo, hi):
                if not live[off]:
                    continue
                v = int(structure.targets[off])
                if not active[v] and v not in winners:
                    winners[v] = u
        frontier = sorted(winners)
        for v in frontier:
            active[v] = True
            activations.append((winners[v], v))
    activated = frozenset(int(i) for i in np.flatnonzero(active))
    return PropagationInstance(frozenset(seeds), activated, tuple(activations))


def _ic_reach_count(inst: IcInstance, seeds: list[int], rng_seed: int) -> int:
    """Activated-node count of simulate_ic without building the activation log."""
    live = _live_edge_mask(inst, rng_seed)
    structure = inst.structure
    active = np.zeros(inst.node_count, dtype=bool)
    active[seeds] = True
    stack = list(seeds)
    count = len(seeds)
    targets = structure.targets
    indptr = structure.indptr
    while stack:
        u = stack.pop()
        for off in range(indptr[u], indptr[u + 1]):
            if live[off]:
                v = targets[off]
                if not active[v]:
                    active[v] = True
                    count += 1
                    stack.append(int(v))
    return count


def simulate_wlt(inst: WltInstance, seeds) -> PropagationInstance:
    """One WLT cascade; deterministic given the instance (no runtime randomness).

    A node activates once the summed weights of its active in-neighbors
    reach its threshold; every in-neighbor active at that point is recorded
    as a contributor.
    """
    seeds = _check_seeds(seeds, inst.node_count)
    structure = inst.structure
    active = np.zeros(inst.node_count, dtype=bool)
    active[seeds] = True
    acc = np.zeros(inst.node_count)
    frontier = seeds
    activations = []
    while frontier:
        touched: set[int] = set()
        for u in frontier:
            lo, hi = structure.indptr[u], structure.indptr[u + 1]
            # undirected ties: u's out-neighbors are exactly the v with u in-neighbor
            for off in range(lo, hi):
                v = int(structure.targets[off])
                if active[v]:
                    continue
                vlo, vhi = structure.indptr[v], structure.indptr[v + 1]
                j = vlo + int(np.searchsorted(structure.targets[vlo:vhi], u))
                acc[v] += inst.in_weights[j]
                touched.add(v)
        newly = sorted(v for v in touched if acc[v] >= inst.thresholds[v])
        for v in newly:
            vlo, vhi = structure.indptr[v], structure.indptr[v + 1]
            for off in range(vlo, vhi):
                u = int(structure.targets[off])
                if active[u]:
                    activations.append((u, v))
        for v in newly:
            active[v] = True
        frontier = newly
    activated = frozenset(int(i) for i in np.flatnonzero(active))
    return PropagationInstance(frozenset(seeds), activated, tuple(activations))


def _generate_one(model, k: int, rng_seed: int, index: int) -> PropagationInstance:
    seed_i = _rng.derive_seed(rng_seed, "instance", index)
    gen = _rng.generator(seed_i, "seed-set")
    seeds = sorted(int(s) for s in gen.choice(model.node_count, size=k, replace=False))
    if isinstance(model, WltInstance):
        return simulate_wlt(model, seeds)
    return simulate_ic(model, seeds, _rng.derive_seed(seed_i, "cascade"))


def generate_instances(model, g: SocialGraph | None, seed_ratio: float, M: int,
                       rng_seed: int, workers: int = 1) -> list[PropagationInstance]:
    """Simulate M cascades from independent uniform-random seed sets.

    Seed sets have size ceil(seed_ratio * |V|); instance i uses substream
    (rng_seed, "instance", i), so the list is reproducible for any worker
    count and independent of generation order. g, when given, must match
    the model's node count.
    """
    if not (0.0 < seed_ratio <= 1.0):
        raise ValueError("seed_ratio must lie in (0, 1]")
    if M < 1:
        raise ValueError("M must be >= 1")
    n = model.node_count
    if g is not None and g.node_count != n:
        raise ValueError("graph / model node count mismatch")
    k = int(np.ceil(seed_ratio * n))
    if k < 1:
        raise ValueError("seed set size rounded to zero")
    if workers > 1 and M > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_generate_one, [model] * M, [k] * M,
                                 [rng_seed] * M, range(M)))
    return [_generate_one(model, k, rng_seed, i) for i in range(M)]


@dataclass(frozen=True)
class SpreadEstimate:
    mean_ratio: float
    std_ratio: float
    rounds: int


def _ic_round_counts(inst: IcInstance, seeds: list[int], rng_seed: int,
                     round_indices) -> list[int]:
    return [_ic_reach_count(inst, seeds, _rng.derive_seed(rng_seed, "round", r))
            for r in round_indices]


def estimate_spread(model, seeds, rounds: int, rng_seed: int,
                    workers: int = 1) -> SpreadEstimate:
    """Monte-Carlo mean spread ratio (|activated| / |V|) with sample std.

    WLT is deterministic per instance, so a single simulation is run and
    std is exactly 0. IC rounds use substream (rng_seed, "round", r); the
    result is identical for any worker count.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    n = model.node_count
    seeds = _check_seeds(seeds, n)
    if isinstance(model, WltInstance):
        ratio = len(simulate_wlt(model, seeds).activated) / n
        return SpreadEstimate(ratio, 0.0, rounds)
    if workers > 1 and rounds > 1:
        chunks = np.array_split(np.arange(rounds), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_ic_round_counts, [model] * len(chunks),
                             [seeds] * len(chunks), [rng_seed] * len(chunks), chunks)
        counts = [c for part in parts for c in part]
    else:
        counts = _ic_round_counts(model, seeds, rng_seed, range(rounds))
    ratios = np.asarray(counts, dtype=np.float64) / n
    std = float(ratios.std(ddof=1)) if rounds > 1 else 0.0
    return SpreadEstimate(float(ratios.mean()), std, rounds)


def exact_spread_bruteforce(inst: IcInstance, seeds) -> float:
    """Exact expected spread by enumerating every live-edge world.

    Only feasible for tiny instances; refuses beyond
    BRUTEFORCE_EDGE_LIMIT directed edges.
    """
    m = inst.directed_edge_count
    if m > BRUTEFORCE_EDGE_LIMIT:
        raise ValueError(
            f"{m} directed edges exceeds the enumerable limit of {BRUTEFORCE_EDGE_LIMIT}"
        )
    seeds = _check_seeds(seeds, inst.node_count)
    src, dst = inst.structure.directed_edge_arrays()
    src = [int(x) for x in src]
    dst = [int(x) for x in dst]
    probs = [float(p) for p in inst.probs]
    n = inst.node_count
    total = 0.0
    for mask in range(1 << m):
        weight = 1.0
        adj: dict[int, list[int]] = {}
        for e in range(m):
            if mask >> e & 1:
                weight *= probs[e]
                adj.setdefault(src[e], []).append(dst[e])
            else:
                weight *= 1.0 - probs[e]
        if weight == 0.0:
            continue
        seen = set(seeds)
        stack = list(seeds)
        while stack:
            u = stack.pop()
            for v in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        total += weight * len(seen)
    return total


# ---------------------------------------------------------------------------
# file formats

def save_model_instance(model, path) -> None:
    """Write an IC or WLT instance file (self-contained, reproducible bytes)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if isinstance(model, IcInstance):
            fh.write(f"IC {model.node_count}\n")
            src, dst = model.structure.directed_edge_arrays()
            for u, v, p in zip(src, dst, model.probs):
                fh.write(f"{u} {v} {float(p)!r}\n")
        elif isinstance(model, WltInstance):
            fh.write(f"WLT {model.node_count}\n")
            for v in range(model.node_count):
                fh.write(f"N {v} {float(model.thresholds[v])!r}\n")
            indptr, targets = model.structure.indptr, model.structure.targets
            for v in range(model.node_count):
                for off in range(indptr[v], indptr[v + 1]):
                    fh.write(f"E {int(targets[off])} {v} {float(model.in_weights[off])!r}\n")
        else:
            raise TypeError(f"unknown model type {type(model)!r}")


def load_model_instance(path):
    """Parse a model instance file written by save_model_instance."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] not in ("IC", "WLT"):
            raise ValueError(f"{path}: bad model header")
        kind, n = header[0], int(header[1])
        if kind == "IC":
            src, dst, p = [], [], []
            for lineno, line in enumerate(fh, start=2):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected 'u v p'")
                src.append(int(parts[0])); dst.append(int(parts[1])); p.append(float(parts[2]))
            structure, order = _DirectedStructure.from_directed_edges(
                n, np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64))
            return IcInstance(structure, np.asarray(p)[order])
        thresholds = np.zeros(n)
        src, dst, w = [], [], []
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "N" and len(parts) == 3:
                thresholds[int(parts[1])] = float(parts[2])
            elif parts[0] == "E" and len(parts) == 4:
                src.append(int(parts[1])); dst.append(int(parts[2])); w.append(float(parts[3]))
            else:
                raise ValueError(f"{path}:{lineno}: expected 'N v theta' or 'E u v w'")
        # in-adjacency: index by target node
        structure, order = _DirectedStructure.from_directed_edges(
            n, np.asarray(dst, dtype=np.int64), np.asarray(src, dtype=np.int64))
        return WltInstance(structure, thresholds, np.asarray(w)[order])


def save_propagation_instances(instances, path) -> None:
    """Write cascades: '# instance <i> seeds <...>' headers plus 'u v' lines."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, inst in enumerate(instances):
            seeds = ",".join(str(s) for s in sorted(inst.seed_set))
            fh.write(f"# instance {i} seeds {seeds}\n")
            for u, v in inst.activations:
                fh.write(f"{u} {v}\n")


def load_propagation_instances(path) -> list[PropagationInstance]:
    instances = []
    seeds: list[int] = []
    edges: list[tuple[int, int]] = []
    started = False

    def flush():
        if not started:
            return
        activated = set(seeds)
        for u, v in edges:
            activated.add(u); activated.add(v)
        instances.append(PropagationInstance(frozenset(seeds), frozenset(activated),
                                             tuple(edges)))

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("# instance"):
                flush()
                started = True
                parts = stripped.split()
                seeds = [int(s) for s in parts[4].split(",")] if len(parts) > 4 else []
                edges = []
            elif stripped.startswith("#"):
                continue
            else:
                parts = stripped.split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 'u v'")
                edges.append((int(parts[0]), int(parts[1])))
    flush()
    for inst in instances:
        inst.validate()
    return instances

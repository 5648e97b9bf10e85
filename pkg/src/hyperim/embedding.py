"""Hyperbolic influence representation: scores, losses, and training.

Every node carries a hyperboloid point (spatial coordinates, derived time),
a scalar bias, and the table carries four rotation-angle sets — a
(source, target) pair for social ties and another for recorded activations.
Edge scores combine rotated squared Lorentzian distance with the biases;
observed edges are contrasted against degree^0.75 negatives, and activation
sources are additionally pulled toward the origin so that small
distance-to-origin ends up meaning high influence.

Negatives inside total_loss/train are drawn from counter-based substreams
keyed by (epoch, relation, u, v, slot): the loss is a pure function of
(parameters, seed), independent of edge order, which the additivity and
finite-difference tests rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .graph import SocialGraph
from .lorentz import (LorentzPoint, RotationSet, ldo_batch, rotate_spatial,
                      time_coord, wrapped_normal_batch)

RELATIONS = ("structure", "propagation")
ROTATION_TAGS = ("structure-source", "structure-target",
                 "propagation-source", "propagation-target")
SCORE_CLAMP = 30.0      # sigmoid inputs clipped to +-this before log
INIT_STD = 0.1


class TrainingDiverged(RuntimeError):
    """Raised when the loss stops being finite; message carries diagnostics."""


@dataclass
class TrainConfig:
    """Training knobs. learning_rate defaults to None and resolves per
    optimizer: 0.5 for sgd, 1e-3 for adam.

    Plain SGD is the default because per-parameter adaptive steps normalize
    away the gradient-magnitude differences between nodes — exactly the
    signal (activation frequency times the degree-scaled origin pull) that
    has to separate distances-to-origin by influence.
    """

    dim: int = 64
    gamma: float = 1.0
    negatives: int = 5
    epochs: int = 100
    learning_rate: float | None = None
    batch_size: int = 1024
    rng_seed: int = 0
    reg_sign: float = -1.0   # -1: maximizing the regularizer pulls sources to the origin
    init_std: float = INIT_STD
    optimizer: str = "sgd"
    dtype: type = np.float64

    def resolved_learning_rate(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return 0.5 if self.optimizer == "sgd" else 1e-3

    def validate(self) -> None:
        if self.dim <= 0 or self.dim % 2 != 0:
            raise ValueError("dim must be even and positive")
        if self.negatives < 1:
            raise ValueError("need at least one negative per positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.reg_sign not in (-1.0, 1.0):
            raise ValueError("reg_sign must be -1 or +1")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")


class EmbeddingTable:
    """Per-node hyperboloid points and biases plus four rotation-angle sets."""

    def __init__(self, spatial: np.ndarray, bias: np.ndarray,
                 rotations: dict[str, np.ndarray], gamma: float = 1.0):
        spatial = np.asarray(spatial, dtype=np.float64)
        if spatial.ndim != 2 or spatial.shape[1] % 2 != 0:
            raise ValueError("spatial must be (n_nodes, even_dim)")
        if bias.shape != (spatial.shape[0],):
            raise ValueError("one bias per node required")
        for tag in ROTATION_TAGS:
            if rotations[tag].shape != (spatial.shape[1] // 2,):
                raise ValueError(f"rotation {tag} must have dim/2 angles")
        self.spatial = spatial
        self.bias = np.asarray(bias, dtype=np.float64)
        self.rotations = {tag: np.asarray(rotations[tag], dtype=np.float64)
                          for tag in ROTATION_TAGS}
        self.gamma = float(gamma)
        self.loss_history: list[float] = []

    @classmethod
    def init_random(cls, node_count: int, dim: int, gamma: float, std: float,
                    rng_seed: int) -> "EmbeddingTable":
        spatial = wrapped_normal_batch(node_count, dim, gamma, std, rng_seed)
        bias = np.zeros(node_count)
        rotations = {tag: np.zeros(dim // 2) for tag in ROTATION_TAGS}
        return cls(spatial, bias, rotations, gamma)

    @property
    def node_count(self) -> int:
        return self.spatial.shape[0]

    @property
    def dim(self) -> int:
        return self.spatial.shape[1]

    def point(self, u: int) -> LorentzPoint:
        return LorentzPoint(self.spatial[u].copy(), self.gamma)

    def rotation(self, relation: str, side: str) -> RotationSet:
        return RotationSet(self.rotations[f"{relation}-{side}"].copy())

    def ldo_all(self) -> np.ndarray:
        return ldo_batch(self.spatial, self.gamma)


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -np.clip(x, -SCORE_CLAMP, SCORE_CLAMP))


def _rotation_pair(table: EmbeddingTable, relation: str):
    if relation not in RELATIONS:
        raise ValueError(f"relation must be one of {RELATIONS}")
    return table.rotations[f"{relation}-source"], table.rotations[f"{relation}-target"]


def edge_score(table: EmbeddingTable, u: int, v: int, relation: str,
               w_uv: float) -> float:
    """-w_uv * d^2(rotated u, rotated v) + b_u + b_v for the given relation."""
    if w_uv <= 0:
        raise ValueError("edge coefficient must be > 0")
    ang_s, ang_t = _rotation_pair(table, relation)
    a = rotate_spatial(ang_s, table.spatial[u])
    b = rotate_spatial(ang_t, table.spatial[v])
    ta = time_coord(table.spatial[u], table.gamma)
    tb = time_coord(table.spatial[v], table.gamma)
    d2 = max(0.0, -2.0 * table.gamma + 2.0 * float(ta * tb) - 2.0 * float(np.dot(a, b)))
    return -w_uv * d2 + float(table.bias[u]) + float(table.bias[v])


def log_edge_prob(table: EmbeddingTable, u: int, v: int, negatives,
                  relation: str, w: float) -> float:
    """log sigma(score(u,v)) + sum over negatives o of log sigma(-score(u,o))."""
    negatives = list(negatives)
    if not negatives:
        raise ValueError("need at least one negative")
    if v in negatives:
        raise ValueError("positive target cannot appear among negatives")
    total = float(_log_sigmoid(edge_score(table, u, v, relation, w)))
    for o in negatives:
        total += float(_log_sigmoid(-edge_score(table, u, o, relation, w)))
    return total


def _unigram_weights(g: SocialGraph) -> np.ndarray:
    return np.power(g.degrees.astype(np.float64), 0.75)


def sample_negatives(g: SocialGraph, u: int, count: int, rng,
                     exclude: int | None = None) -> list[int]:
    """Draw `count` nodes from the degree^0.75 unigram distribution.

    u itself (and the positive target, when given) is rejected and redrawn.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if g.node_count < 2:
        raise ValueError("negative sampling needs at least two nodes")
    weights = _unigram_weights(g)
    banned = weights[u]
    if exclude is not None and exclude != u:
        banned += weights[exclude]
    if weights.sum() - banned <= 0.0:
        raise ValueError("no eligible negative candidates")
    cumulative = np.cumsum(weights)
    total = cumulative[-1]
    out: list[int] = []
    while len(out) < count:
        draw = int(np.searchsorted(cumulative, rng.random() * total, side="right"))
        if draw == u or draw == exclude:
            continue
        out.append(draw)
    return out


def influence_reg_term(table: EmbeddingTable, instance, g: SocialGraph,
                       reg_sign: float = -1.0) -> float:
    """Origin-pull regularizer: sum over activations of alpha_u * log sigma(sign * d2(x_u, o))."""
    if not instance.activations:
        return 0.0
    src = np.fromiter((u for u, _ in instance.activations), dtype=np.int64,
                      count=len(instance.activations))
    alpha = np.sqrt(g.degrees[src] / g.max_degree)
    d2 = ldo_batch(table.spatial[src], table.gamma)
    return float(np.sum(alpha * _log_sigmoid(reg_sign * d2)))


# ---------------------------------------------------------------------------
# training sample materialization

@dataclass
class _Positives:
    """Flattened positive edges: structure (both directions) then activations."""

    u: np.ndarray
    v: np.ndarray
    rel: np.ndarray      # 0 structure, 1 propagation
    w: np.ndarray        # 1 / d_u (social degree)
    alpha: np.ndarray    # sqrt(d_u / d_max) on propagation rows, else 0


def _materialize_positives(g: SocialGraph, instances) -> _Positives:
    us = [g.edges[:, 0], g.edges[:, 1]]
    vs = [g.edges[:, 1], g.edges[:, 0]]
    rels = [np.zeros(2 * g.edge_count, dtype=np.int8)]
    for inst in instances:
        if not inst.activations:
            continue
        arr = np.asarray(inst.activations, dtype=np.int64)
        us.append(arr[:, 0])
        vs.append(arr[:, 1])
        rels.append(np.ones(arr.shape[0], dtype=np.int8))
    u = np.concatenate(us)
    v = np.concatenate(vs)
    rel = np.concatenate(rels)
    degrees = g.degrees.astype(np.float64)
    if np.any(degrees[u] == 0):
        raise ValueError("activation source with no neighbors in the graph")
    w = 1.0 / degrees[u]
    alpha = np.where(rel == 1, np.sqrt(degrees[u] / g.max_degree), 0.0)
    return _Positives(u, v, rel, w, alpha)


def _draw_negatives(g: SocialGraph, pos: _Positives, count: int, seed: int,
                    epoch: int) -> np.ndarray:
    """(P, count) negative ids from per-(epoch, relation, u, v, slot) substreams."""
    weights = _unigram_weights(g)
    cumulative = np.cumsum(weights)
    total = cumulative[-1]
    p = pos.u.shape[0]
    base = _rng.hash_u64(seed, np.uint64(2), pos.u.astype(np.uint64),
                         pos.v.astype(np.uint64),
                         pos.rel.astype(np.uint64)) ^ np.uint64(epoch * 2 + 1)
    negs = np.empty((p, count), dtype=np.int64)
    for slot in range(count):
        pending = np.arange(p)
        attempt = 0
        while pending.size:
            words = _rng.hash_u64(0, base[pending] ^ np.uint64(slot * 2654435761 + 7),
                                  np.uint64(attempt))
            draws = np.searchsorted(cumulative, _rng.uniform01(words) * total,
                                    side="right")
            negs[pending, slot] = draws
            bad = (draws == pos.u[pending]) | (draws == pos.v[pending])
            pending = pending[bad]
            attempt += 1
            if attempt > 128:
                raise ValueError("negative sampling failed to find eligible nodes")
    return negs


# ---------------------------------------------------------------------------
# loss and gradients (shared by total_loss, train, gradient_check)

def _row_angles(rotations: dict[str, np.ndarray], rel: np.ndarray):
    """Per-row (cos, sin) pairs for both sides, selected by relation id."""
    sel = rel[:, None] == 1
    ang_s = np.where(sel, rotations["propagation-source"], rotations["structure-source"])
    ang_t = np.where(sel, rotations["propagation-target"], rotations["structure-target"])
    return ang_s, ang_t


def _rotate_pairs(pairs: np.ndarray, cos: np.ndarray, sin: np.ndarray) -> np.ndarray:
    x, y = pairs[..., 0], pairs[..., 1]
    out = np.empty_like(pairs)
    out[..., 0] = cos * x - sin * y
    out[..., 1] = sin * x + cos * y
    return out


def _batch_loss(spatial, bias, rotations, gamma, pos: _Positives, negs, reg_sign,
                rows=None, grads: dict | None = None):
    """Loss (and, when grads is given, gradient contributions) of a row slice.

    Returns (loss, touched, node_grad_spatial, node_grad_bias) where touched
    lists the node index of every contribution row; angle gradients are
    accumulated directly into grads.
    """
    if rows is None:
        rows = slice(None)
    u = pos.u[rows]
    v = pos.v[rows]
    rel = pos.rel[rows]
    w = pos.w[rows]
    alpha = pos.alpha[rows]
    negs = negs[rows]
    b = u.shape[0]
    k = negs.shape[1]
    n = spatial.shape[1]
    half = n // 2

    targets = np.concatenate([v[:, None], negs], axis=1)      # (b, k+1)
    ang_s, ang_t = _row_angles(rotations, rel)                 # (b, half)
    # only the relative rotation matters for the inner product:
    # <R_S zu, R_T zt> == <R(theta_S - theta_T) zu, zt>
    delta = ang_s - ang_t
    cos_d, sin_d = np.cos(delta), np.sin(delta)

    zu = spatial[u]                                            # (b, n)
    zt = spatial[targets]                                      # (b, k+1, n)
    tu = np.sqrt(gamma + np.einsum("bd,bd->b", zu, zu))        # (b,)
    tt = np.sqrt(gamma + np.einsum("bkd,bkd->bk", zt, zt))     # (b, k+1)

    a_comb = _rotate_pairs(zu.reshape(b, half, 2), cos_d, sin_d)
    a_flat = a_comb.reshape(b, n)
    dots = np.einsum("bd,bkd->bk", a_flat, zt)                 # (b, k+1)

    d2 = -2.0 * gamma + 2.0 * tu[:, None] * tt - 2.0 * dots
    d2_pos = d2 > 0.0
    d2 = np.maximum(d2, 0.0)
    scores = -w[:, None] * d2 + bias[u][:, None] + bias[targets]
    sv = np.negative(scores)
    sv[:, 0] = scores[:, 0]
    in_range = np.abs(sv) < SCORE_CLAMP
    np.clip(sv, -SCORE_CLAMP, SCORE_CLAMP, out=sv)
    loss = float(np.sum(np.logaddexp(0.0, -sv)))

    # origin-pull regularizer on propagation rows
    ldo_u = np.maximum(0.0, -2.0 * gamma + 2.0 * math.sqrt(gamma) * tu)
    q = reg_sign * ldo_u
    q_in_range = np.abs(q) < SCORE_CLAMP
    loss -= float(np.sum(alpha * _log_sigmoid(q)))

    if grads is None:
        return loss, None, None, None

    # dL/dscore, with clipped terms contributing zero gradient
    expit = 1.0 / (1.0 + np.exp(-sv))
    dl_dscore = (expit - 1.0) * in_range                                   # (b, k+1)
    dl_dscore[:, 1:] = -dl_dscore[:, 1:]
    dl_dd2 = dl_dscore * (-w[:, None]) * d2_pos

    # weighted sums over targets make the u-side grads linear in the targets
    cbar = np.einsum("bk,bkd->bd", dl_dd2, zt)                             # (b, n)
    ct = np.einsum("bk,bk->b", dl_dd2, tt)                                 # (b,)

    g_zu = 2.0 * zu * (ct / tu)[:, None]
    g_zu -= 2.0 * _rotate_pairs(cbar.reshape(b, half, 2), cos_d, -sin_d).reshape(b, n)
    # regularizer gradient (propagation rows only)
    expit_q = 1.0 / (1.0 + np.exp(-np.clip(q, -SCORE_CLAMP, SCORE_CLAMP)))
    dl_dldo = -alpha * (1.0 - expit_q) * reg_sign * q_in_range * (ldo_u > 0.0)
    g_zu += (2.0 * math.sqrt(gamma) * dl_dldo / tu)[:, None] * zu

    g_zt = zt * (2.0 * dl_dd2 * tu[:, None] / tt)[:, :, None]
    g_zt -= (2.0 * dl_dd2)[:, :, None] * a_flat[:, None, :]

    g_bu = np.sum(dl_dscore, axis=1)
    g_bt = dl_dscore

    # angle gradients: cross terms of the combined-rotated source against
    # the coefficient-weighted raw targets
    cpair = cbar.reshape(b, half, 2)
    cross = (a_comb[..., 0] * cpair[..., 1] - a_comb[..., 1] * cpair[..., 0])
    is_prop = rel == 1
    for mask, src_tag, tgt_tag in ((~is_prop, "structure-source", "structure-target"),
                                   (is_prop, "propagation-source", "propagation-target")):
        if mask.any():
            block = np.sum(cross[mask], axis=0)
            grads[src_tag] += -2.0 * block
            grads[tgt_tag] += 2.0 * block

    touched = np.concatenate([u, targets.reshape(-1)])
    node_spatial = np.concatenate([g_zu, g_zt.reshape(b * (k + 1), n)], axis=0)
    node_bias = np.concatenate([g_bu, g_bt.reshape(-1)])
    return loss, touched, node_spatial, node_bias


def total_loss(table: EmbeddingTable, g: SocialGraph, instances,
               negatives: int = 5, rng_seed: int = 0,
               reg_sign: float = -1.0) -> float:
    """Negated joint log-probability of all edges plus the origin-pull term.

    Structure edges contribute both orientations; every positive is
    contrasted with `negatives` sampled nodes from substream
    (rng_seed, relation, u, v, slot), so duplicated instances contribute
    exactly additively.
    """
    pos = _materialize_positives(g, instances)
    negs = _draw_negatives(g, pos, negatives, rng_seed, epoch=0)
    loss, _, _, _ = _batch_loss(table.spatial, table.bias, table.rotations,
                                table.gamma, pos, negs, reg_sign)
    return loss


def negatives_for_edge(g: SocialGraph, rng_seed: int, relation: str, u: int,
                       v: int, count: int, epoch: int = 0) -> list[int]:
    """The exact negatives total_loss/train would pair with positive (u, v)."""
    pos = _Positives(np.array([u]), np.array([v]),
                     np.array([RELATIONS.index(relation)], dtype=np.int8),
                     np.array([1.0]), np.array([0.0]))
    return [int(x) for x in _draw_negatives(g, pos, count, rng_seed, epoch)[0]]


# ---------------------------------------------------------------------------
# optimizer

class _LazyAdam:
    """Adam with per-row state for node parameters; rows step only when touched."""

    def __init__(self, shape, lr, dtype, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(shape, dtype=dtype)
        self.v = np.zeros(shape, dtype=dtype)
        self.steps = np.zeros(shape[0] if isinstance(shape, tuple) else shape,
                              dtype=np.int64)
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    def update_rows(self, param, rows, grad):
        self.steps[rows] += 1
        t = self.steps[rows]
        if param.ndim == 2:
            t = t[:, None]
        self.m[rows] = self.beta1 * self.m[rows] + (1 - self.beta1) * grad
        self.v[rows] = self.beta2 * self.v[rows] + (1 - self.beta2) * grad * grad
        m_hat = self.m[rows] / (1 - self.beta1 ** t)
        v_hat = self.v[rows] / (1 - self.beta2 ** t)
        param[rows] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _aggregate_rows(touched, node_spatial, node_bias):
    """Group per-contribution gradients by node row.

    Returns (unique_rows, spatial_sums, bias_sums, counts). Sums come back
    float64 (bincount accumulates in double).
    """
    unique, inverse, counts = np.unique(touched, return_inverse=True,
                                        return_counts=True)
    n_cols = node_spatial.shape[1]
    flat = (inverse[:, None] * n_cols + np.arange(n_cols)).ravel()
    spatial_sums = np.bincount(flat, weights=node_spatial.ravel(),
                               minlength=unique.shape[0] * n_cols)
    bias_sums = np.bincount(inverse, weights=node_bias,
                            minlength=unique.shape[0])
    return unique, spatial_sums.reshape(-1, n_cols), bias_sums, counts


def train(g: SocialGraph, instances, config: TrainConfig) -> EmbeddingTable:
    """Fit the table by minibatch gradient descent over shuffled positives.

    Deterministic given config.rng_seed (single-worker). Raises
    TrainingDiverged if the loss stops being finite. Per-epoch mean loss per
    positive is recorded on the returned table's loss_history.
    """
    config.validate()
    table = EmbeddingTable.init_random(g.node_count, config.dim, config.gamma,
                                       config.init_std, _rng.derive_seed(config.rng_seed, "init"))
    dtype = config.dtype
    spatial = table.spatial.astype(dtype)
    bias = table.bias.astype(dtype)
    rotations = {tag: table.rotations[tag].astype(dtype) for tag in ROTATION_TAGS}

    pos = _materialize_positives(g, instances)
    p = pos.u.shape[0]
    if p == 0:
        raise ValueError("no positive edges to train on")

    lr = config.resolved_learning_rate()
    use_adam = config.optimizer == "adam"
    if use_adam:
        opt_spatial = _LazyAdam(spatial.shape, lr, dtype)
        opt_bias = _LazyAdam(bias.shape, lr, dtype)
        opt_rot = {tag: _LazyAdam(rotations[tag].shape, lr, dtype)
                   for tag in ROTATION_TAGS}
        all_rot_rows = {tag: np.arange(rotations[tag].shape[0]) for tag in ROTATION_TAGS}

    shuffle_gen = _rng.generator(config.rng_seed, "shuffle")
    history = []
    for epoch in range(config.epochs):
        negs = _draw_negatives(g, pos, config.negatives,
                               _rng.derive_seed(config.rng_seed, "negatives"), epoch)
        perm = shuffle_gen.permutation(p)
        epoch_loss = 0.0
        for start in range(0, p, config.batch_size):
            rows = perm[start:start + config.batch_size]
            grads = {tag: np.zeros_like(rotations[tag]) for tag in ROTATION_TAGS}
            loss, touched, g_spatial, g_bias = _batch_loss(
                spatial, bias, rotations, config.gamma, pos, negs, config.reg_sign,
                rows=rows, grads=grads)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch offset {start} "
                    f"(|spatial|max={np.abs(spatial).max():.3e}, "
                    f"|bias|max={np.abs(bias).max():.3e})")
            epoch_loss += loss
            unique, sum_spatial, sum_bias, counts = _aggregate_rows(
                touched, g_spatial, g_bias)
            if use_adam:
                opt_spatial.update_rows(spatial, unique, sum_spatial.astype(dtype))
                opt_bias.update_rows(bias, unique, sum_bias.astype(dtype))
                for tag in ROTATION_TAGS:
                    opt_rot[tag].update_rows(rotations[tag], all_rot_rows[tag],
                                             grads[tag].astype(dtype))
            else:
                # per-row mean of within-batch contributions: bounds the step
                # of high-frequency nodes while keeping step-count frequency
                spatial[unique] -= lr * (sum_spatial / counts[:, None]).astype(dtype)
                bias[unique] -= lr * (sum_bias / counts).astype(dtype)
                for tag in ROTATION_TAGS:
                    rotations[tag] -= lr * grads[tag].astype(dtype)
        history.append(epoch_loss / p)

    out = EmbeddingTable(spatial.astype(np.float64), bias.astype(np.float64),
                         {tag: rotations[tag].astype(np.float64) for tag in ROTATION_TAGS},
                         config.gamma)
    out.loss_history = history
    return out


def gradient_check(table: EmbeddingTable, g: SocialGraph, instances,
                   epsilon: float = 1e-5, negatives: int = 5, rng_seed: int = 0,
                   reg_sign: float = -1.0) -> float:
    """Max relative error between analytic and central-difference gradients.

    Meant for tiny fixtures (<= 20 nodes); checks every spatial coordinate,
    bias, and rotation angle against the same fixed negative sample.
    """
    if g.node_count > 20:
        raise ValueError("gradient_check is for tiny fixtures (<= 20 nodes)")
    pos = _materialize_positives(g, instances)
    negs = _draw_negatives(g, pos, negatives, rng_seed, epoch=0)

    spatial = table.spatial.copy()
    bias = table.bias.copy()
    rotations = {tag: table.rotations[tag].copy() for tag in ROTATION_TAGS}
    gamma = table.gamma

    grads = {tag: np.zeros_like(rotations[tag]) for tag in ROTATION_TAGS}
    _, touched, g_spatial_rows, g_bias_rows = _batch_loss(
        spatial, bias, rotations, gamma, pos, negs, reg_sign, grads=grads)
    analytic_spatial = np.zeros_like(spatial)
    np.add.at(analytic_spatial, touched, g_spatial_rows)
    analytic_bias = np.zeros_like(bias)
    np.add.at(analytic_bias, touched, g_bias_rows)

    def loss_at() -> float:
        value, _, _, _ = _batch_loss(spatial, bias, rotations, gamma, pos, negs,
                                     reg_sign)
        return value

    def central(arr, idx) -> float:
        keep = arr[idx]
        arr[idx] = keep + epsilon
        hi = loss_at()
        arr[idx] = keep - epsilon
        lo = loss_at()
        arr[idx] = keep
        return (hi - lo) / (2.0 * epsilon)

    worst = 0.0

    def compare(analytic, fd):
        nonlocal worst
        err = abs(analytic - fd) / max(1.0, abs(analytic), abs(fd))
        worst = max(worst, err)

    for idx in np.ndindex(spatial.shape):
        compare(analytic_spatial[idx], central(spatial, idx))
    for idx in range(bias.shape[0]):
        compare(analytic_bias[idx], central(bias, (idx,)))
    for tag in ROTATION_TAGS:
        for idx in range(rotations[tag].shape[0]):
            compare(grads[tag][idx], central(rotations[tag], (idx,)))
    return worst


# ---------------------------------------------------------------------------
# embedding file format

def save_embedding(table: EmbeddingTable, path) -> None:
    """Write 'HIM-EMB' text format; floats use shortest round-trip repr."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"HIM-EMB {table.node_count} {table.dim} {table.gamma!r}\n")
        for u in range(table.node_count):
            coords = " ".join(repr(float(x)) for x in table.spatial[u])
            fh.write(f"{u} {float(table.bias[u])!r} {coords}\n")
        for tag in ROTATION_TAGS:
            angles = " ".join(repr(float(x)) for x in table.rotations[tag])
            fh.write(f"ROT {tag} {angles}\n")


def load_embedding(path) -> EmbeddingTable:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "HIM-EMB":
            raise ValueError(f"{path}: bad embedding header")
        count, dim, gamma = int(header[1]), int(header[2]), float(header[3])
        spatial = np.zeros((count, dim))
        bias = np.zeros(count)
        rotations = {}
        seen = np.zeros(count, dtype=bool)
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "ROT":
                if len(parts) != 2 + dim // 2:
                    raise ValueError(f"{path}:{lineno}: bad rotation line")
                rotations[parts[1]] = np.array([float(x) for x in parts[2:]])
            else:
                if len(parts) != 2 + dim:
                    raise ValueError(f"{path}:{lineno}: bad node line")
                u = int(parts[0])
                bias[u] = float(parts[1])
                spatial[u] = [float(x) for x in parts[2:]]
                seen[u] = True
        if not seen.all():
            raise ValueError(f"{path}: missing node lines")
        missing = [tag for tag in ROTATION_TAGS if tag not in rotations]
        if missing:
            raise ValueError(f"{path}: missing rotation lines for {missing}")
    return EmbeddingTable(spatial, bias, rotations, gamma)

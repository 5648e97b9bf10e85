"""Numeric kernel for the Lorentz (hyperboloid) model.

A point is parameterized by its spatial coordinates only; the time
coordinate is always derived as sqrt(gamma + ||spatial||^2), so every point
satisfies <x,x>_L = -gamma by construction and optimization over spatial
coordinates is unconstrained. Batch helpers operate on (N, n) spatial
arrays and are what the trainer and selector actually call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng


def time_coord(spatial: np.ndarray, gamma: float) -> np.ndarray:
    """Derived time coordinate(s): sqrt(gamma + ||spatial||^2) along the last axis."""
    sq = np.sum(np.square(spatial), axis=-1)
    return np.sqrt(gamma + sq)


@dataclass(frozen=True)
class LorentzPoint:
    """A point on the hyperboloid, identified by spatial coordinates.

    Dimension n must be even (rotations act on coordinate pairs).
    """

    spatial: np.ndarray
    gamma: float = 1.0
    time: float = field(init=False)

    def __post_init__(self):
        spatial = np.asarray(self.spatial, dtype=np.float64)
        if spatial.ndim != 1 or spatial.shape[0] % 2 != 0 or spatial.shape[0] == 0:
            raise ValueError("spatial dimension must be even and positive")
        if self.gamma <= 0:
            raise ValueError("curvature parameter must be > 0")
        object.__setattr__(self, "spatial", spatial)
        object.__setattr__(self, "time", float(time_coord(spatial, self.gamma)))

    @property
    def dim(self) -> int:
        return self.spatial.shape[0]


def origin(n: int, gamma: float = 1.0) -> LorentzPoint:
    return LorentzPoint(np.zeros(n), gamma)


def _check_compatible(x: LorentzPoint, y: LorentzPoint) -> None:
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    if x.gamma != y.gamma:
        raise ValueError(f"curvature mismatch: {x.gamma} vs {y.gamma}")


def lorentz_inner(x: LorentzPoint, y: LorentzPoint) -> float:
    """Lorentzian scalar product -x0*y0 + <x_spatial, y_spatial>."""
    _check_compatible(x, y)
    return float(-x.time * y.time + np.dot(x.spatial, y.spatial))


def sq_lorentz_dist(x: LorentzPoint, y: LorentzPoint) -> float:
    """Squared Lorentzian distance -2*gamma - 2<x,y>_L (clamped at 0)."""
    _check_compatible(x, y)
    return max(0.0, -2.0 * x.gamma - 2.0 * lorentz_inner(x, y))


def ldo(x: LorentzPoint) -> float:
    """Squared Lorentzian distance to the manifold origin."""
    return max(0.0, -2.0 * x.gamma + 2.0 * np.sqrt(x.gamma) * x.time)


def ldo_batch(spatial: np.ndarray, gamma: float) -> np.ndarray:
    """Distance-to-origin scores for an (N, n) spatial array."""
    t = time_coord(spatial, gamma)
    return np.maximum(0.0, -2.0 * gamma + 2.0 * np.sqrt(gamma) * t)


def sq_dist_batch(spatial_a, spatial_b, gamma: float) -> np.ndarray:
    """Pairwise-aligned squared Lorentzian distances for matching rows."""
    ta = time_coord(spatial_a, gamma)
    tb = time_coord(spatial_b, gamma)
    dots = np.sum(spatial_a * spatial_b, axis=-1)
    return np.maximum(0.0, -2.0 * gamma + 2.0 * ta * tb - 2.0 * dots)


@dataclass(frozen=True)
class RotationSet:
    """Block-diagonal 2x2 rotations: one learnable angle per coordinate pair."""

    angles: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "angles", np.asarray(self.angles, dtype=np.float64).reshape(-1))

    @property
    def block_count(self) -> int:
        return self.angles.shape[0]


def rotate_spatial(angles: np.ndarray, spatial: np.ndarray) -> np.ndarray:
    """Apply per-pair 2x2 rotations to the last axis of a spatial array.

    angles has shape (n/2,) or broadcasts against the leading axes of
    spatial reshaped to (..., n/2, 2). Norm-preserving, so the derived time
    coordinate of the result is unchanged.
    """
    shape = spatial.shape
    if shape[-1] % 2 != 0:
        raise ValueError("spatial dimension must be even")
    pairs = spatial.reshape(shape[:-1] + (shape[-1] // 2, 2))
    c = np.cos(angles)
    s = np.sin(angles)
    x, y = pairs[..., 0], pairs[..., 1]
    out = np.empty_like(pairs)
    out[..., 0] = c * x - s * y
    out[..., 1] = s * x + c * y
    return out.reshape(shape)


def rotate(r: RotationSet, x: LorentzPoint) -> LorentzPoint:
    """Rotate a point's spatial coordinates; the point stays on the manifold."""
    if r.block_count * 2 != x.dim:
        raise ValueError(f"rotation has {r.block_count} blocks, point dimension is {x.dim}")
    return LorentzPoint(rotate_spatial(r.angles, x.spatial), x.gamma)


def exp_map_origin(tangent: np.ndarray, gamma: float) -> np.ndarray:
    """Spatial part of the exponential map at the origin for tangent vectors.

    tangent holds spatial components of tangent vectors at the origin
    (time component 0); returns spatial coordinates of the mapped points.
    """
    tangent = np.asarray(tangent, dtype=np.float64)
    r = np.sqrt(np.sum(np.square(tangent), axis=-1, keepdims=True))
    scaled = r / np.sqrt(gamma)
    # sinh(x)/x, series near 0 to stay smooth
    small = scaled < 1e-8
    ratio = np.where(small, 1.0 + scaled * scaled / 6.0,
                     np.sinh(scaled) / np.where(small, 1.0, scaled))
    return ratio * tangent


def wrapped_normal_init(n: int, gamma: float, std: float, rng_seed: int) -> LorentzPoint:
    """Sample a point by pushing an isotropic Gaussian tangent through exp at the origin."""
    if n % 2 != 0 or n <= 0:
        raise ValueError("dimension must be even and positive")
    if std <= 0:
        raise ValueError("std must be > 0")
    gen = _rng.generator(rng_seed, "wrapped-normal")
    tangent = gen.normal(0.0, std, size=n)
    return LorentzPoint(exp_map_origin(tangent, gamma), gamma)


def wrapped_normal_batch(count: int, n: int, gamma: float, std: float,
                         rng_seed: int) -> np.ndarray:
    """(count, n) spatial array of wrapped-normal samples (one substream per table)."""
    gen = _rng.generator(rng_seed, "wrapped-normal")
    tangent = gen.normal(0.0, std, size=(count, n))
    return exp_map_origin(tangent, gamma)

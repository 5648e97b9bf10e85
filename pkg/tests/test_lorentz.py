import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperim.lorentz import (LorentzPoint, RotationSet, ldo, lorentz_inner,
                             origin, rotate, sq_lorentz_dist,
                             wrapped_normal_batch, wrapped_normal_init)

MANIFOLD_TOL = 1e-9


def manifold_residual(p: LorentzPoint) -> float:
    return abs(lorentz_inner(p, p) + p.gamma)


def test_origin_self_product():
    o = origin(2, gamma=1.0)
    assert lorentz_inner(o, o) == pytest.approx(-1.0, abs=1e-15)


def test_inner_hand_value():
    x = LorentzPoint(np.array([1.0, 0.0]))
    y = LorentzPoint(np.array([0.0, 1.0]))
    # -sqrt(2)*sqrt(2) + 0 = -2
    assert lorentz_inner(x, y) == pytest.approx(-2.0, abs=1e-12)


def test_sq_dist_hand_value():
    x = LorentzPoint(np.array([1.0, 0.0]))
    y = LorentzPoint(np.array([0.0, 1.0]))
    # -2 - 2*(-2) = 2
    assert sq_lorentz_dist(x, y) == pytest.approx(2.0, abs=1e-12)


def test_sq_dist_zero_at_same_point():
    o = origin(4)
    assert sq_lorentz_dist(o, o) == 0.0


def test_ldo_hand_value():
    x = LorentzPoint(np.array([1.0, 0.0]))
    # 2*sqrt(2) - 2
    assert ldo(x) == pytest.approx(2.0 * math.sqrt(2.0) - 2.0, abs=1e-12)
    assert ldo(origin(2)) == 0.0


def test_ldo_monotone_in_norm():
    values = [ldo(LorentzPoint(np.array([s, 0.0]))) for s in (0.1, 0.5, 1.0, 3.0)]
    assert values == sorted(values)
    assert all(v >= 0 for v in values)


def test_rotate_identity_and_quarter_turn():
    x = LorentzPoint(np.array([1.0, 0.0]))
    same = rotate(RotationSet(np.zeros(1)), x)
    assert np.allclose(same.spatial, x.spatial)
    quarter = rotate(RotationSet(np.array([math.pi / 2])), x)
    assert np.allclose(quarter.spatial, [0.0, 1.0], atol=1e-15)


def test_rotate_rejects_mismatched_blocks():
    with pytest.raises(ValueError):
        rotate(RotationSet(np.zeros(2)), LorentzPoint(np.array([1.0, 0.0])))


def test_odd_dimension_rejected():
    with pytest.raises(ValueError):
        LorentzPoint(np.array([1.0, 2.0, 3.0]))


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        lorentz_inner(origin(2), origin(4))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 8, 64]))
def test_rotation_is_isometry(seed, n):
    gen = np.random.default_rng(seed)
    x = LorentzPoint(gen.normal(0, 1.0, n), gamma=1.0)
    y = LorentzPoint(gen.normal(0, 1.0, n), gamma=1.0)
    r = RotationSet(gen.uniform(-math.pi, math.pi, n // 2))
    d_before = sq_lorentz_dist(x, y)
    d_after = sq_lorentz_dist(rotate(r, x), rotate(r, y))
    assert abs(d_before - d_after) <= MANIFOLD_TOL
    assert manifold_residual(rotate(r, x)) <= MANIFOLD_TOL


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_rotation_composition(seed):
    gen = np.random.default_rng(seed)
    x = LorentzPoint(gen.normal(0, 1.0, 8))
    a = gen.uniform(-1, 1, 4)
    b = gen.uniform(-1, 1, 4)
    once = rotate(RotationSet(a), rotate(RotationSet(b), x))
    combined = rotate(RotationSet(a + b), x)
    assert np.allclose(once.spatial, combined.spatial, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_sq_dist_symmetric_nonnegative(seed):
    gen = np.random.default_rng(seed)
    x = LorentzPoint(gen.normal(0, 2.0, 6))
    y = LorentzPoint(gen.normal(0, 2.0, 6))
    assert sq_lorentz_dist(x, y) == sq_lorentz_dist(y, x)
    assert sq_lorentz_dist(x, y) >= 0.0


def test_wrapped_normal_on_manifold_and_deterministic():
    p = wrapped_normal_init(8, 1.0, 0.5, rng_seed=42)
    q = wrapped_normal_init(8, 1.0, 0.5, rng_seed=42)
    assert np.array_equal(p.spatial, q.spatial)
    assert manifold_residual(p) <= MANIFOLD_TOL


def test_wrapped_normal_std_zero_limit():
    p = wrapped_normal_init(4, 1.0, 1e-12, rng_seed=3)
    assert ldo(p) < 1e-20


def test_wrapped_normal_invalid_args():
    with pytest.raises(ValueError):
        wrapped_normal_init(3, 1.0, 0.1, 0)
    with pytest.raises(ValueError):
        wrapped_normal_init(4, 1.0, 0.0, 0)


def test_wrapped_normal_batch_mean_near_zero():
    # symmetry of the sampler: per-coordinate mean ~ 0
    spatial = wrapped_normal_batch(10_000, 4, 1.0, 0.1, rng_seed=11)
    assert np.abs(spatial.mean(axis=0)).max() < 0.01


def test_wrapped_normal_radius_matches_tangent_norm():
    # exp map at the origin is a radial isometry: geodesic distance == tangent norm
    gen = np.random.default_rng(5)
    tangent = gen.normal(0, 1.0, 6)
    from hyperim.lorentz import exp_map_origin
    p = LorentzPoint(exp_map_origin(tangent, 1.0))
    geodesic = math.acosh(max(1.0, p.time))
    assert geodesic == pytest.approx(np.linalg.norm(tangent), rel=1e-9)

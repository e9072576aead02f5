import numpy as np
import pytest

from amenlab.norms import WeightedNorm
from amenlab.tensor import DimensionError, injective_norm, projective_norm, tensor_geometricity_check


def weights(rng, d):
    return rng.random(d) + 0.5


def test_projective_l1_l1_is_weighted_entrywise_sum():
    rng = np.random.default_rng(0)
    for _ in range(10):
        wv, ww = weights(rng, 3), weights(rng, 2)
        Z = rng.normal(size=(3, 2))
        b = projective_norm(Z, WeightedNorm.l1(3, wv), WeightedNorm.l1(2, ww))
        exact = float(np.sum(np.outer(wv, ww) * np.abs(Z)))
        assert b.lower - 1e-9 <= exact <= b.upper + 1e-9
        assert b.gap <= 1e-7


def test_projective_l1_linf_is_sum_of_row_norms():
    rng = np.random.default_rng(1)
    for _ in range(10):
        wv, ww = weights(rng, 3), weights(rng, 3)
        Z = rng.normal(size=(3, 3))
        nW = WeightedNorm.linf(3, ww)
        b = projective_norm(Z, WeightedNorm.l1(3, wv), nW)
        exact = float(sum(wv[i] * nW(Z[i]) for i in range(3)))
        assert b.lower - 1e-9 <= exact <= b.upper + 1e-9


def test_injective_linf_is_max_of_row_norms():
    rng = np.random.default_rng(2)
    for _ in range(10):
        wv = weights(rng, 2)
        Z = rng.normal(size=(2, 3))
        nW = WeightedNorm.l1(3, weights(rng, 3))
        exact = max(wv[i] * nW(Z[i]) for i in range(2))
        assert injective_norm(Z, WeightedNorm.linf(2, wv), nW) == pytest.approx(exact, rel=1e-12)


def test_injective_at_most_projective():
    rng = np.random.default_rng(3)
    for _ in range(10):
        nV = WeightedNorm.linf(2, weights(rng, 2))
        nW = WeightedNorm.l1(3, weights(rng, 3))
        Z = rng.normal(size=(2, 3))
        assert injective_norm(Z, nV, nW) <= projective_norm(Z, nV, nW).upper + 1e-9


def test_dimension_limit():
    with pytest.raises(DimensionError):
        projective_norm(np.zeros((4, 2)), WeightedNorm.l1(4), WeightedNorm.l1(2))


def test_geometricity_inequalities():
    rng = np.random.default_rng(4)
    ind = np.array([np.diag(v) for v in np.eye(3)])  # coordinate indicators on V
    nV = WeightedNorm.l1(3, weights(rng, 3))
    nW = WeightedNorm.linf(2, weights(rng, 2))
    proj = tensor_geometricity_check(nV, ind, nW, "projective", trials=10, seed=0)
    assert proj.holds and proj.max_gap <= 1e-7
    inj = tensor_geometricity_check(WeightedNorm.linf(3), ind, nW, "injective", trials=10, seed=0)
    assert inj.holds


def test_injective_two_by_two_matches_dual_vertex_enumeration():
    rng = np.random.default_rng(5)
    nV = WeightedNorm.l1(2, np.array([1.0, 2.0]))
    nW = WeightedNorm.l1(2, np.array([0.5, 1.5]))
    Z = rng.normal(size=(2, 2))
    # dual ball of weighted l1 on W: |psi_j| <= w_j, vertices are the sign patterns
    best = max(nV(Z @ (np.array(s) * nW.weights)) for s in [(1, 1), (1, -1), (-1, 1), (-1, -1)])
    assert injective_norm(Z, nV, nW) == pytest.approx(best, rel=1e-14)


def test_projective_of_elementary_tensor_is_product_of_norms():
    rng = np.random.default_rng(6)
    nV, nW = WeightedNorm.linf(3, weights(rng, 3)), WeightedNorm.l1(2, weights(rng, 2))
    v, w = rng.normal(size=3), rng.normal(size=2)
    b = projective_norm(np.outer(v, w), nV, nW)
    assert b.lower - 1e-9 <= nV(v) * nW(w) <= b.upper + 1e-9

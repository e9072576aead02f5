"""Projective and injective norms on small tensor products ``V (x) W``.

Tensors are ``dim V x dim W`` matrices; ``V`` and ``W`` carry weighted l1 or
l-infinity norms (dimension at most 3).  The projective norm is bracketed by
column generation over products of unit-ball vertices: the restricted LP
gives an upper bound and its scaled dual a certified lower bound.  The
injective norm is exact: a supremum over the vertices of the dual ball of
``W``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

MAX_DIM = 3


class DimensionError(ValueError):
    """Tensor factors exceed the supported dimension."""


def _check_dims(*norms):
    for n in norms:
        if n.dim > MAX_DIM:
            raise DimensionError(f"factor dimension {n.dim} exceeds {MAX_DIM}")


@dataclass(frozen=True)
class ProjectiveBracket:
    lower: float
    upper: float
    atoms: int
    iterations: int

    @property
    def gap(self):
        return self.upper - self.lower


def _spanning_vertices(verts, d):
    chosen = []
    for v in verts:
        trial = chosen + [v]
        if np.linalg.matrix_rank(np.array(trial)) == len(trial):
            chosen = trial
        if len(chosen) == d:
            break
    return chosen


def projective_norm(Z, nV, nW, tol=1e-9, max_iter=200):
    """Bracket ``||Z||_pi = min sum |c_i| ||v_i|| ||w_i||`` over representations ``Z = sum c_i v_i w_i^T``."""
    _check_dims(nV, nW)
    Z = np.asarray(Z, dtype=float)
    if not np.any(Z):
        return ProjectiveBracket(0.0, 0.0, 0, 0)
    VV, WV = nV.ball_vertices(), nW.ball_vertices()
    atoms = [(v, w) for v in _spanning_vertices(VV, nV.dim) for w in _spanning_vertices(WV, nW.dim)]
    keys = set()
    lower, upper = 0.0, np.inf
    for it in range(1, max_iter + 1):
        A = np.array([np.outer(v, w).ravel() for v, w in atoms]).T
        c = np.ones(2 * A.shape[1])
        res = linprog(c, A_eq=np.hstack([A, -A]), b_eq=Z.ravel(), bounds=(0, None), method="highs")
        if res.status != 0:
            raise RuntimeError(f"projective LP failed: {res.message}")
        upper = min(upper, float(res.fun))
        Y = np.asarray(res.eqlin.marginals).reshape(Z.shape)
        scores = np.abs(VV @ Y @ WV.T)
        i, j = np.unravel_index(np.argmax(scores), scores.shape)
        worst = float(scores[i, j])
        lower = max(lower, float(np.sum(Y * Z)) / max(1.0, worst))
        if worst <= 1.0 + tol or (i, j) in keys:
            break
        keys.add((i, j))
        atoms.append((VV[i], WV[j]))
    return ProjectiveBracket(min(lower, upper), upper, len(atoms), it)


def injective_norm(Z, nV, nW):
    """``sup_{||psi|| <= 1, psi in W*} ||Z psi||_V``, exact via dual-ball vertices."""
    _check_dims(nV, nW)
    Z = np.asarray(Z, dtype=float)
    return max(nV(Z @ psi) for psi in nW.dual().ball_vertices())


@dataclass(frozen=True)
class TensorCheck:
    mode: str
    trials: int
    worst_triangle: float
    worst_chain: float
    max_gap: float
    seed: int

    @property
    def holds(self):
        return self.worst_triangle <= 1e-8 and self.worst_chain <= 1e-8


def tensor_geometricity_check(nV, ind, nW, mode="projective", trials=20, seed=0):
    """Check the disjoint-support inequalities on ``V (x) W`` with ``p.(v (x) w) = (p.v) (x) w``.

    ``ind`` has shape ``(N, dim V, dim V)``, the action of basis indicators.
    Projective mode: for ``z1 = p.z1`` and ``z2 = q.z2`` with disjoint ``p, q``,
    ``triangle = lower(z1+z2) - upper(z1) - upper(z2)`` and
    ``chain = lower(z1) + lower(z2) - upper(z1+z2)`` (an l1-geometric ``V``
    makes the norm additive on such pairs).  Injective mode: ``chain =
    ||p.z1 + q.z2||_eps - max(||z1||_eps, ||z2||_eps)``, exact.
    Nonpositive values mean the inequality held.
    """
    _check_dims(nV, nW)
    ind = np.asarray(ind, dtype=float)
    N = ind.shape[0]
    if N < 2:
        raise ValueError("need at least two basis functions for disjoint supports")
    rng = np.random.default_rng(seed)
    tri = chain = gap = -np.inf
    for _ in range(trials):
        cut = int(rng.integers(1, N))
        order = rng.permutation(N)
        pv = np.zeros(N)
        pv[order[:cut]] = 1.0
        P = np.tensordot(pv, ind, axes=1)
        Q = np.tensordot(1.0 - pv, ind, axes=1)
        Z1 = rng.normal(size=(nV.dim, nW.dim))
        Z2 = rng.normal(size=(nV.dim, nW.dim))
        if mode == "projective":
            z1, z2 = P @ Z1, Q @ Z2
            b1, b2, b12 = (projective_norm(z, nV, nW) for z in (z1, z2, z1 + z2))
            tri = max(tri, b12.lower - b1.upper - b2.upper)
            chain = max(chain, b1.lower + b2.lower - b12.upper)
            gap = max(gap, b1.gap, b2.gap, b12.gap)
        elif mode == "injective":
            lhs = injective_norm(P @ Z1 + Q @ Z2, nV, nW)
            chain = max(chain, lhs - max(injective_norm(Z1, nV, nW), injective_norm(Z2, nV, nW)))
            tri, gap = max(tri, 0.0), 0.0
        else:
            raise ValueError("mode is 'projective' or 'injective'")
    return TensorCheck(mode, trials, float(tri), float(chain), float(gap), seed)

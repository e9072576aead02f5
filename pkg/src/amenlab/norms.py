"""Weighted l1 / l-infinity norms on R^d with exact operator norms."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

L1 = "l1"
LINF = "linf"


def spectral_norm(A):
    """Euclidean operator norm; exact shortcut for matrices with at most one
    nonzero per row and column (scaled partial permutations)."""
    A = np.asarray(A)
    nz = A != 0
    if not nz.any():
        return 0.0
    if nz.sum(axis=0).max() <= 1 and nz.sum(axis=1).max() <= 1:
        return float(np.abs(A).max())
    return float(np.linalg.norm(A, 2))


@dataclass(frozen=True, eq=False)
class WeightedNorm:
    """``sum_i w_i |v_i|`` (``l1``) or ``max_i w_i |v_i|`` (``linf``)."""

    kind: str
    weights: np.ndarray

    def __post_init__(self):
        if self.kind not in (L1, LINF):
            raise ValueError(f"norm kind must be {L1!r} or {LINF!r}")
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or np.any(w <= 0):
            raise ValueError("weights must be a positive vector")
        object.__setattr__(self, "weights", w)

    @classmethod
    def l1(cls, d, weights=None):
        return cls(L1, np.ones(d) if weights is None else weights)

    @classmethod
    def linf(cls, d, weights=None):
        return cls(LINF, np.ones(d) if weights is None else weights)

    @property
    def dim(self):
        return len(self.weights)

    def __call__(self, v):
        a = self.weights * np.abs(np.asarray(v))
        return float(a.sum() if self.kind == L1 else a.max(initial=0.0))

    def dual(self):
        return WeightedNorm(LINF if self.kind == L1 else L1, 1.0 / self.weights)

    def op_norm(self, A):
        """Exact operator norm of ``A`` on ``(R^d, self)``."""
        A = np.abs(np.asarray(A))
        w = self.weights
        scaled = w[:, None] * A / w[None, :]
        return float(scaled.sum(axis=0).max() if self.kind == L1 else scaled.sum(axis=1).max())

    def ball_vertices(self, limit=None, rng=None):
        """Extreme points of the closed unit ball.

        With ``limit``, an l-infinity ball with more than ``limit`` vertices
        yields ``limit`` seeded random sign vertices instead of all of them.
        """
        d, w = self.dim, self.weights
        if self.kind == L1:
            eye = np.eye(d) / w[:, None]
            return np.concatenate([eye, -eye])
        if limit is not None and 2 ** min(d, 62) > limit:
            rng = np.random.default_rng(rng)
            signs = rng.choice([1.0, -1.0], size=(limit, d))
        else:
            signs = np.array(list(itertools.product((1.0, -1.0), repeat=d)))
        return signs / w[None, :]

    def to_doc(self):
        return {"kind": self.kind, "weights": self.weights.tolist()}

    @classmethod
    def from_doc(cls, doc):
        return cls(doc["kind"], np.asarray(doc["weights"], dtype=float))

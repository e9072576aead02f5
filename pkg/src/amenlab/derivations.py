"""Finite-dimensional bimodules over the convolution algebra, derivations into
them, and the reduction of a derivation to an inner one through an averaged
fixed point.

A bimodule is given by matrices: ``L(delta_s)``, ``R(delta_s)`` for generators
and ``L(1_x)``, ``R(1_x)`` for basis indicators.  Elements act by
``L(p delta_h) = L(p) L(delta_h)`` and ``R(p delta_h) = R(delta_h) R(p)``
(the right action reverses products).  The dual module uses
``a.phi.b (v) = phi(b.v.a)``, i.e. ``L*(a) = R(a)^T`` and ``R*(b) = L(b)^T``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .algebra import A0Element, convolve
from .fixed_point import AffineSystem, orbit_average, residual_bound
from .groups import ABELIAN, FINITE, CXFunction, FinitePoints, translate
from .norms import WeightedNorm, spectral_norm

TOL = 1e-10
ROUNDOFF = 1e-12


@dataclass(frozen=True)
class BimoduleCheck:
    multiplicativity: float
    covariance: float
    commutation: float
    contractivity: float

    def ok(self, tol=TOL):
        return max(self.multiplicativity, self.covariance, self.commutation, self.contractivity) <= tol


@dataclass(frozen=True, eq=False)
class BimoduleSpec:
    """Matrices of a bimodule over ``A0`` of ``space`` at a fixed ``depth``.

    ``left_gen``/``right_gen`` have shape ``(rank, d, d)``; ``left_ind`` and
    ``right_ind`` have shape ``(N, d, d)`` with ``N = space.size(depth)``.
    """

    space: object
    left_gen: np.ndarray
    right_gen: np.ndarray
    left_ind: np.ndarray
    right_ind: np.ndarray
    norm: WeightedNorm
    depth: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float) for a in (self.left_gen, self.right_gen, self.left_ind, self.right_ind)]
        d = arrs[0].shape[-1]
        rank, N = self.space.group.rank, self.space.size(self.depth)
        for a, n in zip(arrs, (rank, rank, N, N)):
            if a.shape != (n, d, d):
                raise ValueError(f"action matrices must have shape {(n, d, d)}, got {a.shape}")
        if self.norm.dim != d:
            raise ValueError("norm dimension differs from module dimension")
        for name, a in zip(("left_gen", "right_gen", "left_ind", "right_ind"), arrs):
            object.__setattr__(self, name, a)

    @property
    def dim(self):
        return self.left_gen.shape[-1]

    @property
    def group(self):
        return self.space.group

    def _letter(self, side, s):
        key = (side, "letter", s)
        out = self._cache.get(key)
        if out is None:
            out = (self.left_gen if side == "L" else self.right_gen)[abs(s) - 1]
            if s < 0:
                out = np.linalg.inv(out)
            self._cache[key] = out
        return out

    def left_delta(self, g):
        key = ("L", g)
        out = self._cache.get(key)
        if out is None:
            out = np.eye(self.dim)
            for s in g.word:
                out = out @ self._letter("L", s)
            self._cache[key] = out
        return out

    def right_delta(self, g):
        key = ("R", g)
        out = self._cache.get(key)
        if out is None:
            out = np.eye(self.dim)
            for s in g.word:
                out = self._letter("R", s) @ out
            self._cache[key] = out
        return out

    def _diagonal(self, side):
        """Diagonals of the indicator actions when all of them are diagonal, else None."""
        key = ("diag", side)
        if key not in self._cache:
            ind = self.left_ind if side == "L" else self.right_ind
            diag = np.einsum("kii->ki", ind)
            off = np.abs(ind).sum() - np.abs(diag).sum()
            self._cache[key] = diag.copy() if off == 0 else None
        return self._cache[key]

    def _fn_diag(self, p, side):
        diag = self._diagonal(side)
        return None if diag is None else p.at_depth(self.depth).values @ diag

    def left_fn(self, p):
        d = self._fn_diag(p, "L")
        return np.diag(d) if d is not None else np.tensordot(p.at_depth(self.depth).values, self.left_ind, axes=1)

    def right_fn(self, p):
        d = self._fn_diag(p, "R")
        return np.diag(d) if d is not None else np.tensordot(p.at_depth(self.depth).values, self.right_ind, axes=1)

    def left(self, a):
        """Matrix of ``v -> a.v`` for an ``A0Element``."""
        out = np.zeros((self.dim, self.dim), dtype=np.result_type(*a.coeffs.values(), float) if a.coeffs else float)
        for h in a.support:
            d = self._fn_diag(a[h], "L")
            out = out + (d[:, None] * self.left_delta(h) if d is not None else self.left_fn(a[h]) @ self.left_delta(h))
        return out

    def right(self, a):
        """Matrix of ``v -> v.a``."""
        out = np.zeros((self.dim, self.dim), dtype=np.result_type(*a.coeffs.values(), float) if a.coeffs else float)
        for h in a.support:
            d = self._fn_diag(a[h], "R")
            out = out + (self.right_delta(h) * d[None, :] if d is not None else self.right_delta(h) @ self.right_fn(a[h]))
        return out

    def dual(self):
        t = lambda a: np.transpose(a, (0, 2, 1))
        return BimoduleSpec(self.space, t(self.right_gen), t(self.left_gen), t(self.right_ind), t(self.left_ind),
                            self.norm.dual(), self.depth)

    def indicator(self, x):
        e = np.zeros(self.space.size(self.depth))
        e[x] = 1.0
        return CXFunction(self.space, e, self.depth)

    def validate(self, samples=32, seed=0):
        G, d, N = self.group, self.dim, self.space.size(self.depth)
        eye = np.eye(d)
        mult = 0.0
        for ind in (self.left_ind, self.right_ind):
            mult = max(mult, float(np.max(np.abs(ind.sum(axis=0) - eye))))
            for x in range(N):
                for y in range(N):
                    target = ind[x] if x == y else 0.0
                    mult = max(mult, float(np.max(np.abs(ind[x] @ ind[y] - target))))
        rng = np.random.default_rng(seed)
        letters = G.letters
        words = [G.element(tuple(int(s) for s in rng.choice(letters, size=rng.integers(0, 5)))) for _ in range(2 * samples)]
        for u, v in zip(words[::2], words[1::2]):
            mult = max(mult, float(np.max(np.abs(self.left_delta(u * v) - self.left_delta(u) @ self.left_delta(v)))))
            mult = max(mult, float(np.max(np.abs(self.right_delta(u * v) - self.right_delta(v) @ self.right_delta(u)))))
        if G.kind == FINITE:
            for g in G.elements():
                for s in G.symmetric_generators:
                    mult = max(mult, float(np.max(np.abs(self.left_delta(s * g) - self.left_delta(s) @ self.left_delta(g)))))
                    mult = max(mult, float(np.max(np.abs(self.right_delta(s * g) - self.right_delta(g) @ self.right_delta(s)))))
        elif G.kind == ABELIAN:
            for i, j in itertools.combinations(range(G.rank), 2):
                for gen in (self.left_gen, self.right_gen):
                    mult = max(mult, float(np.max(np.abs(gen[i] @ gen[j] - gen[j] @ gen[i]))))
        cov = 0.0
        for s in G.symmetric_generators:
            Ls, Rs = self.left_delta(s), self.right_delta(s)
            for x in range(N):
                px = self.indicator(x)
                pg = translate(px, s)
                # delta_s p = p^s delta_s on both sides
                cov = max(cov, float(np.max(np.abs(Ls @ self.left_ind[x] - self.left_fn(pg) @ Ls))))
                cov = max(cov, float(np.max(np.abs(self.right_ind[x] @ Rs - Rs @ self.right_fn(pg)))))
        lefts = list(self.left_gen) + list(self.left_ind)
        rights = list(self.right_gen) + list(self.right_ind)
        comm = max(float(np.max(np.abs(a @ b - b @ a))) for a in lefts for b in rights)
        contr = max(max(self.norm.op_norm(a) for a in lefts + rights),
                    max(self.norm.op_norm(np.linalg.inv(a)) for a in list(self.left_gen) + list(self.right_gen)))
        return BimoduleCheck(mult, cov, comm, max(0.0, contr - 1.0))

    def to_doc(self):
        return {
            "depth": self.depth,
            "left_gen": self.left_gen.tolist(),
            "right_gen": self.right_gen.tolist(),
            "left_ind": self.left_ind.tolist(),
            "right_ind": self.right_ind.tolist(),
            "norm": self.norm.to_doc(),
        }

    @classmethod
    def from_doc(cls, space, doc):
        return cls(space, np.asarray(doc["left_gen"], dtype=float), np.asarray(doc["right_gen"], dtype=float),
                   np.asarray(doc["left_ind"], dtype=float), np.asarray(doc["right_ind"], dtype=float),
                   WeightedNorm.from_doc(doc["norm"]), int(doc.get("depth", 0)))


# ---------------------------------------------------------------------------
# derivations


@dataclass(frozen=True, eq=False)
class DerivationSpec:
    """Derivation ``A0 -> module`` given on generators and basis indicators.

    Values on other elements follow from the Leibniz rule along canonical
    words: ``D(delta_{s w}) = s.D(delta_w) + D(delta_s).w`` and
    ``D(p delta_h) = p.D(delta_h) + D(p).delta_h``.
    """

    module: BimoduleSpec
    gen_values: np.ndarray
    ind_values: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        M = self.module
        gv = np.asarray(self.gen_values)
        iv = np.asarray(self.ind_values)
        if gv.shape != (M.group.rank, M.dim) or iv.shape != (M.space.size(M.depth), M.dim):
            raise ValueError("derivation values do not match the module dimensions")
        object.__setattr__(self, "gen_values", gv)
        object.__setattr__(self, "ind_values", iv)

    def _letter(self, s):
        if s > 0:
            return self.gen_values[s - 1]
        M = self.module
        t = M.group.element((-s,))
        ti = t.inverse()
        return -(M.left_delta(ti) @ (M.right_delta(ti) @ self.gen_values[-s - 1]))

    def on_delta(self, g):
        out = self._cache.get(g)
        if out is None:
            M = self.module
            out = np.zeros(M.dim, dtype=self.gen_values.dtype)
            G = M.group
            word = g.word
            # build from the right: w_k = s_k ... s_m
            for k in range(len(word) - 1, -1, -1):
                s = word[k]
                rest = G.element(word[k + 1:])
                out = M.left_delta(G.element((s,))) @ out + M.right_delta(rest) @ self._letter(s)
            self._cache[g] = out
        return out

    def on_function(self, p):
        return np.tensordot(p.at_depth(self.module.depth).values, self.ind_values, axes=1)

    def __call__(self, a):
        M = self.module
        if isinstance(a, CXFunction):
            return self.on_function(a)
        out = np.zeros(M.dim, dtype=np.result_type(self.gen_values, self.ind_values, float))
        for h in a.support:
            p = a[h]
            d = M._fn_diag(p, "L")
            lhs = d * self.on_delta(h) if d is not None else M.left_fn(p) @ self.on_delta(h)
            out = out + lhs + M.right_delta(h) @ self.on_function(p)
        return out

    def __sub__(self, other):
        return DerivationSpec(self.module, self.gen_values - other.gen_values, self.ind_values - other.ind_values)

    def to_doc(self):
        return {"gen_values": np.asarray(self.gen_values).tolist(), "ind_values": np.asarray(self.ind_values).tolist()}

    @classmethod
    def from_doc(cls, module, doc):
        return cls(module, np.asarray(doc["gen_values"], dtype=float), np.asarray(doc["ind_values"], dtype=float))


def ad(v, M):
    """Inner derivation ``a -> a.v - v.a``."""
    v = np.asarray(v)
    G = M.group
    gens = np.array([M.left_delta(g) @ v - M.right_delta(g) @ v for g in G.generators])
    inds = np.array([M.left_ind[x] @ v - M.right_ind[x] @ v for x in range(M.space.size(M.depth))])
    return DerivationSpec(M, gens, inds)


def _random_monomial(M, rng, radius=2):
    G = M.group
    g = G.element(tuple(int(s) for s in rng.choice(G.letters, size=rng.integers(0, radius + 1))))
    vals = rng.random(M.space.size(M.depth))
    return A0Element(M.space, {g: vals}, M.depth)


@dataclass(frozen=True)
class LeibnizReport:
    defect: float
    unit_defect: float
    samples: int
    seed: int


def derivation_defect(D, samples=64, seed=0):
    """Largest ``||D(ab) - a.D(b) - D(a).b||`` over sampled pairs.

    Pairs combine generators, indicators and random monomials ``p delta_g``.
    The unit defect ``||D(1)||`` is reported separately.
    """
    M = D.module
    if D.gen_values.shape[-1] != M.dim:
        raise ValueError("dimension mismatch")
    rng = np.random.default_rng(seed)
    G, sp = M.group, M.space
    basic = [A0Element.delta(sp, g) for g in G.symmetric_generators]
    basic += [A0Element.embed(M.indicator(x)) for x in range(sp.size(M.depth))]
    pairs = [(a, b) for a in basic for b in basic]
    pairs += [(_random_monomial(M, rng), _random_monomial(M, rng)) for _ in range(samples)]
    worst = 0.0
    for a, b in pairs:
        ab = convolve(a, b)
        if sp.is_cylinder:
            ab = ab.at_depth(M.depth)
        lhs = D(ab)
        rhs = M.left(a) @ D(b) + M.right(b) @ D(a)
        worst = max(worst, M.norm(lhs - rhs))
    unit = M.norm(D.ind_values.sum(axis=0))
    return LeibnizReport(worst, unit, len(pairs), seed)


# ---------------------------------------------------------------------------
# reduction to an equivariant derivation and the averaging step


@dataclass(frozen=True)
class Reduction:
    derivation: DerivationSpec
    tau0: np.ndarray
    residual: float
    equivariance_defect: float


def reduce_to_cx_equivariant(D, threshold=1e-8):
    """Subtract ``ad(tau0)`` so that ``D'(p) = 0`` on functions.

    ``tau0`` is the least-squares solution of ``p.tau0 - tau0.p = D(p)`` over
    basis indicators; its residual is reported and must stay below
    ``threshold``.
    """
    M = D.module
    N = M.space.size(M.depth)
    A = np.concatenate([M.left_ind[x] - M.right_ind[x] for x in range(N)])
    b = np.concatenate([D.ind_values[x] for x in range(N)])
    tau0 = np.linalg.lstsq(A, b, rcond=None)[0]
    residual = float(np.max(np.abs(A @ tau0 - b))) if len(b) else 0.0
    if residual > threshold:
        raise ValueError(f"derivation on functions is not inner: residual {residual:.3e}")
    Dp = D - ad(tau0, M)
    eq = equivariance_defect(Dp)
    return Reduction(Dp, tau0, residual, eq)


def equivariance_defect(D, samples=16, seed=0):
    """Largest ``||D(p * f) - p.D(f)||`` over indicators ``p`` and monomials ``f``."""
    M = D.module
    rng = np.random.default_rng(seed)
    fs = [A0Element.delta(M.space, g) for g in M.group.symmetric_generators]
    fs += [_random_monomial(M, rng) for _ in range(samples)]
    worst = max((M.norm(v) for v in D.ind_values), default=0.0)
    for x in range(M.space.size(M.depth)):
        p = A0Element.embed(M.indicator(x))
        for f in fs:
            pf = convolve(p, f)
            if M.space.is_cylinder:
                pf = pf.at_depth(M.depth)
            worst = max(worst, M.norm(D(pf) - M.left(p) @ D(f)))
    return worst


def derivation_system(D):
    """Affine action ``alpha_g(tau) = delta_g.tau.delta_{g^-1} - D(delta_g).delta_{g^-1}``.

    ``beta(p)`` is the left action of ``p``.
    """
    M = D.module
    G = M.group
    lin, coc = [], []
    for g in G.generators:
        gi = g.inverse()
        Rgi = M.right_delta(gi)
        lin.append(M.left_delta(g) @ Rgi)
        coc.append(-Rgi @ D.on_delta(g))
    return AffineSystem(M.space, tuple(lin), tuple(coc), M.left_ind, M.depth)


@dataclass(frozen=True)
class InnerSolution:
    tau: np.ndarray
    residual: float
    mean_defect: float
    C: float
    bound: float
    fixed_point_residual: float
    centrality: float

    @property
    def holds(self):
        return self.residual <= self.bound + 1e-9


def _map_residual(D, M, tau):
    """``max ||D(a) - ad_tau(a)||`` over ``a = 1_x delta_s`` and ``a = 1_x`` (Euclidean)."""
    G = M.group
    worst = 0.0
    T = ad(tau, M)
    for x in range(M.space.size(M.depth)):
        p = M.indicator(x)
        worst = max(worst, float(np.linalg.norm(D.on_function(p) - T.on_function(p))))
        for s in G.symmetric_generators:
            a = A0Element(M.space, {s: p.values}, M.depth)
            worst = max(worst, float(np.linalg.norm(D(a) - T(a))))
    return worst


def solve_inner_via_mean(D, mean):
    """Average the affine action of an equivariant ``D`` against ``mean``.

    Returns ``tau`` with ``D ~ ad(tau)``.  The Euclidean residual over
    ``1_x delta_s`` obeys ``residual <= C * mean_defect + centrality term``
    where ``C = max_x ||L(1_x)|| max_s ||R(delta_s)|| C_fix`` and ``C_fix`` is
    the fixed-point constant of the averaged affine action.
    """
    M = D.module
    sys = derivation_system(D)
    c0 = np.zeros(M.dim)
    tau = orbit_average(mean, sys, c0)
    rb = residual_bound(mean, sys, c0, list(M.group.symmetric_generators))
    residual = _map_residual(D, M, tau)
    Lmax = max(spectral_norm(L) for L in M.left_ind)
    Rmax = max(spectral_norm(M.right_delta(s)) for s in M.group.symmetric_generators)
    C = float(Lmax * Rmax * rb.C)
    cent = max(float(np.linalg.norm(M.left_ind[x] @ tau - M.right_ind[x] @ tau)) for x in range(M.space.size(M.depth)))
    eq = max((float(np.linalg.norm(v)) for v in D.ind_values), default=0.0)
    bound = C * rb.defect + Rmax * (cent + eq) + eq
    return InnerSolution(tau, residual, rb.defect, C, bound, rb.residual, cent)


@dataclass(frozen=True)
class PipelineResult:
    tau: np.ndarray
    tau0: np.ndarray
    reduction_residual: float
    inner: InnerSolution
    residual: float
    centrality: "CentralityReport"


def inner_pipeline(D, mean):
    """Reduce to an equivariant derivation, average, and compare ``D`` with ``ad(tau)``."""
    red = reduce_to_cx_equivariant(D)
    sol = solve_inner_via_mean(red.derivation, mean)
    tau = sol.tau + red.tau0
    residual = _map_residual(D, D.module, tau)
    return PipelineResult(tau, red.tau0, red.residual, sol, residual, cx_centrality_defect(red.derivation))


@dataclass(frozen=True)
class CentralityReport:
    defect: float
    K: float
    leibniz: float
    equivariance: float

    @property
    def bound(self):
        return self.K * (self.leibniz + 2.0 * self.equivariance)

    @property
    def holds(self):
        return self.defect <= self.bound + 1e-9


def cx_centrality_defect(D):
    """``max ||p.c_g - c_g.p||`` for ``c_g = -D(delta_g).delta_{g^-1}`` over generators and indicators.

    ``K = max_g ||R(delta_{g^-1})|| max(1, ||R(delta_g)||, ||L(delta_g)||)`` in
    the module norm; the defect is at most ``K (leibniz + 2 equivariance)``
    where ``leibniz`` is the Leibniz defect of the pairs ``(delta_g, p^{g^-1})``
    and ``equivariance = max_x ||D(1_x)||``.
    """
    M = D.module
    sp = M.space
    worst = leib = K = 0.0
    eq = max((M.norm(v) for v in D.ind_values), default=0.0)
    for g in M.group.symmetric_generators:
        gi = g.inverse()
        Rgi = M.right_delta(gi)
        c = -Rgi @ D.on_delta(g)
        K = max(K, M.norm.op_norm(Rgi) * max(1.0, M.norm.op_norm(M.right_delta(g)), M.norm.op_norm(M.left_delta(g))))
        for x in range(sp.size(M.depth)):
            worst = max(worst, M.norm(M.left_ind[x] @ c - M.right_ind[x] @ c))
            q = translate(M.indicator(x), gi).at_depth(M.depth)
            a = A0Element.delta(sp, g)
            b = A0Element.embed(q)
            ab = convolve(a, b)
            if sp.is_cylinder:
                ab = ab.at_depth(M.depth)
            leib = max(leib, M.norm(D(ab) - M.left(a) @ D(b) - M.right(b) @ D(a)))
    return CentralityReport(worst, K, leib, eq)


# ---------------------------------------------------------------------------
# geometric inequalities


@dataclass(frozen=True)
class GeometricReport:
    defect: float
    side: str
    mode: str
    decompositions: int
    vectors: int
    seed: int
    exhaustive: bool


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def indicator_decompositions(N):
    """All families of disjoint indicators (partitions of subsets of ``range(N)``)."""
    out = []
    for r in range(1, N + 1):
        for sub in itertools.combinations(range(N), r):
            for part in _set_partitions(list(sub)):
                fam = []
                for block in part:
                    v = np.zeros(N)
                    v[block] = 1.0
                    fam.append(v)
                out.append(fam)
    return out


def soft_decompositions(N, count, rng):
    out = []
    for _ in range(count):
        k = int(rng.integers(1, 5))
        P = rng.dirichlet(np.ones(k), size=N).T * rng.random()
        out.append(list(P))
    return out


def _weighted_abs(A, w):
    return w[:, None] * np.abs(A) / w[None, :]


def geometric_defect(M, side="right", mode="l1", vectors=24, seed=0, soft=64):
    """Largest violation of the l1 (type M) or l-infinity (type C) inequality.

    ``l1``: ``sum_k ||p_k.v|| <= ||sum_k p_k|| ||v||``.
    ``linf``: ``||sum_k p_k.v_k|| <= ||sum_k p_k|| max_k ||v_k||``.
    Decompositions are all indicator families when the space has at most six
    basis functions, else seeded soft partitions.  The supremum over vectors
    is exact when the mode matches the module norm (ball vertices for ``l1``,
    weighted row sums for ``linf``) and sampled otherwise.
    """
    if side not in ("left", "right") or mode not in ("l1", "linf"):
        raise ValueError("side is 'left' or 'right'; mode is 'l1' or 'linf'")
    rng = np.random.default_rng(seed)
    ind = M.left_ind if side == "left" else M.right_ind
    N = len(ind)
    exhaustive = N <= 6
    fams = indicator_decompositions(N) if exhaustive else soft_decompositions(N, soft, rng)
    for fam in fams:
        for p in fam:
            if np.min(p) < -TOL or np.max(p) > 1 + TOL:
                raise ValueError("decomposition pieces must lie in [0, 1]")
        if np.max(np.sum(fam, axis=0)) > 1 + TOL:
            raise ValueError("decomposition must sum to at most 1")
    norm, w = M.norm, M.norm.weights
    exact = (mode == "l1") == (norm.kind == "l1")
    V = norm.ball_vertices(limit=256, rng=rng)
    R = rng.normal(size=(vectors, M.dim))
    R /= np.array([norm(r) for r in R])[:, None]
    V = np.concatenate([V, R])

    def nrm(X):  # row-wise module norm
        a = w[None, :] * np.abs(X)
        return a.sum(axis=1) if norm.kind == "l1" else a.max(axis=1)

    worst = 0.0
    for fam in fams:
        mats = np.tensordot(np.array(fam), ind, axes=1)
        top = float(np.max(np.sum(fam, axis=0)))
        if mode == "l1":
            lhs = sum(nrm(V @ A.T) for A in mats)
            worst = max(worst, float(np.max(lhs - top * nrm(V))))
        elif exact:
            # sup over unit v_k of ||sum_k A_k v_k||_inf is the largest weighted row sum
            worst = max(worst, float(np.max(sum(_weighted_abs(A, w).sum(axis=1) for A in mats))) - top)
        else:
            k = len(mats)
            idx = rng.integers(0, len(V), size=(vectors * 8, k))
            out = sum(V[idx[:, j]] @ mats[j].T for j in range(k))
            worst = max(worst, float(np.max(nrm(out))) - top)
    # violations at round-off level count as holding
    worst = worst if worst > ROUNDOFF else 0.0
    return GeometricReport(worst, side, mode, len(fams), len(V), seed, exhaustive and exact)


# ---------------------------------------------------------------------------
# module constructors


def product_bimodule(space, blocks=1, rng=None, weight=1.0):
    """``l1`` bimodule on ``X x X x [blocks]`` for a finite space ``X``.

    The left action moves the first coordinate, the right action moves the
    second by the inverse, and functions act by evaluation at the respective
    coordinate.  With ``rng`` the blocks carry a random signed permutation on
    each right-generator (still isometric).
    """
    if not isinstance(space, FinitePoints):
        raise ValueError("product bimodule needs a finite space")
    rng = None if rng is None else np.random.default_rng(rng)
    G = space.group
    N = space.size(0)
    d = N * N * blocks

    def idx(x, y, b):
        return (x * N + y) * blocks + b

    def perm_matrix(f):
        P = np.zeros((d, d))
        for x in range(N):
            for y in range(N):
                for b in range(blocks):
                    tx, ty, tb, sign = f(x, y, b)
                    P[idx(tx, ty, tb), idx(x, y, b)] = sign
        return P

    left_gen, right_gen = [], []
    for g in G.generators:
        pg = space.perm(g)
        pgi = space.perm(g.inverse())
        left_gen.append(perm_matrix(lambda x, y, b: (pg[x], y, b, 1.0)))
        if rng is not None and G.kind not in (FINITE, ABELIAN):
            sigma = rng.permutation(blocks)
            signs = rng.choice([-1.0, 1.0], size=blocks)
        else:
            sigma, signs = np.arange(blocks), np.ones(blocks)
        right_gen.append(perm_matrix(lambda x, y, b: (x, pgi[y], sigma[b], signs[b])))
    left_ind = np.zeros((N, d, d))
    right_ind = np.zeros((N, d, d))
    for x in range(N):
        for y in range(N):
            for b in range(blocks):
                i = idx(x, y, b)
                left_ind[x, i, i] = 1.0
                right_ind[y, i, i] = 1.0
    return BimoduleSpec(space, np.array(left_gen), np.array(right_gen), left_ind, right_ind,
                        WeightedNorm.l1(d, np.full(d, weight)))


def boundary_z_bimodule(period=3):
    """``l1`` bimodule over the two-ended boundary of the rank-one free group.

    Basis ``Z/period x {+, -}``; the generator shifts ``Z/period`` on the left
    and acts trivially on the right; a function acts on both sides through its
    value at the end matching the sign.
    """
    from .groups import BoundaryCylinders, GroupDescriptor
    sp = BoundaryCylinders(GroupDescriptor.free(1))
    d = 2 * period
    shift = np.roll(np.eye(period), 1, axis=0)
    L = np.kron(np.eye(2), shift)
    R = np.eye(d)
    ind = np.zeros((2, d, d))
    ind[0, :period, :period] = np.eye(period)  # cylinder [a]
    ind[1, period:, period:] = np.eye(period)  # cylinder [A]
    return BimoduleSpec(sp, L[None], R[None], ind, ind.copy(), WeightedNorm.l1(d), 1)


def random_inner_derivation(M, rng=None):
    rng = np.random.default_rng(rng)
    return ad(rng.normal(size=M.dim), M)


def pairing_defect(M, rng=None, samples=16):
    """``max |<a.phi.b, v> - <phi, b.v.a>|`` over random monomials and vectors."""
    rng = np.random.default_rng(rng)
    Md = M.dual()
    worst = 0.0
    for _ in range(samples):
        a, b = _random_monomial(M, rng), _random_monomial(M, rng)
        phi, v = rng.normal(size=M.dim), rng.normal(size=M.dim)
        lhs = (Md.right(b) @ (Md.left(a) @ phi)) @ v
        rhs = phi @ (M.right(a) @ (M.left(b) @ v))
        worst = max(worst, abs(lhs - rhs))
    return worst

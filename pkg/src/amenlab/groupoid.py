"""Finite measured transformation groupoids: the two actions of the
convolution algebra on functions of ``(group element, point)``, equivariant
expectations onto functions of the point, and the symmetrize/positivize
transforms.

Functions on ``W x X`` are stored as ``(|W|, |X|)`` arrays over a window
``W`` of group elements (shortlex order).  Only finite spaces appear here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import A0Element, a0_norm
from .derivations import BimoduleSpec, ad, inner_pipeline
from .groups import FINITE, FinitePoints, GroupElement
from .means import WindowOverflow
from .norms import WeightedNorm

TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MeasuredAction:
    """Finite space with a probability measure; zero weights need ``allow_null``."""

    space: FinitePoints
    mu: np.ndarray
    allow_null: bool = False

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.shape != (self.space.size(0),):
            raise ValueError("one weight per point")
        if abs(mu.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        if np.any(mu < 0) or (not self.allow_null and np.any(mu <= 0)):
            raise ValueError("weights must be strictly positive (pass allow_null for degenerate measures)")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def uniform(cls, space):
        n = space.size(0)
        return cls(space, np.full(n, 1.0 / n))


@dataclass(frozen=True)
class QuasiInvarianceReport:
    ok: bool
    violations: tuple  # (generator, point) pairs where exactly one of mu(x), mu(g.x) vanishes


def quasi_invariance_check(ma, gens=None):
    """Null sets of ``mu`` and ``g.mu`` agree for every listed generator."""
    G = ma.space.group
    gens = G.symmetric_generators if gens is None else gens
    null = ma.mu == 0
    bad = []
    for g in gens:
        perm = ma.space.perm(g)
        for x in range(len(null)):
            if null[x] != null[perm[x]]:
                bad.append((str(g), x))
    return QuasiInvarianceReport(not bad, tuple(bad))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A function on ``window x X``, zero outside the window."""

    space: FinitePoints
    window: tuple
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (len(self.window), self.space.size(0)):
            raise ValueError("values must have shape (|window|, |X|)")
        object.__setattr__(self, "window", tuple(self.window))
        object.__setattr__(self, "values", v)

    @classmethod
    def tensor(cls, space, window, xi_x, xi_g=None):
        """``xi_g (x) xi_x`` on the window; ``xi_g`` defaults to the constant 1."""
        xi_g = np.ones(len(window)) if xi_g is None else np.asarray(xi_g)
        return cls(space, window, np.outer(xi_g, np.asarray(xi_x)))

    def at(self, g):
        try:
            return self.values[self.window.index(g)]
        except ValueError:
            return np.zeros(self.space.size(0), dtype=self.values.dtype)

    def on(self, window):
        """Same function on a larger window (error if mass would be dropped)."""
        window = tuple(window)
        index = {g: i for i, g in enumerate(window)}
        out = np.zeros((len(window), self.space.size(0)), dtype=self.values.dtype)
        for g, row in zip(self.window, self.values):
            if g not in index:
                if np.any(row):
                    raise WindowOverflow(f"{g} is outside the target window")
                continue
            out[index[g]] = row
        return GridFunction(self.space, window, out)

    def sup_norm(self):
        return float(np.max(np.abs(self.values), initial=0.0))

    def flat(self):
        return self.values.reshape(-1)


def _sorted(elems):
    return tuple(sorted(set(elems), key=GroupElement.sort_key))


def ast_act(a, xi):
    """``(a * xi)(g, x) = sum_h a(h, x) xi(h^-1 g, h^-1.x)``; the window grows to ``supp(a) W``."""
    sp = xi.space
    window = _sorted(h * k for h in a.support for k in xi.window) or xi.window
    index = {g: i for i, g in enumerate(window)}
    out = np.zeros((len(window), sp.size(0)), dtype=np.result_type(xi.values, *a.coeffs.values(), float))
    for h in a.support:
        ah = a.values(h)
        hinv = sp.perm(h.inverse())
        for k, row in zip(xi.window, xi.values):
            out[index[h * k]] += ah * row[hinv]
    return GridFunction(sp, window, out)


def star_act(a, xi):
    """``(a ⋆ xi)(g, x) = sum_h a(h, x) xi(g, h^-1.x)``; the window is unchanged."""
    sp = xi.space
    out = np.zeros(xi.values.shape, dtype=np.result_type(xi.values, *a.coeffs.values(), float))
    for h in a.support:
        out += a.values(h)[None, :] * xi.values[:, sp.perm(h.inverse())]
    return GridFunction(sp, xi.window, out)


def _operator(fn, space, window, a):
    """Matrix of ``xi -> fn(a, xi)`` on functions over a window closed under the action."""
    n = len(window) * space.size(0)
    M = np.zeros((n, n), dtype=np.result_type(*a.coeffs.values(), float) if a.coeffs else float)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        out = fn(a, GridFunction(space, window, e.reshape(len(window), -1))).on(window)
        M[:, j] = out.flat()
    return M


def ast_matrix(a, window):
    return _operator(ast_act, a.space, window, a)


def star_matrix(a, window):
    return _operator(star_act, a.space, window, a)


# ---------------------------------------------------------------------------
# expectation maps


@dataclass(frozen=True, eq=False)
class ExpectationMap:
    """Linear map from functions on ``window x X`` to functions on ``X``.

    ``matrix`` has shape ``(|X|, |window| |X|)`` acting on row-major flattened
    grid functions; functions supported outside the window map to zero.
    """

    space: FinitePoints
    window: tuple
    matrix: np.ndarray

    def __call__(self, xi):
        xi = xi if tuple(xi.window) == self.window else _restrict(xi, self.window)
        return self.matrix @ xi.flat()

    @property
    def op_norm(self):
        """Norm for the sup norm on both sides."""
        return float(np.max(np.abs(self.matrix).sum(axis=1)))

    @classmethod
    def from_weights(cls, space, window, weights):
        """``P(xi)(x) = sum_g P(g)(x) xi(g, x)`` for weights of shape ``(|window|, |X|)``."""
        weights = np.asarray(weights)
        N = space.size(0)
        M = np.zeros((N, len(window) * N), dtype=weights.dtype)
        for i in range(len(window)):
            M[np.arange(N), i * N + np.arange(N)] = weights[i]
        return cls(space, tuple(window), M)

    def to_doc(self):
        return {"window": [str(g) for g in self.window], "matrix_real": np.real(self.matrix).tolist(),
                "matrix_imag": np.imag(self.matrix).tolist()}


def _restrict(xi, window):
    index = {g: i for i, g in enumerate(window)}
    out = np.zeros((len(window), xi.space.size(0)), dtype=xi.values.dtype)
    for g, row in zip(xi.window, xi.values):
        if g in index:
            out[index[g]] = row
    return GridFunction(xi.space, window, out)


def ev_e(space, window):
    G = space.group
    if G.identity not in window:
        raise ValueError("window must contain the identity")
    w = np.zeros((len(window), space.size(0)))
    w[window.index(G.identity)] = 1.0
    return ExpectationMap.from_weights(space, window, w)


def expectation_from_central(tau0, ma, window, tol=TOL):
    """``P(xi) = ev_e((id - tau0)(xi))`` for an operator ``tau0`` on ``window x X``.

    ``tau0`` must annihilate every ``1 (x) xi_X``.
    """
    sp = ma.space
    window = tuple(window)
    N = sp.size(0)
    n = len(window) * N
    tau0 = np.asarray(tau0)
    if tau0.shape != (n, n):
        raise ValueError(f"operator must be {n} x {n}")
    ones = np.concatenate([GridFunction.tensor(sp, window, np.eye(N)[x]).flat()[:, None] for x in range(N)], axis=1)
    ann = float(np.max(np.abs(tau0 @ ones), initial=0.0))
    if ann > tol:
        raise ValueError(f"operator does not annihilate functions of the point: {ann:.3e}")
    E = ev_e(sp, window).matrix
    return ExpectationMap(sp, window, E @ (np.eye(n) - tau0))


@dataclass(frozen=True)
class EquivarianceReport:
    equivariance: float
    unitality: float
    linearity: float


def equivariance_defect(P, ma, gens=None):
    """``max ||P(delta_g * xi) - P(xi)^g||`` over basis ``xi``, with unitality and linearity defects."""
    sp = ma.space
    G = sp.group
    gens = G.symmetric_generators if gens is None else gens
    W, N = P.window, sp.size(0)
    n = len(W) * N
    eq = 0.0
    for g in gens:
        dg = A0Element.delta(sp, g)
        perm_inv = sp.perm(g.inverse())
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            xi = GridFunction(sp, W, e.reshape(len(W), N))
            lhs = P(ast_act(dg, xi))
            rhs = P(xi)[perm_inv]  # P(xi)^g(x) = P(xi)(g^-1 x)
            eq = max(eq, float(np.max(np.abs(lhs - rhs))))
    unit = lin = 0.0
    for x in range(N):
        ex = np.eye(N)[x]
        unit = max(unit, float(np.max(np.abs(P(GridFunction.tensor(sp, W, ex)) - ex))))
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            xi = GridFunction(sp, W, e.reshape(len(W), N))
            lin = max(lin, float(np.max(np.abs(P(GridFunction(sp, W, xi.values * ex[None, :])) - ex * P(xi)))))
    return EquivarianceReport(eq, unit, lin)


def symmetrize(P):
    """``P'(xi) = (P(xi) + conj(P(conj(xi)))) / 2``, i.e. the real part of the matrix."""
    return ExpectationMap(P.space, P.window, np.real(P.matrix).copy())


# ---------------------------------------------------------------------------
# positivization of finitely supported maps


def weights_residual(space, window, weights, gens=None):
    """Equivariance residual of ``xi -> sum_g P(g) xi(g)``:
    ``max_s max_x sum_k |P(s k)(x) - P(k)(s^-1 x)|``.
    """
    G = space.group
    gens = G.symmetric_generators if gens is None else gens
    index = {g: i for i, g in enumerate(window)}
    weights = np.asarray(weights)
    N = space.size(0)
    worst = 0.0
    for s in gens:
        pinv = space.perm(s.inverse())
        acc = np.zeros(N)
        for k in set(window) | {s.inverse() * g for g in window}:
            a = weights[index[s * k]] if s * k in index else np.zeros(N)
            b = weights[index[k]][pinv] if k in index else np.zeros(N)
            acc += np.abs(a - b)
        worst = max(worst, float(acc.max()))
    return worst


@dataclass(frozen=True)
class PositivizeReport:
    weights: np.ndarray
    eta: np.ndarray
    input_residual: float
    shifted_residual: float
    abs_term: float
    eta_term: float
    output_residual: float

    @property
    def bound(self):
        return self.abs_term + self.eta_term

    @property
    def holds(self):
        return self.output_residual <= self.bound + 1e-12


def positivize(space, window, weights, eps, gens=None):
    """``P~(g) = |P'(g)| / eta`` with ``P' = P + eps delta_e`` and ``eta = sum_g |P'(g)| + eps``.

    The extra ``eps`` keeps ``eta`` strictly positive even when ``P'`` cancels.
    The report carries the two terms of the triangle-inequality estimate:
    ``abs_term = max_x sum_k ||P'(s k)(x)| - |P'(k)(s^-1 x)|| / eta(x)`` and
    ``eta_term = max_x |eta(x) - eta(s^-1 x)| / eta(x)``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    G = space.group
    gens = G.symmetric_generators if gens is None else gens
    window = tuple(window)
    if G.identity not in window:
        raise ValueError("window must contain the identity")
    P = np.array(weights, dtype=float)
    P[window.index(G.identity)] += eps
    A = np.abs(P)
    eta = A.sum(axis=0) + eps
    out = A / eta[None, :]
    index = {g: i for i, g in enumerate(window)}
    N = space.size(0)
    abs_term = eta_term = 0.0
    for s in gens:
        pinv = space.perm(s.inverse())
        acc = np.zeros(N)
        for k in set(window) | {s.inverse() * g for g in window}:
            a = A[index[s * k]] if s * k in index else np.zeros(N)
            b = A[index[k]][pinv] if k in index else np.zeros(N)
            acc += np.abs(a - b)
        abs_term = max(abs_term, float(np.max(acc / eta)))
        eta_term = max(eta_term, float(np.max(np.abs(eta - eta[pinv]) / eta)))
    return PositivizeReport(out, eta, weights_residual(space, window, weights, gens),
                            weights_residual(space, window, P, gens), abs_term, eta_term,
                            weights_residual(space, window, out, gens))


def cyclic_family(n, noise=0.3, seed=0):
    """Signed, nearly equivariant weights for the cyclic group acting on itself.

    ``P(g)(x) = 1/n + noise * c(g, x)`` with ``sum_g c(g, x) = 0``, so ``P`` is
    unital, has negative entries for large enough ``noise``, and its residual
    is proportional to ``noise``.
    """
    from .groups import GroupDescriptor
    G = GroupDescriptor.cyclic(n)
    sp = FinitePoints.regular(G)
    window = tuple(sorted(G.elements(), key=GroupElement.sort_key))
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(n, n))
    c -= c.mean(axis=0, keepdims=True)
    c *= 2.0 / n
    return sp, window, 1.0 / n + noise * c


# ---------------------------------------------------------------------------
# operator bimodule and the expectation pipeline


def operator_bimodule(space):
    """Operators on functions over ``G x X`` for a finite group ``G``.

    Left action: ``a.T = S(a) T`` with ``S`` the star action on the range;
    right action: ``T.a = T A(a)`` with ``A`` the asterisk action on the
    domain.  Operators are flattened row-major, so the matrices are
    ``kron(S(a), I)`` and ``kron(I, A(a)^T)``.  The norm is the entrywise
    maximum (a surrogate for the operator norm, see the decisions notes).
    """
    G = space.group
    if G.kind != FINITE:
        raise ValueError("the operator bimodule needs a finite group")
    window = tuple(sorted(G.elements(), key=GroupElement.sort_key))
    n = len(window) * space.size(0)
    eye = np.eye(n)

    def left(a):
        return np.kron(star_matrix(a, window), eye)

    def right(a):
        return np.kron(eye, ast_matrix(a, window).T)

    gens = [A0Element.delta(space, g) for g in G.generators]
    inds = [A0Element.embed(_ind(space, x)) for x in range(space.size(0))]
    M = BimoduleSpec(space, np.array([left(a) for a in gens]), np.array([right(a) for a in gens]),
                     np.array([left(a) for a in inds]), np.array([right(a) for a in inds]),
                     WeightedNorm.linf(n * n))
    return M, window


def _ind(space, x):
    from .groups import CXFunction
    return CXFunction.indicator(space, x)


@dataclass(frozen=True)
class ExpectationPipeline:
    expectation: ExpectationMap
    tau0: np.ndarray
    pipeline_residual: float
    annihilation: float
    report: EquivarianceReport
    mean_defect: float


def expectation_via_mean(ma, mean):
    """Solve ``ad(id) = ad(tau0)`` on the operator bimodule by averaging, then ``P = ev_e (id - tau0)``."""
    sp = ma.space
    M, window = operator_bimodule(sp)
    n = len(window) * sp.size(0)
    D = ad(np.eye(n).reshape(-1), M)
    res = inner_pipeline(D, mean)
    tau0 = res.tau.reshape(n, n)
    N = sp.size(0)
    ones = np.concatenate([GridFunction.tensor(sp, window, np.eye(N)[x]).flat()[:, None] for x in range(N)], axis=1)
    ann = float(np.max(np.abs(tau0 @ ones)))
    P = expectation_from_central(tau0, ma, window, tol=max(TOL, 10 * ann))
    return ExpectationPipeline(P, tau0, res.residual, ann, equivariance_defect(P, ma), res.inner.mean_defect)


def star_contractivity(a, xi):
    """``(||a * xi||, ||a ⋆ xi||, ||a|| ||xi||)``."""
    bound = a0_norm(a) * xi.sup_norm()
    return ast_act(a, xi).sup_norm(), star_act(a, xi).sup_norm(), bound

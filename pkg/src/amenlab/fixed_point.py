"""Finite-dimensional affine actions compatible with a function-algebra action,
and the orbit-averaging construction of approximate fixed points.

An affine action is ``alpha_g(v) = A_g v + c_g`` with ``c_{gh} = c_g + A_g c_h``.
``beta`` sends a function on the space to a matrix; it must be unital and
satisfy ``A_g beta(p) A_g^-1 = beta(p^g)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .algebra import A0Element, gamma_act, pibar
from .groups import ABELIAN, FINITE, CXFunction, DepthError, translate
from .norms import spectral_norm

MAX_DIM = 64


class InvalidDecomposition(ValueError):
    """Functions do not form a decomposition of the unit into [0, 1]-valued pieces."""


@dataclass(frozen=True)
class SystemCheck:
    cocycle_defect: float
    unital_defect: float
    compatibility_defect: float
    action_defect: float

    def ok(self, tol=1e-10):
        return max(self.cocycle_defect, self.unital_defect, self.compatibility_defect, self.action_defect) <= tol


@dataclass(frozen=True, eq=False)
class AffineSystem:
    """Affine action given on generators plus the matrices ``beta(1_x)``.

    ``lin[i]`` and ``cocycle[i]`` belong to generator ``i+1``; ``beta`` has
    shape ``(N, d, d)`` with one matrix per point or depth-``depth`` cylinder.
    """

    space: object
    lin: tuple
    cocycle: tuple
    beta: np.ndarray
    depth: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        G = self.space.group
        d = self.dim
        if len(self.lin) != G.rank or len(self.cocycle) != G.rank:
            raise ValueError("one linear part and one cocycle value per generator")
        lin = tuple(np.asarray(a, dtype=float) for a in self.lin)
        coc = tuple(np.asarray(c, dtype=float) for c in self.cocycle)
        for a, c in zip(lin, coc):
            if a.shape != (d, d) or c.shape != (d,):
                raise ValueError("linear parts must be d x d and cocycle values length d")
        beta = np.asarray(self.beta, dtype=float)
        if beta.shape != (self.space.size(self.depth), d, d):
            raise ValueError("beta must hold one d x d matrix per basis function")
        object.__setattr__(self, "lin", lin)
        object.__setattr__(self, "cocycle", coc)
        object.__setattr__(self, "beta", beta)

    @property
    def dim(self):
        return np.asarray(self.beta).shape[-1]

    @property
    def group(self):
        return self.space.group

    def _letter(self, s):
        key = ("letter", s)
        out = self._cache.get(key)
        if out is None:
            A, c = self.lin[abs(s) - 1], self.cocycle[abs(s) - 1]
            if s < 0:
                A = np.linalg.inv(A)
                c = -A @ c
            out = (A, c)
            self._cache[key] = out
        return out

    def _affine(self, g):
        out = self._cache.get(g)
        if out is None:
            A = np.eye(self.dim)
            c = np.zeros(self.dim)
            for s in reversed(g.word):
                As, cs = self._letter(s)
                c = cs + As @ c
                A = As @ A
            out = (A, c)
            self._cache[g] = out
        return out

    def linear(self, g):
        return self._affine(g)[0]

    def cocycle_of(self, g):
        return self._affine(g)[1]

    def apply(self, g, v):
        A, c = self._affine(g)
        return A @ v + c

    def beta_of(self, p):
        """``beta(p)`` for a function given at or below the system depth."""
        v = p.at_depth(self.depth).values
        return np.tensordot(v, self.beta, axes=1)

    def kappa(self):
        """``sum_x ||beta(1_x)||_op``, the constant in ``||beta(p)|| <= kappa ||p||``."""
        return float(sum(spectral_norm(b) for b in self.beta))

    def validate(self, samples=64, seed=0):
        G = self.group
        sp = self.space
        d = self.dim
        unital = float(np.max(np.abs(self.beta.sum(axis=0) - np.eye(d))))
        compat = 0.0
        for s in G.symmetric_generators:
            A = self.linear(s)
            Ainv = self.linear(s.inverse())
            for x in range(sp.size(self.depth)):
                e = np.zeros(sp.size(self.depth))
                e[x] = 1.0
                p = CXFunction(sp, e, self.depth)
                try:
                    target = self.beta_of(translate(p, s))
                except DepthError:
                    compat = float("inf")
                    continue
                compat = max(compat, float(np.max(np.abs(A @ self.beta[x] @ Ainv - target))))
        action = 0.0
        cocycle = 0.0
        if G.kind == FINITE:
            # affine maps are built along canonical words; consistency for
            # every (generator, element) pair makes them a genuine action
            for g in G.elements():
                Ag, cg = self._affine(g)
                for s in G.symmetric_generators:
                    As, cs = self._affine(s)
                    Asg, csg = self._affine(s * g)
                    action = max(action, float(np.max(np.abs(As @ Ag - Asg))))
                    cocycle = max(cocycle, float(np.max(np.abs(cs + As @ cg - csg))))
        elif G.kind == ABELIAN:
            for i in range(G.rank):
                for j in range(i + 1, G.rank):
                    a, b = self.lin[i], self.lin[j]
                    action = max(action, float(np.max(np.abs(a @ b - b @ a))))
                    ci, cj = self.cocycle[i], self.cocycle[j]
                    cocycle = max(cocycle, float(np.max(np.abs(ci + a @ cj - cj - b @ ci))))
        rng = np.random.default_rng(seed)
        letters = G.letters
        for _ in range(samples):
            u = G.element(tuple(int(x) for x in rng.choice(letters, size=rng.integers(0, 5))))
            v = G.element(tuple(int(x) for x in rng.choice(letters, size=rng.integers(0, 5))))
            lhs = self.cocycle_of(u * v)
            rhs = self.cocycle_of(u) + self.linear(u) @ self.cocycle_of(v)
            cocycle = max(cocycle, float(np.max(np.abs(lhs - rhs))))
        return SystemCheck(cocycle, unital, compat, action)

    def to_doc(self):
        return {
            "depth": self.depth,
            "linear": {name: a.tolist() for name, a in zip(self.group.names, self.lin)},
            "cocycle": {G: c.tolist() for G, c in zip(self.group.names, self.cocycle)},
            "beta": self.beta.tolist(),
        }

    @classmethod
    def from_doc(cls, space, doc):
        """Load from a document; dimensions above ``MAX_DIM`` are refused."""
        d = len(doc["cocycle"][space.group.names[0]]) if space.group.rank else 0
        if d > MAX_DIM:
            raise ValueError(f"dimension {d} exceeds the document limit {MAX_DIM}")
        names = space.group.names
        return cls(space, tuple(doc["linear"][n] for n in names), tuple(doc["cocycle"][n] for n in names),
                   np.asarray(doc["beta"], dtype=float), int(doc.get("depth", 0)))


def _check_decomposition(ps, tol=1e-10):
    if not ps:
        raise InvalidDecomposition("empty decomposition")
    total = ps[0]
    for p in ps:
        v = p.values
        if np.iscomplexobj(v) and np.max(np.abs(v.imag)) > tol:
            raise InvalidDecomposition("pieces must be real")
        if np.min(np.real(v)) < -tol or np.max(np.real(v)) > 1 + tol:
            raise InvalidDecomposition("pieces must take values in [0, 1]")
    for p in ps[1:]:
        total = total + p
    if np.max(np.abs(total.values - 1.0)) > tol:
        raise InvalidDecomposition("pieces must sum to 1")


def cx_convex_combine(ps, vs, sys):
    """``sum_k beta(p_k) v_k`` for a decomposition ``{p_k}`` of the unit."""
    if len(ps) != len(vs):
        raise ValueError("one vector per piece")
    _check_decomposition(list(ps))
    return sum(sys.beta_of(p) @ np.asarray(v, dtype=float) for p, v in zip(ps, vs))


def _check_mean(f, tol=1e-10):
    s = pibar(f).values
    if np.max(np.abs(s - 1.0)) > tol:
        raise ValueError("pibar(f) must equal the unit function")
    for v in f.coeffs.values():
        if np.iscomplexobj(v) or np.min(v) < -tol or np.max(v) > 1 + tol:
            raise ValueError("coefficients of f must take values in [0, 1]")


def orbit_average(f, sys, c0):
    """``sum_h beta(f(h)) alpha_h(c0)``."""
    _check_mean(f)
    c0 = np.asarray(c0, dtype=float)
    out = np.zeros(sys.dim)
    for h in f.support:
        out = out + sys.beta_of(f[h]) @ sys.apply(h, c0)
    return out


def transport_identity_defect(f, g, sys, c0):
    """``||alpha_g(avg(f)) - avg(g.f)||``; zero for unital compatible systems."""
    lhs = sys.apply(g, orbit_average(f, sys, c0))
    rhs = orbit_average(gamma_act(g, f), sys, c0)
    return float(np.linalg.norm(lhs - rhs))


def fixed_point_residual(v, sys, gens=None):
    """``max_g ||alpha_g(v) - v||`` (Euclidean)."""
    gens = sys.group.generators if gens is None else gens
    v = np.asarray(v, dtype=float)
    return max(float(np.linalg.norm(sys.apply(g, v) - v)) for g in gens)


@dataclass(frozen=True)
class ResidualBound:
    """``residual <= C * defect`` with ``C = kappa * max_h ||alpha_h(c0)||``.

    ``h`` runs over the supports of ``f`` and of its generator translates and
    ``defect = max_g ||g.f - f||``.  The constant comes from this
    implementation's estimate, not from a published bound.
    """

    residual: float
    defect: float
    C: float
    kappa: float
    orbit_radius: float
    max_linear_norm: float

    @property
    def holds(self):
        return self.residual <= self.C * self.defect + 1e-10


def residual_bound(f, sys, c0, gens=None):
    from .algebra import a0_norm
    gens = sys.group.generators if gens is None else gens
    c0 = np.asarray(c0, dtype=float)
    v = orbit_average(f, sys, c0)
    residual = fixed_point_residual(v, sys, gens)
    support = set(f.support)
    dfct = 0.0
    for g in gens:
        gf = gamma_act(g, f)
        support |= set(gf.support)
        dfct = max(dfct, a0_norm(gf - f))
    radius = max(float(np.linalg.norm(sys.apply(h, c0))) for h in support)
    kappa = sys.kappa()
    lin = max(spectral_norm(sys.linear(g)) for g in gens)
    return ResidualBound(residual, dfct, kappa * radius, kappa, radius, lin)


# ---------------------------------------------------------------------------
# membership in hulls generated by points


def in_cx_hull(v, points, sys, tol=1e-9):
    """Whether ``v`` is a combination ``sum_k beta(p_k) c_k`` of the given points.

    Requires ``beta`` to be a family of commuting projections, so that the hull
    splits as a direct sum over basis functions of ordinary convex hulls.
    """
    v = np.asarray(v, dtype=float)
    P = sys.beta
    for Px in P:
        if np.max(np.abs(Px @ Px - Px)) > 1e-10:
            raise ValueError("membership test needs beta(1_x) to be projections")
    C = np.stack([np.asarray(c, dtype=float) for c in points], axis=1)
    k = C.shape[1]
    for Px in P:
        target = Px @ v
        A_eq = np.vstack([Px @ C, np.ones((1, k))])
        b_eq = np.concatenate([target, [1.0]])
        res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if res.status != 0:
            return False
        if np.max(np.abs(A_eq @ res.x - b_eq)) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# generators of valid systems


def permutation_system(space, blocks=1, rng=None, twist=True, cocycle="coboundary", scale=1.0):
    """A compatible system on ``E = R^(X x blocks)``.

    ``beta(1_x)`` projects onto the block of ``x`` and ``A_g`` carries the
    block of ``x`` onto the block of ``g.x``.  With ``twist`` the blocks are
    conjugated by random invertible matrices ``V_x`` (so ``A_g`` is not a
    permutation).  ``cocycle`` is ``"coboundary"`` (``c_g = w - A_g w``),
    ``"free"`` (arbitrary values, allowed for free groups) or ``"zero"``.
    """
    from .groups import FREE
    rng = np.random.default_rng(rng)
    G = space.group
    N = space.size(0)
    d = N * blocks
    if space.is_cylinder:
        raise ValueError("use a finite space")
    V = [np.eye(blocks) + 0.3 * rng.normal(size=(blocks, blocks)) if twist else np.eye(blocks) for _ in range(N)]
    Vinv = [np.linalg.inv(v) for v in V]
    lin = []
    for gen in G.generators:
        perm = space.perm(gen)
        A = np.zeros((d, d))
        for x in range(N):
            y = perm[x]
            A[y * blocks:(y + 1) * blocks, x * blocks:(x + 1) * blocks] = V[y] @ Vinv[x]
        lin.append(A)
    beta = np.zeros((N, d, d))
    for x in range(N):
        beta[x, x * blocks:(x + 1) * blocks, x * blocks:(x + 1) * blocks] = np.eye(blocks)
    if cocycle == "coboundary":
        w = scale * rng.normal(size=d)
        coc = [w - A @ w for A in lin]
    elif cocycle == "free":
        if G.kind != FREE:
            raise ValueError("arbitrary cocycle values need a free group")
        coc = [scale * rng.normal(size=d) for _ in lin]
    else:
        coc = [np.zeros(d) for _ in lin]
    return AffineSystem(space, tuple(lin), tuple(coc), beta, 0)


def boundary_z_system(angles=(0.7, 1.9), w=None, rng=None):
    """Compatible system on the two-ended boundary of the rank-one free group.

    The two boundary points carry complementary 2-dimensional blocks; the
    generator rotates each block and the cocycle is the coboundary of ``w``.
    """
    from .groups import BoundaryCylinders, GroupDescriptor
    rng = np.random.default_rng(rng)
    sp = BoundaryCylinders(GroupDescriptor.free(1))

    def rot(t):
        return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])

    A = np.zeros((4, 4))
    A[:2, :2] = rot(angles[0])
    A[2:, 2:] = rot(angles[1])
    w = rng.normal(size=4) if w is None else np.asarray(w, dtype=float)
    beta = np.zeros((2, 4, 4))
    beta[0, :2, :2] = np.eye(2)  # cylinder [a]
    beta[1, 2:, 2:] = np.eye(2)  # cylinder [A]
    return AffineSystem(sp, (A,), (w - A @ w,), beta, 1)


def random_mean_element(space, window, rng=None, depth=0):
    """Random ``f`` with values in [0, 1], supported in ``window``, with ``pibar(f) = 1``."""
    rng = np.random.default_rng(rng)
    N = space.size(depth)
    k = int(rng.integers(1, len(window) + 1))
    idx = rng.choice(len(window), size=k, replace=False)
    W = rng.random((N, k)) ** 2
    W[:, 0] += 1e-3
    W /= W.sum(axis=1, keepdims=True)
    return A0Element(space, {window[i]: W[:, j] for j, i in enumerate(idx)}, depth)

"""Approximate invariant means: defect evaluation, closed-form witnesses and
LP search for optimal means on a finite window.

The defect of ``m`` at a generator ``g`` is
``sup_x sum_h |m(g.x)(h) - m(x)(g^-1 h)|``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numba
import numpy as np

from .algebra import A0Element
from .groups import (FINITE, FREE, BoundaryCylinders, DepthError, FinitePoints,
                     GroupError, ball, box)
from .simplex import solve_lp, solve_lp_exact


class WindowOverflow(ValueError):
    """A mean's support leaves the window it is supposed to live in."""


class SizeLimitExceeded(ValueError):
    """The requested computation exceeds the configured size limit."""


@dataclass(frozen=True)
class MeanCandidate:
    """A map from points (or depth-d cylinders) to probability vectors on a window."""

    space: object
    window: tuple
    weights: np.ndarray
    depth: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        N = self.space.size(self.depth)
        if w.shape != (N, len(self.window)):
            raise ValueError(f"weights must have shape {(N, len(self.window))}, got {w.shape}")
        if np.min(w) < -1e-12:
            raise ValueError("weights must be nonnegative")
        if np.max(np.abs(w.sum(axis=1) - 1.0)) > 1e-10:
            raise ValueError("each row of weights must sum to 1")
        if len(set(self.window)) != len(self.window):
            raise ValueError("window has repeated elements")
        w = np.clip(w, 0.0, None)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def group(self):
        return self.space.group

    def as_a0(self):
        """The element ``f(h)(x) = m(x)(h)`` of A0."""
        return A0Element(self.space, {h: self.weights[:, j] for j, h in enumerate(self.window)}, self.depth)

    @classmethod
    def from_a0(cls, f):
        keys = f.support
        _, F = f.stacked(keys)
        return cls(f.space, tuple(keys), F.T.copy(), f.depth)

    def at(self, x):
        """Probability vector at a point, as ``{h: weight}``."""
        i = self.space.index_of(x)
        return {h: float(self.weights[i, j]) for j, h in enumerate(self.window) if self.weights[i, j] > 0}

    def radius(self):
        return max((h.length for h in self.window), default=0)


class PrefixMean:
    """Mean on the free-group boundary weighting the prefixes of a boundary point.

    ``profile[j]`` is the weight on the length-j prefix; the boundary prefix
    mean uses ``1/n`` on lengths 1..n.  Values are represented lazily; the
    dense form is built on request for small ``n``.
    """

    def __init__(self, k, n, profile=None):
        if k < 1 or n < 1:
            raise ValueError("rank and depth must be positive")
        self.k = k
        self.n = n
        prof = np.zeros(n + 1) if profile is None else np.asarray(profile, dtype=float)
        if profile is None:
            prof[1:] = 1.0 / n
        if prof.shape != (n + 1,) or np.min(prof) < 0 or abs(prof.sum() - 1.0) > 1e-12:
            raise ValueError("profile must be a probability vector over lengths 0..n")
        self.profile = prof
        from .groups import GroupDescriptor
        self.space = BoundaryCylinders(GroupDescriptor.free(k))
        self.depth = n + 1

    @property
    def group(self):
        return self.space.group

    @property
    def window(self):
        return ball(self.group, self.n)

    def radius(self):
        return self.n

    def as_a0(self):
        """``f(h) = profile[|h|]`` times the indicator of the cylinder of ``h``, at depth ``n``."""
        sp, n = self.space, self.n
        out = {}
        words = sp.words(n)
        for h in self.window:
            j = h.length
            if self.profile[j] == 0:
                continue
            if j == 0:
                v = np.full(sp.size(n), self.profile[0])
            else:
                v = np.where(np.all(words[:, :j] == np.array(h.word), axis=1), self.profile[j], 0.0)
            out[h] = v
        return A0Element(sp, out, n)

    def dense(self, max_entries=2_000_000):
        sp, D = self.space, self.depth
        W = self.window
        if sp.size(D) * len(W) > max_entries:
            raise SizeLimitExceeded("dense prefix mean too large")
        index = {h: j for j, h in enumerate(W)}
        words = sp.words(D)
        weights = np.zeros((sp.size(D), len(W)))
        G = self.group
        for i, w in enumerate(words):
            for j in range(self.n + 1):
                if self.profile[j]:
                    weights[i, index[G.element(tuple(int(s) for s in w[:j]))]] += self.profile[j]
        return MeanCandidate(sp, W, weights, D)


@dataclass(frozen=True)
class DefectReport:
    per_generator: dict
    window_size: int
    window_radius: int
    outside_mass: dict = field(default_factory=dict)
    wall_time: float = 0.0
    method: str = "dense"
    min_per_generator: dict = field(default_factory=dict)

    @property
    def total(self):
        return max(self.per_generator.values(), default=0.0)


def _gens(G, gens):
    if gens is None:
        return G.generators
    out = []
    for g in gens:
        out.append(g if not isinstance(g, (str, tuple, list)) else G.element(g))
    if not out:
        raise ValueError("empty generator list")
    return tuple(out)


def defect(m, gens=None, strict=False):
    """Defect report of a mean candidate for each generator in ``gens``.

    Mass of ``g.m(x)`` that falls outside the window counts fully in the l1
    distance and is reported separately; with ``strict`` it raises.
    """
    t0 = time.perf_counter()
    G = m.group
    gens = _gens(G, gens)
    if isinstance(m, PrefixMean):
        per, mins = {}, {}
        for g in gens:
            if g.length != 1:
                raise ValueError("prefix-mean kernel evaluates single letters")
            hi, lo = prefix_defect_exhaustive(m, g.word[0])
            per[str(g)], mins[str(g)] = hi, lo
        return DefectReport(per, -1, m.n, {}, time.perf_counter() - t0, "exhaustive-kernel", mins)
    W = m.window
    index = {h: j for j, h in enumerate(W)}
    per, outside, mins = {}, {}, {}
    sp = m.space
    for g in gens:
        if sp.is_cylinder:
            D = m.depth
            if D < g.length:
                raise DepthError("mean depth too small for this generator")
            try:
                coarse = m.weights.reshape(sp.size(D - g.length), -1, len(W))
            except ValueError:
                coarse = None
            if coarse is None or not np.all(coarse == coarse[:, :1, :]):
                raise DepthError(f"m(g.x) is not evaluable: weights must be constant on depth-{D - g.length} cylinders")
            m_gx = coarse[:, 0, :][sp.act_index(g, D)]
        else:
            m_gx = m.weights[sp.perm(g)]
        shifted = np.zeros_like(m.weights)
        out = np.zeros(m.weights.shape[0])
        for j, h in enumerate(W):
            k = index.get(g * h)
            if k is None:
                out += m.weights[:, j]
            else:
                shifted[:, k] += m.weights[:, j]
        vals = np.abs(m_gx - shifted).sum(axis=1) + out
        per[str(g)] = float(vals.max())
        mins[str(g)] = float(vals.min())
        outside[str(g)] = float(out.max())
        if strict and outside[str(g)] > 0:
            raise WindowOverflow(f"translate by {g} leaves the window")
    return DefectReport(per, len(W), m.radius(), outside, time.perf_counter() - t0, "dense", mins)


# ---------------------------------------------------------------------------
# exhaustive kernel for prefix means


@numba.njit(cache=True)
def _term(a1c, a1w, a2c, a2w, bc, bw):
    # l1 distance at one word length between at most two A atoms and one B
    # atom; a negative weight marks an absent atom
    if a1w >= 0 and a2w >= 0 and a1c == a2c:
        a1w += a2w
        a2w = -1.0
    total = 0.0
    matched = False
    if a1w >= 0:
        if bw >= 0 and a1c == bc:
            total += abs(a1w - bw)
            matched = True
        else:
            total += a1w
    if a2w >= 0:
        if bw >= 0 and a2c == bc:
            total += abs(a2w - bw)
            matched = True
        else:
            total += a2w
    if bw >= 0 and not matched:
        total += bw
    return total


@numba.njit(cache=True)
def _prefix_kernel(k, n, sp, w, nxt):
    """Max and min over all depth-(n+1) cylinders x of the l1 distance between
    s.m(x) and m(s.x), where s has letter position ``sp``."""
    base = 2 * k + 1
    q = 2 * k - 1
    inv_sp = sp ^ 1  # positions pair a, A / b, B
    ds = sp + 1
    L = n + 1
    x = np.zeros(L + 1, dtype=np.int64)
    choice = np.zeros(L + 1, dtype=np.int64)
    codeS = np.zeros(L + 1, dtype=np.int64)  # code of s x1..xj
    codeT = np.zeros(L + 1, dtype=np.int64)  # code of x2..xj
    partial = np.zeros(L + 2)
    codeS[0] = ds
    best = -1.0
    worst = 1e300
    t = 1
    choice[1] = 0
    while t >= 1:
        limit = 2 * k if t == 1 else q
        if choice[t] >= limit:
            t -= 1
            if t >= 1:
                choice[t] += 1
            continue
        if t == 1:
            pos = choice[1]
        else:
            pos = nxt[x[t - 1], choice[t]]
        x[t] = pos
        codeS[t] = codeS[t - 1] * base + pos + 1
        if t == 1:
            codeT[1] = 0
        else:
            codeT[t] = codeT[t - 1] * base + pos + 1
        cancel = x[1] == inv_sp
        # finalize the word-length t-1 term
        lt = t - 1
        if not cancel:
            if lt == 0:
                term = _term(0, -1.0, 0, -1.0, 0, w[0])
            else:
                term = _term(codeS[lt - 1], w[lt - 1], 0, -1.0, codeS[lt - 1], w[lt])
        else:
            a1c, a1w = codeT[lt + 1], (w[lt + 1] if lt + 1 <= n else -1.0)
            a2c, a2w = 0, -1.0
            if lt == 1:
                a2c, a2w = ds, w[0]
            term = _term(a1c, a1w, a2c, a2w, codeT[lt + 1], w[lt])
        partial[t] = partial[t - 1] + term
        if t == L:
            total = partial[t]
            # word length n+1: only the top A atom of the non-cancelling case
            if not cancel:
                total += w[n]
            if total > best:
                best = total
            if total < worst:
                worst = total
            choice[t] += 1
        else:
            t += 1
            choice[t] = 0
    return best, worst


def prefix_defect_exhaustive(m, letter):
    """Exact defect of a prefix mean at a generator letter, over every depth-(n+1) cylinder."""
    sp = m.space
    base = 2 * m.k + 1
    if (m.n + 2) * np.log2(base) > 62:
        raise SizeLimitExceeded("word codes would overflow 64-bit integers")
    pos = sp._positions(np.array([letter]))[0]
    nxt_pos = sp._positions(sp.next_letters)
    hi, lo = _prefix_kernel(m.k, m.n, int(pos), m.profile, nxt_pos.astype(np.int64))
    return float(hi), float(lo)


# ---------------------------------------------------------------------------
# constructors


def folner_mean(G, n, space=None):
    """Uniform measure on a Folner set, constant in the point.

    Finite groups use the whole group; free-abelian groups (and the rank-one
    free group) use the box ``[0, n)^d``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if G.kind == FREE and G.rank >= 2:
        raise GroupError("free groups of rank >= 2 are not amenable: no Folner sets exist")
    space = FinitePoints.point(G) if space is None else space
    if space.is_cylinder:
        raise GroupError("Folner means are built on finite spaces")
    window = G.elements() if G.kind == FINITE else box(G, n)
    N = space.size(0)
    weights = np.full((N, len(window)), 1.0 / len(window))
    return MeanCandidate(space, tuple(window), weights, 0)


def boundary_prefix_mean(k, n):
    """Uniform weights on the prefixes of lengths 1..n of a boundary point."""
    return PrefixMean(k, n)


# ---------------------------------------------------------------------------
# LP search


@dataclass(frozen=True)
class LPMeanResult:
    mean: MeanCandidate
    optimum: float
    exact_optimum: Fraction | None
    report: DefectReport
    lp_iterations: int
    n_variables: int
    n_constraints: int
    escaped_mass: dict


def _mean_lp(space, window, gens, depth):
    W = tuple(window)
    index = {h: j for j, h in enumerate(W)}
    nW = len(W)
    N = space.size(depth)
    nm = N * nW
    t_var = nm
    b_ub = []
    s_count = 0
    sig_seen = set()
    pending = []  # (list of (var, coef) for abs rows, direct terms) per (g, x)
    for g in gens:
        ginv = g.inverse()
        pre = {h: index.get(ginv * h) for h in W}  # index of g^-1 h in W
        image = [index.get(g * w) for w in W]
        if space.is_cylinder:
            D = depth + g.length
            ys = space.refine_index(depth, D)
            ygs = space.act_index(g, D)
            pairs = sorted(set(zip(ys.tolist(), ygs.tolist())))
        else:
            perm = space.perm(g)
            pairs = [(x, int(perm[x])) for x in range(N)]
        for y, yg in pairs:
            sig = (g, y, yg)
            if sig in sig_seen:
                continue
            sig_seen.add(sig)
            abs_terms, direct = [], []
            for h in W:
                a_var = yg * nW + index[h]
                j = pre[h]
                if j is None:
                    direct.append(a_var)  # h in W but not in gW
                else:
                    abs_terms.append((a_var, y * nW + j))
            for j, k in enumerate(image):
                if k is None:
                    direct.append(y * nW + j)  # g w outside W
            pending.append((abs_terms, direct))
            s_count += len(abs_terms)
    nvar = nm + 1 + s_count
    s_next = nm + 1
    A_ub = []
    for abs_terms, direct in pending:
        total = np.zeros(nvar)
        for a_var, b_var in abs_terms:
            r1 = np.zeros(nvar)
            r1[a_var] += 1.0
            r1[b_var] -= 1.0
            r2 = -r1.copy()
            r1[s_next] = -1.0
            r2[s_next] = -1.0
            A_ub.extend([r1, r2])
            b_ub.extend([0.0, 0.0])
            total[s_next] = 1.0
            s_next += 1
        for v in direct:
            total[v] += 1.0
        total[t_var] = -1.0
        A_ub.append(total)
        b_ub.append(0.0)
    A_eq = np.zeros((N, nvar))
    for y in range(N):
        A_eq[y, y * nW:(y + 1) * nW] = 1.0
    c = np.zeros(nvar)
    c[t_var] = 1.0
    return c, np.array(A_ub), np.array(b_ub), A_eq, np.ones(N), nm


def lp_optimal_mean(space, window, gens=None, depth=0, exact=False, max_variables=20000, rule="bland"):
    """Mean on ``window`` minimising the largest generator defect.

    Every constraint is linear in the weights: terms for ``h`` outside
    ``W`` or ``gW`` are counted directly, so nothing is truncated.  With
    ``exact`` the optimum is re-derived in rational arithmetic from the
    optimal float basis.  ``rule`` selects the pivot rule; ``"dantzig"``
    is much faster on cylinder LPs and equally deterministic.
    """
    G = space.group
    gens = _gens(G, gens)
    if not space.is_cylinder:
        depth = 0
    lower = space.size(depth) * len(window) + 1  # weights and the objective, before slacks
    if lower > max_variables:
        raise SizeLimitExceeded(f"LP has at least {lower} variables, limit {max_variables}")
    c, A_ub, b_ub, A_eq, b_eq, nm = _mean_lp(space, window, gens, depth)
    if len(c) > max_variables:
        raise SizeLimitExceeded(f"LP has {len(c)} variables, limit {max_variables}")
    if exact:
        sol = solve_lp_exact(c, A_ub, b_ub, A_eq, b_eq, rule=rule)
    else:
        sol = solve_lp(c, A_ub, b_ub, A_eq, b_eq, rule=rule)
    if not sol.ok:
        raise RuntimeError(f"LP solve failed: {sol.status}")
    x = np.array([float(v) for v in sol.x])
    N, nW = space.size(depth), len(window)
    weights = np.clip(x[:nm].reshape(N, nW), 0.0, None)
    weights /= weights.sum(axis=1, keepdims=True)
    mean = MeanCandidate(space, tuple(window), weights, depth)
    rep = defect(mean, gens) if not space.is_cylinder else _cyl_defect_from_lp(mean, gens)
    exact_opt = sol.fun if exact else None
    return LPMeanResult(mean, float(sol.fun), exact_opt, rep, sol.iterations, len(c),
                        A_ub.shape[0] + A_eq.shape[0], dict(rep.outside_mass))


def _cyl_defect_from_lp(mean, gens):
    # the LP mean lives at depth d and is evaluated at depth d + |g|
    sp = mean.space
    D = mean.depth + max(g.length for g in gens)
    refined = MeanCandidate(sp, mean.window, mean.weights[sp.refine_index(mean.depth, D)], D)
    return defect(refined, gens)

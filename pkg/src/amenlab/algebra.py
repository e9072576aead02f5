"""The convolution algebra A0 of a group action, on finitely supported elements.

An element is a finitely supported map ``g -> f(g)`` into functions on the
space.  Convolution is ``(f1*f2)(g) = sum_h f1(h) . (f2(h^-1 g))^h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .groups import CXFunction, DepthError, GroupElement

PRUNE = 1e-14


class SpaceMismatch(ValueError):
    """Operands live on different spaces."""


def _freeze(v):
    v = np.array(v, copy=True)
    v.setflags(write=False)
    return v


def _real_if_possible(v):
    if v.dtype.kind == "c" and not np.any(v.imag):
        return v.real.copy()
    return v


class A0Element:
    """Finitely supported element of A0.

    ``coeffs`` maps group elements to value arrays at a common ``depth``.
    Coefficients whose sup norm is below 1e-14 are dropped.
    """

    __slots__ = ("space", "depth", "coeffs")

    def __init__(self, space, coeffs=None, depth=None):
        self.space = space
        items = []
        d = 0 if depth is None else depth
        for g, c in (coeffs or {}).items():
            if isinstance(c, CXFunction):
                if c.space != space:
                    raise SpaceMismatch("coefficient on a different space")
                items.append((g, c))
                if depth is None:
                    d = max(d, c.depth)
            else:
                items.append((g, np.asarray(c)))
        if not space.is_cylinder:
            d = 0
        space.check_depth(d)
        out = {}
        for g, c in items:
            if not isinstance(g, GroupElement) or g.group != space.group:
                raise SpaceMismatch("key is not an element of the acting group")
            if isinstance(c, CXFunction):
                v = c.at_depth(d).values
            else:
                v = c
                if v.ndim == 0:
                    v = np.full(space.size(d), v[()])
                if v.shape != (space.size(d),):
                    raise ValueError(f"coefficient for {g} has shape {v.shape}, expected {(space.size(d),)}")
            if v.dtype.kind not in "fc":
                v = v.astype(float)
            v = _real_if_possible(v)
            if np.max(np.abs(v)) > PRUNE:
                out[g] = _freeze(v)
        self.depth = d
        self.coeffs = out

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, space):
        return cls(space, {})

    @classmethod
    def delta(cls, space, g, c=1.0):
        g = g if isinstance(g, GroupElement) else space.group.element(g)
        return cls(space, {g: np.full(space.size(0), c)})

    @classmethod
    def embed(cls, p):
        """A function on the space, placed at the identity."""
        return cls(p.space, {p.space.group.identity: p})

    @classmethod
    def from_constants(cls, space, weights):
        """Element with constant coefficients ``weights[g]`` (an l1 group-ring element)."""
        return cls(space, {g: np.full(space.size(0), w) for g, w in weights.items()})

    # -- access -------------------------------------------------------

    @property
    def group(self):
        return self.space.group

    @property
    def support(self):
        return tuple(sorted(self.coeffs, key=GroupElement.sort_key))

    def __getitem__(self, g):
        v = self.coeffs.get(g)
        if v is None:
            return CXFunction(self.space, np.zeros(self.space.size(self.depth)), self.depth)
        return CXFunction(self.space, v, self.depth)

    def values(self, g):
        v = self.coeffs.get(g)
        return np.zeros(self.space.size(self.depth)) if v is None else v

    def radius(self):
        return max((g.length for g in self.coeffs), default=0)

    def at_depth(self, depth):
        if depth == self.depth:
            return self
        return A0Element(self.space, {g: self[g].at_depth(depth) for g in self.coeffs}, depth)

    def compact(self):
        """Coarsest depth at which every coefficient is still exact."""
        f = self
        while f.depth > 0:
            try:
                f = f.at_depth(f.depth - 1)
            except DepthError:
                break
        return f

    def __repr__(self):
        body = ", ".join(f"{g}: {np.array2string(self.coeffs[g], precision=4)}" for g in self.support)
        return f"A0Element(depth={self.depth}, {{{body}}})"

    # -- linear structure ---------------------------------------------

    def _check(self, other):
        if not isinstance(other, A0Element):
            raise TypeError("expected an A0Element")
        if other.space != self.space:
            raise SpaceMismatch("elements live on different spaces")

    def _combine(self, other, sign):
        self._check(other)
        d = max(self.depth, other.depth)
        a, b = self.at_depth(d), other.at_depth(d)
        out = dict(a.coeffs)
        for g, v in b.coeffs.items():
            out[g] = out[g] + sign * v if g in out else sign * v
        return A0Element(self.space, out, d)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __neg__(self):
        return A0Element(self.space, {g: -v for g, v in self.coeffs.items()}, self.depth)

    def scale(self, c):
        return A0Element(self.space, {g: c * v for g, v in self.coeffs.items()}, self.depth)

    def __mul__(self, other):
        if isinstance(other, A0Element):
            return convolve(self, other)
        if np.isscalar(other):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return self.scale(other)
        return NotImplemented

    def conj(self):
        return A0Element(self.space, {g: np.conj(v) for g, v in self.coeffs.items()}, self.depth)

    def max_abs_diff(self, other):
        """Largest coefficient difference, compared at a common depth (no pruning)."""
        self._check(other)
        d = max(self.depth, other.depth)
        a, b = self.at_depth(d), other.at_depth(d)
        return max((float(np.max(np.abs(a.values(g) - b.values(g)))) for g in set(a.coeffs) | set(b.coeffs)),
                   default=0.0)

    def allclose(self, other, atol=1e-12):
        return self.max_abs_diff(other) <= atol

    def norm(self):
        return a0_norm(self)

    def stacked(self, keys=None):
        """(keys, array of shape (len(keys), N)) in shortlex key order."""
        keys = self.support if keys is None else keys
        N = self.space.size(self.depth)
        if not keys:
            return keys, np.zeros((0, N))
        return keys, np.stack([self.values(g) for g in keys])


# ---------------------------------------------------------------------------
# core operations


def convolve(f1, f2, depth=None):
    """Twisted convolution ``(f1*f2)(g) = sum_h f1(h) (f2(h^-1 g))^h``."""
    f1._check(f2)
    space = f1.space
    if space.is_cylinder:
        d = max(f1.depth, f2.depth + f1.radius() if f2.depth > 0 else 0)
        if depth is not None:
            d = max(d, depth)
    else:
        d = 0
    keys2, F2 = f2.stacked()
    acc = {}
    if not keys2:
        return A0Element(space, {}, d)
    refine1 = space.refine_index(f1.depth, d) if space.is_cylinder else None
    for h, c1 in f1.coeffs.items():
        c1 = c1[refine1] if refine1 is not None else c1
        idx = space.translation_index(h, f2.depth, d) if space.is_cylinder else space.translation_index(h)
        block = c1[None, :] * F2[:, idx]
        for k, row in zip(keys2, block):
            g = h * k
            if g in acc:
                acc[g] = acc[g] + row
            else:
                acc[g] = row
    out = A0Element(space, acc, d)
    if depth is not None and depth < d:
        out = out.at_depth(depth)
    return out


def a0_norm(f):
    """``sup_x sum_g |f(g, x)|``."""
    if not f.coeffs:
        return 0.0
    return float(np.max(sum(np.abs(v) for v in f.coeffs.values())))


def pibar(f):
    """Pointwise sum of all coefficients."""
    N = f.space.size(f.depth)
    total = np.zeros(N, dtype=complex if any(v.dtype.kind == "c" for v in f.coeffs.values()) else float)
    for v in f.coeffs.values():
        total = total + v
    return CXFunction(f.space, total, f.depth)


@dataclass(frozen=True)
class Classification:
    in_W0: bool
    pi_value: complex | float | None
    in_ker_pibar: bool
    in_Z0_plus: bool


def classify(f, tol=1e-10):
    s = pibar(f).values
    in_w0 = bool(np.max(np.abs(s - s[0])) <= tol)
    pi_val = None
    if in_w0:
        pi_val = complex(s.mean()) if s.dtype.kind == "c" else float(s.mean())
        if isinstance(pi_val, complex) and pi_val.imag == 0:
            pi_val = pi_val.real
    ker = bool(np.max(np.abs(s)) <= tol)
    positive = all(
        (v.dtype.kind != "c" or np.max(np.abs(v.imag)) <= 1e-12) and np.min(np.real(v)) >= -1e-12
        for v in f.coeffs.values()
    )
    return Classification(in_w0, pi_val, ker, bool(in_w0 and positive))


def z0_norm(parts):
    """``sum_k pi(f_k)`` for four parts of a Z0 decomposition ``f = sum_k i^k f_k``.

    The value dominates ``||sum_k i^k f_k||``; equality holds when the parts
    have disjoint supports.
    """
    if len(parts) > 4:
        raise ValueError("a Z0 decomposition has at most four parts")
    total = 0.0
    for k, part in enumerate(parts):
        c = classify(part)
        if not c.in_Z0_plus:
            raise ValueError(f"part {k} is not in the positive cone")
        total += float(np.real(c.pi_value))
    return total


def z0_combine(parts):
    """``sum_k i^k f_k``."""
    out = A0Element.zero(parts[0].space)
    for k, part in enumerate(parts):
        out = out + part.scale(1j ** k)
    return out


def gamma_act(g, f):
    """``(g.f)(h) = (f(g^-1 h))^g``."""
    space = f.space
    if space.is_cylinder and f.depth > 0:
        d = f.depth + g.length
        idx = space.translation_index(g, f.depth, d)
    else:
        d = f.depth
        idx = space.translation_index(g) if not space.is_cylinder else None
    out = {}
    for k, v in f.coeffs.items():
        out[g * k] = v[idx] if idx is not None else v
    return A0Element(space, out, d)


def cx_act(p, f):
    """``(p.f)(h) = p f(h)``."""
    if p.space != f.space:
        raise SpaceMismatch("function and element live on different spaces")
    d = max(p.depth, f.depth)
    pv = p.at_depth(d).values
    g = f.at_depth(d)
    return A0Element(f.space, {h: pv * v for h, v in g.coeffs.items()}, d)


def right_cx_act(f, p):
    """``f.p = f * embed(p)``, i.e. ``(f.p)(h) = f(h) p^h``."""
    return convolve(f, A0Element.embed(p))


# ---------------------------------------------------------------------------
# element-level transforms


def l1_norm(vec):
    return float(sum(abs(c) for c in vec.values()))


def _l1_shift_right(vec, h):
    """``(f * delta_h)(g) = f(g h^-1)`` for an l1 vector keyed by group elements."""
    return {g * h: c for g, c in vec.items()}


def l1_diff(a, b):
    keys = set(a) | set(b)
    return float(sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys))


def _point_index(space, depth, x):
    if space.is_cylinder:
        w = tuple(space.group.parse_word(x)) if not isinstance(x, tuple) else x
        if len(w) < depth:
            raise DepthError(f"base point needs depth >= {depth}")
        return space.index_of(w[:depth]) if depth else 0
    return space.index_of(x)


@dataclass(frozen=True)
class OzawaReport:
    """Right approximate mean ``g -> delta(g,e) - e(g,x)`` and its defects.

    ``bounds[h]`` is ``||(delta_e - e)*delta_h - (delta_e - e)||``, which
    dominates ``defects[h] = ||f*delta_h - f||_1``.  ``literal_bounds[h]`` is
    ``||e*delta_{h^-1} - e||``, kept for comparison; it is not a valid bound in
    general (it vanishes at e = 0 while the defect does not).
    """

    vector: dict
    coordinate_sum: complex | float
    defects: dict
    bounds: dict
    literal_bounds: dict

    @property
    def bound_holds(self):
        return all(self.defects[h] <= self.bounds[h] + 1e-10 for h in self.defects)


def ozawa_mean_from_unit(e, x, hs=None, tol=1e-10):
    cls = classify(e, tol)
    if not cls.in_ker_pibar:
        raise ValueError("e is not in the kernel of pibar")
    space = e.space
    G = space.group
    i = _point_index(space, e.depth, x)
    vec = {G.identity: 1.0}
    for g, v in e.coeffs.items():
        vec[g] = vec.get(g, 0.0) - v[i]
    vec = {g: (c.real if isinstance(c, complex) and c.imag == 0 else c) for g, c in vec.items() if abs(c) > PRUNE}
    hs = G.symmetric_generators if hs is None else hs
    unit_minus = A0Element.delta(space, G.identity) - e
    defects, bounds, literal = {}, {}, {}
    for h in hs:
        defects[h] = l1_diff(_l1_shift_right(vec, h), vec)
        dh = A0Element.delta(space, h)
        bounds[h] = a0_norm(convolve(unit_minus, dh) - unit_minus)
        literal[h] = a0_norm(convolve(e, A0Element.delta(space, h.inverse())) - e)
    csum = sum(vec.values())
    return OzawaReport(vec, csum, defects, bounds, literal)


@dataclass(frozen=True)
class UnitRow:
    generator: GroupElement
    function: CXFunction = field(repr=False)
    lhs: float
    rhs: float


@dataclass(frozen=True)
class UnitReport:
    """``u = delta_e - m`` with rows ``||p(delta_g - delta_e)*m|| <= ||p|| ||g.m - m||``."""

    unit: A0Element
    rows: tuple

    @property
    def holds(self):
        return all(r.lhs <= r.rhs + 1e-10 for r in self.rows)


def unit_from_mean(m, ps=None, gens=None, tol=1e-10):
    cls = classify(m, tol)
    if not cls.in_W0 or abs(cls.pi_value - 1) > tol:
        raise ValueError("m is not in W0 with pi(m) = 1")
    space = m.space
    G = space.group
    unit = A0Element.delta(space, G.identity) - m
    gens = G.symmetric_generators if gens is None else gens
    ps = [CXFunction.constant(space)] if ps is None else ps
    rows = []
    for g in gens:
        diff = gamma_act(g, m) - m
        dn = a0_norm(diff)
        for p in ps:
            pd = A0Element(space, {g: p, G.identity: -p})
            lhs = a0_norm(convolve(pd, m))
            rows.append(UnitRow(g, p, lhs, p.sup_norm() * dn))
    return UnitReport(unit, tuple(rows))


# ---------------------------------------------------------------------------
# approximate diagonals


def _tensor_canonical(pairs, depth):
    """Sum of elementary tensors as ``{(g, h): outer(x_g, y_h)}``."""
    out = {}
    for x, y in pairs:
        xd, yd = x.at_depth(depth), y.at_depth(depth)
        for g, xv in xd.coeffs.items():
            for h, yv in yd.coeffs.items():
                block = np.outer(xv, yv)
                key = (g, h)
                out[key] = out[key] + block if key in out else block
    return out


def _pair_bound(M):
    """Upper bound for the projective norm of ``M`` viewed in C(X) (x) C(X).

    Uses the two column/row expansions and the singular value expansion.
    """
    a = np.abs(M)
    if not a.any():
        return 0.0
    row_exp = float(np.sum(np.max(a, axis=1)))  # sum_i 1_i (x) M[i, :]
    col_exp = float(np.sum(np.max(a, axis=0)))
    u, s, vt = np.linalg.svd(M)
    svd_exp = float(np.sum(s * np.max(np.abs(u), axis=0) * np.max(np.abs(vt), axis=1)))
    return min(row_exp, col_exp, svd_exp)


@dataclass(frozen=True)
class DiagonalDefect:
    commutator_defect: float
    unit_defect: float


def diagonal_defect(d, a):
    """Defects of a finite tensor ``d = sum x_k (x) y_k`` as an approximate diagonal.

    ``commutator_defect`` bounds the projective norm of ``a.d - d.a`` from above
    via termwise norms after canonical regrouping; ``unit_defect`` is
    ``||a * (sum x_k * y_k) - a||``.
    """
    space = a.space
    for x, y in d:
        a._check(x)
        a._check(y)
    left = [(convolve(a, x), y) for x, y in d]
    right = [(x.scale(-1.0), convolve(y, a)) for x, y in d]
    terms = left + right
    depth = max([a.depth] + [t.depth for pair in terms for t in pair])
    canon = _tensor_canonical(terms, depth)
    comm = float(sum(_pair_bound(M) for M in canon.values()))
    prod = A0Element.zero(space)
    for x, y in d:
        prod = prod + convolve(x, y)
    unit = a0_norm(convolve(a, prod) - a)
    return DiagonalDefect(comm, unit)

"""Dense two-phase simplex with deterministic pivot rules.

Works on float arrays or, with ``exact=True``, on arrays of ``Fraction``.
The exact path can be warm-started from the optimal basis of a float solve,
which pins the optimum as a rational number without running every pivot in
rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

PIVOT_TOL = 1e-9  # smallest admissible float pivot
DROP = 1e-13  # float fill below this is treated as exact zero
STALL_LIMIT = 50  # degenerate pivots before the Dantzig rule yields to Bland's
REINVERT_EVERY = 64  # float pivots between tableau rebuilds


@dataclass(frozen=True)
class LPSolution:
    status: str  # optimal | infeasible | unbounded | iteration_limit | numerical_failure
    x: np.ndarray | None
    fun: float | Fraction | None
    iterations: int
    basis: tuple

    @property
    def ok(self):
        return self.status == "optimal"


class _Tableau:
    """Tableau ``T = B^-1 [A | b]`` with reduced-cost row ``z``.

    ``z`` holds ``c - c_B B^-1 A`` and, in its last entry, minus the
    objective value.  Float tableaus are periodically rebuilt from ``A`` to
    stop round-off from accumulating over long degenerate runs.
    """

    def __init__(self, A, b, basis, cost, exact, tol, rule):
        self.A = A
        self.b = b
        self.exact = exact
        self.tol = 0 if exact else tol
        self.rule = rule
        self.basis = list(basis)
        self.cost = cost
        self.iterations = 0
        self.since_rebuild = 0
        self.rebuild()

    def _zero(self):
        return Fraction(0) if self.exact else 0.0

    def rebuild(self):
        m = self.A.shape[0]
        full = np.concatenate([self.A, self.b.reshape(-1, 1)], axis=1)
        if self.exact:
            T = full.copy()
            order = []
            for j in self.basis:
                r = next(i for i in range(m) if i not in order and T[i, j] != 0)
                self._eliminate(T, r, j)
                order.append(r)
            T = T[order]
        else:
            T = np.linalg.solve(self.A[:, self.basis], full)
            T[np.abs(T) < DROP] = 0.0
        self.T = T
        self._reset_z()
        self.since_rebuild = 0

    def _reset_z(self):
        z = np.empty(self.T.shape[1], dtype=self.T.dtype)
        z[:-1] = self.cost
        z[-1] = self._zero()
        for i, j in enumerate(self.basis):
            if self.cost[j] != 0:
                z = z - self.cost[j] * self.T[i]
        if not self.exact:
            z[np.abs(z) < DROP] = 0.0
        self.z = z

    def set_cost(self, cost):
        self.cost = cost
        self._reset_z()

    def _eliminate(self, T, r, j):
        T[r] = T[r] / T[r, j]
        col = T[:, j].copy()
        col[r] = 0
        nz = np.nonzero(col != 0)[0]
        if len(nz):
            T[nz] = T[nz] - np.outer(col[nz], T[r])
            if not self.exact:
                blk = T[nz]
                blk[np.abs(blk) < DROP] = 0.0
                T[nz] = blk

    def pivot(self, r, j):
        self._eliminate(self.T, r, j)
        z = self.z
        if z[j] != 0:
            z[:] = z - z[j] * self.T[r]
            if not self.exact:
                z[np.abs(z) < DROP] = 0.0
        self.basis[r] = j
        self.iterations += 1
        self.since_rebuild += 1
        if not self.exact and self.since_rebuild >= REINVERT_EVERY:
            self.rebuild()

    def run(self, allowed, max_iter):
        tol = self.tol
        allowed = np.asarray(allowed)
        stall = 0
        last_obj = self.z[-1]
        while True:
            if self.iterations >= max_iter:
                return "iteration_limit"
            z, T = self.z, self.T
            neg = allowed[np.nonzero(z[allowed] < -tol)[0]]
            if not len(neg):
                return "optimal"
            if self.rule == "dantzig" and stall < STALL_LIMIT:
                vals = list(z[neg])
                j = int(neg[vals.index(min(vals))])
            else:
                j = int(neg[0])
            col = T[:, j]
            thresh = 0 if self.exact else PIVOT_TOL * max(1.0, float(np.max(np.abs(col))))
            rows = np.nonzero(col > thresh)[0]
            if len(rows) == 0:
                return "unbounded"
            ratios = [T[i, -1] / col[i] for i in rows]
            best = min(ratios)
            if self.exact:
                cand = [i for i, rt in zip(rows, ratios) if rt == best]
            else:
                cand = [i for i, rt in zip(rows, ratios) if rt <= best + tol]
            if self.rule == "dantzig" and not self.exact:
                # largest pivot among ratio ties keeps the float tableau stable
                r = min(cand, key=lambda i: (-abs(col[i]), self.basis[i]))
            else:
                r = min(cand, key=lambda i: self.basis[i])
            self.pivot(r, j)
            if self.z[-1] == last_obj:
                stall += 1
            else:
                stall = 0
                last_obj = self.z[-1]

    def solution(self):
        x = np.empty(self.A.shape[1], dtype=self.T.dtype)
        x[:] = self._zero()
        for i, j in enumerate(self.basis):
            x[j] = self.T[i, -1]
        return x


def _fractions(a):
    out = np.empty(a.shape, dtype=object)
    flat = out.reshape(-1)
    for i, v in enumerate(a.reshape(-1)):
        flat[i] = Fraction(v)
    return out


def _to_standard(c, A_ub, b_ub, A_eq, b_eq, exact):
    n = len(c)
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    m_ub = A_ub.shape[0]
    A = np.zeros((m_ub + A_eq.shape[0], n + m_ub))
    A[:m_ub, :n] = A_ub
    A[m_ub:, :n] = A_eq
    A[np.arange(m_ub), n + np.arange(m_ub)] = 1.0
    b = np.concatenate([b_ub, b_eq])
    cc = np.concatenate([np.asarray(c, dtype=float), np.zeros(m_ub)])
    if exact:
        A, b, cc = _fractions(A), _fractions(b), _fractions(cc)
    return A, b, cc, n, m_ub


def _finish(tab, n, exact, A, b):
    x = tab.solution()
    fun = -tab.z[-1]
    if not exact:
        scale = max(1.0, float(np.max(np.abs(b)))) if len(b) else 1.0
        resid = float(np.max(np.abs(A @ x - b))) if len(b) else 0.0
        if resid > 1e-7 * scale or np.min(x) < -1e-7:
            return LPSolution("numerical_failure", None, None, tab.iterations, tuple(tab.basis))
        x = x.astype(float)
        fun = float(fun)
    return LPSolution("optimal", x[:n], fun, tab.iterations, tuple(tab.basis))


def _independent_rows(A, basis_cols):
    B = np.array(A[:, basis_cols], dtype=float)
    rows = []
    for i in range(B.shape[0]):
        trial = rows + [i]
        if np.linalg.matrix_rank(B[trial]) == len(trial):
            rows = trial
        if len(rows) == len(basis_cols):
            return rows
    return None


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, *, exact=False, tol=1e-9,
             max_iter=200000, warm_basis=None, rule="bland"):
    """Minimise ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``.

    ``rule`` is ``"bland"`` (smallest index) or ``"dantzig"`` (most negative
    reduced cost, falling back to Bland's rule on degenerate stalls); both are
    deterministic.  ``warm_basis`` (standard-form column indices, slacks after
    the original variables) starts phase two directly when it is primal
    feasible.
    """
    A, b, cc, n, m_ub = _to_standard(c, A_ub, b_ub, A_eq, b_eq, exact)
    m, ncol = A.shape
    if warm_basis is not None:
        sol = _solve_from_basis(A, b, cc, n, warm_basis, exact, tol, max_iter, rule)
        if sol is not None:
            return sol
    one = Fraction(1) if exact else 1.0
    zero = Fraction(0) if exact else 0.0
    A1, b1 = A.copy(), b.copy()
    slack_basic = [i < m_ub for i in range(m)]
    for i in range(m):
        if b1[i] < 0:
            A1[i] = -A1[i]
            b1[i] = -b1[i]
            slack_basic[i] = False
    art_rows = [i for i in range(m) if not slack_basic[i]]
    na = len(art_rows)
    art = np.empty((m, na), dtype=A.dtype)
    art[:] = zero
    for k, i in enumerate(art_rows):
        art[i, k] = one
    A1 = np.concatenate([A1, art], axis=1)
    basis = [n + i if slack_basic[i] else ncol + art_rows.index(i) for i in range(m)]
    cost1 = np.empty(ncol + na, dtype=A.dtype)
    cost1[:] = zero
    cost1[ncol:] = one
    tab = _Tableau(A1, b1, basis, cost1, exact, tol, rule)
    if na:
        status = tab.run(list(range(ncol + na)), max_iter)
        if status != "optimal":
            return LPSolution(status, None, None, tab.iterations, tuple(tab.basis))
        scale = max([1.0] + [abs(float(v)) for v in b1])
        if -tab.z[-1] > (0 if exact else 1e-7 * scale):
            return LPSolution("infeasible", None, None, tab.iterations, tuple(tab.basis))
        # drive remaining artificials out of the basis; rows where that is
        # impossible are redundant
        redundant = False
        for i in range(m):
            if tab.basis[i] >= ncol:
                row = tab.T[i, :ncol]
                nz = [j for j in range(ncol) if (row[j] != 0 if exact else abs(row[j]) > PIVOT_TOL)]
                if nz:
                    tab.pivot(i, nz[0])
                else:
                    redundant = True
        basis = [j for j in tab.basis if j < ncol]
        rows = list(range(m))
        if redundant:
            rows = _independent_rows(A1[:, :ncol], basis)
            if rows is None:
                return LPSolution("numerical_failure", None, None, tab.iterations, tuple(tab.basis))
        iters = tab.iterations
        tab = _Tableau(A1[rows][:, :ncol], b1[rows], basis, cc, exact, tol, rule)
        tab.iterations = iters
    else:
        tab.set_cost(cc)
    status = tab.run(list(range(ncol)), max_iter)
    if status != "optimal":
        return LPSolution(status, None, None, tab.iterations, tuple(tab.basis))
    return _finish(tab, n, exact, A, b)


def _solve_from_basis(A, b, cc, n, basis, exact, tol, max_iter, rule):
    if len(basis) != A.shape[0]:
        return None
    try:
        tab = _Tableau(A, b, basis, cc, exact, tol, rule)
    except (StopIteration, np.linalg.LinAlgError):
        return None
    if any(v < (0 if exact else -tol) for v in tab.T[:, -1]):
        return None
    status = tab.run(list(range(A.shape[1])), max_iter)
    if status != "optimal":
        return LPSolution(status, None, None, tab.iterations, tuple(tab.basis))
    return _finish(tab, n, exact, A, b)


def solve_lp_exact(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, tol=1e-9, max_iter=200000, rule="bland"):
    """Float solve, then rational re-pivoting from its basis to certify the optimum."""
    approx = solve_lp(c, A_ub, b_ub, A_eq, b_eq, tol=tol, max_iter=max_iter, rule=rule)
    if not approx.ok:
        return approx
    return solve_lp(c, A_ub, b_ub, A_eq, b_eq, exact=True, warm_basis=list(approx.basis), max_iter=max_iter)

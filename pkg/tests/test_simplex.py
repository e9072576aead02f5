from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from amenlab.simplex import solve_lp, solve_lp_exact


def random_feasible_lp(rng, m=6, n=8):
    A = rng.normal(size=(m, n))
    x0 = rng.random(n)
    b = A @ x0 + rng.random(m)
    c = rng.normal(size=n)
    # bounded: add sum x <= K
    A = np.vstack([A, np.ones(n)])
    b = np.append(b, x0.sum() + 5)
    return c, A, b


@pytest.mark.parametrize("rule", ["bland", "dantzig"])
def test_matches_highs_on_random_lps(rule):
    rng = np.random.default_rng(7)
    for _ in range(30):
        c, A, b = random_feasible_lp(rng)
        ref = linprog(c, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
        sol = solve_lp(c, A, b, rule=rule)
        assert sol.ok
        assert sol.fun == pytest.approx(ref.fun, abs=1e-8)
        assert np.all(A @ sol.x <= b + 1e-8) and np.all(sol.x >= -1e-12)


def test_equality_constraints():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = 7
        Aeq = rng.random((2, n))
        b = Aeq @ rng.random(n)
        c = rng.random(n)
        ref = linprog(c, A_eq=Aeq, b_eq=b, bounds=(0, None), method="highs")
        sol = solve_lp(c, A_eq=Aeq, b_eq=b)
        assert sol.fun == pytest.approx(ref.fun, abs=1e-9)


def test_infeasible_and_unbounded():
    assert solve_lp([1.0], A_eq=[[1.0]], b_eq=[-1.0]).status == "infeasible"
    assert solve_lp([-1.0], A_ub=[[-1.0]], b_ub=[0.0]).status == "unbounded"


def test_exact_rational_optimum():
    # min -x - y  s.t. 3x + y <= 2, x + 3y <= 2  -> x = y = 1/2, optimum -1
    sol = solve_lp_exact([-1, -1], A_ub=[[3, 1], [1, 3]], b_ub=[2, 2])
    assert sol.ok and sol.fun == Fraction(-1)
    # min x s.t. 3x >= 1 -> 1/3 exactly
    sol = solve_lp_exact([1], A_ub=[[-3]], b_ub=[-1])
    assert sol.fun == Fraction(1, 3)


def test_degenerate_lp_terminates_with_both_rules():
    # classic cycling example (Beale)
    c = [-0.75, 150, -0.02, 6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    b = [0, 0, 1]
    for rule in ("bland", "dantzig"):
        sol = solve_lp(c, A, b, rule=rule)
        assert sol.ok and sol.fun == pytest.approx(-0.05)


def test_deterministic_repeat():
    rng = np.random.default_rng(11)
    c, A, b = random_feasible_lp(rng)
    s1, s2 = solve_lp(c, A, b), solve_lp(c, A, b)
    assert s1.basis == s2.basis and np.array_equal(s1.x, s2.x)

from itertools import combinations

import numpy as np
import pytest

from gptsim.errors import InfeasibleError, UnboundedError
from gptsim.simplex import solve_lp, solve_or_raise


def enumerate_vertices(c, a_ub, b_ub, a_eq=None, b_eq=None):
    """Brute-force oracle: evaluate the objective on every basic feasible point."""
    a_eq = np.zeros((0, a_ub.shape[1])) if a_eq is None else np.atleast_2d(a_eq)
    b_eq = np.zeros(0) if b_eq is None else np.atleast_1d(b_eq)
    rows = np.vstack([a_ub, a_eq])
    rhs = np.concatenate([b_ub, b_eq])
    n = rows.shape[1]
    best = None
    for combo in combinations(range(rows.shape[0]), n):
        sub = rows[list(combo)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, rhs[list(combo)])
        if np.all(a_ub @ x <= b_ub + 1e-9) and (
                b_eq.size == 0 or np.max(np.abs(a_eq @ x - b_eq)) <= 1e-9):
            val = float(c @ x)
            if best is None or val > best:
                best = val
    return best


def test_simple_maximization():
    res = solve_lp(c=[1.0, 1.0],
                   a_ub=[[1, 0], [0, 1], [-1, 0], [0, -1]],
                   b_ub=[1, 2, 0, 0], maximize=True)
    assert res.status == "optimal"
    assert res.value == pytest.approx(3.0, abs=1e-9)
    assert np.allclose(res.x, [1, 2], atol=1e-9)


def test_textbook_lp():
    # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0 -> 36 at (2, 6)
    res = solve_lp(c=[3.0, 5.0],
                   a_ub=[[1, 0], [0, 2], [3, 2], [-1, 0], [0, -1]],
                   b_ub=[4, 12, 18, 0, 0], maximize=True)
    assert res.value == pytest.approx(36.0, abs=1e-9)
    assert np.allclose(res.x, [2, 6], atol=1e-9)


def test_equality_constraints():
    # max x + 2y on the segment x + y = 1, 0 <= x, y <= 1 -> 2 at (0, 1)
    res = solve_lp(c=[1.0, 2.0],
                   a_ub=[[-1, 0], [0, -1], [1, 0], [0, 1]],
                   b_ub=[0, 0, 1, 1],
                   a_eq=[[1, 1]], b_eq=[1], maximize=True)
    assert res.value == pytest.approx(2.0, abs=1e-9)
    assert np.allclose(res.x, [0, 1], atol=1e-9)


def test_free_variables_negative_solution():
    # min x s.t. x >= -3 (as -x <= 3) -> -3
    res = solve_lp(c=[1.0], a_ub=[[-1.0]], b_ub=[3.0])
    assert res.value == pytest.approx(-3.0, abs=1e-9)


def test_infeasible_detected():
    res = solve_lp(c=[1.0], a_ub=[[1.0], [-1.0]], b_ub=[1.0, -2.0])
    assert res.status == "infeasible"
    with pytest.raises(InfeasibleError):
        solve_or_raise(c=[1.0], a_ub=[[1.0], [-1.0]], b_ub=[1.0, -2.0])


def test_unbounded_detected():
    res = solve_lp(c=[1.0, 0.0], a_ub=[[0, 1], [0, -1]], b_ub=[1, 0], maximize=True)
    assert res.status == "unbounded"
    with pytest.raises(UnboundedError):
        solve_or_raise(c=[1.0, 0.0], a_ub=[[0, 1], [0, -1]], b_ub=[1, 0],
                       maximize=True)


def test_degenerate_lp_terminates():
    # Many redundant constraints meeting at the optimum.
    a = np.array([[1, 0], [0, 1], [1, 1], [1, 1], [2, 2], [-1, 0], [0, -1]],
                 dtype=float)
    b = np.array([1, 1, 2, 2, 4, 0, 0], dtype=float)
    res = solve_lp(c=[1.0, 1.0], a_ub=a, b_ub=b, maximize=True)
    assert res.value == pytest.approx(2.0, abs=1e-9)


def test_redundant_equalities():
    res = solve_lp(c=[1.0, 1.0],
                   a_ub=[[-1, 0], [0, -1]], b_ub=[0, 0],
                   a_eq=[[1, 1], [2, 2]], b_eq=[1, 2], maximize=True)
    assert res.status == "optimal"
    assert res.value == pytest.approx(1.0, abs=1e-9)


def test_matches_vertex_enumeration_oracle():
    rng = np.random.default_rng(42)
    for _ in range(30):
        n = int(rng.integers(2, 4))
        m = int(rng.integers(n + 1, n + 5))
        a = rng.normal(size=(m, n))
        x0 = rng.normal(size=n)
        b = a @ x0 + rng.uniform(0.1, 1.0, size=m)  # strictly feasible at x0
        # Box the polytope so the LP is bounded.
        a = np.vstack([a, np.eye(n), -np.eye(n)])
        b = np.concatenate([b, np.full(n, 10.0 + np.abs(x0).max()),
                            np.full(n, 10.0 + np.abs(x0).max())])
        c = rng.normal(size=n)
        res = solve_lp(c, a_ub=a, b_ub=b, maximize=True)
        expected = enumerate_vertices(c, a, b)
        assert res.status == "optimal"
        assert res.value == pytest.approx(expected, abs=1e-7)


def test_deterministic_given_same_input():
    a = np.array([[1, 1], [1, -1], [-1, 0], [0, -1]], dtype=float)
    b = np.array([2, 1, 0, 0], dtype=float)
    first = solve_lp(c=[1.0, 0.3], a_ub=a, b_ub=b, maximize=True)
    second = solve_lp(c=[1.0, 0.3], a_ub=a, b_ub=b, maximize=True)
    assert first.iterations == second.iterations
    assert np.array_equal(first.x, second.x)

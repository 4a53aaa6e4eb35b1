import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vosubdiff.fields import SpatialGrid, SymbolSpec
from vosubdiff.mlf import mlf_eval
from vosubdiff.modes import LHParams, OrderFunction
from vosubdiff.oracle import (
    ScalarVOProblem,
    critical_points,
    field_oracle,
    picard_first_interval,
    picard_tail_bound,
    solve_frequencies,
    step_solve,
)
from vosubdiff.voops import QuadratureSpec, l1_weight_matrix


def test_zero_lambda_keeps_initial_value():
    p = ScalarVOProblem(0.0, OrderFunction([1.0], [0.8, 0.5]), LHParams(0.5, 0.25), y0=2.5, t_end=3.0)
    y = step_solve(p)
    assert np.all(y.values == 2.5)


def test_order_one_is_backward_euler():
    errs = []
    for h in (2e-2, 1e-2, 5e-3):
        p = ScalarVOProblem(-1.0, OrderFunction.constant(1.0), t_end=2.0, q=QuadratureSpec(h, 1.0))
        y = step_solve(p)
        errs.append(np.max(np.abs(y.values - np.exp(-y.grid))))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(orders - 1.0) < 0.1)
    assert errs[-1] < 1e-3


def test_constant_order_relaxation_converges():
    errs = []
    for h in (4e-2, 2e-2, 1e-2, 5e-3):
        p = ScalarVOProblem(-1.0, OrderFunction.constant(0.6), t_end=2.0, q=QuadratureSpec(h))
        y = step_solve(p)
        errs.append(np.max(np.abs(y.values - mlf_eval(0.6, -(y.grid**0.6)))))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.diff(errs) < 0)
    assert orders.min() >= 1.0


def test_problem_validation():
    of = OrderFunction.constant(0.5)
    with pytest.raises(ValueError):
        ScalarVOProblem(0.5, of)
    with pytest.raises(ValueError):
        ScalarVOProblem(-1.0, of, t_end=0.0)
    with pytest.raises(ValueError):
        solve_frequencies([-1.0, 2.0], of, LHParams(), 1.0, QuadratureSpec(1e-2))


def test_picard_iterates():
    p = ScalarVOProblem(-1.0, OrderFunction.constant(0.5), y0=1.5, t_end=1.0)
    assert np.all(picard_first_interval(p, 0).values == 1.5)
    far = picard_first_interval(ScalarVOProblem(-1.0, OrderFunction.constant(0.5), t_end=1.0), 80)
    assert far.values[-1] == pytest.approx(0.427583, abs=1e-6)
    assert far.values[-1] == pytest.approx(mlf_eval(0.5, -1.0), abs=1e-13)


@pytest.mark.parametrize("m", [0, 1, 3, 8, 20])
def test_picard_residual_within_tail_bound(m):
    p = ScalarVOProblem(-2.0, OrderFunction([1.5], [0.7, 0.4]), t_end=1.2)
    it = picard_first_interval(p, m)
    exact = mlf_eval(0.7, -2.0 * it.grid**0.7)
    assert np.max(np.abs(it.values - exact)) <= picard_tail_bound(p, m) * (1 + 1e-12) + 1e-15


def test_picard_requires_first_window():
    p = ScalarVOProblem(-1.0, OrderFunction([1.0], [0.7, 0.4]), LHParams(0.5, 0.25), t_end=1.5)
    with pytest.raises(ValueError):
        picard_first_interval(p, 3)


@settings(max_examples=25, deadline=None)
@given(beta=st.floats(0.1, 1.0), lam=st.floats(-50.0, -1e-3))
def test_constant_order_positive_and_nonincreasing(beta, lam):
    p = ScalarVOProblem(lam, OrderFunction.constant(beta), t_end=2.0, q=QuadratureSpec(2e-2))
    y = step_solve(p).values
    assert np.all(y > 0)
    assert np.all(np.diff(y) <= 1e-15)


@pytest.mark.parametrize("lh", [LHParams(), LHParams(0.5, 0.25), LHParams(0.8, -0.3)])
def test_continuity_at_critical_times(lh):
    of = OrderFunction([1.0], [0.8, 0.5])
    jumps = []
    for h in (2e-2, 1e-2, 5e-3):
        mesh, Y = solve_frequencies([-3.0], of, lh, 2.5, QuadratureSpec(h))
        y = Y[:, 0]
        worst = 0.0
        for tc in critical_points(of, lh):
            if tc < 2.5:
                i = np.searchsorted(mesh, tc)
                assert mesh[i] == tc
                worst = max(worst, abs(y[i + 1] - y[i - 1]))
        jumps.append(worst)
    assert jumps[2] < jumps[1] < jumps[0]


def test_early_window_equals_initial_order_relaxation():
    of, lh = OrderFunction([1.0], [0.8, 0.5]), LHParams(0.5, 0.25)
    t_star = 4.0 / 3.0
    errs = []
    for h in (1e-2, 5e-3):
        mesh, Y = solve_frequencies([-2.0], of, lh, 1.3, QuadratureSpec(h))
        errs.append(np.max(np.abs(Y[:, 0] - mlf_eval(0.8, -2.0 * mesh**0.8))))
        assert mesh[-1] < t_star
    assert errs[1] < errs[0] < 5e-3


def test_late_window_satisfies_final_order_equation():
    # past T* the kernel reads beta_N over the whole history, so the constant
    # order L1 operator reproduces lam y at every node
    of, lh = OrderFunction([1.0], [0.8, 0.5]), LHParams(0.5, 0.25)
    lam = -1.5
    mesh, Y = solve_frequencies([lam], of, lh, 4.0, QuadratureSpec(1e-2))
    y = Y[:, 0]
    late = np.nonzero(mesh > 2.0)[0]
    worst = 0.0
    for n in late[::25]:
        w = l1_weight_matrix(mesh[: n + 1], mesh[n : n + 1], 0.5)[0]
        worst = max(worst, abs(w @ np.diff(y[: n + 1]) - lam * y[n]))
    assert worst <= 1e-12


def test_field_oracle_heat_kernel():
    grid = SpatialGrid(1, 512, 20.0)
    f = field_oracle(SymbolSpec.laplacian(1), OrderFunction.constant(1.0), LHParams(), grid, [1.0], QuadratureSpec(1e-3, 1.0))
    gauss = np.exp(-grid.x**2 / 4.0) / math.sqrt(4 * math.pi)
    # backward Euler in time: O(h) against the exact kernel
    assert np.max(np.abs(f.values[0] - gauss)) < 1e-3
    assert f.source == "oracle"


def test_field_oracle_rejects_bad_times():
    grid = SpatialGrid(1, 64, 10.0)
    with pytest.raises(ValueError):
        field_oracle(SymbolSpec.laplacian(1), OrderFunction.constant(0.5), LHParams(), grid, [0.0])

import math

import numpy as np
import pytest

from lucas_uzawa.fields import GridSpec, ValueField
from lucas_uzawa.primitives import ModelParams
from lucas_uzawa.solver import (
    GRID_REFINEMENT, SolveOptions, backup_at, bellman_backup, finite_horizon_oracle,
    homogeneity_residual, solve_reduced, solve_value_iteration,
)

BASE = ModelParams()
GRID = GridSpec.log_spaced(nk=5, nh=5)
FAST = SolveOptions(tol=1e-5, inner_points=15, golden_iterations=12)


@pytest.fixture(scope="module")
def baseline():
    return solve_value_iteration(BASE, GRID, FAST)


def test_options_validation():
    for bad in ({"tol": 0.0}, {"max_iterations": 0}, {"inner_search": "brent"},
                {"inner_points": 2}, {"edge": "wrap"}):
        with pytest.raises(ValueError):
            SolveOptions(**bad)


def test_single_backup_from_zero():
    v = ValueField.zeros(GRID, 0.0)
    vals, kn, hn = backup_at(v, BASE, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    # eat everything: c = k**a h**(1-a) + (1 - delta_k) k
    assert vals[0] == pytest.approx(math.log(1.9), abs=1e-9)
    assert kn[0] == 0.0
    assert vals[1] == -np.inf


def test_bellman_backup_weight():
    new, policy = bellman_backup(ValueField.zeros(GRID, 0.0), BASE, FAST)
    assert new.weight == 1.0
    again, _ = bellman_backup(new, BASE, FAST)
    assert again.weight == pytest.approx(1.8)
    assert policy.k_next.shape == GRID.shape


def test_betacond_refused():
    with pytest.raises(ValueError, match="betacond"):
        solve_value_iteration(BASE.replace(beta=0.9), GRID, FAST)


def test_converges_with_small_residual(baseline):
    r = baseline
    assert r.converged
    assert r.final_sup_change <= FAST.tol
    assert r.max_bellman_residual <= FAST.tol
    assert r.sup_change_monotone
    assert r.value.weight == pytest.approx((1 - 0.8**r.iterations) / 0.2)
    assert not r.nonfinite_nodes


def test_value_increasing_in_both_states(baseline):
    V = baseline.value.values
    assert np.all(np.diff(V, axis=0) > 0)
    assert np.all(np.diff(V, axis=1) > 0)


def test_policy_feasible(baseline):
    p = baseline.policy
    assert np.all(p.consumption >= -1e-12)
    assert np.all((p.market_time >= -1e-12) & (p.market_time <= 1 + 1e-12))


def test_iteration_cap_reported():
    r = solve_value_iteration(BASE, GRID, SolveOptions(tol=1e-12, max_iterations=3,
                                                       inner_points=9))
    assert not r.converged and r.iterations == 3
    assert r.final_sup_change > 1e-12


def test_inner_searches_agree(baseline):
    zoom = solve_value_iteration(BASE, GRID, SolveOptions(
        tol=1e-5, inner_points=15, golden_iterations=12, inner_search=GRID_REFINEMENT))
    np.testing.assert_allclose(zoom.value.values, baseline.value.values, atol=5e-3)


def test_deterministic(baseline):
    again = solve_value_iteration(BASE, GRID, FAST)
    assert np.array_equal(again.value.values, baseline.value.values)
    assert again.diagnostics_json() == baseline.diagnostics_json()


def test_transformed_matches_direct_without_externality(baseline):
    hat = solve_value_iteration(BASE, GRID, FAST, transformed=True)
    np.testing.assert_allclose(hat.value.values, baseline.value.values, atol=1e-12)


def test_oracle_one_period_matches_backup():
    oracle = finite_horizon_oracle(BASE, GRID, 0, transition_lattice=60)
    new, _ = bellman_backup(ValueField.zeros(GRID, 0.0), BASE, FAST)
    assert oracle.weight == 1.0
    # refinement can only improve on a lattice
    assert np.all(oracle.values <= new.values + 1e-9)
    np.testing.assert_allclose(oracle.values, new.values, atol=1e-3)


def test_reduced_solve_runs_and_needs_homogeneity():
    nodes = np.geomspace(1 / 16, 16, 17)
    r = solve_reduced(BASE, nodes, FAST)
    assert r.converged
    assert r.ratio_value is not None
    assert r.value(1.0, 1.0) == pytest.approx(r.ratio_value(1.0, 1.0))
    with pytest.raises(ValueError):
        solve_reduced(BASE.replace(gamma=0.35), nodes, FAST)


def test_homogeneity_residual_of_exact_field():
    K, H = GRID.mesh()
    field = ValueField(GRID, np.log(np.sqrt(K * H)) * 5.0, 0.0, 1.0, 5.0)
    assert homogeneity_residual(field) < 1e-12


def test_node_rows_apply_floor(baseline):
    rows = baseline.node_rows()
    assert len(rows) == 25 and len(rows[0]) == 8
    floored = solve_value_iteration(BASE, GRID, SolveOptions(
        tol=1e-5, inner_points=15, golden_iterations=12, value_floor=-1.0))
    assert min(r[2] for r in floored.node_rows()) == -1.0

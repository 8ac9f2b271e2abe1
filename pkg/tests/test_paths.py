import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lucas_uzawa.fields import GridSpec
from lucas_uzawa.paths import (
    DEGROWTH, STATIONARY, SUSTAINED_GROWTH, ForcedPolicy, constant_path_value,
    discounted_sum, growth_diagnostics, lower_tail_bound, path_from_states,
    shifted_lower_bound, simulate, stationary_capital_threshold, stationary_value,
    transversality_diagnostic,
)
from lucas_uzawa.primitives import ModelParams

BASE = ModelParams()
mp.mp.dps = 30
# consumption on the stationary path from (1, 1): maintenance study time 1/2
C0 = mp.mpf("0.5") ** mp.mpf("0.7") - mp.mpf("0.12")


def test_stationary_consumption_and_value():
    value, path = constant_path_value((1.0, 1.0), BASE)
    assert path.c[0] == pytest.approx(float(C0), rel=1e-13)
    assert value == pytest.approx(float(mp.log(C0) / mp.mpf("0.2")), rel=1e-12)
    assert path.tail == STATIONARY and path.feasible
    assert stationary_value(path, BASE) == pytest.approx(value, rel=1e-12)


def test_threshold_and_two_phase_path():
    t = stationary_capital_threshold(1.0, BASE)
    assert t == pytest.approx((1 / 0.12) ** (1 / 0.7) * 0.5, rel=1e-12)
    value, path = constant_path_value((20.0, 1.0), BASE)
    assert np.isfinite(value) and path.feasible
    assert path.k[1] < 20.0 and path.k[1] == path.k[2]
    assert np.all(path.c > 0)


@settings(max_examples=40)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.sampled_from([-2.0, -1.0, 0.0, 0.5]))
def test_constant_path_always_finite(k, h, theta):
    value, path = constant_path_value((k, h), BASE.replace(theta=theta))
    assert np.isfinite(value) and path.feasible


def test_shifted_lower_bound_frozen():
    _, path = constant_path_value((1.0, 1.0), BASE)
    expected = float(2 * (1 - C0 ** mp.mpf("-0.5")) / mp.mpf("0.2"))
    got = shifted_lower_bound(path, BASE, 0.5)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(-4.205173, abs=1e-6)
    assert got <= constant_path_value((1.0, 1.0), BASE)[0]
    with pytest.raises(ValueError):
        shifted_lower_bound(path, BASE.replace(theta=0.5), 0.5)
    with pytest.raises(ValueError):
        shifted_lower_bound(path, BASE, 0.0)


@given(st.floats(1e-3, 2.0))
def test_shifted_bound_increases_to_value(eps):
    value, path = constant_path_value((1.0, 1.0), BASE)
    a = shifted_lower_bound(path, BASE, eps)
    b = shifted_lower_bound(path, BASE, eps / 2)
    assert a <= b <= value + 1e-12


def test_discounted_sum_and_tail_bound():
    _, path = constant_path_value((1.0, 1.0), BASE)
    long = path_from_states([(1.0, 1.0)] * 201, BASE)
    partial, bound = discounted_sum(long, BASE)
    value = float(mp.log(C0) / mp.mpf("0.2"))
    assert partial == pytest.approx(value * (1 - 0.8**200), rel=1e-12)
    assert 0 < bound < 1e-3
    assert lower_tail_bound(long, BASE) == pytest.approx(0.8**200 * float(mp.log(C0)) / 0.2)


def test_forced_study_time_paths():
    cases = [(1.0, "save", SUSTAINED_GROWTH, 1.05),
             (0.5, "hold", STATIONARY, 1.0),
             (0.0, "save", DEGROWTH, 0.95)]
    for v, rule, label, gh in cases:
        path = simulate(ForcedPolicy(BASE, v, rule), (1.0, 1.0), 200, BASE)
        report = growth_diagnostics(path)
        assert report.classification == label, v
        assert report.g_h == pytest.approx(gh, rel=1e-12)
        assert path.projections == 0


def test_forced_policy_validation():
    with pytest.raises(ValueError):
        ForcedPolicy(BASE, 1.5)
    with pytest.raises(ValueError):
        ForcedPolicy(BASE, 0.5, "spend")


def test_simulate_rejects_start_outside_grid():
    class Stub:
        grid = GridSpec.log_spaced()

        def __call__(self, k, h):
            return k, h, False

    with pytest.raises(ValueError, match="outside"):
        simulate(Stub(), (10.0, 1.0), 5, BASE)


def test_transversality_on_decaying_path():
    path = simulate(ForcedPolicy(BASE, 0.5, "hold"), (1.0, 1.0), 100, BASE)
    report = transversality_diagnostic(path, lambda k, h: np.log(k + h) - 3.0, BASE)
    assert report.status == "pass"
    assert report.decay_period is not None and report.decay_period <= 60
    blocked = transversality_diagnostic(path, lambda k, h: np.full_like(k, -np.inf), BASE)
    assert blocked.status == "not-applicable"

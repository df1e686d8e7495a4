import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from spectral_orbit.beauville_frames import MatricialPolynomial
from spectral_orbit.errors import BlowUp, GridMismatch, MalformedInput
from spectral_orbit.nahm_flow import (
    compare_flows, compare_trajectories, flow_point, flow_sample, flow_trace, integrate_nahm,
    lax_rhs, nahm_rhs,
)
from spectral_orbit.selftest import ORDER_WINDOW

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
E = tuple(0.5j * s for s in PAULI)   # [E1, E2] = −E3, cyclic


def _pauli_triple(f):
    return tuple(f * e for e in E)


def _random_skew(rng, k):
    m = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    return 0.5 * (m - m.conj().T)


@pytest.fixture
def baseline_start(c2_spec, c2_table, baseline):
    return flow_sample(c2_spec, c2_table, baseline, 0.0).A.nahm_matrices()


def test_pauli_triple_solves_the_riccati_equation():
    # f' = f², f(0) = ½  →  f(1) = 1
    traj = integrate_nahm(*_pauli_triple(0.5), t_end=1.0, h=1e-3)
    for got, e in zip(traj.T[-1], E):
        assert_allclose(got, e, atol=1e-9)


def test_pauli_triple_blows_up():
    with pytest.raises(BlowUp) as e:
        integrate_nahm(*_pauli_triple(1.0), t_end=2.0, h=1e-3)
    assert 0.9 < e.value.indices[0] <= 2.0


def test_metric_lax_form_matches_nahm():
    rng = np.random.default_rng(5)
    ts = [_random_skew(rng, 3) for _ in range(3)]
    lax = lax_rhs(MatricialPolynomial.from_nahm(*ts), "metric")
    direct = MatricialPolynomial.from_nahm(*nahm_rhs(*ts))
    for name in ("A0", "A1", "A2"):
        assert_allclose(getattr(lax, name), getattr(direct, name), atol=1e-12)


def test_unknown_connection_is_rejected(c2_spec, c2_table, baseline):
    a = flow_sample(c2_spec, c2_table, baseline, 0.0).A
    assert lax_rhs(a, "evaluation").A0.shape == (2, 2)
    with pytest.raises(MalformedInput):
        lax_rhs(a, "gauge")


def test_integrator_input_checks():
    skew = _pauli_triple(0.5)
    with pytest.raises(MalformedInput):
        integrate_nahm(np.eye(2), skew[1], skew[2], t_end=1.0)
    with pytest.raises(MalformedInput):
        integrate_nahm(*skew, t_end=1.0, h=0.0)
    with pytest.raises(MalformedInput):
        integrate_nahm(*skew, t_end=-1.0)


def test_last_step_lands_on_the_end():
    traj = integrate_nahm(*_pauli_triple(0.1), t_end=0.25, h=0.1)
    assert_allclose(traj.times, [0.0, 0.1, 0.2, 0.25], atol=1e-15)
    assert traj.T.shape == (4, 3, 2, 2)


def test_rk4_keeps_skewness_and_spectrum(baseline_start):
    traj = integrate_nahm(*baseline_start, t_end=1.0, h=1e-3)
    assert traj.skew_drift() < 1e-12
    assert traj.invariant_drift() < 1e-9


def test_rk4_is_fourth_order(baseline_start):
    coarse = integrate_nahm(*baseline_start, t_end=1.0, h=0.04).invariant_drift()
    fine = integrate_nahm(*baseline_start, t_end=1.0, h=0.02).invariant_drift()
    lo, hi = ORDER_WINDOW
    assert lo <= coarse / fine <= hi


def test_baseline_flow_sample(c2_spec, c2_table, baseline):
    sample = flow_sample(c2_spec, c2_table, baseline, 0.0)
    assert_allclose(sample.trace_squares(), [-4.0, -4.0, -4.5], rtol=1e-10)
    assert_allclose(sample.theta, -0.5)
    assert_allclose(sample.dlog, 2.0)
    assert sample.point.equivalent(baseline)


def test_flow_point_composes(k3_table, k3_point):
    once = flow_point(k3_table, flow_point(k3_table, k3_point, 0.3), 0.4)
    assert once.equivalent(flow_point(k3_table, k3_point, 0.7))


def test_ode_follows_the_algebraic_flow(c2_spec, c2_table, baseline, baseline_start):
    traj = integrate_nahm(*baseline_start, t_end=1.0, h=1e-3)
    samples = flow_trace(c2_spec, c2_table, baseline, np.linspace(0.0, 1.0, 6))
    comparison = compare_flows(traj, samples)
    assert comparison.max_delta < 1e-6
    assert len(comparison.as_dict()["rows"]) == 6


def test_ode_follows_the_algebraic_flow_for_three_components(k3_table, k3_point):
    spec = k3_table.spec
    start = flow_sample(spec, k3_table, k3_point, 0.0).A.nahm_matrices()
    traj = integrate_nahm(*start, t_end=0.5, h=1e-3)
    samples = flow_trace(spec, k3_table, k3_point, [0.0, 0.25, 0.5])
    assert compare_flows(traj, samples).max_delta < 1e-5


def test_threaded_flow_keeps_grid_order(monkeypatch, k3_table, k3_point):
    monkeypatch.setenv("SPECTRAL_ORBIT_THREADS", "3")
    spec = k3_table.spec
    grid = [0.6, 0.0, 0.3, 0.9]
    serial = flow_trace(spec, k3_table, k3_point, grid, max_workers=1)
    threaded = flow_trace(spec, k3_table, k3_point, grid, max_workers=3)
    assert [s.t for s in threaded] == grid
    for a, b in zip(serial, threaded):
        assert_allclose(a.trace_squares(), b.trace_squares(), rtol=1e-12)


def test_samples_off_the_grid_are_rejected(c2_spec, c2_table, baseline, baseline_start):
    traj = integrate_nahm(*baseline_start, t_end=0.5, h=0.1)
    samples = flow_trace(c2_spec, c2_table, baseline, [0.123])
    with pytest.raises(GridMismatch):
        compare_flows(traj, samples)


def test_trajectory_agrees_with_itself(baseline_start):
    traj = integrate_nahm(*baseline_start, t_end=0.5, h=0.01)
    assert compare_trajectories(traj, traj).max_delta == 0.0


def test_three_component_trajectory_agrees_with_itself(k3_table, k3_point):
    start = flow_sample(k3_table.spec, k3_table, k3_point, 0.0).A.nahm_matrices()
    traj = integrate_nahm(*start, t_end=0.2, h=0.05)
    comparison = compare_trajectories(traj, traj)
    assert comparison.max_delta == 0.0
    assert set(comparison.trace_deltas) == {0.0}


def test_commuting_diagonal_triple_is_a_fixed_point():
    ts = tuple(np.diag(1j * np.array(v)) for v in ([0.3, -0.1], [1.0, 0.5], [-0.2, 0.7]))
    for m in nahm_rhs(*ts):
        assert_array_equal(m, np.zeros((2, 2)))
    traj = integrate_nahm(*ts, t_end=1.0, h=0.1)
    assert len(traj.times) == 11
    for state in traj.T:
        assert_allclose(state, np.stack(ts), atol=1e-15)
    assert traj.invariant_drift() == 0.0


def _late_spectrum(spec, table, pt, t=10.0):
    a0 = flow_sample(spec, table, pt, t).A.evaluate(0.0)
    return np.sort_complex(np.linalg.eigvals(a0)), np.sort_complex(spec.z)


def test_late_spectrum_at_zero_is_the_markers(c2_spec, c2_table, baseline):
    got, expected = _late_spectrum(c2_spec, c2_table, baseline)
    assert_allclose(got, expected, atol=1e-5)


def test_late_spectrum_at_zero_for_three_components(k3_massless_table, k3_massless_point):
    got, expected = _late_spectrum(k3_massless_table.spec, k3_massless_table, k3_massless_point)
    assert_allclose(got, expected, atol=1e-5)

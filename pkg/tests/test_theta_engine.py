import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from spectral_orbit.curve_core import CurveSpec, ordered_pairs, validate_curve
from spectral_orbit.errors import MalformedInput, NearTheta, NotReal, SizeLimit
from spectral_orbit.sampling import make_rng, random_curve, random_gluing, random_real_point
from spectral_orbit.theta_engine import (
    Gluing, JacobianPoint, build_xi, component_blocks, enumerate_regular_subsets, is_regular,
    regular_subsets_bruteforce, theta_det, theta_expansion, theta_flow_derivatives, theta_flow_logderiv,
    theta_pq, theta_pq_from_ratios,
)

C2_TABLE = validate_curve(CurveSpec(((0.0, -0.5), (0.0, 0.5))))
nonzero = st.complex_numbers(min_magnitude=0.1, max_magnitude=10.0, allow_nan=False, allow_infinity=False)


@settings(deadline=None, max_examples=100)
@given(l01=nonzero, l10=nonzero, m01=nonzero, m10=nonzero)
def test_k2_determinant_formula(l01, l10, m01, m10):
    g = Gluing(lam=[[1, l01], [l10, 1]], mu=[[1, m01], [m10, 1]])
    expected = l01 * l10 - m01 * m10
    scale = abs(l01 * l10) + abs(m01 * m10)
    assert abs(theta_det(C2_TABLE, g) - expected) <= 1e-12 * scale


def test_xi_is_square_of_size_k_times_k_minus_one(k3_table):
    g = random_gluing(make_rng(1), 3)
    assert build_xi(k3_table, g).shape == (6, 6)


@pytest.mark.parametrize("k,count", [(2, 2), (3, 10)])
def test_regular_subset_counts(k, count):
    assert len(enumerate_regular_subsets(k)) == count


@pytest.mark.parametrize("k", [2, 3, 4])
def test_enumeration_matches_bruteforce(k):
    fast = enumerate_regular_subsets(k)
    assert fast == regular_subsets_bruteforce(k)
    assert all(is_regular(s, k) for s in fast)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_regular_subsets_are_closed_under_complement(k):
    pairs = set(ordered_pairs(k))
    subsets = set(enumerate_regular_subsets(k))
    assert () in subsets and tuple(sorted(pairs)) in subsets
    for s in subsets:
        assert tuple(sorted(pairs - set(s))) in subsets
        assert all(len(block) == k - 1 for block in component_blocks(s, k))


def test_enumeration_limits():
    with pytest.raises(SizeLimit):
        enumerate_regular_subsets(6)
    with pytest.raises(MalformedInput):
        enumerate_regular_subsets(1)


def test_k2_expansion_coefficients(c2_table):
    terms = dict(theta_expansion(c2_table).terms)
    assert_allclose(terms[()], -1.0)
    assert_allclose(terms[((0, 1), (1, 0))], 1.0)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_expansion_matches_determinant(k):
    rng = make_rng(20 + k)
    table = random_curve(rng, k)
    expansion = theta_expansion(table)
    for _ in range(50):
        g = random_gluing(rng, k)
        assert abs(expansion.evaluate(g) - theta_det(table, g)) <= 1e-10 * expansion.magnitude(g)


def test_swapped_expansion_exchanges_slots(k3_table):
    rng = make_rng(4)
    expansion = theta_expansion(k3_table)
    for _ in range(5):
        g = random_gluing(rng, 3)
        assert_allclose(expansion.swapped().evaluate(g), expansion.evaluate(Gluing(lam=g.mu, mu=g.lam)), rtol=1e-10)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_theta_at_the_origin_is_the_empty_term(k):
    table = random_curve(make_rng(40 + k), k)
    a_empty = dict(theta_expansion(table).terms)[()]
    origin = theta_pq_from_ratios(table, np.zeros((k, k)), 1, 0)
    assert abs(a_empty) > 0
    assert_allclose(origin, a_empty * (-1) ** (k * (k - 1)), rtol=1e-8)


@pytest.mark.parametrize("z", [(1.0, 2j, 0.5 - 0.5j), (3.0, -1.0, 0.2j)])
def test_rescaling_action_keeps_theta(k3_table, z):
    g = random_gluing(make_rng(6), 3)
    acted = g.acted(z)
    expansion = theta_expansion(k3_table)
    assert abs(theta_det(k3_table, acted) - theta_det(k3_table, g)) <= 1e-9 * expansion.magnitude(g)
    assert_allclose(expansion.magnitude(acted), expansion.magnitude(g), rtol=1e-12)
    assert JacobianPoint.from_ratios(acted.matching_ratios()).equivalent(JacobianPoint.from_ratios(g.matching_ratios()))


def test_k2_complement_symmetry(c2_table):
    expansion = theta_expansion(c2_table)
    g = random_gluing(make_rng(8), 2)
    assert_allclose(expansion.swapped().evaluate(g), -expansion.evaluate(g), rtol=1e-12)


@settings(deadline=None, max_examples=30)
@given(st.lists(st.complex_numbers(min_magnitude=0.2, max_magnitude=5.0, allow_nan=False, allow_infinity=False),
                min_size=3, max_size=3))
def test_theta_pq_is_invariant_under_rescaling(k3_table, z):
    rho = random_real_point(make_rng(2), 3).ratios
    acted = rho * np.outer(z, 1.0 / np.asarray(z))
    for p, q in [(1, 0), (2, 1), (0, 1)]:
        ref = theta_pq_from_ratios(k3_table, rho, p, q)
        assert_allclose(theta_pq_from_ratios(k3_table, acted, p, q), ref, rtol=1e-8, atol=1e-12)
        assert_allclose(theta_pq(k3_table, JacobianPoint.from_ratios(acted), p, q), ref, rtol=1e-8, atol=1e-12)


def test_canonical_form_collapses_the_orbit():
    rho = random_real_point(make_rng(9), 3).ratios
    z = np.array([2.0, 0.5j, -1.0 + 1.0j])
    a = JacobianPoint.from_ratios(rho)
    b = JacobianPoint.from_ratios(rho * np.outer(z, 1.0 / z))
    assert a.equivalent(b)
    assert_allclose(a.ratios[1:, 0], 1.0)


def test_real_representative_is_hermitian(baseline):
    lam = baseline.real_representative()
    assert_allclose(lam, lam.conj().T, atol=1e-15)
    assert_allclose(lam[0, 1], np.sqrt(0.5))
    assert JacobianPoint.from_ratios(lam).equivalent(baseline)


def test_negative_gamma_is_not_real():
    pt = JacobianPoint.from_ratios([[1.0, -0.5], [1.0, 1.0]])
    assert not pt.is_real()
    with pytest.raises(NotReal):
        pt.real_representative()


def test_baseline_log_derivatives(c2_table, baseline):
    theta, first, second = theta_flow_derivatives(c2_table, baseline, 0.0)
    assert_allclose(theta, -0.5)
    assert_allclose(first, 2.0, rtol=1e-12)
    assert_allclose(second, -8.0, rtol=1e-12)


def test_log_derivatives_match_finite_differences(k3_table, k3_point):
    h = 1e-4
    t = 0.3

    def theta(s):
        return theta_flow_derivatives(k3_table, k3_point, s)[0]

    t0, tp, tm = theta(t), theta(t + h), theta(t - h)
    d1 = (tp - tm) / (2 * h)
    d2 = (tp - 2 * t0 + tm) / h ** 2
    fd1 = d1 / t0
    fd2 = d2 / t0 - fd1 ** 2
    assert_allclose(theta_flow_logderiv(k3_table, k3_point, t, 1), fd1, rtol=1e-6, atol=1e-7)
    assert_allclose(theta_flow_logderiv(k3_table, k3_point, t, 2), fd2, rtol=1e-4, atol=1e-4)


def test_log_derivative_decays_exponentially(k3_table, k3_point):
    ts = np.linspace(2.0, 10.0, 9)
    d = np.array([abs(theta_flow_logderiv(k3_table, k3_point, t, 1)) for t in ts])
    assert np.all(d > 0)
    assert np.polyfit(ts, np.log(d), 1)[0] < 0
    assert d[-1] < 1e-3 * d[0]


def test_trivial_point_lies_on_theta(c2_table):
    with pytest.raises(NearTheta) as e:
        theta_flow_derivatives(c2_table, JacobianPoint.trivial(2), 0.0)
    assert e.value.indices == (0.0,)


def test_logderiv_order_must_be_one_or_two(c2_table, baseline):
    with pytest.raises(MalformedInput):
        theta_flow_logderiv(c2_table, baseline, 0.0, 3)

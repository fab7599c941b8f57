import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ensemble_lab.asymptotic import (
    NormalizedWeights,
    appendix_F_check,
    beta_chain,
    beta_chain_array,
    boundary_scan,
    concavity_check,
    eta_for_rates,
    exponent_gradient,
    exponent_raa,
    exponent_rma,
    growth_rate,
    gvb_growth_rate,
    is_proved,
    max_exponent_at_rho,
    max_exponent_profile,
    puncture_exponent,
    puncture_rho_derivative,
    punctured_weight,
    stationarity_residual,
)
from ensemble_lab.combinatorics import DomainError, log_hypergeometric
from ensemble_lab.enumerators import EnsembleSpec, IoweQuery, expected_iowe

TABLE_I = {3: (0.1323, 0.1225), 4: (0.1911, 0.1742), 5: (0.2286, 0.2075), 6: (0.2549, 0.2309)}
TABLE_II = {2: 0.1034, 3: 0.1731, 4: 0.2143, 5: 0.2428, 6: 0.2643}


def random_region_point(rng, M):
    """Uniform-ish interior point: each weight drawn between its chain limits."""
    g = [rng.uniform(0.01, 0.99)]
    for _ in range(M):
        prev = g[-1]
        lo, hi = prev / 2, 1 - prev / 2
        g.append(rng.uniform(lo + 0.02 * (hi - lo), hi - 0.02 * (hi - lo)))
    return g


# -- exponents -------------------------------------------------------------


def test_raa_exponent_vanishes_at_origin():
    for rho in (0.05, 0.2, 0.5):
        assert exponent_raa(0.0, 0.0, rho, 3) == pytest.approx(0.0, abs=1e-15)
    assert exponent_rma([0.0, 0.0, 0.0], 4) == 0.0


def test_rma_reduces_to_raa():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        a, b, r = random_region_point(rng, 2)
        q = int(rng.integers(2, 7))
        assert abs(exponent_rma([a, b, r], q) - exponent_raa(a, b, r, q)) <= 1e-12
    val = exponent_raa(0.2, 0.25, 0.2, 3)
    assert math.isfinite(val)
    assert exponent_rma(NormalizedWeights(0.2, (0.25,), 0.2), 3) == pytest.approx(val, abs=1e-12)


def test_exponent_rejects_points_outside_region():
    with pytest.raises(DomainError):
        exponent_raa(0.4, 0.1, 0.2, 3)  # beta < alpha / 2
    with pytest.raises(DomainError):
        exponent_rma([0.5, 0.3, 0.05], 3)  # rho < beta / 2


def test_region_membership():
    assert NormalizedWeights(0.2, (0.25,), 0.2).in_region()
    assert not NormalizedWeights(0.4, (0.1,), 0.2).in_region()
    assert not NormalizedWeights(0.2, (0.25,), 0.2, rho_prime=0.5, eta=0.5).in_region()
    nw = NormalizedWeights.from_vector([0.1, 0.2, 0.3, 0.25])
    assert nw.M == 3 and nw.betas == (0.2, 0.3)


@pytest.mark.parametrize("N", [600, 1200, 2400])
def test_finite_length_exponent_converges(N):
    q, (a, b, r) = 3, (0.2, 0.25, 0.2)
    spec = EnsembleSpec(q, 2, N // q)
    errors = []
    for n in (N // 2, N, 2 * N):
        s = EnsembleSpec(q, 2, n // q)
        w, d1, d = round(a * s.K), round(b * n), round(r * n)
        finite = expected_iowe(s, IoweQuery(w, (d1, d))).log / n
        errors.append(abs(finite - exponent_raa(w / s.K, d1 / n, d / n, q)))
    assert errors[0] > errors[1] > errors[2]
    assert errors[1] <= 3 * math.log(spec.N) / spec.N


def test_puncture_exponent_examples():
    for rho in (0.1, 0.3, 0.45):
        assert puncture_exponent(rho, rho, 1.0) == pytest.approx(0.0, abs=1e-14)
    rho, rho_p, eta = 0.3, 0.2, 2 / 3
    target = puncture_exponent(rho, rho_p, eta)
    errors = []
    for n in (300, 600, 1200, 2400):
        nk, d, dk = round(eta * n), round(rho * n), round(rho_p * eta * n)
        errors.append(abs(log_hypergeometric(n, nk, d, dk).log / n - target))
    assert all(e1 > e2 for e1, e2 in zip(errors, errors[1:]))
    assert errors[-1] < 2 * math.log(2400) / 2400


@settings(max_examples=200)
@given(st.floats(0.01, 0.99), st.floats(0.05, 1.0), st.floats(0.0, 1.0))
def test_puncture_exponent_nonpositive(rho, eta, t):
    # feasible kept weights: max(0, eta - (1 - rho)) <= eta rho' <= min(rho, eta)
    lo, hi = max(0.0, eta - (1 - rho)), min(rho, eta)
    rho_p = (lo + t * (hi - lo)) / eta
    assert puncture_exponent(rho, rho_p, eta) <= 1e-12


def test_puncture_exponent_domain():
    with pytest.raises(DomainError):
        puncture_exponent(0.1, 0.5, 0.5)  # keeps more ones than exist


# -- stationary chain ------------------------------------------------------


def test_chain_endpoints():
    for q in (2, 3, 6):
        assert beta_chain(0.5, q, 2)[0] == 0.5
    # near alpha = 0 the first weight vanishes, later ones do not
    chains = [beta_chain(a, 3, 2) for a in (1e-4, 1e-8, 1e-12, 1e-16)]
    assert chains[-1][0] < 1e-9
    rhos = [c[1] for c in chains]
    assert all(r1 < r2 < 0.5 for r1, r2 in zip(rhos, rhos[1:]))
    assert rhos[-1] > 0.49
    with pytest.raises(DomainError):
        beta_chain(0.6, 3, 2)
    with pytest.raises(DomainError):
        beta_chain(0.0, 3, 2)


def test_chain_minimum_is_rho0():
    alphas = np.geomspace(1e-6, 0.5, 20000)
    rho = beta_chain_array(alphas, 3, 2)[:, -1]
    assert np.nanmin(rho) == pytest.approx(0.1225, abs=5e-4)


@pytest.mark.parametrize("q, M", [(2, 3), (3, 2), (4, 2), (6, 2), (3, 3), (2, 4), (5, 4)])
def test_chain_residuals_vanish(q, M):
    checked = 0
    for a in np.geomspace(1e-4, 0.49, 60):
        chain = beta_chain(float(a), q, M)
        if chain is None:
            continue
        r = stationarity_residual([a, *chain], q)
        assert np.max(np.abs(r)) <= 1e-8
        checked += 1
    assert checked > 20


def test_chain_failure_is_a_signal():
    arr = beta_chain_array(np.array([0.3, 0.49]), 2, 4)
    assert arr.shape == (2, 5)
    assert np.array_equal(arr[:, 0], [0.3, 0.49])
    for a in np.linspace(0.01, 0.5, 50):
        out = beta_chain(float(a), 2, 4)
        assert out is None or all(0 <= b <= 1 for b in out)


@pytest.mark.parametrize("M", [2, 3, 4])
def test_gradient_matches_finite_differences(M):
    rng = np.random.default_rng(M)
    h = 1e-6
    for _ in range(100):
        g = np.array(random_region_point(rng, M))
        q = int(rng.integers(2, 7))
        grad = exponent_gradient(g, q)
        for i in range(len(g)):
            e = np.zeros_like(g)
            e[i] = h
            fd = (exponent_rma(g + e, q) - exponent_rma(g - e, q)) / (2 * h)
            assert grad[i] == pytest.approx(fd, abs=1e-5)


def test_interior_maximum_at_rho_02_is_stationary():
    res = max_exponent_at_rho(0.2, 3, 2)
    assert res.stationary and res.value > 0
    r = stationarity_residual(res.arg_max.vector(), 3)
    assert np.max(np.abs(r)) <= 1e-8


def test_punctured_stationarity():
    eta = eta_for_rates(3, 0.6)
    res = max_exponent_at_rho(0.08, 3, 2, eta)
    nw = res.arg_max
    g = nw.vector()
    assert np.max(np.abs(stationarity_residual(g, 3))) <= 1e-8
    assert abs(puncture_rho_derivative(g, 3, nw.rho_prime, eta)) <= 1e-8
    assert punctured_weight(g[-2], g[-1], eta) == pytest.approx(nw.rho_prime, abs=1e-9)


# -- second-order and boundary certificates --------------------------------


def test_concavity_negative_along_chain():
    for a in np.linspace(0.005, 0.495, 100):
        beta = beta_chain(float(a), 3, 2)[0]
        assert concavity_check(float(a), beta, 3) < 0


def test_concavity_matches_finite_difference():
    h = 1e-4
    for a in (0.05, 0.15, 0.3, 0.45):
        beta = beta_chain(a, 3, 2)[0]
        rho = 0.3
        f = lambda x: exponent_raa(x, beta, rho, 3)  # noqa: E731
        fd = (f(a + h) - 2 * f(a) + f(a - h)) / h**2
        assert concavity_check(a, beta, 3) == pytest.approx(fd, rel=1e-4)


def test_concavity_at_half():
    for a in (0.1, 0.4):
        assert concavity_check(a, 0.5, 4) == pytest.approx(-1 / (4 * a * (1 - a)), rel=1e-12)


@pytest.mark.parametrize("q", [3, 4, 5, 6])
@pytest.mark.parametrize("rho", [0.1, 0.2, 0.3])
def test_boundaries_a_b_negative(q, rho):
    rep = boundary_scan(rho, q)
    assert rep.maxima["a"] < 0
    assert rep.maxima["b"] < 0
    assert (rep.maxima["d"] is None) == (rho <= 0.25)


@pytest.mark.parametrize("q", [3, 4, 5, 6])
def test_boundary_b_turns_positive_near_half(q):
    # high input weight on boundary (b) wins once rho is close to 1/2
    rep = boundary_scan(0.49, q)
    assert rep.maxima["a"] < 0
    assert rep.maxima["b"] > 0
    assert rep.arg_max["b"][0] > 0.8


def test_boundary_b_negative_up_to_growth_rates():
    # negativity is only needed below the zero crossing
    for q, (rho_hat, _) in TABLE_I.items():
        for rho in np.linspace(0.01, rho_hat + 0.03, 25):
            assert boundary_scan(float(rho), q, points=4000).maxima["b"] < 0


@pytest.mark.parametrize("q", [3, 4, 5, 6])
@pytest.mark.parametrize("rho", [0.1, 0.2])
def test_boundary_b_decreasing(q, rho):
    alphas = np.linspace(1e-4, min(1.0, 4 * rho), 2000)
    vals = [exponent_raa(float(a), float(a) / 2, rho, q) for a in alphas]
    assert all(v1 > v2 for v1, v2 in zip(vals, vals[1:]))


def test_boundary_b_not_monotone_at_larger_rho():
    alphas = np.linspace(1e-4, 1.0, 2000)
    vals = np.array([exponent_raa(float(a), float(a) / 2, 0.3, 3) for a in alphas])
    assert np.any(np.diff(vals) > 0)
    assert vals.max() < 0


BOUNDARY_C_CASES = [(q, r) for q in (3, 4, 5, 6) for r in (0.27, 0.32, 0.37, 0.42, 0.47)]


@pytest.mark.parametrize("q, rho", BOUNDARY_C_CASES)
def test_boundary_c_dominated_by_interior(q, rho):
    interior = max_exponent_at_rho(rho, q, 2)
    assert interior.stationary
    rep = boundary_scan(rho, q)
    assert rep.maxima["c"] < interior.value
    assert max(v for v in rep.maxima.values() if v is not None) < interior.value


def test_f_rho_beta_negative():
    for rho in np.linspace(0.01, 0.49, 49):
        betas = np.linspace(2 * rho / 400, 2 * rho, 400)
        vals = [appendix_F_check(float(rho), float(b)) for b in betas]
        assert max(vals) < 0


def test_f_rho_beta_limits():
    assert appendix_F_check(0.3, 1e-12) == pytest.approx(0.0, abs=1e-10)
    # x = 1/2 along the whole rho = 1/2 ridge
    for b in (0.1, 0.4, 0.9):
        assert appendix_F_check(0.5, b) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(DomainError):
        appendix_F_check(0.2, 0.5)


# -- maximisation and growth rates -----------------------------------------


def test_no_stationary_point_below_threshold():
    res = max_exponent_at_rho(0.1, 3, 2)
    assert not res.stationary
    assert res.certified_negative
    assert res.value < 0


def test_max_exponent_signs():
    assert max_exponent_at_rho(0.2, 3, 2).value > 0
    assert abs(max_exponent_at_rho(0.1323, 3, 2).value) <= 1e-4


@pytest.mark.parametrize("rho, q, M", [(0.15, 3, 2), (0.3, 4, 2), (0.12, 2, 3), (0.2, 3, 3), (0.26, 6, 4)])
def test_profile_route_agrees(rho, q, M):
    a = max_exponent_at_rho(rho, q, M)
    b = max_exponent_profile(rho, q, M)
    assert a.value == pytest.approx(b.value, abs=1e-9)
    assert a.arg_max.alpha == pytest.approx(b.arg_max.alpha, rel=1e-4)


def test_profile_route_agrees_punctured():
    eta = eta_for_rates(3, 0.7)
    a = max_exponent_at_rho(0.06, 3, 2, eta)
    b = max_exponent_profile(0.06, 3, 2, eta)
    assert a.value == pytest.approx(b.value, abs=1e-9)


def test_max_exponent_rejects_bad_target():
    with pytest.raises(DomainError):
        max_exponent_at_rho(0.5, 3, 2)


@pytest.mark.parametrize("q", [3, 4, 5, 6])
def test_table_i(q):
    res = growth_rate(q, 2)
    assert res.rho_min_hat == pytest.approx(TABLE_I[q][0], abs=5e-4)
    assert res.rho0 == pytest.approx(TABLE_I[q][1], abs=5e-4)
    assert res.proved


@pytest.mark.parametrize("q", [2, 3, 4, 5, 6])
def test_table_ii(q):
    res = growth_rate(q, 3)
    assert res.rho_min_hat == pytest.approx(TABLE_II[q], abs=5e-4)
    if q >= 3:
        assert res.gvb - res.rho_min_hat <= 1e-3


def test_table_ordering_below_gvb():
    vals = [growth_rate(q, 2) for q in (3, 4, 5, 6)]
    assert all(a.rho_min_hat < b.rho_min_hat for a, b in zip(vals, vals[1:]))
    assert all(v.rho_min_hat < v.gvb for v in vals)


def test_growth_rate_result_invariants():
    tol = 1e-6
    res = growth_rate(3, 2, tol=tol)
    lo, hi = res.bracket
    assert hi - lo <= tol
    at = max_exponent_at_rho(res.rho_min_hat, 3, 2)
    assert abs(at.value) <= tol
    assert abs(exponent_rma(res.arg_max, 3)) <= tol
    assert not max_exponent_at_rho(res.rho_min_hat - 10 * tol, 3, 2).positive
    assert max_exponent_at_rho(res.rho_min_hat + 10 * tol, 3, 2).positive
    assert res.evaluations > 0


def test_m3_q2_at_table_value():
    res = growth_rate(2, 3)
    assert abs(exponent_rma(res.arg_max, 2)) <= 1e-6


def test_unproven_combinations_flagged():
    assert not is_proved(2, 2, False)
    assert not is_proved(3, 1, False)
    assert is_proved(3, 2, False) and is_proved(2, 3, False) and is_proved(3, 2, True)
    assert not growth_rate(2, 2).proved


@pytest.mark.parametrize(
    "rate_p, expected", [(0.4, 0.1242), (0.5, 0.1036), (0.6, 0.0771), (0.7, 0.0522), (0.8, 0.0306), (0.9, 0.0125)]
)
def test_table_iii(rate_p, expected):
    res = growth_rate(3, 2, rate_p)
    assert res.rho_min_hat == pytest.approx(expected, abs=5e-4)
    assert res.rho_min_hat < res.gvb


def test_unit_eta_matches_unpunctured():
    a = growth_rate(3, 2)
    b = growth_rate(3, 2, 1 / 3)
    assert b.eta == pytest.approx(1.0)
    assert b.rho_min_hat == pytest.approx(a.rho_min_hat, abs=1e-6)


@pytest.mark.parametrize(
    "rate, expected",
    [(1 / 2, 0.1100), (1 / 3, 0.1740), (1 / 4, 0.2145), (1 / 5, 0.2430), (1 / 6, 0.2644),
     (0.4, 0.1461), (0.6, 0.0794), (0.7, 0.0532), (0.8, 0.0311), (0.9, 0.0130)],
)
def test_gvb(rate, expected):
    assert gvb_growth_rate(rate) == pytest.approx(expected, abs=5e-5)


def test_gvb_domain():
    with pytest.raises(DomainError):
        gvb_growth_rate(1.0)
    with pytest.raises(DomainError):
        eta_for_rates(3, 0.2)

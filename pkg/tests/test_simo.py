import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onebit.asymptotic import QUANTIZATION_GAIN, theorem1_coefficient
from onebit.channel import (SimoSpec, autocorrelation, ensemble_oofsk, receive_correlation, simo_block_law,
                            uniform_profile)
from onebit.simo import (CoherenceStats, SquareSummabilityError, coherence_stats, gamma_opt, geometric_family,
                         iid_objective, iid_rate, peak_bound, prop1_upper_bound, ratio_sweep)


def spec(N=2, T=1, c=0.5, a=0.5, r=None):
    r = autocorrelation("geometric", a) if r is None else r
    return SimoSpec(N, T, receive_correlation(N, "constant", c), r, uniform_profile(T))


def test_stats_degenerate_cases():
    s = coherence_stats(SimoSpec(3, 1, np.eye(3), autocorrelation("geometric", 0.5), [1.0]))
    assert s.sigma == 0 and s.mu > 0
    s = coherence_stats(spec(r=autocorrelation("delta")))
    assert s.mu == 0 and s.sigma == pytest.approx(0.25)


@pytest.mark.parametrize("c,a", [(0.5, 0.5), (0.9, 0.3), (0.2j, 0.8)])
def test_stats_closed_form(c, a):
    s = coherence_stats(spec(c=c, a=a))
    assert s.sigma == pytest.approx(abs(c) ** 2, rel=1e-12)
    assert s.mu == pytest.approx((2 + 2 * abs(c) ** 2) * a * a / (1 - a * a), rel=1e-9)


def test_mu_n_increases_to_mu():
    sp = spec(a=0.7)
    vals = [coherence_stats(sp, n).mu_n for n in (2, 4, 8, 16, 64, 512)]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] < coherence_stats(sp).mu
    assert vals[-1] == pytest.approx(coherence_stats(sp).mu, rel=1e-2)


def test_finite_autocorrelation_family():
    r = autocorrelation("finite", values=[0.5, 0.25])  # r(1), r(2)
    s = coherence_stats(spec(c=0.0, r=r))
    assert s.mu == pytest.approx(2 * (0.25 + 0.0625))


def test_square_summability_error():
    r = lambda k: 1.0 if k == 0 else abs(k) ** -0.5
    with pytest.raises(SquareSummabilityError):
        coherence_stats(spec(r=r))


def test_peak_bound_branches():
    assert peak_bound(0.7, 0.3, 1.0) == pytest.approx(0.7)
    assert peak_bound(0.0, 0.8, 1.0) == pytest.approx(0.2)  # sigma / 4 at beta = 1
    mu, sigma = 0.1, 1.0
    beta_edge = 2 * sigma / (mu + sigma)
    lo, hi = peak_bound(mu, sigma, beta_edge - 1e-12), peak_bound(mu, sigma, beta_edge + 1e-12)
    assert lo == pytest.approx(hi, rel=1e-9)
    with pytest.raises(ValueError):
        peak_bound(1, 1, 0.5)


def test_gamma_opt_cases():
    assert gamma_opt(CoherenceStats(1.0, 0.0, 1.0), 2.0) == 1.0
    assert gamma_opt(CoherenceStats(0.0, 1.0, 0.0), 1.0) == pytest.approx(0.5)
    assert gamma_opt(CoherenceStats(0.2, 1.0, 0.2), 1.5) == pytest.approx(0.9)


@settings(max_examples=60, deadline=None)
@given(mu=st.floats(0, 3), sigma=st.floats(1e-3, 3), beta=st.floats(1, 5))
def test_bound_is_maximum_and_monotone_in_beta(mu, sigma, beta):
    g = np.linspace(0, 1, 2001)
    brute = np.max(g * beta * mu + g * (beta - g) * sigma)
    u = peak_bound(mu, sigma, beta)
    assert brute <= u + 1e-12 and u - brute <= 1e-6 * max(u, 1)
    assert peak_bound(mu, sigma, beta + 0.5) >= u


def test_iid_objective_closed_form():
    # sigma = 0: linear objective, full power
    value, g = iid_objective(2.0, 0.0, 3.0, 0.5)
    assert (value, g) == (1.0, 1.0)
    # interior maximizer of a g^2 + b g
    value, g = iid_objective(0.0, 1.0, 1.0, 1.0)
    assert g == pytest.approx(0.5) and value == pytest.approx(0.25)


@pytest.mark.parametrize("T", [1, 3])
def test_iid_rate_below_bound(T):
    sp = spec(T=T, a=0.6)
    for n in (T + 1, 8, 64):
        st_n = coherence_stats(sp, n)
        assert iid_rate(sp, st_n, 2.0, 0.3).value <= prop1_upper_bound(st_n, 2.0, 0.3).value + 1e-15


def test_ratio_invariant_to_rho():
    a = ratio_sweep([0.1, 1.0, 10.0], [1, 5], 2.0, rho=1.0)
    b = ratio_sweep([0.1, 1.0, 10.0], [1, 5], 2.0, rho=0.01)
    np.testing.assert_allclose([r.ratio for r in a], [r.ratio for r in b], rtol=1e-12)


def test_geometric_family_hits_target():
    for target in (0.01, 1.0, 100.0):
        s = coherence_stats(geometric_family(target, 1))
        assert s.sigma / s.mu == pytest.approx(target, rel=1e-9)
    assert coherence_stats(geometric_family(np.inf, 2)).mu == 0


def test_ratio_sweep_properties():
    grid = np.logspace(-2, 3, 11)
    rows = ratio_sweep(grid, [1, 5], 2.0)
    t1 = np.array([r.ratio for r in rows if r.T == 1])
    t5 = np.array([r.ratio for r in rows if r.T == 5])
    assert np.all(t1 <= 1 + 1e-12) and np.all(t5 <= 1 + 1e-12)
    assert np.all(t5 <= t1 + 1e-12)
    assert t1[-1] > 0.99


@pytest.mark.parametrize("include_zero", [False, True])
def test_oofsk_quadratic_coefficient_below_bound(include_zero):
    sp = spec(c=0.5, a=0.5)
    beta = 2.0
    stats = coherence_stats(sp)
    g = gamma_opt(stats, beta)
    u = peak_bound(stats.mu, stats.sigma, beta)
    prev = -np.inf
    for n in (4, 8, 16):
        c = theorem1_coefficient(simo_block_law(sp, n), ensemble_oofsk(n, beta, g, include_zero))
        per = c.per_symbol().kappa / QUANTIZATION_GAIN
        # analytic per-symbol value for a single-tap spec
        mu_n = coherence_stats(sp, n).mu_n
        expected = g * beta * mu_n + g * (beta - g) * stats.sigma
        if not include_zero:
            expected -= g * g * mu_n / (n - 1) ** 2
        assert per == pytest.approx(expected, rel=1e-9)
        assert prev < per <= u
        prev = per

import numpy as np
import pytest
from scipy import integrate

from onebit.asymptotic import lemma1_derivative
from onebit.channel import (EnumerationBudgetError, InputEnsemble, SimoSpec, all_sign_patterns, autocorrelation,
                            block_fading_siso, ensemble_oofsk, ensemble_qpsk_block, simo_block_law)
from onebit.gauss import normal_cdf
from onebit.mi_exact import (MCSettings, cond_prob_given_x, cond_prob_given_x_H, cond_prob_slope, cond_prob_table,
                             mutual_info_exact, mutual_info_lower_bound)


def test_cond_prob_at_zero_snr_is_uniform():
    law = block_fading_siso(3)
    for y in all_sign_patterns(3)[::7]:
        est = cond_prob_given_x(law, np.ones(3), y, 0.0)
        assert est.value == 1 / 64 and est.std_error == 0


@pytest.mark.parametrize("rho", [0.1, 1.0])
def test_single_use_siso_outputs_equiprobable(rho):
    law = block_fading_siso(1)
    x = np.array([0.8 - 0.6j])
    y = np.array([1 - 1j])
    assert cond_prob_given_x(law, x, y, rho).value == 0.25
    # independent check: average the conditional product over sampled fades
    H = law.sample(200_000, seed=3)
    vals = np.array([cond_prob_given_x_H(h, x, y, rho) for h in H[:20_000]])
    assert abs(vals.mean() - 0.25) <= 3 * vals.std(ddof=1) / np.sqrt(vals.size)


def test_first_order_slope_matches_closed_form():
    law = block_fading_siso(2)
    x = np.array([1, 1]) / np.sqrt(2)
    y = np.array([1 + 1j, 1 + 1j])
    slope, err = cond_prob_slope(law, x, y, 1e-3, MCSettings(4_000_000, 21))
    assert abs(slope - lemma1_derivative(law, x, y)) <= 3 * err


def test_cond_prob_given_H_cases():
    H = np.eye(1)
    assert cond_prob_given_x_H(H, [1.0], [1 + 1j], 0.0) == 0.25
    # Phi(1) Phi(0) against the density quadrature oracle
    phi1, _ = integrate.quad(lambda t: np.exp(-t * t / 2) / np.sqrt(2 * np.pi), -np.inf, 1.0)
    assert cond_prob_given_x_H(H, [1.0], [1 + 1j], 0.5) == pytest.approx(phi1 * 0.5, abs=1e-12)
    assert cond_prob_given_x_H(H, [1.0], [1 + 1j], 0.5) == pytest.approx(normal_cdf(1.0) * 0.5, rel=1e-14)
    Hx = np.array([[1.0, 0], [0, 1.0]])
    x = np.array([1 - 2j, -1 + 0.5j])
    assert cond_prob_given_x_H(Hx, x, [1 - 1j, -1 + 1j], 1e4) == pytest.approx(1.0, abs=1e-12)


def test_rows_sum_to_one_with_independent_calls():
    law = block_fading_siso(2)
    x = np.array([1 + 1j, -1 + 1j]) / np.sqrt(2)
    total, err = 0.0, 0.0
    for j, y in enumerate(all_sign_patterns(2)):
        est = cond_prob_given_x(law, x, y, 0.7, MCSettings(40_000, 500 + j))
        total += est.value
        err += est.std_error
    assert abs(total - 1) <= 4 * err


def test_mi_zero_at_zero_snr():
    r = mutual_info_exact(block_fading_siso(3), ensemble_qpsk_block(3), 0.0, MCSettings(10_000, 1))
    assert abs(r.value) <= 3 * r.std_error + 1e-15
    assert mutual_info_lower_bound(block_fading_siso(3), ensemble_qpsk_block(3), 0.0).value == 0.0


def test_mi_single_use_siso_is_zero():
    law = block_fading_siso(1)
    for ens in (ensemble_qpsk_block(1), InputEnsemble([[0.0], [np.sqrt(2)]], [0.5, 0.5], 1.0, 2.0)):
        assert mutual_info_exact(law, ens, 0.8, MCSettings(10_000, 2)).value == 0.0


def test_mc_matches_quadrature_and_is_bounded():
    law, ens = block_fading_siso(2), ensemble_qpsk_block(2)
    for rho in (0.3, 1.0):
        mc = mutual_info_exact(law, ens, rho, MCSettings(200_000, 4))
        quad = mutual_info_exact(law, ens, rho, estimator="quadrature")
        assert abs(mc.value - quad.value) <= 3 * mc.std_error + quad.std_error
        assert -3 * mc.std_error <= mc.value <= 2 * 2 * np.log(2)


def test_qmc_estimator_agrees():
    law, ens = block_fading_siso(2), ensemble_qpsk_block(2)
    q = mutual_info_exact(law, ens, 0.5, MCSettings(1 << 12, 9), estimator="qmc")
    exact = mutual_info_exact(law, ens, 0.5, estimator="quadrature")
    assert abs(q.value - exact.value) <= 3 * q.std_error + 1e-6


def test_mc_is_deterministic_per_seed():
    law, ens = block_fading_siso(2), ensemble_qpsk_block(2)
    a = mutual_info_exact(law, ens, 0.4, MCSettings(20_000, 77))
    b = mutual_info_exact(law, ens, 0.4, MCSettings(20_000, 77))
    assert a == b


@pytest.mark.parametrize("rho", [0.2, 1.0, 3.0])
def test_lower_bound_below_exact(rho):
    law = block_fading_siso(2)
    ens = InputEnsemble(np.array([[1, 1], [1, -1], [0, 0]]) * np.sqrt(1.5), [1 / 3] * 3, 1.0, 1.5)
    lb = mutual_info_lower_bound(law, ens, rho)
    ex = mutual_info_exact(law, ens, rho, estimator="quadrature")
    assert lb.value <= ex.value + lb.std_error + ex.std_error + 1e-12


def test_lower_bound_below_exact_on_simo_law():
    # on/off inputs let the signs reveal |h|, so I(H;y) > 0 and the bound may go negative
    spec = SimoSpec(1, 2, np.eye(1), autocorrelation("geometric", 0.6), [0.5, 0.5])
    law, ens = simo_block_law(spec, 3), ensemble_oofsk(3, 2.0, 1.0)
    for rho in (0.1, 1.0):
        ex = mutual_info_exact(law, ens, rho, MCSettings(100_000, 3))
        lb = mutual_info_lower_bound(law, ens, rho, mc=MCSettings(20_000, 4))
        assert lb.value <= ex.value + 3 * np.hypot(ex.std_error, lb.std_error)


def test_lower_bound_tight_for_qpsk_block():
    law, ens = block_fading_siso(3), ensemble_qpsk_block(3)
    lb = mutual_info_lower_bound(law, ens, 0.4)
    ex = mutual_info_exact(law, ens, 0.4, estimator="quadrature")
    assert lb.value == pytest.approx(ex.value, abs=1e-9)


def test_lower_bound_sampled_fallback_matches_quadrature():
    law, ens = block_fading_siso(2), ensemble_qpsk_block(2)
    q = mutual_info_lower_bound(law, ens, 0.6)
    s = mutual_info_lower_bound(law, ens, 0.6, mc=MCSettings(40_000, 5))
    assert abs(q.value - s.value) <= 3 * s.std_error + q.std_error


def test_permutation_equivariance():
    law = block_fading_siso(3)
    ens = ensemble_oofsk(3, 2.0, 1.0)
    perm = [2, 0, 1]
    permuted = InputEnsemble(ens.symbols[:, perm], ens.probs, ens.avg_power, ens.peak_power)
    a = mutual_info_exact(law, ens, 0.5, estimator="quadrature")
    b = mutual_info_exact(law, permuted, 0.5, estimator="quadrature")
    assert a.value == pytest.approx(b.value, abs=1e-12)
    c = mutual_info_exact(law, permuted, 0.5, MCSettings(100_000, 8))
    assert abs(a.value - c.value) <= 3 * c.std_error + a.std_error


def test_table_rows_are_distributions():
    P, _ = cond_prob_table(block_fading_siso(3), ensemble_qpsk_block(3), 0.5, MCSettings(5_000, 1))
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)


def test_enumeration_budget(monkeypatch):
    law, ens = block_fading_siso(4), ensemble_qpsk_block(4)
    with pytest.raises(EnumerationBudgetError):
        mutual_info_exact(law, ens, 0.1)
    monkeypatch.setenv("ONEBIT_ENUM_BUDGET", str(4 ** 8))
    P, _ = cond_prob_table(law, ens, 0.1, estimator="quadrature", order=8)
    assert P.shape == (256, 256)


def test_reports_are_per_block():
    r = mutual_info_exact(block_fading_siso(3), ensemble_qpsk_block(3), 0.2, estimator="quadrature")
    assert r.per_block and r.block_len == 3
    assert r.per_symbol().value == pytest.approx(r.value / 3)

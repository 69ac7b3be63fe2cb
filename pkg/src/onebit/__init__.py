"""Low-SNR mutual information of noncoherent fading channels with 1-bit outputs."""

from .asymptotic import (QuadraticCoefficient, lemma1_derivative, moment_condition_check, nondiag,
                         sign_identity_check, theorem1_coefficient, unquantized_coefficient)
from .channel import (ChannelLaw, InputEnsemble, SimoSpec, block_fading_siso, ensemble_oofsk,
                      ensemble_qpsk_block, ensemble_ternary_iid, quantize, simo_block_law)
from .gauss import complex_to_real_cov, normal_cdf, orthant_probability, sample_complex_gaussian
from .mi_exact import (MCSettings, cond_prob_given_x, cond_prob_given_x_H, mutual_info_exact,
                       mutual_info_lower_bound)
from .report import Method, RateReport
from .simo import coherence_stats, gamma_opt, iid_rate, prop1_upper_bound, ratio_sweep

__version__ = "0.1.0"

__all__ = [
    "QuadraticCoefficient", "lemma1_derivative", "moment_condition_check", "nondiag", "sign_identity_check",
    "theorem1_coefficient", "unquantized_coefficient",
    "ChannelLaw", "InputEnsemble", "SimoSpec", "block_fading_siso", "ensemble_oofsk", "ensemble_qpsk_block",
    "ensemble_ternary_iid", "quantize", "simo_block_law",
    "complex_to_real_cov", "normal_cdf", "orthant_probability", "sample_complex_gaussian",
    "MCSettings", "cond_prob_given_x", "cond_prob_given_x_H", "mutual_info_exact", "mutual_info_lower_bound",
    "Method", "RateReport",
    "coherence_stats", "gamma_opt", "iid_rate", "prop1_upper_bound", "ratio_sweep",
]

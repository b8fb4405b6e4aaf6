"""Causal synthesis of finite-horizon anticausal convolution functionals.

The functional y(t) = int_t^{t+T} k(t-s) x(s) ds looks ahead by T seconds.
This package builds explicit causal predictors for it by multiplying the
kernel spectrum with a transfer gain V(gamma; iw), quantifies the error
against band structure of the input, and decides whether a signal class
admits such prediction at all.
"""

from __future__ import annotations

from .engine import (
    ErrorReport,
    StudyTable,
    causal_invariance_trials,
    convergence_study,
    error_report,
    fourier_basis_kernels,
    fourier_coefficient_experiment,
    interior_window,
    is_nonincreasing,
    predicted_output_spectral,
    predicted_output_time,
    restrict,
    target_output,
    target_output_spectral,
    uniformity_study,
    write_study_csv,
)
from .predictor import (
    HorizonKernel,
    PredictorSpec,
    band_flatness,
    boxcar_kernel,
    envelope_search,
    eval_V,
    eval_h,
    gamma_for_band,
    kernel_spectrum,
    magnitude_identity_defect,
    pointwise_limit_curve,
    synthesize,
    triangular_kernel,
    write_predictor_spec,
)
from .processes import (
    FamilyBounds,
    GaussianMixtureParams,
    MembershipReport,
    band_limited_process,
    counterexample_te,
    exp_moment_series,
    gaussian_filter_output,
    gaussian_mixture,
    membership_mc,
    membership_nc,
    membership_x,
    sample_family,
)
from .signals import (
    FOURIER_CONVENTION,
    LEAKAGE_THRESHOLD,
    MAX_DERIVATIVE_ORDER,
    NumericsError,
    SampledSignal,
    Spectrum,
    TimeGrid,
    absolute_moment,
    band_weighted_integral,
    forward_spectrum,
    hermitian_defect,
    inverse_signal,
    lr_norm,
    read_signal_csv,
    read_spectrum_csv,
    require_supported,
    spectral_derivative_norm,
    support_leakage,
    weighted_tail,
    write_signal_csv,
    write_spectrum_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ErrorReport",
    "FOURIER_CONVENTION",
    "FamilyBounds",
    "GaussianMixtureParams",
    "HorizonKernel",
    "LEAKAGE_THRESHOLD",
    "MAX_DERIVATIVE_ORDER",
    "MembershipReport",
    "NumericsError",
    "PredictorSpec",
    "SampledSignal",
    "Spectrum",
    "StudyTable",
    "TimeGrid",
    "absolute_moment",
    "band_flatness",
    "band_limited_process",
    "band_weighted_integral",
    "boxcar_kernel",
    "causal_invariance_trials",
    "convergence_study",
    "counterexample_te",
    "envelope_search",
    "error_report",
    "eval_V",
    "eval_h",
    "exp_moment_series",
    "forward_spectrum",
    "fourier_basis_kernels",
    "fourier_coefficient_experiment",
    "gamma_for_band",
    "gaussian_filter_output",
    "gaussian_mixture",
    "hermitian_defect",
    "interior_window",
    "inverse_signal",
    "is_nonincreasing",
    "kernel_spectrum",
    "lr_norm",
    "magnitude_identity_defect",
    "membership_mc",
    "membership_nc",
    "membership_x",
    "pointwise_limit_curve",
    "predicted_output_spectral",
    "predicted_output_time",
    "read_signal_csv",
    "read_spectrum_csv",
    "require_supported",
    "restrict",
    "sample_family",
    "spectral_derivative_norm",
    "support_leakage",
    "synthesize",
    "target_output",
    "target_output_spectral",
    "triangular_kernel",
    "uniformity_study",
    "weighted_tail",
    "write_predictor_spec",
    "write_signal_csv",
    "write_spectrum_csv",
    "write_study_csv",
]

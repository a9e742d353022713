"""Fractional white-noise operators, local-time S-transforms and fBm Monte Carlo."""

from ._core import (
    AccuracyError,
    AdmissibilityError,
    LoctimeError,
    NonIntegrableError,
    TestFunction,
    ValidationError,
    VectorTestFunction,
    admissibility,
    chaos_kernel,
    divergence_probe,
    fbm_covariance,
    indicator_inner_product,
    integrate_triangle_singular,
    lemma_bound_ratio,
    mc_local_time_regularized,
    mc_s_transform,
    mh_indicator,
    mh_plus_apply,
    normalization_constant,
    pairing_closed_form,
    pairing_dual,
    s_local_time,
    series_reconstruction,
    triangle_power_moment,
)

__all__ = [name for name in dir() if not name.startswith("_")]

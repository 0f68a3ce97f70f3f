"""Differentially private facility location on a line.

The main entry points are :func:`load_dataset`, :func:`build_output_density`
and the loss functions in :mod:`dpfl.metrics`.
"""
from .bounds import audit_dp, direct_lower_bound, impossibility_floor, k_star, p_tail_upper
from .core import Dataset, Domain, NeighborPair, change_one_distance, load_dataset
from .families import (
    SinglePeakedDensity,
    ctm_certificate,
    dkw_bound,
    gen_adversarial,
    is_ctm,
    ks_distance,
    sample_from_density,
    verify_spm_certificate,
)
from .kernels import BACKEND
from .mechanism import (
    MechanismSpec,
    OutputDensity,
    build_output_density,
    exact_tail,
    fair_quantile,
    sample_location,
    sample_locations,
)
from .metrics import crossed_set, fair, loss_vector, optimal_location, social_welfare, swdiff
from .score import PiecewiseConstantFn, WideningParam, p_alpha_pieces, p_alpha_value, q_value

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Dataset",
    "Domain",
    "MechanismSpec",
    "NeighborPair",
    "OutputDensity",
    "PiecewiseConstantFn",
    "SinglePeakedDensity",
    "WideningParam",
    "audit_dp",
    "build_output_density",
    "change_one_distance",
    "crossed_set",
    "ctm_certificate",
    "direct_lower_bound",
    "dkw_bound",
    "exact_tail",
    "fair",
    "fair_quantile",
    "gen_adversarial",
    "impossibility_floor",
    "is_ctm",
    "k_star",
    "ks_distance",
    "load_dataset",
    "loss_vector",
    "optimal_location",
    "p_alpha_pieces",
    "p_alpha_value",
    "p_tail_upper",
    "q_value",
    "sample_location",
    "sample_from_density",
    "sample_locations",
    "social_welfare",
    "swdiff",
    "verify_spm_certificate",
]

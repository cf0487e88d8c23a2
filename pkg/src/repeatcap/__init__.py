"""Analytical capacity upper bounds for binary repeat channels.

Subpackages compute dual output distributions for the geometric sticky,
elementary duplication, and geometric deletion channels, evaluate the
KL-gap between conditional output laws and those duals, and maximize the
resulting one-dimensional bound objectives.  A Monte Carlo simulator for
the Poisson-repeat channel with run-length decoding is included.
"""

from repeatcap.bounds import (
    BoundComputationError,
    BoundResult,
    BoundVariant,
    SweepFailure,
    compute_bound,
    deletion_delta,
    duplication_bound,
    geomdel_bound,
    geomdel_elementary_bound,
    objective_curve,
    sticky_bound,
    sweep,
    verify_tables,
)
from repeatcap.channels import Family, ReductionParams, RepeatChannel
from repeatcap.duals import DualDistribution, KLGapProfile, build_dual, kl_divergence, kl_gap_profile
from repeatcap.simulate import SimConfig, edit_distance, run_monte_carlo

__version__ = "0.1.0"

__all__ = [
    "BoundComputationError",
    "BoundResult",
    "BoundVariant",
    "DualDistribution",
    "Family",
    "SweepFailure",
    "KLGapProfile",
    "ReductionParams",
    "RepeatChannel",
    "build_dual",
    "compute_bound",
    "deletion_delta",
    "duplication_bound",
    "geomdel_bound",
    "geomdel_elementary_bound",
    "SimConfig",
    "edit_distance",
    "kl_divergence",
    "kl_gap_profile",
    "objective_curve",
    "run_monte_carlo",
    "sticky_bound",
    "sweep",
    "verify_tables",
    "__version__",
]

"""Throughput modelling for speculative decoding and draft-model sizing."""

from .alpha_fit import AlphaEstimate, TarObservation, estimate_alpha
from .draft_optimizer import GridSpec, OptimalDraftRecord, fit_ansatz, fit_pooled, optimal_draft_size, sweep_grid
from .errors import SpecDraftError
from .numerics import LambertBranch, finite_difference, lambert_w
from .regression import CurveForm, FitResult, fit_alpha_plane, fit_draft_curve, ols, ols_hc3
from .scaling_models import (
    ChinchillaParams,
    PlaneCoefficients,
    SpecSystem,
    TrainingBudgets,
    expected_tar,
    gamma_opt,
    throughput,
    throughput_at_opt,
    throughput_from_hparams,
)

__version__ = "0.1.0"

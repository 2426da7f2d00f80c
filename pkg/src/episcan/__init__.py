"""Epidemic change-point detection for integer-valued time series.

Detects a two-break, return-to-baseline parameter change in INARCH(1) /
INGARCH(1,1) count models via a Poisson quasi-maximum-likelihood scan
statistic calibrated against Brownian-bridge critical values.
"""

from ._kernels import BACKEND
from .bridge_quantiles import QuantileTable, build_table, default_table, lookup
from .epidemic_test import ScanConfig, ScanResult, c_vector, decide, scan, scan_set, sigma_un
from .experiment import ExperimentConfig, ExperimentResult, run_experiment
from .model_core import (
    CountSeries,
    EpiscanError,
    InitPolicy,
    ModelSpec,
    Segment,
    cond_mean_grad_path,
    cond_mean_path,
)
from .qmle import (
    FitOptions,
    ParamEstimate,
    fit,
    info_matrices,
    quasi_loglik,
    quasi_loglik_grad,
    sandwich_norm,
)
from .reporting import DetectReport, ingest_csv, run_detect
from .simulate import EpidemicDesign, SeedSpec, simulate_epidemic, simulate_null

__version__ = "0.1.0"

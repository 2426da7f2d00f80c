"""Model families, parameter spaces, and conditional-mean recursions.

Two families are supported:

* ``inarch1``  -- mean recursion ``lam_t = omega + alpha * Y_{t-1}``,
  parameter ``theta = (omega, alpha)``, d = 2;
* ``ingarch11`` -- mean recursion ``lam_t = omega + alpha * Y_{t-1} + beta * lam_{t-1}``,
  parameter ``theta = (omega, alpha, beta)``, d = 3.

All segment arithmetic is 1-based and inclusive: ``Segment(lo, hi)`` covers
observations ``Y_lo, ..., Y_hi``.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import _kernels

OMEGA_FLOOR = 1e-8     # strictly positive lower bound on the mean level
DELTA_STAT = 0.01      # margin keeping alpha + beta away from 1
OMEGA_CEIL = 1e6


class EpiscanError(Exception):
    """Base class for errors raised by this package."""


class ModelError(EpiscanError, ValueError):
    """Invalid model specification, parameter, or segment."""


class InitPolicy(str, Enum):
    """How the pre-segment conditional mean is initialized."""

    EMPIRICAL_MEAN = "empirical_mean"
    UNCONDITIONAL_MEAN = "unconditional_mean"


@dataclass(frozen=True)
class CountSeries:
    """An ordered sequence of nonnegative integer counts."""

    values: np.ndarray
    origin_label: Optional[str] = None

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 1 or arr.size < 1:
            raise ModelError("series must be a nonempty 1-d sequence")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.isfinite(arr)) or np.any(arr != np.floor(arr)):
                raise ModelError("counts must be integral")
            arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise ModelError("counts must be nonnegative")
        object.__setattr__(self, "values", arr.astype(np.int64))

    def __len__(self):
        return int(self.values.size)

    def as_float(self):
        return self.values.astype(np.float64)


@dataclass(frozen=True, order=True)
class Segment:
    """1-based inclusive index range into a series."""

    lo: int
    hi: int

    def __post_init__(self):
        if not (1 <= self.lo <= self.hi):
            raise ModelError(f"invalid segment [{self.lo}, {self.hi}]")

    def __len__(self):
        return self.hi - self.lo + 1

    def check(self, series: CountSeries):
        if self.hi > len(series):
            raise ModelError(
                f"segment [{self.lo}, {self.hi}] exceeds series length {len(series)}"
            )

    def slice(self, series: CountSeries) -> np.ndarray:
        self.check(series)
        return series.values[self.lo - 1 : self.hi]


@dataclass(frozen=True)
class ModelSpec:
    """Model family plus the box/stationarity constraints on theta."""

    family: str
    noise: str = "poisson"
    r: Optional[int] = None
    omega_bounds: tuple = (OMEGA_FLOOR, OMEGA_CEIL)
    coef_upper: float = 1.0 - DELTA_STAT
    delta_stat: float = DELTA_STAT

    def __post_init__(self):
        if self.family not in ("inarch1", "ingarch11"):
            raise ModelError(f"unknown family {self.family!r}")
        if self.noise not in ("poisson", "nb"):
            raise ModelError(f"unknown noise {self.noise!r}")
        if self.noise == "nb":
            if self.r is None or int(self.r) < 1:
                raise ModelError("nb noise requires a positive integer dispersion r")
        if self.omega_bounds[0] < OMEGA_FLOOR:
            raise ModelError(f"omega lower bound must be >= {OMEGA_FLOOR}")

    @property
    def dim(self) -> int:
        return 2 if self.family == "inarch1" else 3

    def bounds(self) -> list:
        """Per-coordinate (lo, hi) box bounds."""
        box = [self.omega_bounds, (0.0, self.coef_upper)]
        if self.dim == 3:
            box.append((0.0, self.coef_upper))
        return box

    def check_theta(self, theta: np.ndarray):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ModelError(f"theta must have dimension {self.dim}, got {theta.shape}")
        for k, (lo, hi) in enumerate(self.bounds()):
            if not (lo <= theta[k] <= hi):
                raise ModelError(f"theta[{k}]={theta[k]} outside bounds [{lo}, {hi}]")
        if theta[1:].sum() > 1.0 - self.delta_stat + 1e-12:
            raise ModelError(
                f"alpha + beta = {theta[1:].sum():.4f} violates the stationarity "
                f"margin 1 - {self.delta_stat}"
            )
        return theta

    def project(self, theta: Sequence[float]) -> np.ndarray:
        """Clip a proposal into the feasible box, rescaling (alpha, beta) if needed."""
        theta = np.asarray(theta, dtype=float).copy()
        for k, (lo, hi) in enumerate(self.bounds()):
            theta[k] = min(max(theta[k], lo), hi)
        s = theta[1:].sum()
        cap = 1.0 - self.delta_stat
        if s > cap:
            theta[1:] *= cap / s
        return theta

    def as_ingarch_coeffs(self, theta: np.ndarray):
        """(omega, alpha, beta) with beta = 0 for the inarch1 family."""
        if self.dim == 2:
            return float(theta[0]), float(theta[1]), 0.0
        return float(theta[0]), float(theta[1]), float(theta[2])


def _initial_state(spec, theta, y_seg, init):
    omega, alpha, beta = spec.as_ingarch_coeffs(theta)
    if init == InitPolicy.EMPIRICAL_MEAN:
        lam0 = float(np.mean(y_seg))
        lam0 = max(lam0, OMEGA_FLOOR)
        glam0 = np.zeros(3)
    elif init == InitPolicy.UNCONDITIONAL_MEAN:
        lam0 = omega / (1.0 - beta)
        # gradient of omega / (1 - beta) so finite differences of the path match
        glam0 = np.array([1.0 / (1.0 - beta), 0.0, omega / (1.0 - beta) ** 2])
    else:
        raise ModelError(f"unknown init policy {init!r}")
    return omega, alpha, beta, lam0, glam0


def cond_mean_path(spec, theta, series, seg, init=InitPolicy.EMPIRICAL_MEAN):
    """Recursive conditional-mean path lam_t for t in the segment."""
    theta = spec.check_theta(theta)
    y = seg.slice(series).astype(np.float64)
    omega, alpha, beta, lam0, _ = _initial_state(spec, theta, y, init)
    lam = _kernels.ingarch_filter(y, omega, alpha, beta, lam0)
    if not np.all(np.isfinite(lam)):
        raise ModelError("non-finite conditional mean encountered")
    return lam

def cond_mean_grad_path(spec, theta, series, seg, init=InitPolicy.EMPIRICAL_MEAN):
    """Path of the gradient of lam_t with respect to theta, shape (|seg|, d)."""
    theta = spec.check_theta(theta)
    y = seg.slice(series).astype(np.float64)
    omega, alpha, beta, lam0, glam0 = _initial_state(spec, theta, y, init)
    _, glam = _kernels.ingarch_grad_filter(y, omega, alpha, beta, lam0, glam0)
    if not np.all(np.isfinite(glam)):
        raise ModelError("non-finite gradient encountered")
    return glam[:, : spec.dim].copy()

"""Trajectory generation for the Poisson and negative-binomial count models.

Under the epidemic alternative the parameter switches from the baseline to a
second value on a middle stretch and back, while the mean recursion keeps its
running state across the switches (one contiguous trajectory).
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .model_core import CountSeries, ModelSpec, ModelError

DEFAULT_BURNIN = 500


class SimulationError(ModelError):
    pass


@dataclass(frozen=True)
class SeedSpec:
    """Reproducible RNG identity: same (seed, stream) gives the same draws."""

    seed: int
    stream: int = 0

    def rng(self) -> np.random.Generator:
        return np.random.default_rng([self.seed, self.stream])


@dataclass(frozen=True)
class EpidemicDesign:
    """Baseline theta0, mid-stretch theta1, break fractions 0 < tau1 < tau2 < 1."""

    theta0: np.ndarray
    theta1: np.ndarray
    tau1: float
    tau2: float

    def __post_init__(self):
        if not (0.0 < self.tau1 < self.tau2 < 1.0):
            raise SimulationError("need 0 < tau1 < tau2 < 1")
        object.__setattr__(self, "theta0", np.asarray(self.theta0, dtype=float))
        object.__setattr__(self, "theta1", np.asarray(self.theta1, dtype=float))

    def breaks(self, n: int) -> Tuple[int, int]:
        t1, t2 = int(np.floor(n * self.tau1)), int(np.floor(n * self.tau2))
        if t1 < 1 or t1 >= t2:
            raise SimulationError(f"degenerate breaks ({t1}, {t2}) for n={n}")
        return t1, t2


def _draw(rng, noise, r, lam):
    if noise == "poisson":
        return int(rng.poisson(lam))
    p = r / (r + lam)
    return int(rng.negative_binomial(r, p))


def _generate(spec, thetas, n, burnin, seed):
    """Run the chain with a per-time parameter array of shape (n, d)."""
    if n < 1:
        raise SimulationError("n must be >= 1")
    if burnin < 0:
        raise SimulationError("burnin must be >= 0")
    rng = seed.rng()
    r = spec.r
    omega, alpha, beta = spec.as_ingarch_coeffs(spec.check_theta(thetas[0]))
    denom = 1.0 - alpha - beta
    if denom <= 0:
        raise SimulationError("nonstationary parameter")
    lam = omega / denom
    y_prev = _draw(rng, spec.noise, r, lam)
    for _ in range(burnin):
        lam = omega + alpha * y_prev + beta * lam
        y_prev = _draw(rng, spec.noise, r, lam)
    out = np.empty(n, dtype=np.int64)
    out[0] = y_prev
    for t in range(1, n):
        omega, alpha, beta = spec.as_ingarch_coeffs(thetas[t])
        lam = omega + alpha * out[t - 1] + beta * lam
        out[t] = _draw(rng, spec.noise, r, lam)
    return CountSeries(out)


def simulate_null(spec: ModelSpec, theta, n: int, burnin: int = DEFAULT_BURNIN,
                  seed: SeedSpec = SeedSpec(0)) -> CountSeries:
    """Simulate n observations with a constant parameter."""
    theta = spec.check_theta(theta)
    thetas = np.broadcast_to(theta, (n, spec.dim))
    return _generate(spec, thetas, n, burnin, seed)


def simulate_epidemic(spec: ModelSpec, design: EpidemicDesign, n: int,
                      burnin: int = DEFAULT_BURNIN,
                      seed: SeedSpec = SeedSpec(0)):
    """Simulate with the epidemic parameter pattern.

    Returns (series, (t1, t2)); the parameter equals theta1 for
    t in (t1, t2] and theta0 elsewhere.
    """
    th0 = spec.check_theta(design.theta0)
    th1 = spec.check_theta(design.theta1)
    t1, t2 = design.breaks(n)
    thetas = np.tile(th0, (n, 1))
    thetas[t1 : t2] = th1  # rows t1..t2-1 are times t1+1..t2 (1-based)
    return _generate(spec, thetas, n, burnin, seed), (t1, t2)

"""Shared fixtures and naive reference implementations used as oracles."""

import numpy as np
import pytest

from episcan import CountSeries, InitPolicy, ModelSpec, SeedSpec, Segment, simulate_null


@pytest.fixture(scope="session")
def inarch():
    return ModelSpec(family="inarch1")


@pytest.fixture(scope="session")
def ingarch():
    return ModelSpec(family="ingarch11")


@pytest.fixture(scope="session")
def nb_ingarch():
    return ModelSpec(family="ingarch11", noise="nb", r=5)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def random_theta(spec, rng, low_mean=0.5, high_mean=5.0):
    """Interior parameter draw, safely away from every bound."""
    omega = rng.uniform(low_mean, high_mean)
    if spec.dim == 2:
        return np.array([omega, rng.uniform(0.05, 0.45)])
    alpha = rng.uniform(0.05, 0.4)
    beta = rng.uniform(0.05, min(0.4, 0.85 - alpha))
    return np.array([omega, alpha, beta])


def poisson_series(spec, theta, n, seed):
    return simulate_null(spec, theta, n, burnin=200, seed=SeedSpec(seed))


# ---------------------------------------------------------------------------
# naive reference implementations (deliberately plain python loops)
# ---------------------------------------------------------------------------

def naive_mean_path(spec, theta, y, init):
    """Conditional-mean recursion written as an explicit python loop."""
    omega, alpha, beta = spec.as_ingarch_coeffs(np.asarray(theta, dtype=float))
    if init == InitPolicy.EMPIRICAL_MEAN:
        lam0 = max(float(np.mean(y)), 1e-8)
    else:
        lam0 = omega / (1.0 - beta)
    lam = [lam0]
    for t in range(1, len(y)):
        lam.append(omega + alpha * float(y[t - 1]) + beta * lam[-1])
    return np.array(lam)


def naive_grad_path(spec, theta, y, init):
    omega, alpha, beta = spec.as_ingarch_coeffs(np.asarray(theta, dtype=float))
    lam = naive_mean_path(spec, theta, y, init)
    if init == InitPolicy.EMPIRICAL_MEAN:
        g = [np.zeros(3)]
    else:
        g = [np.array([1.0 / (1.0 - beta), 0.0, omega / (1.0 - beta) ** 2])]
    for t in range(1, len(y)):
        prev = g[-1]
        g.append(np.array([
            1.0 + beta * prev[0],
            float(y[t - 1]) + beta * prev[1],
            lam[t - 1] + beta * prev[2],
        ]))
    return np.array(g)[:, : spec.dim]


def naive_loglik(spec, theta, y, init):
    lam = naive_mean_path(spec, theta, y, init)
    total = 0.0
    for t in range(len(y)):
        total += float(y[t]) * np.log(lam[t]) - lam[t]
    return total


def naive_info(spec, theta, y, init):
    lam = naive_mean_path(spec, theta, y, init)
    grad = naive_grad_path(spec, theta, y, init)
    d = spec.dim
    j = np.zeros((d, d))
    i = np.zeros((d, d))
    m = len(y)
    for t in range(m):
        outer = np.outer(grad[t], grad[t])
        j += outer / lam[t]
        i += outer * (float(y[t]) / lam[t] - 1.0) ** 2
    return j / m, i / m


def segment_all(series):
    return Segment(1, len(series))

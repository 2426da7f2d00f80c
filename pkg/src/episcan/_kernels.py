"""Numeric inner loops, with numba-compiled and pure-numpy backends.

The numba backend is the default. Set the environment variable
``EPISCAN_NO_NUMBA=1`` before import to force the numpy backend (the numpy
filter path goes through ``scipy.signal.lfilter``, so it is vectorized too).
Both backends implement identical arithmetic; ``benchmarks/bench_kernels.py``
compares them.
"""

import os

import numpy as np
from scipy.signal import lfilter

_NO_NUMBA = os.environ.get("EPISCAN_NO_NUMBA", "").lower() in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _linear_recursion_np(drive, coef, init):
    """out[0] = init; out[i] = drive[i] + coef * out[i-1] for i >= 1."""
    m = drive.shape[0]
    out = np.empty(m)
    out[0] = init
    if m > 1:
        if coef == 0.0:
            out[1:] = drive[1:]
        else:
            out[1:], _ = lfilter([1.0], [1.0, -coef], drive[1:], zi=[coef * init])
    return out


def ingarch_filter_np(y, omega, alpha, beta, lam0):
    """Conditional-mean path on a segment: lam[i] = omega + alpha*y[i-1] + beta*lam[i-1]."""
    drive = np.empty_like(y)
    drive[0] = lam0
    drive[1:] = omega + alpha * y[:-1]
    return _linear_recursion_np(drive, beta, lam0)


def ingarch_grad_filter_np(y, omega, alpha, beta, lam0, glam0):
    """Path of d(lam)/d(omega, alpha, beta) alongside the mean path.

    Returns (lam, glam) with glam of shape (m, 3).
    """
    lam = ingarch_filter_np(y, omega, alpha, beta, lam0)
    m = y.shape[0]
    glam = np.empty((m, 3))
    ones = np.ones(m)
    dy = np.empty(m)
    dy[0] = 0.0
    dy[1:] = y[:-1]
    dl = np.empty(m)
    dl[0] = 0.0
    dl[1:] = lam[:-1]
    glam[:, 0] = _linear_recursion_np(ones, beta, glam0[0])
    glam[:, 1] = _linear_recursion_np(dy, beta, glam0[1])
    glam[:, 2] = _linear_recursion_np(dl, beta, glam0[2])
    return lam, glam


def qll_value_grad_np(y, omega, alpha, beta, lam0, glam0):
    """Poisson quasi-log-likelihood and its gradient in (omega, alpha, beta)."""
    lam, glam = ingarch_grad_filter_np(y, omega, alpha, beta, lam0, glam0)
    value = float(np.sum(y * np.log(lam) - lam))
    w = y / lam - 1.0
    grad = glam.T @ w
    return value, grad


def pairwise_sup_sq_np(w):
    """max over i < j of squared euclidean distance between rows of w."""
    n = w.shape[0]
    best = 0.0
    for i in range(n - 1):
        d = w[i + 1:] - w[i]
        m = float(np.max(np.einsum("ij,ij->i", d, d)))
        if m > best:
            best = m
    return best


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if not _NO_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _ingarch_filter_nb(y, omega, alpha, beta, lam0):
        m = y.shape[0]
        lam = np.empty(m)
        lam[0] = lam0
        for i in range(1, m):
            lam[i] = omega + alpha * y[i - 1] + beta * lam[i - 1]
        return lam

    @njit(cache=True)
    def _ingarch_grad_filter_nb(y, omega, alpha, beta, lam0, glam0):
        m = y.shape[0]
        lam = np.empty(m)
        glam = np.empty((m, 3))
        lam[0] = lam0
        glam[0, 0] = glam0[0]
        glam[0, 1] = glam0[1]
        glam[0, 2] = glam0[2]
        for i in range(1, m):
            lam[i] = omega + alpha * y[i - 1] + beta * lam[i - 1]
            glam[i, 0] = 1.0 + beta * glam[i - 1, 0]
            glam[i, 1] = y[i - 1] + beta * glam[i - 1, 1]
            glam[i, 2] = lam[i - 1] + beta * glam[i - 1, 2]
        return lam, glam

    @njit(cache=True)
    def _qll_value_grad_nb(y, omega, alpha, beta, lam0, glam0):
        m = y.shape[0]
        lam_prev = lam0
        g0 = glam0[0]
        g1 = glam0[1]
        g2 = glam0[2]
        value = y[0] * np.log(lam0) - lam0
        w = y[0] / lam0 - 1.0
        grad = np.zeros(3)
        grad[0] = w * g0
        grad[1] = w * g1
        grad[2] = w * g2
        for i in range(1, m):
            lam = omega + alpha * y[i - 1] + beta * lam_prev
            ng0 = 1.0 + beta * g0
            ng1 = y[i - 1] + beta * g1
            ng2 = lam_prev + beta * g2
            value += y[i] * np.log(lam) - lam
            w = y[i] / lam - 1.0
            grad[0] += w * ng0
            grad[1] += w * ng1
            grad[2] += w * ng2
            lam_prev = lam
            g0, g1, g2 = ng0, ng1, ng2
        return value, grad

    @njit(cache=True)
    def _pairwise_sup_sq_nb(w):
        n = w.shape[0]
        d = w.shape[1]
        best = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                s = 0.0
                for k in range(d):
                    diff = w[i, k] - w[j, k]
                    s += diff * diff
                if s > best:
                    best = s
        return best

    ingarch_filter = _ingarch_filter_nb
    ingarch_grad_filter = _ingarch_grad_filter_nb
    qll_value_grad = _qll_value_grad_nb
    pairwise_sup_sq = _pairwise_sup_sq_nb
    BACKEND = "numba"
else:
    ingarch_filter = ingarch_filter_np
    ingarch_grad_filter = ingarch_grad_filter_np
    qll_value_grad = qll_value_grad_np
    pairwise_sup_sq = pairwise_sup_sq_np
    BACKEND = "numpy"

"""Gaussian-process regression with a Matern-5/2 kernel.

Inputs live in the unit cube; the prior mean is the constant sample mean
of the observations. Kernel hyperparameters are chosen by maximizing the
log marginal likelihood over a small fixed grid, which keeps the fit
fully deterministic. Any hyperparameter may instead be pinned by the
caller, collapsing its grid axis.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .errors import GpFitError

_SQRT5 = math.sqrt(5.0)

# Grid axes for marginal-likelihood selection. Signal and noise variances
# are multiples of the sample variance of the observations.
_SIGNAL_GRID = (0.1, 0.3, 1.0, 3.0, 10.0)
_LENGTH_GRID = (0.05, 0.1, 0.2, 0.5, 1.0)
_NOISE_GRID = (1e-8, 1e-6, 1e-4, 1e-2, 1e-1)

_JITTERS = (0.0, 1e-12, 1e-10, 1e-8, 1e-6)


def matern52(a: np.ndarray, b: np.ndarray, length_scales, signal_variance: float):
    """Matern-5/2 kernel matrix between row-point sets a (n,d) and b (m,d)."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    ls = np.asarray(length_scales, dtype=float)
    diff = (a[:, None, :] - b[None, :, :]) / ls
    r = np.sqrt(np.sum(diff * diff, axis=-1))
    s = _SQRT5 * r
    return signal_variance * (1.0 + s + s * s / 3.0) * np.exp(-s)


@dataclass(frozen=True)
class GpSurrogate:
    x: np.ndarray  # (n, d) observed points in the unit cube
    y: np.ndarray  # (n,)
    prior_mean: float
    signal_variance: float
    length_scales: np.ndarray  # (d,)
    noise_variance: float
    chol: np.ndarray  # lower Cholesky factor of K + (noise + jitter) I
    resid_weights: np.ndarray  # (K + noise I)^-1 (y - prior_mean)
    log_marginal_likelihood: float


def _factor(k_matrix: np.ndarray, noise: float):
    """Cholesky with escalating jitter; returns (L, jitter) or None."""
    n = k_matrix.shape[0]
    eye = np.eye(n)
    for jitter in _JITTERS:
        try:
            lower = cholesky(k_matrix + (noise + jitter) * eye, lower=True)
            return lower, jitter
        except np.linalg.LinAlgError:
            continue
        except ValueError:
            continue
    return None


def _log_marginal(lower: np.ndarray, centered: np.ndarray, weights: np.ndarray) -> float:
    n = centered.size
    return float(
        -0.5 * centered @ weights
        - np.sum(np.log(np.diag(lower)))
        - 0.5 * n * math.log(2.0 * math.pi)
    )


def gp_fit(points, values, *, signal_variance=None, length_scale=None, noise=None):
    """Fit a surrogate; unpinned hyperparameters are grid-selected.

    ``length_scale`` is a single isotropic value applied to every input
    dimension. Raises :class:`GpFitError` when no factorization succeeds
    or when ``noise=0`` is asked to interpolate conflicting duplicates.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    y = np.asarray(values, dtype=float).ravel()
    n, d = x.shape
    if y.shape != (n,):
        raise GpFitError(f"{n} points but {y.shape} values")
    if n < 1:
        raise GpFitError("need at least one observation")
    if np.any(x < -1e-9) or np.any(x > 1 + 1e-9):
        raise GpFitError("points must lie in the unit cube")

    if noise is not None and noise == 0.0:
        for i in range(n):
            for j in range(i + 1, n):
                if np.array_equal(x[i], x[j]) and y[i] != y[j]:
                    raise GpFitError(
                        "duplicate input with conflicting values cannot be "
                        "interpolated at zero noise"
                    )

    y_var = float(np.var(y))
    scale = y_var if y_var > 0 else 1.0
    signal_axis = (
        [float(signal_variance)]
        if signal_variance is not None
        else [scale * g for g in _SIGNAL_GRID]
    )
    length_axis = (
        [float(length_scale)] if length_scale is not None else list(_LENGTH_GRID)
    )
    noise_axis = [float(noise)] if noise is not None else [scale * g for g in _NOISE_GRID]

    prior_mean = float(np.mean(y))
    centered = y - prior_mean

    best = None
    for sv in signal_axis:
        for ls in length_axis:
            k_matrix = matern52(x, x, np.full(d, ls), sv)
            for nv in noise_axis:
                factored = _factor(k_matrix, nv)
                if factored is None:
                    continue
                lower, jitter = factored
                weights = cho_solve((lower, True), centered)
                lml = _log_marginal(lower, centered, weights)
                if best is None or lml > best[0]:
                    best = (lml, sv, ls, nv, lower, weights)
    if best is None:
        raise GpFitError("kernel matrix indefinite at every grid point after max jitter")

    lml, sv, ls, nv, lower, weights = best
    return GpSurrogate(
        x=x,
        y=y,
        prior_mean=prior_mean,
        signal_variance=sv,
        length_scales=np.full(d, ls),
        noise_variance=nv,
        chol=lower,
        resid_weights=weights,
        log_marginal_likelihood=lml,
    )


def gp_predict(surrogate: GpSurrogate, query):
    """Posterior mean and variance at one query (d,) or a batch (m, d).

    Variance is of the latent function (no observation noise) and is
    clamped at zero against round-off.
    """
    q = np.asarray(query, dtype=float)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    k_star = matern52(surrogate.x, q, surrogate.length_scales, surrogate.signal_variance)
    mean = surrogate.prior_mean + k_star.T @ surrogate.resid_weights
    v = solve_triangular(surrogate.chol, k_star, lower=True)
    var = np.maximum(surrogate.signal_variance - np.sum(v * v, axis=0), 0.0)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var

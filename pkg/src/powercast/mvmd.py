"""Multivariate variational mode decomposition.

Jointly splits C correlated channels into K narrowband modes that share
one set of center frequencies. Working in the positive-frequency half
spectrum of the mirrored signal, each sweep applies, in order:

  1. per mode k (Gauss-Seidel over k, channels independently): a Wiener
     filter of the residual,
         u_k <- (x - sum_{i<k} u_i_new - sum_{i>k} u_i_old + lam/2)
                / (1 + 2*alpha*(w - w_k)^2)
  2. per mode k: recenter w_k on the energy centroid of |u_k|^2 summed
     over channels (rectangle rule over bins),
  3. dual ascent on the reconstruction constraint,
         lam <- lam + tau * (x - sum_k u_k).

Iteration stops when the summed relative spectral change of the modes
falls below ``tol``. Channels share the w vector by construction; larger
``alpha`` narrows the modes.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .series import MultichannelSeries, mirror_center_slice, mirror_extend_values

OMEGA_INITS = ("uniform", "zeros", "random")

# Relative-change terms use this floor so all-zero modes contribute zero
# instead of 0/0. Machine eps keeps first-sweep terms (previous energy 0)
# enormous-but-finite, so no overflow and no spurious convergence.
_ENERGY_FLOOR = np.finfo(float).eps


@dataclass(frozen=True)
class MvmdConfig:
    k: int
    alpha: float
    tau: float = 0.0
    tol: float = 1e-7
    max_iter: int = 500
    omega_init: str = "uniform"
    omega_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"mode count must be >= 1, got {self.k}")
        if not self.alpha > 0:
            raise ConfigError(f"bandwidth penalty must be positive, got {self.alpha}")
        if self.tau < 0:
            raise ConfigError(f"dual step must be >= 0, got {self.tau}")
        if not self.tol > 0:
            raise ConfigError(f"tolerance must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.omega_init not in OMEGA_INITS:
            raise ConfigError(
                f"omega_init must be one of {OMEGA_INITS}, got {self.omega_init!r}"
            )


@dataclass(frozen=True)
class ModeSet:
    """K x C x N modes with the shared center-frequency vector.

    ``omega`` is sorted ascending and is the single frequency vector used
    by every channel. ``reconstruction_error`` holds the per-channel
    relative L2 deviation of sum_k modes from the analyzed series.
    """

    modes: np.ndarray  # (K, C, N)
    omega: np.ndarray  # (K,)
    iterations_run: int
    final_residual: float
    converged: bool
    reconstruction_error: np.ndarray  # (C,)
    dt: float
    channel_names: tuple
    residual_trace: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=float)
        omega = np.asarray(self.omega, dtype=float)
        if modes.ndim != 3:
            raise DataError(f"modes must be (K, C, N), got shape {modes.shape}")
        if omega.shape != (modes.shape[0],):
            raise DataError(
                f"{modes.shape[0]} modes but omega has shape {omega.shape}"
            )
        if np.any(omega < 0) or np.any(omega > 0.5):
            raise DataError("center frequencies must lie in [0, 0.5]")
        if np.any(np.diff(omega) < 0):
            raise DataError("center frequencies must be sorted ascending")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "omega", omega)

    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]

    @property
    def n_channels(self) -> int:
        return self.modes.shape[1]

    @property
    def n_samples(self) -> int:
        return self.modes.shape[2]


def update_mode(x_hat, u_hat, k, lam_hat, freqs, omega_k, alpha):
    """Wiener-filter update of mode k given the current mode stack.

    ``u_hat`` is the (K, C, M) stack in sweep order: rows below k already
    hold this sweep's values, rows above k the previous sweep's. Returns
    the new (C, M) spectrum for mode k without mutating the stack.
    """
    residual = x_hat - (u_hat.sum(axis=0) - u_hat[k]) + 0.5 * lam_hat
    return residual / (1.0 + 2.0 * alpha * (freqs - omega_k) ** 2)


def update_center_frequency(u_hat_k, freqs, previous):
    """Energy centroid of one mode across channels.

    Returns ``(omega, moved)``; a mode with zero energy keeps ``previous``
    and reports ``moved=False``.
    """
    power = np.abs(u_hat_k) ** 2
    denom = power.sum()
    if denom <= 0.0:
        return previous, False
    return float((power.sum(axis=0) @ freqs) / denom), True


def update_multiplier(lam_hat, x_hat, u_sum, tau):
    """Dual ascent on the reconstruction constraint."""
    return lam_hat + tau * (x_hat - u_sum)


def _init_omega(config: MvmdConfig, n_mirrored: int) -> np.ndarray:
    k = config.k
    if config.omega_init == "uniform":
        return 0.5 * (np.arange(1, k + 1) - 0.5) / k
    if config.omega_init == "zeros":
        return np.zeros(k)
    rng = np.random.default_rng(config.omega_seed)
    lo = np.log(1.0 / n_mirrored)
    hi = np.log(0.5)
    return np.sort(np.exp(lo + (hi - lo) * rng.random(k)))


def decompose(series: MultichannelSeries, config: MvmdConfig) -> ModeSet:
    """Run the full ADMM loop on a mirrored copy of ``series``.

    Boundaries are handled by half-length mirroring; the returned modes
    are the central slice, so they align sample-for-sample with the
    input. Non-convergence at ``max_iter`` is reported via the
    ``converged`` flag, never raised.
    """
    n = series.n_samples
    c = series.n_channels
    if n < 4 * config.k:
        raise ConfigError(
            f"{config.k} modes need at least {4 * config.k} samples, series has {n}"
        )

    mirrored = mirror_extend_values(series.values)  # (2N, C)
    n_m = mirrored.shape[0]
    x_hat = np.fft.rfft(mirrored, axis=0).T  # (C, M)
    freqs = np.fft.rfftfreq(n_m)  # (M,)
    m = freqs.size

    omega = _init_omega(config, n_m)
    u_hat = np.zeros((config.k, c, m), dtype=complex)
    lam_hat = np.zeros((c, m), dtype=complex)

    trace = []
    converged = False
    iterations = 0
    residual = np.inf
    for _ in range(config.max_iter):
        u_prev = u_hat.copy()
        for k in range(config.k):
            u_hat[k] = update_mode(x_hat, u_hat, k, lam_hat, freqs, omega[k], config.alpha)
            omega[k], _ = update_center_frequency(u_hat[k], freqs, omega[k])
        lam_hat = update_multiplier(lam_hat, x_hat, u_hat.sum(axis=0), config.tau)

        diff = np.abs(u_hat - u_prev) ** 2
        ref = np.sum(np.abs(u_prev) ** 2, axis=2) + _ENERGY_FLOOR  # (K, C)
        residual = float(np.sum(diff.sum(axis=2) / ref))
        trace.append(residual)
        iterations += 1
        if residual < config.tol:
            converged = True
            break

    order = np.argsort(omega, kind="stable")
    omega = np.clip(omega[order], 0.0, 0.5)
    u_hat = u_hat[order]

    modes = np.empty((config.k, c, n))
    for k in range(config.k):
        full = np.fft.irfft(u_hat[k], n=n_m, axis=1)  # (C, 2N)
        modes[k] = mirror_center_slice(full.T, n).T

    recon = modes.sum(axis=0).T  # (N, C)
    err = np.empty(c)
    for j in range(c):
        denom = np.linalg.norm(series.values[:, j])
        num = np.linalg.norm(series.values[:, j] - recon[:, j])
        err[j] = 0.0 if denom == 0.0 and num == 0.0 else num / max(denom, _ENERGY_FLOOR)

    return ModeSet(
        modes=modes,
        omega=omega,
        iterations_run=iterations,
        final_residual=residual,
        converged=converged,
        reconstruction_error=err,
        dt=series.dt,
        channel_names=series.channel_names,
        residual_trace=np.asarray(trace),
    )


def reconstruct(modeset: ModeSet) -> MultichannelSeries:
    """Sum the modes back into a series (channel j = sum_k u[k, j])."""
    return MultichannelSeries(
        modeset.modes.sum(axis=0).T, modeset.dt, modeset.channel_names
    )


def save_modeset(modeset: ModeSet, directory) -> None:
    """Write omega.csv, per-mode/channel CSVs, and diagnostics.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "omega.csv", "w") as fh:
        fh.write("k,omega\n")
        for k, w in enumerate(modeset.omega):
            fh.write(f"{k},{float(w)!r}\n")
    for k in range(modeset.n_modes):
        for j in range(modeset.n_channels):
            with open(directory / f"mode_k{k}_ch{j}.csv", "w") as fh:
                fh.write("t,value\n")
                for t, v in enumerate(modeset.modes[k, j]):
                    fh.write(f"{t},{float(v)!r}\n")
    diagnostics = {
        "n_modes": modeset.n_modes,
        "n_channels": modeset.n_channels,
        "n_samples": modeset.n_samples,
        "dt": modeset.dt,
        "channel_names": list(modeset.channel_names),
        "iterations_run": modeset.iterations_run,
        "final_residual": modeset.final_residual,
        "converged": modeset.converged,
        "reconstruction_error": {
            name: float(e)
            for name, e in zip(modeset.channel_names, modeset.reconstruction_error)
        },
        "omega": [float(w) for w in modeset.omega],
    }
    with open(directory / "diagnostics.json", "w") as fh:
        json.dump(diagnostics, fh, indent=2, sort_keys=True)
        fh.write("\n")

"""Half-spectrum transforms for real signals.

Convention: ``forward_half_spectrum`` keeps the unnormalized positive-
frequency DFT coefficients X[m] = sum_t x[t] exp(-2j*pi*m*t/n) for
m = 0..floor(n/2), i.e. the analytic-signal content of a real series on
the normalized frequency grid [0, 0.5] cycles/sample. Parseval holds as

    sum_t x[t]^2 == (1/n) * sum_m w_m |X[m]|^2

with weight w_m = 1 on the DC bin (and the Nyquist bin for even n) and
w_m = 2 on interior bins, which stand in for their conjugate mirrors.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class HalfSpectrum:
    bins: np.ndarray  # complex, length floor(n_time/2) + 1
    n_time: int

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=complex)
        if self.n_time < 2:
            raise DataError(f"n_time must be >= 2, got {self.n_time}")
        expected = self.n_time // 2 + 1
        if bins.shape != (expected,):
            raise DataError(
                f"half spectrum of a length-{self.n_time} series needs "
                f"{expected} bins, got shape {bins.shape}"
            )
        object.__setattr__(self, "bins", bins)

    @property
    def frequencies(self) -> np.ndarray:
        """Bin frequencies in cycles/sample, ascending over [0, 0.5]."""
        return np.fft.rfftfreq(self.n_time)


def forward_half_spectrum(x: np.ndarray) -> HalfSpectrum:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DataError(f"expected a 1-D series of length >= 2, got shape {x.shape}")
    return HalfSpectrum(np.fft.rfft(x), x.size)


def inverse_half_spectrum(spec: HalfSpectrum) -> np.ndarray:
    return np.fft.irfft(spec.bins, n=spec.n_time)


def bin_weights(n_time: int) -> np.ndarray:
    """Conjugate-mirror multiplicities for energy sums over the half grid."""
    w = np.full(n_time // 2 + 1, 2.0)
    w[0] = 1.0
    if n_time % 2 == 0:
        w[-1] = 1.0
    return w


def spectral_energy(spec: HalfSpectrum) -> float:
    """Time-domain energy computed from the half spectrum."""
    w = bin_weights(spec.n_time)
    return float(np.sum(w * np.abs(spec.bins) ** 2) / spec.n_time)

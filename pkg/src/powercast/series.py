"""Multichannel time-series container, CSV I/O, normalization, mirroring."""

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import (
    CadenceError,
    DataError,
    GapError,
    ParseError,
)

DEFAULT_DT = 300.0  # five-minute cadence, seconds


@dataclass(frozen=True)
class MultichannelSeries:
    """N x C real samples on a uniform time grid.

    ``values[t, j]`` is channel ``j`` at step ``t``. The sampling interval
    ``dt`` (seconds) is metadata only; every spectral quantity in this
    package lives on the normalized cycles-per-sample grid. The value
    array is frozen after construction so instances can be shared freely.
    """

    values: np.ndarray
    dt: float = DEFAULT_DT
    channel_names: tuple = ()

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2:
            raise DataError(f"expected an N x C value matrix, got shape {arr.shape}")
        n, c = arr.shape
        if n < 2:
            raise DataError(f"need at least 2 samples, got {n}")
        if c < 1:
            raise DataError("need at least one channel")
        if not np.all(np.isfinite(arr)):
            raise DataError("series contains NaN or infinite samples")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DataError(f"sampling interval must be positive, got {self.dt}")
        names = tuple(self.channel_names) if self.channel_names else tuple(
            f"ch{j}" for j in range(c)
        )
        if len(names) != c:
            raise DataError(
                f"{len(names)} channel names for {c} channels"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "channel_names", names)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    def channel(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def slice(self, start: int, stop: int) -> "MultichannelSeries":
        return MultichannelSeries(self.values[start:stop], self.dt, self.channel_names)


def load_csv(path, expected_channels: int) -> MultichannelSeries:
    """Load ``timestamp,<ch1>,...,<chC>`` CSV into a series.

    The sampling interval is inferred from the first two timestamps and
    every subsequent gap must match it within 1% jitter. Missing or
    non-numeric cells are hard errors; nothing is imputed. Row indices in
    error messages are 1-based over the data rows (header excluded).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if len(header) < 2:
            raise ParseError(f"{path}: header must name a timestamp column and channels")
        names = tuple(h.strip() for h in header[1:])
        if len(names) < expected_channels:
            raise DataError(
                f"{path}: expected at least {expected_channels} channels, header has {len(names)}"
            )
        times = []
        rows = []
        for i, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ParseError(f"{path}: row {i} has {len(row)} fields, expected {len(header)}")
            try:
                stamp = datetime.fromisoformat(row[0].strip())
            except ValueError:
                raise ParseError(f"{path}: row {i}: bad timestamp {row[0]!r}") from None
            values = []
            for name, cell in zip(names, row[1:]):
                cell = cell.strip()
                if cell == "":
                    raise GapError(f"{path}: row {i}: missing value in column {name!r}")
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {i}: malformed number {cell!r} in column {name!r}"
                    ) from None
                if not math.isfinite(v):
                    raise GapError(f"{path}: row {i}: non-finite value in column {name!r}")
                values.append(v)
            times.append(stamp)
            rows.append(values)
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(rows)}")
    dt = (times[1] - times[0]).total_seconds()
    if dt <= 0:
        raise CadenceError(f"{path}: timestamps not strictly increasing at row 2")
    for i in range(1, len(times)):
        step = (times[i] - times[i - 1]).total_seconds()
        if abs(step - dt) > 0.01 * dt:
            raise CadenceError(
                f"{path}: row {i + 1}: spacing {step}s deviates from inferred cadence {dt}s"
            )
    return MultichannelSeries(np.array(rows, dtype=float), dt=dt, channel_names=names)


def write_csv(series: MultichannelSeries, path, start: str = "2024-01-01T00:00:00") -> None:
    """Write a series as ``timestamp,<ch1>,...,<chC>`` with ISO timestamps.

    Floats are written with ``repr`` so a reload reproduces them exactly.
    """
    t0 = datetime.fromisoformat(start)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("timestamp",) + series.channel_names)
        for i in range(series.n_samples):
            stamp = (t0 + timedelta(seconds=i * series.dt)).isoformat()
            writer.writerow([stamp] + [repr(float(v)) for v in series.values[i]])


def channel_scales(series: MultichannelSeries) -> list:
    """Per-channel (min, max), erroring on constant channels."""
    scales = []
    for j in range(series.n_channels):
        lo = float(series.values[:, j].min())
        hi = float(series.values[:, j].max())
        if not hi > lo:
            raise DataError(
                f"channel {series.channel_names[j]!r} is constant; cannot scale to [0, 1]"
            )
        scales.append((lo, hi))
    return scales


def min_max_normalize(series: MultichannelSeries, scales=None):
    """Affinely map each channel to [0, 1]; returns (series, scales).

    When ``scales`` is given (pairs fitted elsewhere, e.g. on the training
    region) it is applied as-is and outputs may leave [0, 1].
    """
    if scales is None:
        scales = channel_scales(series)
    out = np.empty_like(series.values)
    for j, (lo, hi) in enumerate(scales):
        out[:, j] = (series.values[:, j] - lo) / (hi - lo)
    return MultichannelSeries(out, series.dt, series.channel_names), scales


def denormalize(values: np.ndarray, scales) -> np.ndarray:
    """Invert :func:`min_max_normalize` on an (..., C) array."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    for j, (lo, hi) in enumerate(scales):
        out[..., j] = values[..., j] * (hi - lo) + lo
    return out


def denormalize_series(series: MultichannelSeries, scales) -> MultichannelSeries:
    return MultichannelSeries(
        denormalize(series.values, scales), series.dt, series.channel_names
    )


def mirror_extend_values(values: np.ndarray) -> np.ndarray:
    """Reflect an (N, C) array to length 2N: floor(N/2) samples mirrored on
    the left, the remaining ceil(N/2) on the right."""
    n = values.shape[0]
    half = n // 2
    return np.concatenate(
        [values[:half][::-1], values, values[half:][::-1]], axis=0
    )


def mirror_center_slice(extended: np.ndarray, n: int) -> np.ndarray:
    """Undo :func:`mirror_extend_values`: the central slice of length n."""
    half = n // 2
    return extended[half : half + n]


def mirror_extend(series: MultichannelSeries) -> MultichannelSeries:
    """Series-level mirroring; output has exactly 2N samples."""
    return MultichannelSeries(
        mirror_extend_values(series.values), series.dt, series.channel_names
    )

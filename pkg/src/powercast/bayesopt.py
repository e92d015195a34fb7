"""Bayesian minimization over the (K, alpha) decomposition parameters.

The surrogate is a Gaussian process on the unit square (K relaxed to a
continuous coordinate, alpha searched in log10 space). Expected
Improvement is maximized by scoring a fixed-size scrambled-Sobol
candidate set, so every step is deterministic for a given seed.
"""

import json
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr
from scipy.stats import qmc

from .errors import CandidateExhaustionError, ConfigError, OptimizationError
from .gp import GpSurrogate, gp_fit, gp_predict

N_CANDIDATES = 2048

#: Objective recorded for trials whose evaluation raised.
FAILED_OBJECTIVE = float("inf")

FLAG_OK = "ok"
FLAG_FAILED = "failed"


@dataclass(frozen=True)
class SearchSpace:
    k_bounds: tuple = (3, 10)
    alpha_bounds: tuple = (1e2, 1e4)

    def __post_init__(self):
        k_lo, k_hi = self.k_bounds
        a_lo, a_hi = self.alpha_bounds
        if k_lo < 1 or k_hi < k_lo:
            raise ConfigError(f"bad mode-count bounds {self.k_bounds}")
        if not 0 < a_lo < a_hi:
            raise ConfigError(f"bad alpha bounds {self.alpha_bounds}")

    def to_unit(self, k: int, alpha: float) -> np.ndarray:
        k_lo, k_hi = self.k_bounds
        a_lo, a_hi = self.alpha_bounds
        uk = 0.0 if k_hi == k_lo else (k - k_lo) / (k_hi - k_lo)
        ua = (
            0.0
            if a_hi == a_lo
            else (math.log10(alpha) - math.log10(a_lo))
            / (math.log10(a_hi) - math.log10(a_lo))
        )
        return np.array([uk, ua])

    def from_unit(self, u) -> tuple:
        k_lo, k_hi = self.k_bounds
        a_lo, a_hi = self.alpha_bounds
        k = int(round(k_lo + float(u[0]) * (k_hi - k_lo)))
        k = min(max(k, k_lo), k_hi)
        log_a = math.log10(a_lo) + float(u[1]) * (math.log10(a_hi) - math.log10(a_lo))
        return k, 10.0 ** log_a


@dataclass(frozen=True)
class Trial:
    index: int
    k: int
    alpha: float
    objective: float
    flag: str
    seconds: float


@dataclass
class TrialHistory:
    trials: list = field(default_factory=list)

    def __len__(self):
        return len(self.trials)

    def successful(self):
        return [t for t in self.trials if t.flag != FLAG_FAILED]

    @property
    def incumbent(self) -> Trial:
        ok = self.successful()
        if not ok:
            raise OptimizationError("no successful trials")
        return min(ok, key=lambda t: (t.objective, t.index))

    def params(self):
        return [(t.k, t.alpha) for t in self.trials]


def _sobol(seed: int, n: int) -> np.ndarray:
    engine = qmc.Sobol(d=2, scramble=True, seed=np.random.default_rng(seed))
    with warnings.catch_warnings():
        # Harmless for acquisition: draws need not be a power of two.
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(n)


def expected_improvement(surrogate: GpSurrogate, query, best: float):
    """EI for minimization: E[max(best - f(query), 0)], always >= 0."""
    single = np.ndim(query) == 1
    mean, var = gp_predict(surrogate, query)
    mean = np.atleast_1d(mean)
    sigma = np.sqrt(np.atleast_1d(var))
    gap = best - mean
    out = np.maximum(gap, 0.0)
    pos = sigma > 0
    if np.any(pos):
        z = gap[pos] / sigma[pos]
        pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        out[pos] = gap[pos] * ndtr(z) + sigma[pos] * pdf
    out = np.maximum(out, 0.0)
    return float(out[0]) if single else out


def suggest_next(surrogate, space: SearchSpace, history: TrialHistory, seed: int):
    """Pick the next (K, alpha) to evaluate.

    Before any surrogate exists the suggestion is simply the next point
    of the seeded low-discrepancy stream. Otherwise EI is scored on
    ``N_CANDIDATES`` fresh candidates and ties against already-evaluated
    parameter pairs are broken by walking down the EI ranking.
    """
    if surrogate is None:
        u = _sobol(seed, len(history) + 1)[-1]
        return space.from_unit(u)
    candidates = _sobol(seed, N_CANDIDATES)
    # Score each candidate at the parameters it would actually evaluate;
    # otherwise the integer rounding of K leaves phantom uncertainty
    # between grid rows and EI chases it.
    params_list = [space.from_unit(u) for u in candidates]
    snapped = np.array([space.to_unit(k, alpha) for k, alpha in params_list])
    best = min(t.objective for t in history.successful())
    scores = expected_improvement(surrogate, snapped, best)
    seen = set(history.params())
    for idx in np.argsort(-scores, kind="stable"):
        if params_list[idx] not in seen:
            return params_list[idx]
    raise CandidateExhaustionError(
        "all acquisition candidates duplicate evaluated parameter pairs"
    )


def _fit_on(history: TrialHistory, space: SearchSpace):
    ok = history.successful()
    points = np.array([space.to_unit(t.k, t.alpha) for t in ok])
    values = np.array([t.objective for t in ok])
    return gp_fit(points, values)


def minimize(
    objective,
    space: SearchSpace,
    budget: int = 25,
    n_init: int = 5,
    seed: int = 0,
) -> TrialHistory:
    """Sequential model-based minimization of ``objective(k, alpha)``.

    The first ``n_init`` trials come from the low-discrepancy stream; the
    rest are EI suggestions conditioned on all prior results. The
    objective may return a bare value or ``(value, flag)``; exceptions
    are recorded as failed trials with an infinite objective and never
    become the incumbent. Fully deterministic for a fixed seed apart
    from the wall-time bookkeeping.
    """
    if n_init < 2:
        raise ConfigError(f"n_init must be >= 2, got {n_init}")
    if budget < n_init:
        raise ConfigError(f"budget {budget} smaller than initial design {n_init}")

    init_design = _sobol(seed, n_init)
    history = TrialHistory()
    for trial_index in range(budget):
        if trial_index < n_init:
            params = space.from_unit(init_design[trial_index])
        elif not history.successful():
            # No usable observations yet: keep sampling the stream.
            params = space.from_unit(_sobol(seed, trial_index + 1)[-1])
        else:
            surrogate = _fit_on(history, space)
            params = suggest_next(surrogate, space, history, seed + 7919 * trial_index)
        k, alpha = params
        start = time.perf_counter()
        flag = FLAG_OK
        try:
            result = objective(k, alpha)
        except Exception:
            value = FAILED_OBJECTIVE
            flag = FLAG_FAILED
        else:
            if isinstance(result, tuple):
                value, flag = float(result[0]), str(result[1])
            else:
                value = float(result)
            if not math.isfinite(value):
                value, flag = FAILED_OBJECTIVE, FLAG_FAILED
        seconds = time.perf_counter() - start
        history.trials.append(
            Trial(trial_index, k, alpha, value, flag, seconds)
        )
    if not history.successful():
        raise OptimizationError(
            f"all {budget} trials failed; no incumbent available"
        )
    return history


def save_trials_csv(history: TrialHistory, path) -> None:
    with open(path, "w") as fh:
        fh.write("trial,K,alpha,objective,flag,seconds\n")
        for t in history.trials:
            fh.write(f"{t.index},{t.k},{t.alpha!r},{t.objective!r},{t.flag},{t.seconds!r}\n")


def save_best_params(history: TrialHistory, path) -> None:
    best = history.incumbent
    with open(path, "w") as fh:
        json.dump(
            {"K": best.k, "alpha": best.alpha, "objective": best.objective},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")

"""Single-layer LSTM regressor trained by backpropagation through time.

The cell follows the classic gate ordering on the concatenated vector
[h_{t-1}, x_t]:

    f = sigmoid(W_f [h, x] + b_f)        forget gate
    i = sigmoid(W_i [h, x] + b_i)        input gate
    o = sigmoid(W_o [h, x] + b_o)        output gate
    cbar = tanh(W_c [h, x] + b_c)        candidate cell state
    c <- f * c_prev + i * cbar
    h <- o * tanh(c)

A linear readout of the final hidden state produces the scalar
prediction. Everything runs in float64 so analytic gradients can be
validated against central finite differences to tight tolerances.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigError, NumericError

PARAM_FIELDS = ("w_f", "w_i", "w_o", "w_c", "b_f", "b_i", "b_o", "b_c", "w_out", "b_out")

INIT_SCALE = 0.08
FORGET_BIAS_OFFSET = 1.0


@dataclass(frozen=True)
class LstmParams:
    w_f: np.ndarray  # (hidden, hidden + input)
    w_i: np.ndarray
    w_o: np.ndarray
    w_c: np.ndarray
    b_f: np.ndarray  # (hidden,)
    b_i: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray
    w_out: np.ndarray  # (hidden,)
    b_out: float

    def __post_init__(self):
        h, hd = self.w_f.shape
        for name in ("w_i", "w_o", "w_c"):
            if getattr(self, name).shape != (h, hd):
                raise ConfigError(f"{name} shape {getattr(self, name).shape} != {(h, hd)}")
        for name in ("b_f", "b_i", "b_o", "b_c"):
            if getattr(self, name).shape != (h,):
                raise ConfigError(f"{name} must have shape ({h},)")
        if self.w_out.shape != (h,):
            raise ConfigError(f"w_out must have shape ({h},)")
        for name in PARAM_FIELDS:
            value = getattr(self, name)
            if not np.all(np.isfinite(value)):
                raise NumericError(f"non-finite entries in {name}")

    @property
    def hidden_size(self) -> int:
        return self.w_f.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_f.shape[1] - self.w_f.shape[0]

    def arrays(self):
        for name in PARAM_FIELDS:
            yield name, getattr(self, name)


@dataclass(frozen=True)
class LstmState:
    h: np.ndarray
    c: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    hidden_size: int = 32
    batch_size: int = 64
    epochs: int = 100
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.hidden_size < 1 or self.batch_size < 1:
            raise ConfigError("hidden_size and batch_size must be positive")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0 or self.eps <= 0:
            raise ConfigError("learning_rate and eps must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("Adam betas must lie in [0, 1)")
        if self.clip_norm <= 0:
            raise ConfigError("clip_norm must be positive")


@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0

    @classmethod
    def zeros_like(cls, params: LstmParams) -> "AdamState":
        return cls(
            m={name: np.zeros_like(np.asarray(arr, dtype=float)) for name, arr in params.arrays()},
            v={name: np.zeros_like(np.asarray(arr, dtype=float)) for name, arr in params.arrays()},
        )


def _sigmoid(z):
    return expit(z)


def init_params(hidden_size: int, input_size: int, seed: int) -> LstmParams:
    """Seeded uniform init in [-0.08, 0.08]; forget-gate bias offset +1."""
    rng = np.random.default_rng(seed)

    def u(*shape):
        return rng.uniform(-INIT_SCALE, INIT_SCALE, shape)

    hd = hidden_size + input_size
    return LstmParams(
        w_f=u(hidden_size, hd),
        w_i=u(hidden_size, hd),
        w_o=u(hidden_size, hd),
        w_c=u(hidden_size, hd),
        b_f=u(hidden_size) + FORGET_BIAS_OFFSET,
        b_i=u(hidden_size),
        b_o=u(hidden_size),
        b_c=u(hidden_size),
        w_out=u(hidden_size),
        b_out=float(rng.uniform(-INIT_SCALE, INIT_SCALE)),
    )


def _stacked(params: LstmParams):
    w = np.concatenate([params.w_f, params.w_i, params.w_o, params.w_c], axis=0)
    b = np.concatenate([params.b_f, params.b_i, params.b_o, params.b_c])
    return w, b


def lstm_step(params: LstmParams, state: LstmState, x_t: np.ndarray) -> LstmState:
    """One recurrence step for a single sample."""
    concat = np.concatenate([state.h, np.atleast_1d(np.asarray(x_t, dtype=float))])
    f = _sigmoid(params.w_f @ concat + params.b_f)
    i = _sigmoid(params.w_i @ concat + params.b_i)
    o = _sigmoid(params.w_o @ concat + params.b_o)
    cbar = np.tanh(params.w_c @ concat + params.b_c)
    c = f * state.c + i * cbar
    h = o * np.tanh(c)
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(c))):
        raise NumericError("non-finite activation in recurrence step")
    return LstmState(h=h, c=c)


def forward_batch(params: LstmParams, windows: np.ndarray):
    """Run (B, L, d) windows from zero state; returns (predictions, cache)."""
    windows = np.asarray(windows, dtype=float)
    if windows.ndim != 3:
        raise ConfigError(f"windows must be (B, L, d), got shape {windows.shape}")
    b, length, _ = windows.shape
    hidden = params.hidden_size
    w, bias = _stacked(params)
    h = np.zeros((b, hidden))
    c = np.zeros((b, hidden))
    cache = {"concat": [], "f": [], "i": [], "o": [], "cbar": [], "c_prev": [], "tanh_c": []}
    for t in range(length):
        concat = np.concatenate([h, windows[:, t, :]], axis=1)
        z = concat @ w.T + bias
        f = _sigmoid(z[:, :hidden])
        i = _sigmoid(z[:, hidden : 2 * hidden])
        o = _sigmoid(z[:, 2 * hidden : 3 * hidden])
        cbar = np.tanh(z[:, 3 * hidden :])
        cache["c_prev"].append(c)
        c = f * c + i * cbar
        tanh_c = np.tanh(c)
        h = o * tanh_c
        for key, value in (("concat", concat), ("f", f), ("i", i), ("o", o),
                           ("cbar", cbar), ("tanh_c", tanh_c)):
            cache[key].append(value)
    preds = h @ params.w_out + params.b_out
    if not np.all(np.isfinite(preds)):
        raise NumericError("non-finite prediction in forward pass")
    cache["h_last"] = h
    cache["preds"] = preds
    return preds, cache


def forward(params: LstmParams, window: np.ndarray):
    """Single-window forward pass; returns (prediction, cache)."""
    preds, cache = forward_batch(params, np.asarray(window, dtype=float)[None, :, :])
    return float(preds[0]), cache


def backward_batch(params: LstmParams, cache: dict, targets: np.ndarray) -> dict:
    """Gradients of mean_b 0.5*(pred_b - target_b)^2 for every parameter."""
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    preds = cache["preds"]
    b = preds.shape[0]
    hidden = params.hidden_size
    w, _ = _stacked(params)

    dpred = (preds - targets) / b  # (B,)
    grads = {
        "w_out": cache["h_last"].T @ dpred,
        "b_out": float(dpred.sum()),
    }
    dw = np.zeros_like(w)
    db = np.zeros(4 * hidden)
    dh = np.outer(dpred, params.w_out)
    dc = np.zeros_like(dh)
    for t in range(len(cache["concat"]) - 1, -1, -1):
        f = cache["f"][t]
        i = cache["i"][t]
        o = cache["o"][t]
        cbar = cache["cbar"][t]
        tanh_c = cache["tanh_c"][t]
        c_prev = cache["c_prev"][t]
        concat = cache["concat"][t]

        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
        df = dc * c_prev
        di = dc * cbar
        dcbar = dc * i

        dz = np.concatenate(
            [
                df * f * (1.0 - f),
                di * i * (1.0 - i),
                do * o * (1.0 - o),
                dcbar * (1.0 - cbar * cbar),
            ],
            axis=1,
        )
        dw += dz.T @ concat
        db += dz.sum(axis=0)
        dconcat = dz @ w
        dh = dconcat[:, :hidden]
        dc = dc * f

    grads["w_f"] = dw[:hidden]
    grads["w_i"] = dw[hidden : 2 * hidden]
    grads["w_o"] = dw[2 * hidden : 3 * hidden]
    grads["w_c"] = dw[3 * hidden :]
    grads["b_f"] = db[:hidden]
    grads["b_i"] = db[hidden : 2 * hidden]
    grads["b_o"] = db[2 * hidden : 3 * hidden]
    grads["b_c"] = db[3 * hidden :]
    return grads


def backward(params: LstmParams, cache: dict, target: float) -> dict:
    """Single-window gradients of 0.5*(pred - target)^2."""
    return backward_batch(params, cache, np.array([float(target)]))


def clip_gradients(grads: dict, clip_norm: float) -> dict:
    """Scale all gradients so their joint L2 norm is at most clip_norm."""
    total = math.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values()))
    if total <= clip_norm or total == 0.0:
        return grads
    scale = clip_norm / total
    return {name: g * scale for name, g in grads.items()}


def adam_update(params: LstmParams, grads: dict, state: AdamState, config: TrainConfig):
    """Bias-corrected Adam step; returns (new params, advanced state)."""
    state.step += 1
    t = state.step
    lr = config.learning_rate
    updated = {}
    for name, value in params.arrays():
        g = np.asarray(grads[name], dtype=float)
        state.m[name] = config.beta1 * state.m[name] + (1.0 - config.beta1) * g
        state.v[name] = config.beta2 * state.v[name] + (1.0 - config.beta2) * g * g
        m_hat = state.m[name] / (1.0 - config.beta1**t)
        v_hat = state.v[name] / (1.0 - config.beta2**t)
        step = lr * m_hat / (np.sqrt(v_hat) + config.eps)
        updated[name] = value - step if name != "b_out" else float(value - step)
    return LstmParams(**updated), state


def train(windows: np.ndarray, targets: np.ndarray, config: TrainConfig):
    """Mini-batch Adam training; returns (params, per-epoch loss trace).

    Batches are drawn in a seeded shuffled order each epoch; the trace
    records the epoch's mean squared error as seen during the pass.
    Deterministic for a fixed config.
    """
    windows = np.asarray(windows, dtype=float)
    targets = np.asarray(targets, dtype=float).ravel()
    if windows.ndim != 3 or windows.shape[0] != targets.size or targets.size < 1:
        raise ConfigError(
            f"inconsistent dataset: windows {windows.shape}, targets {targets.shape}"
        )
    n = targets.size
    rng = np.random.default_rng(config.seed)
    params = init_params(config.hidden_size, windows.shape[2], seed=int(rng.integers(2**63)))
    adam = AdamState.zeros_like(params)

    losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        sq_sum = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            preds, cache = forward_batch(params, windows[batch])
            sq_sum += float(np.sum((preds - targets[batch]) ** 2))
            grads = backward_batch(params, cache, targets[batch])
            grads = clip_gradients(grads, config.clip_norm)
            params, adam = adam_update(params, grads, adam, config)
        mse = sq_sum / n
        if not math.isfinite(mse):
            raise NumericError(f"training loss became non-finite at epoch {epoch}")
        losses.append(mse)
    return params, losses


def predict(params: LstmParams, windows: np.ndarray) -> np.ndarray:
    """Stateless batch prediction over (B, L, d) windows."""
    preds, _ = forward_batch(params, windows)
    return preds


def save_params(params: LstmParams, path) -> None:
    """Write all tensors to one .npz (shape-headed, 64-bit little-endian)."""
    np.savez(
        path,
        **{name: np.asarray(value, dtype="<f8") for name, value in params.arrays()},
    )


def load_params(path) -> LstmParams:
    with np.load(path) as data:
        fields = {name: data[name] for name in PARAM_FIELDS}
    fields["b_out"] = float(fields["b_out"])
    return LstmParams(**fields)


def save_loss_trace(losses, path) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,mse\n")
        for epoch, mse in enumerate(losses):
            fh.write(f"{epoch},{mse!r}\n")

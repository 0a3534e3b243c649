"""A single-layer LSTM regressor in numpy with hand-written backpropagation.

The lag window is consumed as a sequence of scalars, one per time step, and
the last hidden state feeds a linear output unit.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

GATES = ("f", "i", "C", "o")


class TrainingError(RuntimeError):
    """Training produced non-finite parameters or loss."""


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class LstmState:
    C: np.ndarray
    h: np.ndarray

    @classmethod
    def zeros(cls, hidden: int, batch: int | None = None) -> "LstmState":
        shape = (hidden,) if batch is None else (batch, hidden)
        return cls(np.zeros(shape), np.zeros(shape))


@dataclass
class LstmParams:
    """Gate weights act on the concatenation ``[h_prev, x_t]``."""

    W_f: np.ndarray
    W_i: np.ndarray
    W_C: np.ndarray
    W_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_C: np.ndarray
    b_o: np.ndarray
    W_fc: np.ndarray
    b_fc: np.ndarray  # shape (1,)

    @property
    def hidden(self) -> int:
        return self.W_f.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.W_f.shape[1] - self.hidden

    @classmethod
    def zeros(cls, hidden: int, n_inputs: int = 1) -> "LstmParams":
        w = lambda: np.zeros((hidden, hidden + n_inputs))  # noqa: E731
        b = lambda: np.zeros(hidden)  # noqa: E731
        return cls(w(), w(), w(), w(), b(), b(), b(), b(), np.zeros(hidden), np.zeros(1))

    @classmethod
    def init(cls, hidden: int, n_inputs: int, rng: np.random.Generator) -> "LstmParams":
        bound = 1.0 / np.sqrt(hidden)
        u = lambda *shape: rng.uniform(-bound, bound, size=shape)  # noqa: E731
        w = [u(hidden, hidden + n_inputs) for _ in GATES]
        b = [u(hidden) for _ in GATES]
        b[0] = b[0] + 1.0  # forget-gate bias starts open
        return cls(*w, *b, u(hidden), u(1))

    def to_dict(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d) -> "LstmParams":
        return cls(**{f.name: np.asarray(d[f.name], dtype=float) for f in fields(cls)})

    def copy(self) -> "LstmParams":
        return LstmParams(**{k: v.copy() for k, v in self.to_dict().items()})


def lstm_cell_step(x_t, prev: LstmState, params: LstmParams, cache: list | None = None) -> LstmState:
    """Advance one step. Works on a single vector or on a batch of rows."""
    x_t = np.asarray(x_t, dtype=float)
    if not (np.all(np.isfinite(x_t)) and np.all(np.isfinite(prev.h)) and np.all(np.isfinite(prev.C))):
        raise ValueError("non-finite LSTM input or state")
    hx = np.concatenate([prev.h, x_t], axis=-1)
    f = _sigmoid(hx @ params.W_f.T + params.b_f)
    i = _sigmoid(hx @ params.W_i.T + params.b_i)
    g = np.tanh(hx @ params.W_C.T + params.b_C)
    o = _sigmoid(hx @ params.W_o.T + params.b_o)
    C = f * prev.C + i * g
    tC = np.tanh(C)
    h = o * tC
    if cache is not None:
        cache.append((hx, f, i, g, o, prev.C, tC))
    return LstmState(C, h)


def lstm_forecast(window, params: LstmParams) -> float:
    window = np.asarray(window, dtype=float).reshape(-1)
    state = LstmState.zeros(params.hidden)
    for x in window:
        state = lstm_cell_step(np.array([x]), state, params)
    return float(state.h @ params.W_fc + params.b_fc[0])


def forecast_batch(X, params: LstmParams, cache: list | None = None):
    X = np.asarray(X, dtype=float)
    state = LstmState.zeros(params.hidden, X.shape[0])
    for t in range(X.shape[1]):
        state = lstm_cell_step(X[:, t:t + 1], state, params, cache)
    out = state.h @ params.W_fc + params.b_fc[0]
    return (out, state) if cache is not None else out


def loss_and_grad(params: LstmParams, X, y) -> tuple[float, LstmParams]:
    """Mean squared error over rows and its gradient by backpropagation through time."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    cache: list = []
    out, last = forecast_batch(X, params, cache)
    n = y.size
    r = out - y
    loss = float(np.mean(r**2))
    d_out = 2.0 * r / n

    grad = LstmParams.zeros(params.hidden, params.n_inputs)
    grad.W_fc = last.h.T @ d_out
    grad.b_fc = np.array([d_out.sum()])
    H = params.hidden
    W = {"f": params.W_f, "i": params.W_i, "C": params.W_C, "o": params.W_o}
    dh = np.outer(d_out, params.W_fc)
    dC = np.zeros_like(dh)
    for hx, f, i, g, o, C_prev, tC in reversed(cache):
        do = dh * tC
        dC = dC + dh * o * (1.0 - tC**2)
        da = {
            "f": dC * C_prev * f * (1.0 - f),
            "i": dC * g * i * (1.0 - i),
            "C": dC * i * (1.0 - g**2),
            "o": do * o * (1.0 - o),
        }
        dhx = 0.0
        for k in GATES:
            setattr(grad, f"W_{k}", getattr(grad, f"W_{k}") + da[k].T @ hx)
            setattr(grad, f"b_{k}", getattr(grad, f"b_{k}") + da[k].sum(axis=0))
            dhx = dhx + da[k] @ W[k]
        dh = dhx[:, :H]
        dC = dC * f
    return loss, grad


def fit(X, y, hidden: int = 64, epochs: int = 300, learning_rate: float = 0.01,
        dropout_rate: float = 0.5, seed: int = 0, beta1: float = 0.9,
        beta2: float = 0.999, eps: float = 1e-8):
    """Full-batch Adam on squared error.

    While training, each lag position of each row is zeroed with probability
    ``dropout_rate`` (fresh mask every epoch) and survivors are rescaled by
    ``1 / (1 - dropout_rate)``. Returns the parameters and the per-epoch loss,
    followed by the final dropout-free training loss.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    params = LstmParams.init(hidden, 1, rng)
    names = list(params.to_dict())
    m = {k: np.zeros_like(v) for k, v in params.to_dict().items()}
    v = {k: np.zeros_like(a) for k, a in params.to_dict().items()}
    history = []
    keep = 1.0 - dropout_rate
    for epoch in range(1, epochs + 1):
        if dropout_rate > 0:
            Xd = X * (rng.random(X.shape) < keep) / keep
        else:
            Xd = X
        loss, grad = loss_and_grad(params, Xd, y)
        if not np.isfinite(loss):
            raise TrainingError(f"LSTM loss became non-finite at epoch {epoch}")
        history.append(loss)
        for k in names:
            gk = getattr(grad, k)
            m[k] = beta1 * m[k] + (1 - beta1) * gk
            v[k] = beta2 * v[k] + (1 - beta2) * gk**2
            m_hat = m[k] / (1 - beta1**epoch)
            v_hat = v[k] / (1 - beta2**epoch)
            setattr(params, k, getattr(params, k) - learning_rate * m_hat / (np.sqrt(v_hat) + eps))
    final = float(np.mean((forecast_batch(X, params) - y) ** 2))
    if not np.isfinite(final):
        raise TrainingError("LSTM diverged")
    history.append(final)
    return params, history

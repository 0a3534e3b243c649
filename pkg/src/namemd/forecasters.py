"""Regressors mapping a lag window to a future value.

Every trainer takes a :class:`~namemd.series.SupervisedSet` and a
:class:`ModelSpec` and returns a :class:`TrainedModel`; :func:`predict`
dispatches on the model kind. Inputs are expected on a [0, 1] scale.
"""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from namemd import lstm
from namemd.lstm import TrainingError
from namemd.series import SupervisedSet

# Singular values below this fraction of the largest are dropped when
# solving ELM/RVFL output weights. Without it, near-collinear sigmoid
# features on smooth components get huge, badly extrapolating weights.
PINV_RTOL = 1e-4

KINDS = ("LR", "BPNN", "ELM", "RVFL", "LSTM", "SeasonalNaive")

_DEFAULTS = {
    # kind: (hidden_units, iterations, epochs)
    "LR": (0, 1, 0),
    "BPNN": (7, 10, 0),
    "ELM": (64, 100, 0),
    "RVFL": (64, 100, 0),
    "LSTM": (64, 1, 300),
    "SeasonalNaive": (0, 1, 0),
}


@dataclass(frozen=True)
class ModelSpec:
    """Model kind plus hyperparameters; ``None`` fields take the kind's default.

    ``iterations`` is the gradient-step budget for BPNN and the number of
    random hidden-layer restarts for ELM and RVFL.
    """

    kind: str
    hidden_units: int | None = None
    epochs: int | None = None
    learning_rate: float = 0.01
    dropout_rate: float = 0.5
    iterations: int | None = None
    rng_seed: int = 0
    season: int = 12
    pinv_rtol: float = PINV_RTOL

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        hidden, iters, epochs = _DEFAULTS[self.kind]
        if self.hidden_units is None:
            object.__setattr__(self, "hidden_units", hidden)
        if self.iterations is None:
            object.__setattr__(self, "iterations", iters)
        if self.epochs is None:
            object.__setattr__(self, "epochs", epochs)
        if self.hidden_units < 0 or self.iterations < 1 or self.epochs < 0:
            raise ValueError(f"invalid sizes in {self}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if not 0.0 <= self.pinv_rtol < 1.0:
            raise ValueError("pinv_rtol must lie in [0, 1)")

    def with_seed(self, seed: int) -> "ModelSpec":
        return ModelSpec(**{**asdict(self), "rng_seed": int(seed)})


@dataclass
class TrainedModel:
    kind: str
    spec: ModelSpec
    lag_count: int
    params: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def predict(self, inputs) -> np.ndarray:
        return predict(self, inputs)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _design(X):
    return np.column_stack([X, np.ones(X.shape[0])])


def train_lr(data: SupervisedSet, spec: ModelSpec | None = None) -> TrainedModel:
    """Ordinary least squares with intercept (SVD-based, minimum-norm if rank deficient)."""
    spec = spec or ModelSpec("LR")
    A = _design(data.inputs)
    coef, _, rank, _ = np.linalg.lstsq(A, data.targets, rcond=None)
    return TrainedModel(
        "LR", spec, data.lag_count,
        {"coef": coef[:-1], "intercept": coef[-1:]},
        {"rank_deficient": bool(rank < A.shape[1])},
    )


def _hidden(X, W, b):
    return sigmoid(X @ W + b)


def draw_hidden_layers(seed: int, n_inputs: int, n_hidden: int, restarts: int):
    """Gaussian input weights and biases, one (W, b) pair per restart, W drawn first."""
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        W = rng.standard_normal((n_inputs, n_hidden))
        b = rng.standard_normal(n_hidden)
        yield W, b


def _random_feature_fit(data: SupervisedSet, spec: ModelSpec, direct_link: bool) -> TrainedModel:
    X, y = data.inputs, data.targets
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    best = None
    for W, b in draw_hidden_layers(spec.rng_seed, X.shape[1], spec.hidden_units, spec.iterations):
        F = _hidden(X, W, b)
        if direct_link:
            F = np.column_stack([F, _design(X)])
        beta = np.linalg.pinv(F, rtol=spec.pinv_rtol) @ y
        err = float(np.sqrt(np.mean((F @ beta - y) ** 2)))
        if best is None or err < best[0]:
            best = (err, W, b, beta)
    err, W, b, beta = best
    return TrainedModel(
        spec.kind, spec, data.lag_count,
        {"W": W, "b": b, "beta": beta},
        {"train_rmse": err},
    )


def train_elm(data: SupervisedSet, spec: ModelSpec | None = None) -> TrainedModel:
    """Sigmoid random hidden layer with pseudoinverse output weights.

    ``spec.iterations`` independent hidden layers are drawn; the one with the
    lowest training RMSE is kept.
    """
    return _random_feature_fit(data, spec or ModelSpec("ELM"), direct_link=False)


def train_rvfl(data: SupervisedSet, spec: ModelSpec | None = None) -> TrainedModel:
    """ELM whose output layer also sees the raw inputs and a constant."""
    return _random_feature_fit(data, spec or ModelSpec("RVFL"), direct_link=True)


# --- BPNN ------------------------------------------------------------------

def init_bpnn(n_inputs: int, n_hidden: int, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    return {
        "W1": rng.standard_normal((n_inputs, n_hidden)) / np.sqrt(n_inputs),
        "b1": np.zeros(n_hidden),
        "w2": rng.standard_normal(n_hidden) / np.sqrt(n_hidden),
        "b2": np.zeros(1),
    }


def bpnn_forward(params, X):
    H = sigmoid(X @ params["W1"] + params["b1"])
    return H @ params["w2"] + params["b2"][0], H


def bpnn_loss_and_grad(params, X, y):
    """Mean squared error and its gradient with respect to every parameter."""
    out, H = bpnn_forward(params, X)
    r = out - y
    n = y.size
    loss = float(np.mean(r**2))
    d_out = 2.0 * r / n
    dH = np.outer(d_out, params["w2"]) * H * (1.0 - H)
    grads = {
        "W1": X.T @ dH,
        "b1": dH.sum(axis=0),
        "w2": H.T @ d_out,
        "b2": np.array([d_out.sum()]),
    }
    return loss, grads


def train_bpnn(data: SupervisedSet, spec: ModelSpec | None = None) -> TrainedModel:
    """One sigmoid hidden layer, full-batch gradient descent."""
    spec = spec or ModelSpec("BPNN")
    X, y = data.inputs, data.targets
    params = init_bpnn(X.shape[1], spec.hidden_units, spec.rng_seed)
    history = []
    # overflow is detected below and reported as a TrainingError
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(spec.iterations):
            loss, grads = bpnn_loss_and_grad(params, X, y)
            history.append(loss)
            for k in params:
                params[k] = params[k] - spec.learning_rate * grads[k]
            if not all(np.all(np.isfinite(v)) for v in params.values()):
                raise TrainingError(f"BPNN diverged at learning rate {spec.learning_rate}")
        final, _ = bpnn_loss_and_grad(params, X, y)
    history.append(final)
    if not np.isfinite(final):
        raise TrainingError(f"BPNN diverged at learning rate {spec.learning_rate}")
    return TrainedModel("BPNN", spec, data.lag_count, params, {"loss_history": history})


# --- LSTM and seasonal naive -------------------------------------------------

def train_lstm(data: SupervisedSet, spec: ModelSpec | None = None) -> TrainedModel:
    spec = spec or ModelSpec("LSTM")
    if data.n_rows < 8:
        raise ValueError(f"LSTM training needs at least 8 rows, got {data.n_rows}")
    params, history = lstm.fit(
        data.inputs, data.targets,
        hidden=spec.hidden_units, epochs=spec.epochs, learning_rate=spec.learning_rate,
        dropout_rate=spec.dropout_rate, seed=spec.rng_seed,
    )
    return TrainedModel("LSTM", spec, data.lag_count, params.to_dict(), {"loss_history": history})


def seasonal_naive_forecast(series, horizon: int, season: int = 12) -> float:
    """Value observed one season (or whole seasons) before the target month."""
    y = np.asarray(series, dtype=float)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if y.size < season + horizon:
        raise ValueError(f"series of length {y.size} too short for horizon {horizon}")
    back = season * int(np.ceil(horizon / season))
    return float(y[y.size - 1 + horizon - back])


def train_seasonal_naive(data: SupervisedSet, spec: ModelSpec | None = None) -> TrainedModel:
    spec = spec or ModelSpec("SeasonalNaive")
    back = spec.season * int(np.ceil(data.horizon / spec.season))
    column = data.lag_count - 1 + data.horizon - back
    if column < 0:
        raise ValueError(
            f"seasonal naive needs lag_count >= {back - data.horizon + 1}, got {data.lag_count}"
        )
    return TrainedModel("SeasonalNaive", spec, data.lag_count, {"column": np.array([column])})


TRAINERS = {
    "LR": train_lr,
    "BPNN": train_bpnn,
    "ELM": train_elm,
    "RVFL": train_rvfl,
    "LSTM": train_lstm,
    "SeasonalNaive": train_seasonal_naive,
}


def train(data: SupervisedSet, spec: ModelSpec) -> TrainedModel:
    return TRAINERS[spec.kind](data, spec)


def predict(model: TrainedModel, inputs) -> np.ndarray:
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    if X.shape[1] != model.lag_count:
        raise ValueError(f"expected {model.lag_count} lags per row, got {X.shape[1]}")
    p = model.params
    if model.kind == "LR":
        out = X @ p["coef"] + p["intercept"][0]
    elif model.kind == "ELM":
        out = _hidden(X, p["W"], p["b"]) @ p["beta"]
    elif model.kind == "RVFL":
        out = np.column_stack([_hidden(X, p["W"], p["b"]), _design(X)]) @ p["beta"]
    elif model.kind == "BPNN":
        out, _ = bpnn_forward(p, X)
    elif model.kind == "LSTM":
        out = lstm.forecast_batch(X, lstm.LstmParams.from_dict(p))
    elif model.kind == "SeasonalNaive":
        out = X[:, int(p["column"][0])]
    else:
        raise ValueError(f"unknown model kind {model.kind!r}")
    return np.asarray(out, dtype=float)


def dumps_model(model: TrainedModel) -> bytes:
    """Serialize to an ``.npz`` blob; the header carries kind, spec and metadata."""
    header = {
        "kind": model.kind,
        "spec": asdict(model.spec),
        "lag_count": model.lag_count,
        "meta": model.meta,
    }
    buf = io.BytesIO()
    arrays = {f"param__{k}": v for k, v in model.params.items()}
    np.savez(buf, header=np.array(json.dumps(header, sort_keys=True)), **arrays)
    return buf.getvalue()


def loads_model(blob: bytes) -> TrainedModel:
    with np.load(io.BytesIO(blob), allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        params = {k.removeprefix("param__"): data[k].copy() for k in data.files if k.startswith("param__")}
    return TrainedModel(
        header["kind"], ModelSpec(**header["spec"]), header["lag_count"], params, header["meta"]
    )


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_bytes(dumps_model(model))


def load_model(path) -> TrainedModel:
    return loads_model(Path(path).read_bytes())

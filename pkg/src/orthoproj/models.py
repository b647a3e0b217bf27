"""Small differentiable models covering both objective families.

Likelihood-style losses (squared error on a quadratic system, linear and
logistic regression, a two-layer MLP, categorical NLL for a linear softmax
policy) and a pairwise preference loss against a frozen reference policy.
All gradients are closed-form or hand-backpropagated; the independent
finite-difference cross-check lives in :mod:`orthoproj.oracle`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericError, ConfigurationError
from .linalg import as_vector

__all__ = ["ModelSpec", "LossKind", "Batch", "loss", "gradient", "SUPPORTED_PAIRS"]

MODEL_KINDS = ("quadratic", "linear_regression", "logistic_regression", "mlp2", "softmax_policy")
LOSS_TAGS = ("squared_error", "cross_entropy", "nll_sft", "dpo_pairwise")
ACTIVATIONS = ("tanh", "relu")

# Which loss each model accepts. The quadratic system is a single analytic
# objective, the rest are per-example batch means.
SUPPORTED_PAIRS = {
    "quadratic": ("squared_error",),
    "linear_regression": ("squared_error",),
    "logistic_regression": ("cross_entropy",),
    "mlp2": ("squared_error",),
    "softmax_policy": ("nll_sft", "dpo_pairwise"),
}


@dataclass(frozen=True)
class ModelSpec:
    """Architecture descriptor; the parameter dimension follows from it."""

    kind: str
    dims: tuple[int, ...]
    activation: str = "tanh"

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigurationError(f"unknown model kind {self.kind!r}")
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if any(d < 1 for d in dims):
            raise ConfigurationError(f"dims must be positive, got {dims}")
        arity = {"quadratic": 1, "linear_regression": 1, "logistic_regression": 1,
                 "mlp2": 3, "softmax_policy": 2}[self.kind]
        if len(dims) != arity:
            raise ConfigurationError(f"{self.kind} needs {arity} dims, got {dims}")
        if self.kind == "mlp2" and self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")

    @property
    def param_dim(self) -> int:
        if self.kind in ("quadratic", "linear_regression", "logistic_regression"):
            return self.dims[0]
        if self.kind == "mlp2":
            i, h, o = self.dims
            return h * i + h + o * h + o
        c, v = self.dims  # softmax_policy: one weight row per vocabulary token
        return v * c


@dataclass(frozen=True)
class LossKind:
    """Loss tag plus the preference temperature used by dpo_pairwise."""

    tag: str
    beta: float = 0.2

    def __post_init__(self):
        if self.tag not in LOSS_TAGS:
            raise ConfigurationError(f"unknown loss tag {self.tag!r}")
        if self.tag == "dpo_pairwise" and not self.beta > 0:
            raise ConfigurationError(f"beta must be positive for dpo_pairwise, got {self.beta}")


@dataclass(frozen=True)
class Batch:
    """One evaluation unit.

    inputs:     (n, feature_dim) rows, or the full system matrix A for the
                quadratic kind.
    targets:    per-row targets (regression values or integer labels); the
                right-hand side b for quadratic.
    pairs:      dpo_pairwise only, (n_pairs, 3) int rows
                (context row in inputs, preferred token, rejected token).
    ref_params: dpo_pairwise only, frozen reference-policy parameters.
    """

    inputs: np.ndarray
    targets: np.ndarray | None = None
    pairs: np.ndarray | None = None
    ref_params: np.ndarray | None = None

    @property
    def size(self) -> int:
        if self.pairs is not None:
            return self.pairs.shape[0]
        return self.inputs.shape[0]


def _check(spec: ModelSpec, kind: LossKind, theta, batch: Batch) -> np.ndarray:
    if kind.tag not in SUPPORTED_PAIRS[spec.kind]:
        raise ConfigurationError(f"loss {kind.tag!r} is not defined for model {spec.kind!r}")
    th = as_vector(theta, "theta")
    if th.size != spec.param_dim:
        raise DimensionError(f"theta has length {th.size}, model needs {spec.param_dim}")
    x = np.asarray(batch.inputs, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"batch inputs must be 2-D, got shape {x.shape}")
    if x.shape[0] < 1:
        raise DimensionError("batch must contain at least one row")
    if not np.all(np.isfinite(x)):
        raise NumericError("batch inputs contain non-finite entries")
    if kind.tag == "dpo_pairwise":
        if batch.ref_params is None or batch.pairs is None:
            raise ConfigurationError("dpo_pairwise batches need pairs and ref_params")
    elif batch.ref_params is not None:
        raise ConfigurationError("ref_params is only meaningful for dpo_pairwise")
    return th


def _finite(value: float, what: str) -> float:
    if not np.isfinite(value):
        raise NumericError(f"non-finite {what}")
    return float(value)


def _finite_vec(v: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise NumericError(f"non-finite {what}")
    return v


# ---------------------------------------------------------------------------
# forward passes / gradients per kind
# ---------------------------------------------------------------------------

def _unpack_mlp(theta: np.ndarray, dims: tuple[int, int, int]):
    i, h, o = dims
    k = 0
    w1 = theta[k:k + h * i].reshape(h, i); k += h * i
    b1 = theta[k:k + h]; k += h
    w2 = theta[k:k + o * h].reshape(o, h); k += o * h
    b2 = theta[k:k + o]
    return w1, b1, w2, b2


def _mlp_forward(theta, dims, activation, x):
    w1, b1, w2, b2 = _unpack_mlp(theta, dims)
    z1 = x @ w1.T + b1
    h = np.tanh(z1) if activation == "tanh" else np.maximum(z1, 0.0)
    y = h @ w2.T + b2
    return z1, h, y


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _dpo_margins(spec, kind, theta, batch):
    c, v = spec.dims
    x = np.asarray(batch.inputs, dtype=np.float64)
    pairs = np.asarray(batch.pairs)
    if pairs.ndim != 2 or pairs.shape[1] != 3:
        raise DimensionError(f"pairs must be (n, 3), got shape {pairs.shape}")
    ref = as_vector(batch.ref_params, "ref_params")
    if ref.size != spec.param_dim:
        raise DimensionError(f"ref_params has length {ref.size}, model needs {spec.param_dim}")
    rows = pairs[:, 0]
    preferred = pairs[:, 1]
    rejected = pairs[:, 2]
    lp_pol = _log_softmax(x @ theta.reshape(v, c).T)
    lp_ref = _log_softmax(x @ ref.reshape(v, c).T)
    idx = np.arange(pairs.shape[0])
    pol_margin = lp_pol[rows, preferred] - lp_pol[rows, rejected]
    ref_margin = lp_ref[rows, preferred] - lp_ref[rows, rejected]
    del idx
    return kind.beta * (pol_margin - ref_margin), x, rows, preferred, rejected


def loss(spec: ModelSpec, kind: LossKind, theta, batch: Batch) -> float:
    """Scalar loss of the model on the batch.

    Per-example kinds return the batch mean. The quadratic kind is the single
    analytic objective 0.5 * ||A theta - b||^2 with A = inputs, b = targets.
    dpo_pairwise returns mean_p -log sigmoid(margin_p) where the margin is
    beta * ((log pi(y_w|x) - log pi(y_l|x)) - (same under the reference)).
    """
    th = _check(spec, kind, theta, batch)
    x = np.asarray(batch.inputs, dtype=np.float64)

    if spec.kind == "quadratic":
        r = x @ th - np.asarray(batch.targets, dtype=np.float64)
        return _finite(0.5 * float(np.sum(r * r)), "quadratic loss")

    if spec.kind == "linear_regression":
        r = x @ th - np.asarray(batch.targets, dtype=np.float64)
        return _finite(float(np.sum(r * r)) / (2.0 * x.shape[0]), "regression loss")

    if spec.kind == "logistic_regression":
        z = x @ th
        y = np.asarray(batch.targets, dtype=np.float64)
        # mean softplus(z) - y z, the stable form of binary cross-entropy
        return _finite(float(np.mean(np.logaddexp(0.0, z) - y * z)), "logistic loss")

    if spec.kind == "mlp2":
        _, _, y_hat = _mlp_forward(th, spec.dims, spec.activation, x)
        t = np.asarray(batch.targets, dtype=np.float64).reshape(y_hat.shape)
        diff = y_hat - t
        return _finite(float(np.sum(diff * diff)) / (2.0 * x.shape[0]), "mlp loss")

    # softmax_policy
    c, v = spec.dims
    if kind.tag == "nll_sft":
        lp = _log_softmax(x @ th.reshape(v, c).T)
        labels = np.asarray(batch.targets)
        return _finite(-float(np.mean(lp[np.arange(x.shape[0]), labels])), "nll loss")

    margins, _, _, _, _ = _dpo_margins(spec, kind, th, batch)
    # -log sigmoid(m) == softplus(-m)
    return _finite(float(np.mean(np.logaddexp(0.0, -margins))), "dpo loss")


def gradient(spec: ModelSpec, kind: LossKind, theta, batch: Batch) -> np.ndarray:
    """Exact analytic gradient of :func:`loss` with respect to theta."""
    th = _check(spec, kind, theta, batch)
    x = np.asarray(batch.inputs, dtype=np.float64)

    if spec.kind == "quadratic":
        r = x @ th - np.asarray(batch.targets, dtype=np.float64)
        return _finite_vec(x.T @ r, "quadratic gradient")

    if spec.kind == "linear_regression":
        r = x @ th - np.asarray(batch.targets, dtype=np.float64)
        return _finite_vec(x.T @ r / x.shape[0], "regression gradient")

    if spec.kind == "logistic_regression":
        p = _sigmoid(x @ th)
        y = np.asarray(batch.targets, dtype=np.float64)
        return _finite_vec(x.T @ (p - y) / x.shape[0], "logistic gradient")

    if spec.kind == "mlp2":
        z1, h, y_hat = _mlp_forward(th, spec.dims, spec.activation, x)
        t = np.asarray(batch.targets, dtype=np.float64).reshape(y_hat.shape)
        n = x.shape[0]
        w1, _, w2, _ = _unpack_mlp(th, spec.dims)
        d_y = (y_hat - t) / n
        d_w2 = d_y.T @ h
        d_b2 = d_y.sum(axis=0)
        d_h = d_y @ w2
        if spec.activation == "tanh":
            d_z1 = d_h * (1.0 - h * h)
        else:
            d_z1 = d_h * (z1 > 0.0)
        d_w1 = d_z1.T @ x
        d_b1 = d_z1.sum(axis=0)
        g = np.concatenate([d_w1.ravel(), d_b1, d_w2.ravel(), d_b2])
        return _finite_vec(g, "mlp gradient")

    c, v = spec.dims
    if kind.tag == "nll_sft":
        p = np.exp(_log_softmax(x @ th.reshape(v, c).T))
        labels = np.asarray(batch.targets)
        p[np.arange(x.shape[0]), labels] -= 1.0
        return _finite_vec((p.T @ x).ravel() / x.shape[0], "nll gradient")

    margins, x, rows, preferred, rejected = _dpo_margins(spec, kind, th, batch)
    n = margins.shape[0]
    # per pair: d(-log sigmoid(m))/dW = -sigmoid(-m) * beta * (e_w - e_l) x^T
    coef = -_sigmoid(-margins) * kind.beta / n
    token_weights = np.zeros((n, v))
    np.add.at(token_weights, (np.arange(n), preferred), coef)
    np.add.at(token_weights, (np.arange(n), rejected), -coef)
    return _finite_vec((token_weights.T @ x[rows]).ravel(), "dpo gradient")

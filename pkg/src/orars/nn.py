"""Small fully connected networks trained with Adam, in float64 numpy.

Only two heads are supported: a softmax head trained with a per-sample
weighted cross-entropy, and a linear head trained with squared error.
Hidden layers use ReLU.
"""

import copy
import json
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np

from .dataset import format_array

CHECKPOINT_FORMAT = "orars-mlp"
CHECKPOINT_VERSION = 1
HIDDEN_UNITS = (128, 256, 128)
PROB_FLOOR = 1e-12
ACTIVATIONS = ("relu", "softmax", "identity")


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


@dataclass
class MlpModel:
    """Dense layers ``x -> act(x @ W + b)``.

    Inputs are standardised as ``(x - input_shift) / input_scale`` before the
    first layer; the defaults leave them untouched.
    """

    weights: list
    biases: list
    activations: tuple
    input_shift: Optional[np.ndarray] = None
    input_scale: Optional[np.ndarray] = None

    def __post_init__(self):
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in self.biases]
        self.activations = tuple(self.activations)
        n = len(self.weights)
        if n == 0 or len(self.biases) != n or len(self.activations) != n:
            raise ValueError("weights, biases and activations must have equal non-zero length")
        for i, (w, b, a) in enumerate(zip(self.weights, self.biases, self.activations)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i and w.shape[0] != self.weights[i - 1].shape[1]:
                raise ValueError(f"layer {i} input {w.shape[0]} != previous output")
            if a not in ACTIVATIONS:
                raise ValueError(f"layer {i}: unknown activation {a!r}")
            if a == "softmax" and i != n - 1:
                raise ValueError("softmax is only allowed on the final layer")
        if self.input_shift is None:
            self.input_shift = np.zeros(self.input_dim)
        if self.input_scale is None:
            self.input_scale = np.ones(self.input_dim)
        self.input_shift = np.asarray(self.input_shift, dtype=np.float64)
        self.input_scale = np.asarray(self.input_scale, dtype=np.float64)
        if self.input_shift.shape != (self.input_dim,) or self.input_scale.shape != (self.input_dim,):
            raise ValueError("input_shift/input_scale must match input_dim")
        if np.any(self.input_scale <= 0):
            raise ValueError("input_scale must be positive")
        if not all(np.all(np.isfinite(p)) for p in self.params()):
            raise ValueError("model parameters must be finite")

    @property
    def input_dim(self):
        return self.weights[0].shape[0]

    @property
    def output_dim(self):
        return self.weights[-1].shape[1]

    def params(self):
        """Parameters in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_params(self, params):
        return MlpModel(list(params[0::2]), list(params[1::2]), self.activations,
                        self.input_shift, self.input_scale)

    def copy(self):
        return copy.deepcopy(self)


def init_mlp(sizes, activations, seed=0, input_shift=None, input_scale=None):
    """He-uniform weights, zero biases."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases, tuple(activations), input_shift, input_scale)


def classifier_mlp(input_dim, seed=0, hidden=HIDDEN_UNITS, **kw):
    sizes = (input_dim, *hidden, 2)
    return init_mlp(sizes, ("relu",) * len(hidden) + ("softmax",), seed, **kw)


def regressor_mlp(input_dim, seed=0, hidden=HIDDEN_UNITS, **kw):
    sizes = (input_dim, *hidden, 1)
    return init_mlp(sizes, ("relu",) * len(hidden) + ("identity",), seed, **kw)


# --- forward / losses / backward -------------------------------------------

def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "softmax":
        return _softmax(z)
    return z


def _trace(model, x):
    """Per-layer outputs, starting with the standardised input."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValueError(f"input shape {x.shape} does not match input_dim={model.input_dim}")
    outs = [(x - model.input_shift) / model.input_scale]
    for w, b, a in zip(model.weights, model.biases, model.activations):
        outs.append(_activate(outs[-1] @ w + b, a))
    return outs


def forward(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return _trace(model, x[None, :])[-1][0]
    return _trace(model, x)[-1]


def pair_weight(y_i, y_j):
    """Loss weight of a pair: ``min(|y_i - y_j|, 1)``."""
    return np.minimum(np.abs(np.subtract(y_i, y_j)), 1.0)


def weighted_xent_loss(p, label, weight=1.0):
    """``weight * (-(1-label) log p0 - label log p1)``; broadcasts over rows."""
    p = np.maximum(np.asarray(p, dtype=np.float64), PROB_FLOOR)
    label = np.asarray(label, dtype=np.float64)
    out = np.asarray(weight, dtype=np.float64) * (
        -(1 - label) * np.log(p[..., 0]) - label * np.log(p[..., 1]))
    return float(out) if out.ndim == 0 else out


def mse_loss(x, y):
    out = np.square(np.subtract(x, y, dtype=np.float64))
    return float(out) if np.ndim(out) == 0 else out


def _loss_kind(model):
    head = model.activations[-1]
    if head == "softmax":
        return "xent"
    if head == "identity" and model.output_dim == 1:
        return "mse"
    raise ValueError(f"no loss defined for a {head!r} head of width {model.output_dim}")


def per_sample_loss(model, x, targets, weights=None):
    """Loss of each row; targets are 0/1 labels (softmax head) or reals."""
    out = forward(model, np.atleast_2d(x))
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    w = np.ones(len(out)) if weights is None else np.asarray(weights, dtype=np.float64)
    if _loss_kind(model) == "xent":
        return weighted_xent_loss(out, targets, w)
    return w * mse_loss(out[:, 0], targets)


def mean_loss(model, x, targets, weights=None, batch_size=4096):
    """Batch-mean loss, accumulated chunk by chunk in a fixed order."""
    n = len(targets)
    if n == 0:
        return 0.0
    total = 0.0
    for s in range(0, n, batch_size):
        w = None if weights is None else weights[s:s + batch_size]
        total += float(np.sum(per_sample_loss(model, x[s:s + batch_size], targets[s:s + batch_size], w)))
    return total / n


def backward(model, x, targets, weights=None):
    """Mean batch loss and its gradient.

    Returns ``(loss, grads)`` where ``grads`` follows ``model.params()``
    order.  The loss is the plain mean over rows of the per-sample
    (weighted) loss, so zero-weight rows still count in the denominator.
    """
    outs = _trace(model, x)
    B = outs[0].shape[0]
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if targets.shape != (B,):
        raise ValueError(f"expected {B} targets, got {targets.shape}")
    w = np.ones(B) if weights is None else np.asarray(weights, dtype=np.float64).reshape(B)
    y = outs[-1]
    if _loss_kind(model) == "xent":
        loss = float(np.mean(weighted_xent_loss(y, targets, w)))
        onehot = np.stack([1 - targets, targets], axis=1)
        delta = w[:, None] * (y - onehot) / B
    else:
        r = y[:, 0] - targets
        loss = float(np.mean(w * r * r))
        delta = (2.0 * w * r / B)[:, None]
    grads = [None] * (2 * len(model.weights))
    for i in range(len(model.weights) - 1, -1, -1):
        grads[2 * i] = outs[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = (delta @ model.weights[i].T) * (outs[i] > 0)
    return loss, grads


# --- Adam ------------------------------------------------------------------

@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model, lr=1e-4, **kw):
        params = model.params()
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params],
                   lr=lr, **kw)


def adam_step(model, state, grads):
    """One bias-corrected Adam update; returns ``(model, state)``."""
    params = model.params()
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise ValueError("gradient shapes do not match model parameters")
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise FloatingPointError("non-finite gradient")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    m = [b1 * mi + (1 - b1) * g for mi, g in zip(state.m, grads)]
    v = [b2 * vi + (1 - b2) * g * g for vi, g in zip(state.v, grads)]
    c1, c2 = 1 - b1 ** t, 1 - b2 ** t
    new = [p - state.lr * (mi / c1) / (np.sqrt(vi / c2) + state.eps)
           for p, mi, vi in zip(params, m, v)]
    return model.with_params(new), AdamState(m, v, t, state.lr, b1, b2, state.eps)


# --- training loop ---------------------------------------------------------

@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    epochs: int = 30
    batch_size: int = 1024
    seed: int = 0
    validation_fraction: float = 0.10
    pairs_per_epoch: Optional[int] = None  # None: pairs_per_utterance * |train|
    pairs_per_utterance: int = 50

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("learning_rate, epochs and batch_size must be positive")
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in (0, 1)")
        if self.pairs_per_epoch is not None and self.pairs_per_epoch < 1:
            raise ValueError("pairs_per_epoch must be positive")
        if self.pairs_per_utterance < 1:
            raise ValueError("pairs_per_utterance must be positive")

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainResult:
    model: MlpModel
    best_epoch: int  # 1-based; 0 means the untrained initial model
    val_losses: list = field(default_factory=list)
    train_losses: list = field(default_factory=list)


def train_mlp(model, cfg, draw_epoch: Callable, validation=None, rng=None):
    """Mini-batch Adam over ``cfg.epochs`` epochs.

    ``draw_epoch(rng)`` returns ``(x, targets, weights)`` for one epoch; the
    last short batch is kept.  With ``validation=(x, targets, weights)`` the
    epoch-end model with the lowest validation loss is returned (earliest
    epoch on ties); otherwise the final model.
    """
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    state = AdamState.for_model(model, lr=cfg.learning_rate)
    result = TrainResult(model.copy(), 0)
    best = np.inf
    for epoch in range(1, cfg.epochs + 1):
        x, t, w = draw_epoch(rng)
        total = 0.0
        for s in range(0, len(t), cfg.batch_size):
            sl = slice(s, s + cfg.batch_size)
            loss, grads = backward(model, x[sl], t[sl], None if w is None else w[sl])
            model, state = adam_step(model, state, grads)
            total += loss * len(t[sl])
        result.train_losses.append(total / max(len(t), 1))
        if validation is not None:
            vl = mean_loss(model, *validation)
            result.val_losses.append(vl)
            if vl < best:
                best = vl
                result.model, result.best_epoch = model.copy(), epoch
    if validation is None:
        result.model, result.best_epoch = model, cfg.epochs
    return result


# --- checkpoints -----------------------------------------------------------

def save_model(path, model, config=None, seed=None):
    """Write a versioned JSON checkpoint with full-precision parameters."""
    layers = ",".join(
        '{"shape":[%d,%d],"activation":%s,"weight":%s,"bias":%s}'
        % (w.shape[0], w.shape[1], json.dumps(a), format_array(w), format_array(b))
        for w, b, a in zip(model.weights, model.biases, model.activations))
    text = ('{"format":%s,"format_version":%d,"seed":%s,"config":%s,'
            '"input_shift":%s,"input_scale":%s,"layers":[%s]}\n') % (
        json.dumps(CHECKPOINT_FORMAT), CHECKPOINT_VERSION, json.dumps(seed),
        json.dumps(config or {}, sort_keys=True), format_array(model.input_shift),
        format_array(model.input_scale), layers)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def load_model(path):
    """Returns ``(model, meta)``; ``meta`` holds the ``config`` echo and ``seed``."""
    with open(path, encoding="utf-8") as f:
        text = f.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CheckpointError(f"{path}: corrupt checkpoint ({e.msg})") from None
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: not an {CHECKPOINT_FORMAT} checkpoint")
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"{path}: checkpoint version {doc.get('format_version')!r}, "
            f"this build reads version {CHECKPOINT_VERSION}")
    try:
        layers = doc["layers"]
        weights = [np.array(l["weight"], dtype=np.float64).reshape(l["shape"]) for l in layers]
        biases = [np.array(l["bias"], dtype=np.float64) for l in layers]
        acts = [l["activation"] for l in layers]
        model = MlpModel(weights, biases, tuple(acts), doc["input_shift"], doc["input_scale"])
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"{path}: corrupt checkpoint ({e})") from None
    return model, {"config": doc.get("config", {}), "seed": doc.get("seed")}

"""Losses, initialization schemes, and plain gradient-descent training."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import Network

LOSSES = ("mse", "cross_entropy", "binary_cross_entropy")
INIT_SCHEMES = ("truncated_gaussian", "linear_collapse")
_EPS = 1e-12


class NonFiniteLossError(RuntimeError):
    """Training hit a NaN or infinite loss."""


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def loss_value(kind: str, pred: np.ndarray, target: np.ndarray,
               reduction: str = "mean") -> float:
    """Scalar loss between network output and target.

    ``reduction="mean"`` averages over the batch, ``"sum"`` adds the
    per-sample losses.  cross_entropy expects probability rows (softmax
    output) against one-hot targets; binary_cross_entropy expects a single
    sigmoid output column against 0/1 targets; mse works on anything.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {pred.shape} != target shape {target.shape}")
    batch = pred.shape[0]
    if kind == "mse":
        per_sample = ((pred - target) ** 2).reshape(batch, -1).sum(axis=1)
    elif kind == "cross_entropy":
        per_sample = -(target * np.log(np.maximum(pred, _EPS))).sum(axis=1)
    elif kind == "binary_cross_entropy":
        p = np.clip(pred, _EPS, 1.0 - _EPS)
        per_sample = -(target * np.log(p) + (1.0 - target) * np.log(1.0 - p)).sum(axis=1)
    else:
        raise ValueError(f"unknown loss {kind!r}; expected one of {LOSSES}")
    total = float(per_sample.sum())
    return total / batch if reduction == "mean" else total


def loss_grad(kind: str, pred: np.ndarray, target: np.ndarray,
              reduction: str = "mean") -> np.ndarray:
    """Gradient of loss_value with respect to the prediction."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {pred.shape} != target shape {target.shape}")
    if kind == "mse":
        g = 2.0 * (pred - target)
    elif kind == "cross_entropy":
        g = -target / np.maximum(pred, _EPS)
        g[pred <= _EPS] = 0.0  # the clamped loss is flat below the floor
    elif kind == "binary_cross_entropy":
        p = np.clip(pred, _EPS, 1.0 - _EPS)
        g = (p - target) / (p * (1.0 - p))
        g[(pred <= _EPS) | (pred >= 1.0 - _EPS)] = 0.0
    else:
        raise ValueError(f"unknown loss {kind!r}; expected one of {LOSSES}")
    return g / pred.shape[0] if reduction == "mean" else g


def targets_from_labels(labels: np.ndarray, n_classes: int, output_width: int) -> np.ndarray:
    """Training targets matching a network's output head.

    Width-1 heads get a 0/1 column; wider heads get one-hot rows.
    """
    labels = np.asarray(labels)
    if output_width == 1:
        if n_classes != 2:
            raise ValueError("a single-output network handles exactly two classes")
        return labels.reshape(-1, 1).astype(np.float64)
    if output_width != n_classes:
        raise ValueError(f"output width {output_width} != class count {n_classes}")
    onehot = np.zeros((len(labels), n_classes))
    onehot[np.arange(len(labels)), labels] = 1.0
    return onehot


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def truncated_normal(rng: np.random.Generator, shape, sigma: float) -> np.ndarray:
    """Gaussian(0, sigma^2) samples with |value| > 2*sigma resampled."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    out = rng.normal(0.0, sigma, size=shape)
    bad = np.abs(out) > 2.0 * sigma
    while bad.any():
        out[bad] = rng.normal(0.0, sigma, size=int(bad.sum()))
        bad = np.abs(out) > 2.0 * sigma
    return out


def init_truncated_gaussian(network: Network, sigma: float, seed_or_rng) -> Network:
    """Draw every weight and bias from a 2-sigma truncated Gaussian."""
    rng = _as_rng(seed_or_rng)
    for _, layer in network.quadratic_layers():
        for p in layer.params():
            p[...] = truncated_normal(rng, p.shape, sigma)
    return network

def init_linear_collapse(network: Network, seed_or_rng) -> Network:
    """Start every quadratic unit as a plain first-order unit.

    w_r gets Xavier-uniform values with bound sqrt(6 / (fan_in + fan_out));
    w_g and w_b start at zero and b_g at one, so the product term reduces to
    w_r.x + b_r and the quadratic behavior must be learned.
    """
    rng = _as_rng(seed_or_rng)
    for _, layer in network.quadratic_layers():
        fan_in = layer.w_r.shape[1]
        fan_out = layer.width
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        layer.w_r[...] = rng.uniform(-bound, bound, size=layer.w_r.shape)
        layer.w_g[...] = 0.0
        layer.w_b[...] = 0.0
        layer.b_r[...] = 0.0
        layer.b_g[...] = 1.0
        layer.c[...] = 0.0
    return network


# ---------------------------------------------------------------------------
# configuration and loop
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    """Plain-SGD training recipe.

    lr_schedule is a sequence of (step_count, rate) segments applied in
    order; the segments must cover at least ``iterations`` steps.
    batch_size=None runs full-batch updates, otherwise the dataset is
    reshuffled each epoch with the seeded generator.
    """

    seed: int = 0
    iterations: int = 1000
    lr_schedule: tuple = ((1000, 0.004),)
    batch_size: int | None = None
    init: str | None = "truncated_gaussian"
    sigma: float = 0.1
    loss: str = "mse"
    reduction: str = "sum"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        schedule = tuple((int(n), float(r)) for n, r in self.lr_schedule)
        if not schedule:
            raise ValueError("lr_schedule must not be empty")
        for n, r in schedule:
            if n < 1:
                raise ValueError("schedule segment lengths must be >= 1")
            if r < 0:
                raise ValueError("learning rates must be >= 0")
        if sum(n for n, _ in schedule) < self.iterations:
            raise ValueError("lr_schedule does not cover all iterations")
        self.lr_schedule = schedule
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}; expected one of {LOSSES}")
        if self.init is not None and self.init not in INIT_SCHEMES:
            raise ValueError(f"unknown init {self.init!r}; expected one of {INIT_SCHEMES}")
        if self.reduction not in ("mean", "sum"):
            raise ValueError("reduction must be 'mean' or 'sum'")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def learning_rate_at(schedule, step: int) -> float:
    """Rate of the schedule segment containing 0-based step index ``step``."""
    if step < 0:
        raise ValueError("step must be >= 0")
    upper = 0
    for count, rate in schedule:
        upper += count
        if step < upper:
            return rate
    raise ValueError(f"step {step} beyond schedule horizon {upper}")


@dataclass
class TrainReport:
    """Outcome of one training run."""

    steps: int
    history: list = field(default_factory=list)  # (step, loss, accuracy)
    final_loss: float = float("nan")


def _apply_init(network, config, rng):
    if config.init == "truncated_gaussian":
        init_truncated_gaussian(network, config.sigma, rng)
    elif config.init == "linear_collapse":
        init_linear_collapse(network, rng)


def train(network: Network, dataset, config: TrainConfig,
          checkpoints=(), step_hook=None) -> TrainReport:
    """Run ``config.iterations`` SGD updates on the network in place.

    ``checkpoints`` is an iterable of 1-based step counts after which the
    full-dataset loss and accuracy are recorded.  ``step_hook(step, network)``
    runs after every update (used by the entropy-dynamics driver).
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    rng = np.random.default_rng(config.seed)
    _apply_init(network, config, rng)

    x = np.asarray(dataset.x, dtype=np.float64)
    targets = targets_from_labels(dataset.labels, dataset.n_classes, network.output_width)
    wanted = set(int(t) for t in checkpoints)
    params = network.params()

    n = len(dataset)
    order = None
    cursor = 0
    report = TrainReport(steps=0)
    last_loss = float("nan")
    for step in range(config.iterations):
        if config.batch_size is None or config.batch_size >= n:
            xb, tb = x, targets
        else:
            if order is None or cursor >= n:
                order = rng.permutation(n)
                cursor = 0
            take = order[cursor:cursor + config.batch_size]
            cursor += config.batch_size
            xb, tb = x[take], targets[take]

        pred, caches = network.forward_cache(xb)
        last_loss = loss_value(config.loss, pred, tb, config.reduction)
        if not np.isfinite(last_loss):
            raise NonFiniteLossError(f"non-finite loss at step {step + 1}")
        g = loss_grad(config.loss, pred, tb, config.reduction)
        _, grads = network.backward(caches, g)
        rate = learning_rate_at(config.lr_schedule, step)
        for p, gp in zip(params, grads):
            p -= rate * gp

        done = step + 1
        report.steps = done
        if done in wanted:
            full_pred = network.forward(x)
            full_loss = loss_value(config.loss, full_pred, targets, config.reduction)
            acc, _ = evaluate(network, dataset)
            report.history.append((done, full_loss, acc))
        if step_hook is not None:
            step_hook(done, network)
    report.final_loss = last_loss
    return report


def evaluate(network: Network, dataset):
    """(accuracy, error_rate) under threshold or argmax classification.

    Width-1 outputs predict class 1 when the output exceeds 0.5 (an exact
    0.5 goes to class 0); wider outputs predict the argmax component.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    out = network.forward(np.asarray(dataset.x, dtype=np.float64))
    if network.output_width == 1:
        pred = (out[:, 0] > 0.5).astype(int)
    else:
        pred = out.argmax(axis=1)
    accuracy = float((pred == np.asarray(dataset.labels)).mean())
    return accuracy, 1.0 - accuracy


def predictions(network: Network, x: np.ndarray) -> np.ndarray:
    """Predicted class indices for a batch of inputs."""
    out = network.forward(np.asarray(x, dtype=np.float64))
    if network.output_width == 1:
        return (out[:, 0] > 0.5).astype(int)
    return out.argmax(axis=1)

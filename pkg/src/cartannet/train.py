"""Losses, gradients, SGD training, and synthetic data generation.

Gradients come in two modes: ``analytic`` differentiates the closed-form
forward chain exactly by complex-step differentiation (every stage of the
chain is complex-analytic), and ``finite-difference`` uses scaled central
differences.  Both are compared against each other by the test gate.
"""

from __future__ import annotations

import csv
import dataclasses

import numpy as np

from . import classify, net

__all__ = [
    "Dataset",
    "TrainConfig",
    "DivergenceError",
    "loss",
    "loss_flat",
    "gradient",
    "sgd_step",
    "train_loop",
    "evaluate",
    "gen_synthetic",
    "save_csv",
    "load_csv",
]

CS_STEP = 1e-30
DIVERGENCE_LIMIT = 1e6


class DivergenceError(RuntimeError):
    """Training loss became non-finite or exceeded the divergence guard."""


@dataclasses.dataclass
class Dataset:
    """Feature matrix, labels, and a train/test split tag."""

    features: np.ndarray
    labels: np.ndarray
    split: np.ndarray  # entries "train" / "test"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels)
        self.split = np.asarray(self.split)
        if not (len(self.features) == len(self.labels) == len(self.split)):
            raise ValueError("features, labels and split must align")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("non-finite features")

    def subset(self, tag: str) -> "Dataset":
        m = self.split == tag
        return Dataset(self.features[m], self.labels[m], self.split[m])

    def __len__(self):
        return len(self.labels)


@dataclasses.dataclass
class TrainConfig:
    """SGD hyperparameters."""

    learning_rate: float = 0.1
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    gradient_mode: str = "analytic"
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.gradient_mode not in ("analytic", "finite-difference"):
            raise ValueError(f"unknown gradient mode {self.gradient_mode!r}")


# ---------------------------------------------------------------------------
# Loss and gradients
# ---------------------------------------------------------------------------


def _head_loss(config: net.NetworkConfig, params: net.ParamSet,
               points, labels):
    if config.task == "binary":
        sep = classify.Separator(
            params.head["alpha"][0], params.head["beta"][0], params.head["w"][0]
        )
        return classify.binary_nll(points, labels, sep)
    if config.task == "multiclass":
        bank = classify.SeparatorBank(tuple(
            classify.Separator(
                params.head["alpha"][k], params.head["beta"][k], params.head["w"][k]
            )
            for k in range(config.n_separators)
        ))
        return classify.multiclass_nll(points, labels.astype(int), bank)
    # regression: linear read-out of the solvable coordinates
    pred = points @ params.head["v"] + params.head["c"][0]
    resid = pred - np.asarray(labels, dtype=float)
    return np.sum(resid * resid) / len(labels)


def loss(config: net.NetworkConfig, params: net.ParamSet,
         features, labels) -> float:
    """Task loss of a batch: binary / multiclass NLL or read-out MSE."""
    val = _loss_any(config, params, features, labels)
    return float(np.real(val))


def _loss_any(config, params, features, labels):
    points = net.forward_batch(config, params, features)
    return _head_loss(config, params, points, labels)


def loss_flat(config: net.NetworkConfig, vector, features, labels):
    """Loss as a function of the flat parameter vector (any dtype)."""
    params = net.unflatten(config, np.asarray(vector))
    return _loss_any(config, params, features, labels)


def gradient(config: net.NetworkConfig, tc: TrainConfig,
             flat: net.FlatParams, features, labels) -> np.ndarray:
    """Gradient of the batch loss with respect to the flat parameters."""
    x = np.asarray(flat.vector, dtype=float)
    g = np.empty_like(x)
    if tc.gradient_mode == "analytic":
        z = x.astype(complex)
        for i in range(len(x)):
            z[i] += 1j * CS_STEP
            g[i] = np.imag(loss_flat(config, z, features, labels)) / CS_STEP
            z[i] = x[i]
    else:
        for i in range(len(x)):
            h = tc.fd_step * max(1.0, abs(x[i]))
            xp = x.copy(); xp[i] += h
            xm = x.copy(); xm[i] -= h
            g[i] = (
                np.real(loss_flat(config, xp, features, labels))
                - np.real(loss_flat(config, xm, features, labels))
            ) / (2.0 * h)
    if not np.all(np.isfinite(g)):
        raise DivergenceError("non-finite gradient")
    return g


def sgd_step(flat: net.FlatParams, grad: np.ndarray, lr: float) -> net.FlatParams:
    """Pure gradient-descent update on the flat vector."""
    return net.FlatParams(vector=flat.vector - lr * grad, layout=flat.layout)


_ADMISSIBLE_SLACK = 1e-6


def project_admissible(config: net.NetworkConfig,
                       flat: net.FlatParams) -> net.FlatParams:
    """Project separator parameters back into the admissible region
    |w|^2 - alpha*beta > 0 by shrinking alpha, beta when an SGD step
    crosses the boundary."""
    if config.task == "regression":
        return flat
    params = net.unflatten(config, flat.vector.copy())
    alpha, beta, w = params.head["alpha"], params.head["beta"], params.head["w"]
    for k in range(len(alpha)):
        w2 = float(w[k] @ w[k])
        ab = float(alpha[k] * beta[k])
        if w2 - ab > _ADMISSIBLE_SLACK:
            continue
        if w2 <= 2.0 * _ADMISSIBLE_SLACK or ab <= 0.0:
            # normal vector collapsed: restart this separator mildly
            w[k] = np.zeros_like(w[k])
            w[k][0] = 1.0
            alpha[k] = 0.0
            beta[k] = 0.0
            continue
        c = np.sqrt(max(w2 - 2.0 * _ADMISSIBLE_SLACK, 0.0) / ab)
        alpha[k] *= c
        beta[k] *= c
    return net.flatten(config, params)


# ---------------------------------------------------------------------------
# Training loop and evaluation
# ---------------------------------------------------------------------------


def _accuracy(config, params, features, labels) -> float:
    points = np.real(net.forward_batch(config, params, features))
    if config.task == "binary":
        sep = classify.Separator(
            params.head["alpha"][0], params.head["beta"][0], params.head["w"][0]
        )
        pred = (np.real(classify.binary_prob(sep, points)) > 0.5).astype(int)
    elif config.task == "multiclass":
        bank = classify.SeparatorBank(tuple(
            classify.Separator(
                params.head["alpha"][k], params.head["beta"][k], params.head["w"][k]
            )
            for k in range(config.n_separators)
        ))
        pred = np.argmax(np.real(classify.softmax_probs(bank, points)), axis=-1)
    else:
        raise ValueError("accuracy is undefined for regression")
    return float(np.mean(pred == labels.astype(int)))


def train_loop(tc: TrainConfig, config: net.NetworkConfig, dataset: Dataset,
               init: net.ParamSet | None = None):
    """Seeded mini-batch SGD; returns (params, history).

    History records one JSON-serializable dict per epoch.  A divergent
    loss aborts the loop and returns the last finite parameters."""
    train = dataset.subset("train")
    test = dataset.subset("test")
    if len(train) == 0:
        raise ValueError("dataset has no training split")
    params = init if init is not None else net.init_params(config, seed=tc.seed)
    flat = net.flatten(config, params)
    rng = np.random.default_rng(tc.seed)
    history = []
    for epoch in range(tc.epochs):
        order = rng.permutation(len(train))
        last_good = flat
        try:
            for start in range(0, len(train), tc.batch_size):
                idx = order[start : start + tc.batch_size]
                g = gradient(config, tc, flat,
                             train.features[idx], train.labels[idx])
                flat = project_admissible(
                    config, sgd_step(flat, g, tc.learning_rate)
                )
            params = net.unflatten(config, flat.vector)
            train_loss = loss(config, params, train.features, train.labels)
            if not np.isfinite(train_loss) or train_loss > DIVERGENCE_LIMIT:
                raise DivergenceError(f"loss diverged at epoch {epoch}")
        except (DivergenceError, FloatingPointError,
                net.spaces.FactorizationError, net.spaces.CartanBoundError):
            flat = last_good
            params = net.unflatten(config, flat.vector)
            break
        record = {"epoch": epoch, "train_loss": train_loss}
        if len(test):
            record["test_loss"] = loss(config, params,
                                       test.features, test.labels)
            if config.task != "regression":
                record["accuracy"] = _accuracy(config, params,
                                               test.features, test.labels)
        history.append(record)
    return net.unflatten(config, flat.vector), history


def evaluate(config: net.NetworkConfig, params: net.ParamSet,
             dataset: Dataset) -> dict:
    """Accuracy and mean NLL (or MSE) over the dataset's test split, or
    the whole dataset when no split tags are present."""
    test = dataset.subset("test")
    if len(test) == 0:
        test = dataset
    out = {"n": len(test)}
    if config.task == "regression":
        out["mse"] = loss(config, params, test.features, test.labels)
    else:
        out["nll"] = loss(config, params, test.features, test.labels) / len(test)
        out["accuracy"] = _accuracy(config, params, test.features, test.labels)
    return out


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


def gen_synthetic(kind: str, n: int, dim: int, seed: int = 0,
                  classes: int = 2, spread: float = 0.6) -> Dataset:
    """Seeded synthetic classification data with balanced classes and a
    deterministic 80/20 train/test split."""
    if n < 2 or dim < 2:
        raise ValueError("need n >= 2 and dim >= 2")
    rng = np.random.default_rng(seed)
    if kind == "blobs":
        means = rng.normal(size=(classes, dim))
        means *= 3.0 / np.linalg.norm(means, axis=1, keepdims=True)
        counts = [n // classes + (1 if k < n % classes else 0)
                  for k in range(classes)]
        feats, labels = [], []
        for k, ck in enumerate(counts):
            feats.append(means[k] + spread * rng.normal(size=(ck, dim)))
            labels.append(np.full(ck, k, dtype=int))
        X = np.concatenate(feats)
        y = np.concatenate(labels)
    elif kind == "arcs":
        half = n // 2
        t1 = rng.uniform(0.0, np.pi, size=half)
        t2 = rng.uniform(0.0, np.pi, size=n - half)
        a1 = np.stack([np.cos(t1), np.sin(t1)], axis=1)
        a2 = np.stack([1.0 - np.cos(t2), 0.5 - np.sin(t2)], axis=1)
        X = np.zeros((n, dim))
        X[:half, :2] = a1
        X[half:, :2] = a2
        X += 0.1 * rng.normal(size=(n, dim))
        y = np.r_[np.zeros(half, dtype=int), np.ones(n - half, dtype=int)]
    else:
        raise ValueError(f"unknown kind {kind!r}")
    order = rng.permutation(n)
    X, y = X[order], y[order]
    split = np.array(["train" if i % 5 else "test" for i in range(n)])
    return Dataset(X, y, split)


def save_csv(path, dataset: Dataset):
    """Write features and labels as CSV with header f0,...,f{d-1},label."""
    d = dataset.features.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(d)] + ["label"])
        for x, y in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])


def load_csv(path) -> Dataset:
    """Read a dataset CSV (no split tags: deterministic 80/20 assignment)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "label" or not header[0].startswith("f"):
            raise ValueError("unexpected CSV header")
        rows = [row for row in reader if row]
    X = np.array([[float(v) for v in row[:-1]] for row in rows])
    y = np.array([int(row[-1]) for row in rows])
    split = np.array(["train" if i % 5 else "test" for i in range(len(rows))])
    return Dataset(X, y, split)

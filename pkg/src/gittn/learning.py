"""Feature maps, losses, analytic gradients, and the training loop.

The forward pass caches the partial bond vectors of the left and right
contraction chains; the backward pass reuses them for one reverse sweep, so a
whole-batch gradient costs a constant factor more than the forward pass.
Model wrappers translate core gradients into gradients of their own trainable
parameters (dense entries, basis coefficients, or free cores plus mirrored
contributions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from ._util import named_rng
from .errors import TrainingDivergedError
from .tensortrain import TensorTrain

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class FeatureMap:
    """One-hot encoding of a finite symbol alphabet."""

    alphabet: str

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def encode(self, symbol: str) -> np.ndarray:
        idx = self.alphabet.find(symbol)
        if idx < 0:
            raise ValueError(f"symbol {symbol!r} not in alphabet {self.alphabet!r}")
        v = np.zeros(self.size)
        v[idx] = 1.0
        return v

    def encode_batch(self, strings) -> list[np.ndarray]:
        """Per-position one-hot arrays of shape (batch, alphabet size)."""
        strings = list(strings)
        if not strings:
            raise ValueError("empty batch")
        length = len(strings[0])
        if any(len(s) != length for s in strings):
            raise ValueError("all strings in a batch must have equal length")
        idx = np.empty((len(strings), length), dtype=np.intp)
        for b, s in enumerate(strings):
            for t, sym in enumerate(s):
                pos = self.alphabet.find(sym)
                if pos < 0:
                    raise ValueError(f"symbol {sym!r} not in alphabet {self.alphabet!r}")
                idx[b, t] = pos
        eye = np.eye(self.size)
        return [eye[idx[:, t]] for t in range(length)]


BIT_FEATURES = FeatureMap("01")
DNA_FEATURES = FeatureMap("AGTC")


@dataclass(frozen=True)
class Dataset:
    """Fixed-length symbol strings with binary labels."""

    inputs: tuple[str, ...]
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        labels = np.asarray(self.labels, dtype=np.intp)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        if labels.shape != (len(self.inputs),):
            raise ValueError("one label per input required")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        lengths = {len(s) for s in self.inputs}
        if len(lengths) > 1:
            raise ValueError("all inputs must have the same length")

    def __len__(self) -> int:
        return len(self.inputs)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    momentum: float = 0.2
    l2_coeff: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.optimizer not in ("adam", "sgd_nesterov"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def parity_dataset(d: int, fraction: float, seed: int, augment: bool = False,
                   max_length: int = 22) -> tuple[Dataset, Dataset]:
    """Split all length-`d` bitstrings into train and test by parity task.

    Samples ``ceil(fraction * 2**d)`` distinct strings for training; the rest
    form the test set. Labels are the number of ones modulo 2. With `augment`
    the training set is doubled by the flipped copies; the flipped label is
    the complement for odd `d` (flipping all bits flips the parity) and
    unchanged for even `d`.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    if d > max_length:
        raise ValueError(f"enumerating 2**{d} strings exceeds the budget")
    total = 2**d
    strings = [format(i, f"0{d}b") for i in range(total)]
    labels = np.array([s.count("1") % 2 for s in strings], dtype=np.intp)
    rng = named_rng(seed, "parity-split")
    n_train = math.ceil(fraction * total)
    train_idx = np.sort(rng.choice(total, size=n_train, replace=False))
    mask = np.zeros(total, dtype=bool)
    mask[train_idx] = True
    train_inputs = [strings[i] for i in train_idx]
    train_labels = labels[train_idx]
    if augment:
        flipped = ["".join("1" if c == "0" else "0" for c in s) for s in train_inputs]
        flipped_labels = (1 - train_labels) if d % 2 == 1 else train_labels
        train_inputs = train_inputs + flipped
        train_labels = np.concatenate([train_labels, flipped_labels])
    test_idx = np.nonzero(~mask)[0]
    train = Dataset(tuple(train_inputs), train_labels)
    test = Dataset(tuple(strings[i] for i in test_idx), labels[test_idx])
    return train, test


# ---------------------------------------------------------------------------
# Batched contraction and its reverse sweep
# ---------------------------------------------------------------------------


def _position_feats(tt: TensorTrain, feats) -> dict[int, np.ndarray]:
    positions = tt.input_positions
    if len(feats) != len(positions):
        raise ValueError(f"expected {len(positions)} feature arrays, got {len(feats)}")
    return {pos: np.asarray(f, dtype=float) for pos, f in zip(positions, feats)}


def _forward(tt: TensorTrain, feats):
    f = _position_feats(tt, feats)
    d, ell = tt.n_cores, tt.output_pos
    cores = tt.cores
    left = {}
    v = f[0] @ cores[0]
    left[0] = v
    for m in range(1, ell):
        v = np.einsum("bi,bl,ilr->br", f[m], v, cores[m], optimize=True)
        left[m] = v
    right = {}
    w = f[d - 1] @ cores[d - 1].T
    right[d - 1] = w
    for m in range(d - 2, ell, -1):
        w = np.einsum("bi,ilr,br->bl", f[m], cores[m], w, optimize=True)
        right[m] = w
    if tt.output_has_input:
        logits = np.einsum("bi,bl,br,ilro->bo", f[ell], left[ell - 1], right[ell + 1],
                           cores[ell], optimize=True)
    else:
        logits = np.einsum("bl,br,lro->bo", left[ell - 1], right[ell + 1],
                           cores[ell], optimize=True)
    return logits, f, left, right


def _backward(tt: TensorTrain, f, left, right, dlogits):
    d, ell = tt.n_cores, tt.output_pos
    cores = tt.cores
    grads = [None] * d
    lvec, rvec = left[ell - 1], right[ell + 1]
    if tt.output_has_input:
        x = f[ell]
        grads[ell] = np.einsum("bi,bl,br,bo->ilro", x, lvec, rvec, dlogits, optimize=True)
        dl = np.einsum("bi,br,bo,ilro->bl", x, rvec, dlogits, cores[ell], optimize=True)
        dr = np.einsum("bi,bl,bo,ilro->br", x, lvec, dlogits, cores[ell], optimize=True)
    else:
        grads[ell] = np.einsum("bl,br,bo->lro", lvec, rvec, dlogits, optimize=True)
        dl = np.einsum("br,bo,lro->bl", rvec, dlogits, cores[ell], optimize=True)
        dr = np.einsum("bl,bo,lro->br", lvec, dlogits, cores[ell], optimize=True)
    g = dl
    for m in range(ell - 1, 0, -1):
        grads[m] = np.einsum("bi,bl,br->ilr", f[m], left[m - 1], g, optimize=True)
        g = np.einsum("bi,ilr,br->bl", f[m], cores[m], g, optimize=True)
    grads[0] = np.einsum("bi,br->ir", f[0], g, optimize=True)
    h = dr
    for m in range(ell + 1, d - 1):
        grads[m] = np.einsum("bi,bl,br->ilr", f[m], h, right[m + 1], optimize=True)
        h = np.einsum("bi,ilr,bl->br", f[m], cores[m], h, optimize=True)
    grads[d - 1] = np.einsum("bl,bi->li", h, f[d - 1], optimize=True)
    return grads


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward_loss(model, feats, labels, l2: float = 0.0):
    """Mean softmax cross-entropy plus an l2 penalty on the parameters.

    Returns ``(loss, logits)``. Probabilities are clamped away from 0 and 1
    before the logarithm.
    """
    labels = np.asarray(labels, dtype=np.intp)
    if labels.size == 0:
        raise ValueError("empty batch")
    logits, _, _, _ = _forward(model.assembled(), feats)
    probs = _softmax(logits)
    picked = np.clip(probs[np.arange(labels.size), labels], PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = float(-np.mean(np.log(picked)))
    coeffs = model.coeffs
    loss += l2 * float(coeffs @ coeffs)
    return loss, logits


def gradient(model, feats, labels, l2: float = 0.0) -> np.ndarray:
    """Gradient of :func:`forward_loss` with respect to the model parameters."""
    _, grad, _ = loss_and_gradient(model, feats, labels, l2)
    return grad


def loss_and_gradient(model, feats, labels, l2: float = 0.0):
    labels = np.asarray(labels, dtype=np.intp)
    if labels.size == 0:
        raise ValueError("empty batch")
    tt = model.assembled()
    logits, f, left, right = _forward(tt, feats)
    probs = _softmax(logits)
    picked = np.clip(probs[np.arange(labels.size), labels], PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = float(-np.mean(np.log(picked)))
    coeffs = model.coeffs
    loss += l2 * float(coeffs @ coeffs)
    dlogits = probs.copy()
    dlogits[np.arange(labels.size), labels] -= 1.0
    dlogits /= labels.size
    core_grads = _backward(tt, f, left, right, dlogits)
    grad = model.core_grads_to_param_grad(core_grads)
    if l2:
        grad = grad + 2.0 * l2 * coeffs
    return loss, grad, logits


# ---------------------------------------------------------------------------
# Optimizers
# ---------------------------------------------------------------------------


class _Adam:
    def __init__(self, lr, n, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, coeffs, grad):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        mhat = self.m / (1 - self.beta1**self.t)
        vhat = self.v / (1 - self.beta2**self.t)
        return coeffs - self.lr * mhat / (np.sqrt(vhat) + self.eps)


class _NesterovSGD:
    def __init__(self, lr, n, momentum=0.2):
        self.lr, self.momentum = lr, momentum
        self.v = np.zeros(n)

    def step(self, coeffs, grad):
        self.v = self.momentum * self.v + grad
        return coeffs - self.lr * (grad + self.momentum * self.v)


def _make_optimizer(config: TrainConfig, n: int):
    if config.optimizer == "adam":
        return _Adam(config.learning_rate, n)
    return _NesterovSGD(config.learning_rate, n, config.momentum)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainRun:
    """Per-epoch metric history of one training run."""

    config: TrainConfig
    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    test_acc: list[float] = field(default_factory=list)
    val_auroc: list[float] = field(default_factory=list)
    stalled: bool = False
    best_epoch: int | None = None
    best_coeffs: np.ndarray | None = None
    final_coeffs: np.ndarray | None = None


def _accuracy(model, feats, labels) -> float:
    logits, _, _, _ = _forward(model.assembled(), feats)
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def auroc(scores, labels) -> float:
    """Area under the ROC curve by midrank (tie-aware) ranking."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=np.intp)
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = int(np.count_nonzero(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present")
    ranks = rankdata(scores)
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def train(model, train_set: Dataset, test_set: Dataset, config: TrainConfig,
          feature_map: FeatureMap = BIT_FEATURES, *, val_set: Dataset | None = None,
          track_auroc: bool = False) -> TrainRun:
    """Mini-batch training, deterministic for a fixed seed.

    Shuffling uses a dedicated stream of `config.seed`; the final partial
    batch is kept. Per epoch the full train loss/accuracy and test accuracy
    are recorded. With `track_auroc`, the ROC area on `val_set` (default: the
    test set) is recorded each epoch and the best-scoring parameters are kept
    in ``best_coeffs``. A run that ends within 5% of its initial loss is
    flagged as stalled. Raises :class:`TrainingDivergedError` on a
    non-finite loss, reporting the epoch.
    """
    rng = named_rng(config.seed, "shuffle")
    train_feats = feature_map.encode_batch(train_set.inputs)
    test_feats = feature_map.encode_batch(test_set.inputs)
    score_set = val_set if val_set is not None else test_set
    score_feats = feature_map.encode_batch(score_set.inputs) if track_auroc else None

    run = TrainRun(config=config)
    coeffs = model.coeffs
    opt = _make_optimizer(config, coeffs.size)
    initial_loss, _ = forward_loss(model, train_feats, train_set.labels, config.l2_coeff)
    n = len(train_set)
    best_score = -np.inf
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = perm[start:start + config.batch_size]
            feats = [f[batch] for f in train_feats]
            loss, grad, _ = loss_and_gradient(model, feats, train_set.labels[batch],
                                              config.l2_coeff)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            coeffs = opt.step(coeffs, grad)
            model.coeffs = coeffs
        loss, logits = forward_loss(model, train_feats, train_set.labels, config.l2_coeff)
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch)
        run.train_loss.append(loss)
        run.train_acc.append(float(np.mean(np.argmax(logits, axis=1) == train_set.labels)))
        run.test_acc.append(_accuracy(model, test_feats, test_set.labels))
        if track_auroc:
            score_logits, _, _, _ = _forward(model.assembled(), score_feats)
            scores = _softmax(score_logits)[:, 1]
            score = auroc(scores, score_set.labels)
            run.val_auroc.append(score)
            if score > best_score:
                best_score = score
                run.best_epoch = epoch
                run.best_coeffs = coeffs.copy()
    run.final_coeffs = coeffs.copy()
    run.stalled = bool(run.train_loss[-1] >= 0.95 * initial_loss)
    return run


def count_params(model) -> int:
    """Number of trainable parameters: basis dimensions for invariant models,
    raw entry counts for dense ones."""
    if model.kind == "invariant":
        return sum(model.basis_dims)
    return model.n_params

"""Scikit-learn estimator wrappers around the tensor-train classifiers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .learning import (
    BIT_FEATURES,
    DNA_FEATURES,
    Dataset,
    TrainConfig,
    _forward,
    _softmax,
    train,
)
from .tensortrain import build_parity_invariant_ttn, build_plain_ttn, build_rc_ttn


def _check_bit_matrix(X) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] < 3:
        raise ValueError("X must be a (n_samples, length >= 3) array of bits")
    if not np.isin(X, (0, 1)).all():
        raise ValueError("X entries must be 0 or 1")
    return X.astype(np.intp)


def _check_binary_labels(y, n: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError("y must be one label per sample")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return y.astype(np.intp)


def _check_strands(X) -> list[str]:
    strands = [str(s) for s in X]
    if not strands:
        raise ValueError("X must contain at least one strand")
    length = len(strands[0])
    if length < 3 or length % 2 == 0:
        raise ValueError("strand length must be odd and at least 3")
    if any(len(s) != length for s in strands):
        raise ValueError("all strands must have equal length")
    return strands


class TensorTrainBitClassifier(BaseEstimator, ClassifierMixin):
    """Binary-string classifier backed by a tensor-train network.

    Parameters
    ----------
    mode : {"invariant", "plain", "augmented"}
        "invariant" pins every core to its bit-flip invariant subspace;
        "plain" trains a dense network; "augmented" trains a dense network
        on the training set doubled with flipped copies (flipped labels for
        odd lengths).
    bond_dim : int
        Dimension of the bond spaces linking adjacent cores.
    """

    def __init__(self, mode="invariant", bond_dim=4, epochs=100,
                 learning_rate=1e-3, optimizer="adam", momentum=0.2,
                 l2=0.0, batch_size=32, random_state=0):
        self.mode = mode
        self.bond_dim = bond_dim
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.momentum = momentum
        self.l2 = l2
        self.batch_size = batch_size
        self.random_state = random_state

    def _build(self, d):
        if self.mode == "invariant":
            return build_parity_invariant_ttn(d, self.bond_dim, seed=self.random_state)
        if self.mode in ("plain", "augmented"):
            return build_plain_ttn(d, self.bond_dim, seed=self.random_state)
        raise ValueError(f"unknown mode {self.mode!r}")

    def fit(self, X, y):
        X = _check_bit_matrix(X)
        y = _check_binary_labels(y, X.shape[0])
        d = X.shape[1]
        inputs = tuple("".join(str(b) for b in row) for row in X)
        labels = y
        if self.mode == "augmented":
            flipped = tuple("".join("1" if c == "0" else "0" for c in s) for s in inputs)
            flipped_labels = (1 - labels) if d % 2 == 1 else labels
            inputs = inputs + flipped
            labels = np.concatenate([labels, flipped_labels])
        train_set = Dataset(inputs, labels)
        config = TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size,
            learning_rate=self.learning_rate, optimizer=self.optimizer,
            momentum=self.momentum, l2_coeff=self.l2, seed=self.random_state,
        )
        self.model_ = self._build(d)
        self.run_ = train(self.model_, train_set, train_set, config, BIT_FEATURES)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = d
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        X = _check_bit_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("X has a different string length than the fit data")
        feats = BIT_FEATURES.encode_batch(
            ["".join(str(b) for b in row) for row in X]
        )
        logits, _, _, _ = _forward(self.model_.assembled(), feats)
        return _softmax(logits)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class TensorTrainStrandClassifier(BaseEstimator, ClassifierMixin):
    """Nucleotide-strand classifier with reverse-complement invariance.

    Accepts odd-length strands over the AGTC alphabet; predictions are
    identical for a strand and its reverse complement by construction.
    """

    def __init__(self, bond_dim=2, epochs=50, learning_rate=0.01,
                 optimizer="sgd_nesterov", momentum=0.2, l2=0.0,
                 batch_size=100, random_state=0):
        self.bond_dim = bond_dim
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.momentum = momentum
        self.l2 = l2
        self.batch_size = batch_size
        self.random_state = random_state

    def fit(self, X, y):
        strands = _check_strands(X)
        y = _check_binary_labels(y, len(strands))
        train_set = Dataset(tuple(strands), y)
        config = TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size,
            learning_rate=self.learning_rate, optimizer=self.optimizer,
            momentum=self.momentum, l2_coeff=self.l2, seed=self.random_state,
        )
        self.model_ = build_rc_ttn(len(strands[0]), self.bond_dim,
                                   seed=self.random_state)
        self.run_ = train(self.model_, train_set, train_set, config, DNA_FEATURES,
                          track_auroc=True)
        if self.run_.best_coeffs is not None:
            self.model_.coeffs = self.run_.best_coeffs
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = len(strands[0])
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        strands = _check_strands(X)
        if len(strands[0]) != self.n_features_in_:
            raise ValueError("X has a different strand length than the fit data")
        feats = DNA_FEATURES.encode_batch(strands)
        logits, _, _, _ = _forward(self.model_.assembled(), feats)
        return _softmax(logits)

    def decision_function(self, X):
        return self.predict_proba(X)[:, 1]

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

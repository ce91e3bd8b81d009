# mad/svm.py
"""
Linear soft-margin SVM trained by dual coordinate descent, plus the glue
that turns labelled feature vectors into a MadModel.
"""

import logging
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.preprocessing import StandardScaler
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from config import settings
from mad.models import FeatureVector, LabeledFeature, MadModel, label_to_int
from utils.errors import ContractError, TrainingError

log = logging.getLogger(__name__)


class LinearSVM(BaseEstimator, ClassifierMixin):
    """
    Hinge-loss linear SVM; the bias is learned as the weight of a constant
    feature. Labels are {0, 1} with 1 as the positive (attack) class.

    Parameters
    ----------
    C : float
        Box constraint on the dual variables.
    max_epochs : int
        Number of passes over the data; stops early once no projected
        gradient exceeds `tol`.
    random_state : int
        Seed of the per-epoch coordinate order.
    """

    def __init__(self, C: float = 1.0, max_epochs: int = 200, tol: float = 1e-6, random_state: int = 0):
        self.C = C
        self.max_epochs = max_epochs
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        classes = np.unique(y)
        if classes.size != 2 or not set(classes.tolist()) <= {0, 1}:
            raise TrainingError(f"training needs both classes 0 and 1, got {classes.tolist()}")
        if self.C <= 0:
            raise TrainingError(f"C must be positive, got {self.C}")

        n = X.shape[0]
        Xa = np.hstack([X, np.ones((n, 1))])
        signs = np.where(y == 1, 1.0, -1.0)
        q_diag = np.einsum("ij,ij->i", Xa, Xa)
        alpha = np.zeros(n)
        w = np.zeros(Xa.shape[1])
        rng = np.random.default_rng(self.random_state)

        self.objective_history_: list[float] = []
        self.n_iter_ = 0
        for epoch in range(self.max_epochs):
            max_pg = 0.0
            for i in rng.permutation(n):
                g = signs[i] * (w @ Xa[i]) - 1.0
                if alpha[i] == 0.0:
                    pg = min(g, 0.0)
                elif alpha[i] == self.C:
                    pg = max(g, 0.0)
                else:
                    pg = g
                if pg == 0.0:
                    continue
                max_pg = max(max_pg, abs(pg))
                old = alpha[i]
                alpha[i] = min(max(old - g / q_diag[i], 0.0), self.C)
                w += (alpha[i] - old) * signs[i] * Xa[i]
            objective = 0.5 * float(w @ w) - float(alpha.sum())
            self.objective_history_.append(objective)
            self.n_iter_ = epoch + 1
            log.debug("[SVM] epoch %d dual objective %.12g max|PG| %.3g", epoch + 1, objective, max_pg)
            if max_pg <= self.tol:
                break

        self.classes_ = np.array([0, 1])
        self.dual_coef_ = alpha * signs
        self.coef_ = w[:-1].copy()
        self.intercept_ = float(w[-1])
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_ + self.intercept_

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0.0).astype(np.int64)


def stack_features(features: Sequence[FeatureVector]) -> tuple[np.ndarray, str, str]:
    """
    Raises:
        ContractError: empty input, mixed extractors/configs, or mixed dimensions.
    """
    if not features:
        raise ContractError("no feature vectors given")
    extractors = {f.extractor_id for f in features}
    digests = {f.config_digest for f in features}
    dims = {f.dimension for f in features}
    if len(extractors) > 1 or len(digests) > 1:
        raise ContractError(f"features come from different extractor configurations: {sorted(digests)}")
    if len(dims) > 1:
        raise ContractError(f"feature dimensions differ: {sorted(dims)}")
    return np.vstack([f.values for f in features]), extractors.pop(), digests.pop()


def train_svm(
    samples: Sequence[LabeledFeature],
    C: float = settings.SVM_C,
    seed: int = settings.SEED,
    epochs: int = settings.SVM_EPOCHS,
    config: Optional[dict] = None,
) -> tuple[MadModel, LinearSVM]:
    """
    Standardise with training statistics, then fit the linear SVM.

    Raises:
        TrainingError: only one class present.
        ContractError: inconsistent feature vectors.
    """
    X, extractor, digest = stack_features([s.vector for s in samples])
    y = np.array([label_to_int(s.label) for s in samples], dtype=np.int64)
    if np.unique(y).size < 2:
        raise TrainingError("training data holds a single class; both bona fide and attack samples are needed")

    scaler = StandardScaler().fit(X)
    # StandardScaler already maps zero-variance dimensions to scale 1
    Z = scaler.transform(X)
    svm = LinearSVM(C=C, max_epochs=epochs, random_state=seed).fit(Z, y)

    accuracy = float(np.mean(svm.predict(Z) == y))
    log.info(
        "🧠 Trained %s SVM on %d samples (dim %d): %d epochs, train accuracy %.2f%%",
        extractor, len(samples), X.shape[1], svm.n_iter_, 100.0 * accuracy,
    )
    model = MadModel(
        extractor_id=extractor,
        config=dict(config or {}),
        config_digest=digest,
        mean=np.asarray(scaler.mean_, dtype=np.float64),
        std=np.asarray(scaler.scale_, dtype=np.float64),
        weights=np.asarray(svm.coef_, dtype=np.float64),
        bias=float(svm.intercept_),
    )
    return model, svm


def mad_score(model: MadModel, feature: FeatureVector) -> float:
    """
    w . standardise(x) + b; higher means more attack-like.

    Raises:
        ContractError: the feature was not produced with the model's extractor configuration.
    """
    if feature.config_digest != model.config_digest or feature.extractor_id != model.extractor_id:
        raise ContractError(
            f"feature digest {feature.extractor_id}/{feature.config_digest} does not match "
            f"model {model.extractor_id}/{model.config_digest}"
        )
    if feature.dimension != model.dimension:
        raise ContractError(f"feature dimension {feature.dimension} != model dimension {model.dimension}")
    z = (feature.values - model.mean) / model.std
    return float(np.dot(model.weights, z) + model.bias)


def mad_scores(model: MadModel, features: Sequence[FeatureVector]) -> list[float]:
    return [mad_score(model, f) for f in features]


def score_samples(model: MadModel, samples: Sequence[LabeledFeature]) -> list[tuple[str, str, float]]:
    """(sample_id, label, score) rows in input order."""
    return [(s.sample_id, s.label, mad_score(model, s.vector)) for s in samples]

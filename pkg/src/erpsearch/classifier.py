"""Single-trial relevance classification with shrinkage LDA.

Binary LDA under a shared covariance, with the covariance regularized
toward its diagonal by the analytic shrinkage intensity of Schafer and
Strimmer. The posterior for the relevant class is the logistic of the
linear discriminant; priors are the empirical class frequencies.
"""

from __future__ import annotations

import json
import struct

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .eeg import LABEL_IRRELEVANT, LABEL_RELEVANT

__all__ = ["shrink_covariance", "ShrinkageLda", "binarize", "save_model", "load_model"]


def shrink_covariance(samples: np.ndarray) -> tuple[np.ndarray, float]:
    """Shrunk covariance of centered rows and the analytic intensity.

    Returns sigma = lam * T + (1 - lam) * S with S the unbiased sample
    covariance, T = diag(S) (unequal variances, zero covariances) and lam
    the analytic optimum clipped to [0, 1]. Rows are assumed centered.
    """
    X = check_array(samples, dtype=np.float64)
    n, p = X.shape
    if n < 2:
        raise ValueError("need at least 2 samples to estimate a covariance")

    sum_w = X.T @ X  # sum over samples of x_i * x_j
    S = sum_w / (n - 1)
    X2 = X * X
    sum_w2 = X2.T @ X2
    # var of the unbiased covariance entries: n/(n-1)^3 * sum (w - wbar)^2
    var_s = (n / (n - 1) ** 3) * (sum_w2 - sum_w**2 / n)

    off = ~np.eye(p, dtype=bool)
    denom = float((S[off] ** 2).sum())
    lam = 1.0 if denom <= 0.0 else float(var_s[off].sum() / denom)
    lam = min(1.0, max(0.0, lam))

    target = np.diag(np.diag(S))
    sigma = lam * target + (1.0 - lam) * S
    return sigma, lam


class ShrinkageLda(BaseEstimator, ClassifierMixin):
    """Binary shrinkage-LDA relevance classifier.

    Parameters
    ----------
    shrinkage : float or None
        Fixed shrinkage intensity in [0, 1], or None for the analytic
        estimate.
    threshold : float
        Relevance probability above which predict() returns the relevant
        label (strictly greater).
    """

    def __init__(self, shrinkage: float | None = None, threshold: float = 0.5):
        self.shrinkage = shrinkage
        self.threshold = threshold

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        labels = set(np.unique(y))
        if labels != {LABEL_RELEVANT, LABEL_IRRELEVANT}:
            if len(labels) < 2:
                raise ValueError("degenerate training set: single class")
            raise ValueError(f"unexpected labels: {sorted(labels)}")
        rel = y == LABEL_RELEVANT

        self.mu_rel_ = X[rel].mean(axis=0)
        self.mu_irr_ = X[~rel].mean(axis=0)
        residuals = np.where(rel[:, None], X - self.mu_rel_, X - self.mu_irr_)

        if self.shrinkage is None:
            self.sigma_, self.shrinkage_ = shrink_covariance(residuals)
        else:
            if not 0.0 <= self.shrinkage <= 1.0:
                raise ValueError("shrinkage must lie in [0, 1]")
            n = X.shape[0]
            S = residuals.T @ residuals / (n - 1)
            self.sigma_ = self.shrinkage * np.diag(np.diag(S)) + (1.0 - self.shrinkage) * S
            self.shrinkage_ = float(self.shrinkage)

        self.priors_ = {
            LABEL_RELEVANT: float(rel.mean()),
            LABEL_IRRELEVANT: float(1.0 - rel.mean()),
        }
        self._finalize()
        self.classes_ = np.array([LABEL_IRRELEVANT, LABEL_RELEVANT])
        self.n_features_in_ = X.shape[1]
        return self

    def _finalize(self):
        """Derive the discriminant from means, covariance and priors."""
        factor = cho_factor(self.sigma_)  # SPD solve, no explicit inverse
        diff = self.mu_rel_ - self.mu_irr_
        self.coef_ = cho_solve(factor, diff)
        self.intercept_ = float(
            -0.5 * (self.mu_rel_ + self.mu_irr_) @ self.coef_
            + np.log(self.priors_[LABEL_RELEVANT] / self.priors_[LABEL_IRRELEVANT])
        )

    def decision_function(self, X):
        """Log posterior odds of the relevant class."""
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.coef_.shape[0]:
            raise ValueError(
                f"feature dimension {X.shape[1]} does not match model {self.coef_.shape[0]}"
            )
        return X @ self.coef_ + self.intercept_

    def relevance_probability(self, X) -> np.ndarray:
        """p(relevant | x) for each row of X."""
        return expit(self.decision_function(X))

    def predict_proba(self, X) -> np.ndarray:
        p = self.relevance_probability(X)
        return np.column_stack([1.0 - p, p])  # column order follows classes_

    def predict(self, X) -> np.ndarray:
        p = self.relevance_probability(X)
        return np.where(p > self.threshold, LABEL_RELEVANT, LABEL_IRRELEVANT)


def binarize(p: float, threshold: float = 0.5) -> str:
    """Relevant iff the probability strictly exceeds the threshold."""
    return LABEL_RELEVANT if p > threshold else LABEL_IRRELEVANT


_MAGIC = b"SLDA"
_VERSION = 1


def save_model(model: ShrinkageLda, path) -> None:
    """Versioned flat binary serialization; float64 payloads round-trip exactly."""
    check_is_fitted(model, "coef_")
    p = model.mu_rel_.shape[0]
    meta = json.dumps(
        {"threshold": model.threshold,
         "priors": [model.priors_[LABEL_RELEVANT], model.priors_[LABEL_IRRELEVANT]],
         "shrinkage": model.shrinkage_},
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HII", _VERSION, p, len(meta)))
        fh.write(meta)
        fh.write(np.ascontiguousarray(model.mu_rel_, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.mu_irr_, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.sigma_, dtype="<f8").tobytes())


def load_model(path) -> ShrinkageLda:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"not a classifier model file: {path}")
        version, p, meta_len = struct.unpack("<HII", fh.read(10))
        if version != _VERSION:
            raise ValueError(f"unsupported model version {version}")
        meta = json.loads(fh.read(meta_len).decode("utf-8"))
        mu_rel = np.frombuffer(fh.read(p * 8), dtype="<f8").copy()
        mu_irr = np.frombuffer(fh.read(p * 8), dtype="<f8").copy()
        sigma = np.frombuffer(fh.read(p * p * 8), dtype="<f8").reshape(p, p).copy()
    model = ShrinkageLda(threshold=float(meta["threshold"]))
    model.mu_rel_ = mu_rel
    model.mu_irr_ = mu_irr
    model.sigma_ = sigma
    model.priors_ = {
        LABEL_RELEVANT: float(meta["priors"][0]),
        LABEL_IRRELEVANT: float(meta["priors"][1]),
    }
    model.shrinkage_ = float(meta["shrinkage"])
    model._finalize()
    model.classes_ = np.array([LABEL_IRRELEVANT, LABEL_RELEVANT])
    model.n_features_in_ = p
    return model

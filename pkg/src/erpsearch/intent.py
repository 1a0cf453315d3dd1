"""Search-intent modeling from noisy term-relevance feedback.

A LinRel upper-confidence-bound estimator turns per-term relevance scores
into a weight for every vocabulary term: w_i = a_i . s + (c/2) ||a_i||
where a_i = k_i (K_t' K_t + lambda I)^{-1} K_t' is the regularized
regression vector of candidate term i against the feedback terms' rows
K_t of the tf-idf matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator

from .corpus import STOP_WORDS, TermDocumentMatrix, stem, tokenize

log = logging.getLogger(__name__)

__all__ = [
    "Feedback",
    "IntentModel",
    "EmptyFeedbackError",
    "NoQueryTermsError",
    "assemble_feedback",
    "fallback_feedback",
    "linrel_score",
    "LinRel",
    "select_query",
    "dump_intent",
    "load_intent",
]


class EmptyFeedbackError(ValueError):
    """No terms carried positive relevance feedback."""


class NoQueryTermsError(ValueError):
    """The intent model assigns no positive weight to any term."""


@dataclass
class Feedback:
    """Per-term relevance scores in [0, 1], one entry per term."""

    terms: list[str]
    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if len(self.terms) != self.scores.size:
            raise ValueError("terms and scores must align")
        if len(set(self.terms)) != len(self.terms):
            raise ValueError("duplicate feedback terms")
        if self.scores.size and (self.scores.min() < 0.0 or self.scores.max() > 1.0):
            raise ValueError("feedback scores must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.terms)


@dataclass
class IntentModel:
    """Intent weight per vocabulary term."""

    terms: tuple[str, ...]
    scores: np.ndarray
    regularization: float
    exploration: float


def _word_terms(word: str) -> list[str]:
    return [stem(t) for t in tokenize(word) if t not in STOP_WORDS]


def _collect(predictions, matrix: TermDocumentMatrix, threshold: float | None) -> Feedback:
    best: dict[str, float] = {}
    for word, prob in predictions:
        if threshold is not None and not prob > threshold:
            continue
        for term in _word_terms(word):
            if matrix.term_id(term) is None:
                log.warning("dropping term %r (not in vocabulary)", term)
                continue
            # a single confident occurrence wins over repeated uncertain ones
            best[term] = max(best.get(term, 0.0), float(prob))
    terms = sorted(best)
    return Feedback(terms=terms, scores=np.asarray([best[t] for t in terms]))


def assemble_feedback(
    predictions, matrix: TermDocumentMatrix, threshold: float = 0.5
) -> Feedback:
    """Feedback from per-epoch (word, probability) relevance predictions.

    Only predictions strictly above the threshold contribute; words are
    normalized to vocabulary terms, duplicates keep the maximum
    probability, stop words and out-of-vocabulary terms are dropped.
    """
    return _collect(predictions, matrix, threshold)


def fallback_feedback(predictions, matrix: TermDocumentMatrix) -> Feedback:
    """All read terms with their raw probabilities (no threshold).

    Used when no prediction exceeds the relevance threshold, so the
    pipeline still produces a ranking.
    """
    return _collect(predictions, matrix, threshold=None)


def linrel_score(
    feedback: Feedback,
    matrix: TermDocumentMatrix,
    regularization: float = 0.5,
    exploration: float = 2.0,
) -> IntentModel:
    """Score every vocabulary term from the feedback obtained so far.

    The document-space solve is restricted to documents containing at
    least one feedback term; the regularized system is block diagonal
    across that split, so the restriction is exact.
    """
    if len(feedback) == 0:
        raise EmptyFeedbackError("no positive terms")
    if regularization <= 0.0:
        raise ValueError("regularization must be positive")

    rows = []
    for t in feedback.terms:
        i = matrix.term_id(t)
        if i is None:
            raise ValueError(f"feedback term {t!r} not in vocabulary")
        rows.append(i)

    K_t = matrix.weights[rows, :]
    touched = np.unique(K_t.nonzero()[1])
    Kt = np.asarray(K_t[:, touched].todense())  # |F| x d
    d = touched.size
    G = Kt.T @ Kt + regularization * np.eye(d)
    M = linalg.solve(G, Kt.T, assume_a="pos")  # d x |F|

    A = matrix.weights[:, touched] @ M  # every candidate term's a_i, row-wise
    A = np.asarray(A)
    scores = A @ feedback.scores + (exploration / 2.0) * np.linalg.norm(A, axis=1)
    return IntentModel(
        terms=matrix.vocabulary,
        scores=scores,
        regularization=regularization,
        exploration=exploration,
    )


class LinRel(BaseEstimator):
    """Estimator-style wrapper around linrel_score.

    Parameters mirror the scoring function; fit() computes scores_ over
    the index vocabulary.
    """

    def __init__(self, regularization: float = 0.5, exploration: float = 2.0):
        self.regularization = regularization
        self.exploration = exploration

    def fit(self, matrix: TermDocumentMatrix, feedback: Feedback):
        model = linrel_score(
            feedback, matrix,
            regularization=self.regularization, exploration=self.exploration,
        )
        self.terms_ = model.terms
        self.scores_ = model.scores
        return self

    def intent_model(self) -> IntentModel:
        return IntentModel(
            terms=self.terms_, scores=self.scores_,
            regularization=self.regularization, exploration=self.exploration,
        )


def select_query(model: IntentModel, m_terms: int) -> list[tuple[str, float]]:
    """Top positively weighted terms, ties broken lexicographically."""
    order = sorted(
        (i for i in range(len(model.terms)) if model.scores[i] > 0.0),
        key=lambda i: (-model.scores[i], model.terms[i]),
    )
    if not order:
        raise NoQueryTermsError("no positive intent weights")
    return [(model.terms[i], float(model.scores[i])) for i in order[:m_terms]]


def dump_intent(model: IntentModel, path) -> None:
    """Audit dump: one tab-separated (term, weight) pair per line."""
    order = sorted(range(len(model.terms)), key=lambda i: (-model.scores[i], model.terms[i]))
    with open(path, "w", encoding="utf-8") as fh:
        for i in order:
            fh.write(f"{model.terms[i]}\t{float(model.scores[i])!r}\n")


def load_intent(path) -> list[tuple[str, float]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            term, weight = line.rstrip("\n").split("\t")
            pairs.append((term, float(weight)))
    return pairs

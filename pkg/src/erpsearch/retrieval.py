"""Query-likelihood document ranking with Bayesian Dirichlet smoothing.

Documents are scored by the log-likelihood of the weighted query under
each document's unigram language model, with term probabilities smoothed
toward the collection distribution:

    p(term | doc) = (count(term, doc) + mu * p(term | collection))
                    / (len(doc) + mu)

    score(doc) = sum_i w_i * ln p(term_i | doc)

Scoring in log space is order-equivalent to the product form and avoids
underflow; query weights are real-valued exponents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import TermDocumentMatrix

__all__ = ["RankedList", "smoothed_prob", "score_document", "score_all", "rank",
           "save_ranked", "load_ranked"]

DEFAULT_MU = 2000.0
DEFAULT_DEPTH = 30


@dataclass
class RankedList:
    """Top-k documents as (doc id, log-score) pairs, best first."""

    entries: list[tuple[str, float]]
    k: int

    def doc_ids(self) -> list[str]:
        return [d for d, _ in self.entries]


def smoothed_prob(
    matrix: TermDocumentMatrix, term: str, doc_id: str, mu: float = DEFAULT_MU
) -> float:
    """Dirichlet-smoothed probability of a term under a document model."""
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    j = matrix.doc_id_index(doc_id)
    i = matrix.term_id(term)
    count = float(matrix.term_counts[i, j]) if i is not None else 0.0
    p_coll = float(matrix.collection_probs[i]) if i is not None else 0.0
    return (count + mu * p_coll) / (float(matrix.doc_lengths[j]) + mu)


def _query_arrays(query) -> tuple[list[str], np.ndarray]:
    terms = [t for t, _ in query]
    weights = np.asarray([w for _, w in query], dtype=np.float64)
    return terms, weights


def score_all(query, matrix: TermDocumentMatrix, mu: float = DEFAULT_MU) -> np.ndarray:
    """Log-score of every document for a weighted term query."""
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    terms, weights = _query_arrays(query)
    scores = np.zeros(matrix.n_docs, dtype=np.float64)
    denom = matrix.doc_lengths.astype(np.float64) + mu
    for term, w in zip(terms, weights):
        if w == 0.0:
            continue
        i = matrix.term_id(term)
        if i is None:
            counts = np.zeros(matrix.n_docs)
            p_coll = 0.0
        else:
            counts = np.asarray(matrix.term_counts[i, :].todense()).ravel()
            p_coll = float(matrix.collection_probs[i])
        with np.errstate(divide="ignore"):
            scores += w * np.log((counts + mu * p_coll) / denom)
    return scores


def score_document(
    query, matrix: TermDocumentMatrix, doc_id: str, mu: float = DEFAULT_MU
) -> float:
    """Log-score of one document; zero-weight queries score 0 everywhere."""
    matrix.doc_id_index(doc_id)  # validate the id up front
    terms, weights = _query_arrays(query)
    total = 0.0
    for term, w in zip(terms, weights):
        if w == 0.0:
            continue
        with np.errstate(divide="ignore"):
            total += w * np.log(smoothed_prob(matrix, term, doc_id, mu=mu))
    return float(total)


def rank(
    query, matrix: TermDocumentMatrix, k: int = DEFAULT_DEPTH, mu: float = DEFAULT_MU
) -> RankedList:
    """Top-k documents by log-score; ties break on ascending doc id."""
    if not query:
        raise ValueError("empty query")
    if matrix.n_docs == 0:
        raise ValueError("empty corpus")
    scores = score_all(query, matrix, mu=mu)
    order = sorted(range(matrix.n_docs), key=lambda j: (-scores[j], matrix.doc_ids[j]))
    entries = [(matrix.doc_ids[j], float(scores[j])) for j in order[:k]]
    return RankedList(entries=entries, k=k)


def save_ranked(ranked: RankedList, matrix: TermDocumentMatrix, path) -> None:
    """JSONL of (rank, doc id, title, log-score)."""
    with open(path, "w", encoding="utf-8") as fh:
        for pos, (doc_id, score) in enumerate(ranked.entries, start=1):
            fh.write(json.dumps(
                {"rank": pos, "doc": doc_id, "title": matrix.title_of(doc_id),
                 "score": score},
                sort_keys=True) + "\n")


def load_ranked(path) -> RankedList:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            entries.append((rec["doc"], float(rec["score"])))
    return RankedList(entries=entries, k=len(entries))

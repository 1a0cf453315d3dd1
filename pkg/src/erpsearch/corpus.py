"""Document ingestion and tf-idf term-document indexing.

Text is normalized by tokenize -> remove_stopwords -> stem; the resulting
stemmed tokens are called terms. The index stores raw per-document term
counts, tf-idf weights (raw tf times ln(N/df)), per-document token counts
and collection-level term probabilities.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .stemmer import stem

__all__ = [
    "Document",
    "TermDocumentMatrix",
    "STOP_WORDS",
    "tokenize",
    "remove_stopwords",
    "stem",
    "preprocess",
    "build_index",
    "tfidf_of",
    "load_corpus",
    "save_corpus",
    "save_index",
    "load_index",
]

# Apache Lucene 4.10 English stop word list (33 words, bit-exact).
STOP_WORDS = frozenset(
    "a an and are as at be but by for if in into is it no not of on or "
    "such that the their then there these they this to was will with".split()
)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    text: str


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on any non-alphanumeric separator.

    Pure-digit runs (e.g. sentence-separator strings) are dropped.
    """
    return [t for t in _TOKEN_RE.findall(text.lower()) if not t.isdigit()]


def remove_stopwords(tokens: list[str]) -> list[str]:
    return [t for t in tokens if t not in STOP_WORDS]


def preprocess(text: str) -> list[str]:
    """Full normalization chain: tokenize, drop stop words, stem."""
    return [stem(t) for t in remove_stopwords(tokenize(text))]


@dataclass
class TermDocumentMatrix:
    """Immutable tf-idf index over a document collection.

    weights and term_counts are terms x documents CSR matrices sharing the
    same row (vocabulary) and column (doc_ids) order. doc_lengths holds the
    post-normalization token count of each document and collection_probs
    the corpus-wide occurrence probability of each term.
    """

    vocabulary: tuple[str, ...]
    doc_ids: tuple[str, ...]
    weights: sparse.csr_matrix
    term_counts: sparse.csr_matrix
    doc_lengths: np.ndarray
    collection_probs: np.ndarray
    titles: tuple[str, ...] = ()

    def __post_init__(self):
        self._term_index = {t: i for i, t in enumerate(self.vocabulary)}
        self._doc_index = {d: j for j, d in enumerate(self.doc_ids)}

    @property
    def n_terms(self) -> int:
        return len(self.vocabulary)

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    def term_id(self, term: str) -> int | None:
        return self._term_index.get(term)

    def doc_id_index(self, doc_id: str) -> int:
        try:
            return self._doc_index[doc_id]
        except KeyError:
            raise KeyError(f"unknown document id: {doc_id!r}") from None

    def title_of(self, doc_id: str) -> str:
        j = self.doc_id_index(doc_id)
        return self.titles[j] if self.titles else doc_id


def build_index(corpus: list[Document]) -> TermDocumentMatrix:
    """Build the tf-idf index and collection statistics for a corpus.

    Raises ValueError on an empty corpus, on duplicate document ids and on
    documents that yield no terms after normalization.
    """
    if not corpus:
        raise ValueError("empty corpus")
    seen = set()
    for doc in corpus:
        if doc.id in seen:
            raise ValueError(f"duplicate document id: {doc.id!r}")
        seen.add(doc.id)

    doc_terms = []
    for doc in corpus:
        terms = preprocess(doc.text)
        if not terms:
            raise ValueError(f"document {doc.id!r} has no indexable terms")
        doc_terms.append(terms)

    vocabulary = tuple(sorted({t for terms in doc_terms for t in terms}))
    term_index = {t: i for i, t in enumerate(vocabulary)}

    rows, cols, data = [], [], []
    doc_lengths = np.zeros(len(corpus), dtype=np.int64)
    for j, terms in enumerate(doc_terms):
        doc_lengths[j] = len(terms)
        counts: dict[int, int] = {}
        for t in terms:
            i = term_index[t]
            counts[i] = counts.get(i, 0) + 1
        for i, c in counts.items():
            rows.append(i)
            cols.append(j)
            data.append(c)

    shape = (len(vocabulary), len(corpus))
    term_counts = sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), (rows, cols)), shape=shape
    )

    n_docs = len(corpus)
    df = np.asarray((term_counts > 0).sum(axis=1)).ravel()
    idf = np.log(n_docs / df)
    weights = sparse.diags(idf) @ term_counts
    weights = sparse.csr_matrix(weights)
    weights.eliminate_zeros()

    total_tokens = float(doc_lengths.sum())
    collection_probs = np.asarray(term_counts.sum(axis=1)).ravel() / total_tokens

    return TermDocumentMatrix(
        vocabulary=vocabulary,
        doc_ids=tuple(d.id for d in corpus),
        weights=weights,
        term_counts=term_counts,
        doc_lengths=doc_lengths,
        collection_probs=collection_probs,
        titles=tuple(d.title for d in corpus),
    )


def tfidf_of(matrix: TermDocumentMatrix, term: str, doc_id: str) -> float:
    """tf-idf weight of a term in one document; 0 when absent."""
    j = matrix.doc_id_index(doc_id)
    i = matrix.term_id(term)
    if i is None:
        return 0.0
    return float(matrix.weights[i, j])


def load_corpus(path) -> list[Document]:
    """Read a JSONL corpus file with id/title/text fields per line."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                docs.append(
                    Document(id=str(rec["id"]), title=str(rec.get("title", "")),
                             text=str(rec["text"]))
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"malformed corpus record at {path}:{lineno}: {exc}")
    return docs


def save_corpus(docs: list[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(
                {"id": doc.id, "title": doc.title, "text": doc.text},
                sort_keys=True) + "\n")


def save_index(matrix: TermDocumentMatrix, path) -> None:
    """Persist an index as a compressed npz archive."""
    with open(path, "wb") as fh:
        _write_index_npz(fh, matrix)


def _write_index_npz(fh, matrix: TermDocumentMatrix) -> None:
    np.savez_compressed(
        fh,
        vocabulary=np.asarray(matrix.vocabulary),
        doc_ids=np.asarray(matrix.doc_ids),
        titles=np.asarray(matrix.titles if matrix.titles else matrix.doc_ids),
        counts_data=matrix.term_counts.data,
        counts_indices=matrix.term_counts.indices,
        counts_indptr=matrix.term_counts.indptr,
        weights_data=matrix.weights.data,
        weights_indices=matrix.weights.indices,
        weights_indptr=matrix.weights.indptr,
        doc_lengths=matrix.doc_lengths,
        collection_probs=matrix.collection_probs,
    )


def load_index(path) -> TermDocumentMatrix:
    with np.load(path, allow_pickle=False) as z:
        vocabulary = tuple(str(t) for t in z["vocabulary"])
        doc_ids = tuple(str(d) for d in z["doc_ids"])
        shape = (len(vocabulary), len(doc_ids))
        term_counts = sparse.csr_matrix(
            (z["counts_data"], z["counts_indices"], z["counts_indptr"]), shape=shape
        )
        weights = sparse.csr_matrix(
            (z["weights_data"], z["weights_indices"], z["weights_indptr"]), shape=shape
        )
        return TermDocumentMatrix(
            vocabulary=vocabulary,
            doc_ids=doc_ids,
            weights=weights,
            term_counts=term_counts,
            doc_lengths=z["doc_lengths"],
            collection_probs=z["collection_probs"],
            titles=tuple(str(t) for t in z["titles"]),
        )

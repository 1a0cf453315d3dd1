"""Evaluation protocol: leave-one-block-out cross-validation, ranking and
precision metrics, cumulative gain, and random-feedback permutation tests.

For every held-out block a classifier is trained on the remaining blocks,
its per-epoch relevance probabilities are scored (AUC, precision,
tf-idf-weighted precision), and the predictions drive the intent +
retrieval chain whose ranked list is scored by cumulative gain against
graded document judgments. Permutation tests rebuild the same chain from
training labels permuted uniformly at random and compare against the
statistic obtained with true labels; p = (#{null >= actual} + 1) / (k + 1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .classifier import ShrinkageLda
from .config import PipelineConfig, rng_stream
from .corpus import TermDocumentMatrix, preprocess, tfidf_of
from .eeg import LABEL_IRRELEVANT, LABEL_RELEVANT, EpochSet, FeatureMatrix, extract_features
from .intent import (
    NoQueryTermsError,
    assemble_feedback,
    fallback_feedback,
    linrel_score,
    select_query,
)
from .retrieval import RankedList, rank

__all__ = [
    "DocumentJudgments",
    "ExperimentBlock",
    "ParticipantData",
    "auc",
    "precision",
    "weighted_precision",
    "cumulative_gain",
    "word_weight",
    "retrieve_for_predictions",
    "run_block",
    "leave_one_block_out",
    "permutation_test_classification",
    "permutation_test_retrieval",
    "pooled_significance",
    "write_results",
    "read_results",
    "save_judgments",
    "load_judgments",
]

CG_DEPTHS = (10, 20, 30)


@dataclass
class DocumentJudgments:
    """Graded 0-3 relevance of documents with respect to one topic."""

    topic: str
    scores: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for doc, score in self.scores.items():
            if not 0 <= int(score) <= 3:
                raise ValueError(f"judgment for {doc!r} outside 0-3: {score}")

    def score_of(self, doc_id: str) -> int:
        return int(self.scores.get(doc_id, 0))  # unjudged documents score 0


@dataclass
class ExperimentBlock:
    id: int
    relevant_doc: str
    irrelevant_doc: str


@dataclass
class ParticipantData:
    """One participant's labeled epochs plus the per-block document pairing."""

    participant: str
    epoch_set: EpochSet
    blocks: list[ExperimentBlock]

    def block_by_id(self, block_id: int) -> ExperimentBlock:
        for block in self.blocks:
            if block.id == block_id:
                return block
        raise KeyError(f"no block {block_id} for participant {self.participant}")


# --------------------------------------------------------------------------
# metrics


def auc(scores, labels) -> float:
    """Area under the ROC curve, Mann-Whitney rank form; ties credit 0.5."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == LABEL_RELEVANT
    n_pos = int(pos.sum())
    n_neg = int(pos.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def precision(predicted_relevant, truly_relevant) -> float | None:
    """tp / (tp + fp); None (absent) when nothing was predicted relevant."""
    pred = np.asarray(predicted_relevant, dtype=bool)
    truth = np.asarray(truly_relevant, dtype=bool)
    tp = int((pred & truth).sum())
    fp = int((pred & ~truth).sum())
    if tp + fp == 0:
        return None
    return tp / (tp + fp)


def weighted_precision(predicted_relevant, truly_relevant, weights) -> float | None:
    """tf-idf-weighted precision: summed true-positive weight over the
    summed weight of all positive predictions.

    Words absent from the weighting document contribute weight 0; with one
    identical weight on every positively predicted word this reduces to
    plain precision. Returns None when the denominator vanishes.
    """
    pred = np.asarray(predicted_relevant, dtype=bool)
    truth = np.asarray(truly_relevant, dtype=bool)
    weights = np.asarray(weights, dtype=np.float64)
    w_tp = float(weights[pred & truth].sum())
    w_fp = float(weights[pred & ~truth].sum())
    denom = w_tp + w_fp
    if denom == 0.0:
        return None
    return w_tp / denom


def cumulative_gain(ranked: RankedList, judgments: DocumentJudgments, depth: int) -> float:
    """Sum of graded relevance over the top-`depth` retrieved documents."""
    return float(sum(judgments.score_of(doc) for doc in ranked.doc_ids()[:depth]))


def word_weight(matrix: TermDocumentMatrix, word: str, doc_id: str) -> float:
    """tf-idf mass of a displayed word inside one document (0 when absent)."""
    return sum(tfidf_of(matrix, term, doc_id) for term in preprocess(word))


# --------------------------------------------------------------------------
# pipeline pieces


def _masks(features: FeatureMatrix, block_id: int) -> tuple[np.ndarray, np.ndarray]:
    labeled = (features.labels == LABEL_RELEVANT) | (features.labels == LABEL_IRRELEVANT)
    in_block = features.blocks == block_id
    return labeled & ~in_block, in_block


def _fit_predict(features: FeatureMatrix, train_mask, test_mask, cfg: PipelineConfig,
                 y_train=None) -> np.ndarray:
    model = ShrinkageLda(
        shrinkage=cfg["classifier.shrinkage"], threshold=cfg["classifier.threshold"]
    )
    y = features.labels[train_mask] if y_train is None else y_train
    model.fit(features.X[train_mask], y)
    return model.relevance_probability(features.X[test_mask])


def retrieve_for_predictions(
    predictions, matrix: TermDocumentMatrix, cfg: PipelineConfig
):
    """Intent + retrieval chain for per-epoch (word, probability) pairs.

    Falls back to all read terms with raw probabilities when no prediction
    exceeds the threshold, and to the feedback itself when the intent model
    has no positive weights. Returns (query, ranked, intent_model), all
    None when no read word is in the vocabulary at all.
    """
    predictions = list(predictions)
    feedback = assemble_feedback(predictions, matrix, threshold=cfg["classifier.threshold"])
    if len(feedback) == 0:
        feedback = fallback_feedback(predictions, matrix)
    if len(feedback) == 0:
        return None, None, None
    model = linrel_score(
        feedback, matrix,
        regularization=cfg["intent.lambda"], exploration=cfg["intent.c"],
    )
    try:
        query = select_query(model, cfg["intent.m_terms"])
    except NoQueryTermsError:
        query = list(zip(feedback.terms, feedback.scores.tolist()))
    ranked = rank(query, matrix, k=cfg["retrieval.k"], mu=cfg["retrieval.mu"])
    return query, ranked, model


def _block_metrics(features, test_mask, probs, block, matrix, cfg):
    threshold = cfg["classifier.threshold"]
    labels = features.labels[test_mask]
    labeled = (labels == LABEL_RELEVANT) | (labels == LABEL_IRRELEVANT)
    truth = labels[labeled] == LABEL_RELEVANT
    pred = probs[labeled] > threshold
    words = [w for w, keep in zip(np.asarray(features.words)[test_mask], labeled) if keep]

    try:
        block_auc = auc(probs[labeled], labels[labeled])
    except ValueError:
        block_auc = None

    w_rel = [word_weight(matrix, w, block.relevant_doc) for w in words]
    w_irr = [word_weight(matrix, w, block.irrelevant_doc) for w in words]
    return {
        "auc": block_auc,
        "precision": precision(pred, truth),
        "weighted_precision_rel": weighted_precision(pred, truth, w_rel),
        "weighted_precision_irr": weighted_precision(pred, truth, w_irr),
    }


def run_block(
    features: FeatureMatrix,
    block: ExperimentBlock,
    matrix: TermDocumentMatrix,
    judgments: dict[str, DocumentJudgments],
    cfg: PipelineConfig,
):
    """Train on the other blocks, predict this one, retrieve and score.

    Returns (row, probs, query, ranked, intent_model); row holds the
    per-block metrics.
    """
    train_mask, test_mask = _masks(features, block.id)
    if not train_mask.any() or not test_mask.any():
        raise ValueError(f"block {block.id}: empty train or test split")
    probs = _fit_predict(features, train_mask, test_mask, cfg)
    row = _block_metrics(features, test_mask, probs, block, matrix, cfg)

    test_words = [w for w, m in zip(features.words, test_mask) if m]
    query, ranked, intent_model = retrieve_for_predictions(zip(test_words, probs), matrix, cfg)
    topic_judgments = judgments.get(
        block.relevant_doc, DocumentJudgments(topic=block.relevant_doc)
    )
    for depth in CG_DEPTHS:
        row[f"cg{depth}"] = (
            cumulative_gain(ranked, topic_judgments, depth) if ranked is not None else None
        )
    row["block"] = block.id
    return row, probs, query, ranked, intent_model


def permutation_test_classification(
    features: FeatureMatrix,
    block: ExperimentBlock,
    cfg: PipelineConfig,
    k: int,
    seed: int,
    stream: tuple = (),
) -> tuple[float, np.ndarray]:
    """Random-feedback null for the block AUC.

    Training labels are permuted uniformly at random k times; each
    permuted model is evaluated against the true test labels. Iterations
    draw independent substreams of the root seed so results do not depend
    on execution order.
    """
    train_mask, test_mask = _masks(features, block.id)
    labels_test = features.labels[test_mask]
    labeled = (labels_test == LABEL_RELEVANT) | (labels_test == LABEL_IRRELEVANT)

    actual_probs = _fit_predict(features, train_mask, test_mask, cfg)
    actual = auc(actual_probs[labeled], labels_test[labeled])

    y_train = features.labels[train_mask]
    null = np.empty(k, dtype=np.float64)
    for i in range(k):
        rng = rng_stream(seed, "perm-class", *stream, block.id, i)
        probs = _fit_predict(features, train_mask, test_mask, cfg, y_train=rng.permutation(y_train))
        null[i] = auc(probs[labeled], labels_test[labeled])
    p = (int((null >= actual).sum()) + 1) / (k + 1)
    return p, null


def permutation_test_retrieval(
    features: FeatureMatrix,
    block: ExperimentBlock,
    matrix: TermDocumentMatrix,
    judgments: dict[str, DocumentJudgments],
    cfg: PipelineConfig,
    k: int,
    seed: int,
    stream: tuple = (),
) -> tuple[float, np.ndarray]:
    """Random-feedback null for the block's cumulative gain at the ranking depth."""
    train_mask, test_mask = _masks(features, block.id)
    test_words = [w for w, m in zip(features.words, test_mask) if m]
    topic_judgments = judgments.get(
        block.relevant_doc, DocumentJudgments(topic=block.relevant_doc)
    )
    depth = cfg["retrieval.k"]

    def chain_cg(probs) -> float:
        _, ranked, _ = retrieve_for_predictions(zip(test_words, probs), matrix, cfg)
        if ranked is None:
            return 0.0
        return cumulative_gain(ranked, topic_judgments, depth)

    actual = chain_cg(_fit_predict(features, train_mask, test_mask, cfg))
    y_train = features.labels[train_mask]
    null = np.empty(k, dtype=np.float64)
    for i in range(k):
        rng = rng_stream(seed, "perm-ret", *stream, block.id, i)
        probs = _fit_predict(features, train_mask, test_mask, cfg, y_train=rng.permutation(y_train))
        null[i] = chain_cg(probs)
    p = (int((null >= actual).sum()) + 1) / (k + 1)
    return p, null


def leave_one_block_out(
    data: ParticipantData,
    matrix: TermDocumentMatrix,
    judgments: dict[str, DocumentJudgments],
    cfg: PipelineConfig,
    permutations: int | None = None,
) -> list[dict]:
    """Full per-participant protocol; one result row per block.

    permutations=0 skips the permutation tests; None uses the configured
    count. Blocks whose test labels are single-class report auc/p_class
    as absent, the remaining metrics are still computed.
    """
    if len(data.blocks) < 2:
        raise ValueError("leave-one-block-out needs at least 2 blocks")
    k = cfg["evaluation.permutations"] if permutations is None else permutations
    features = extract_features(data.epoch_set)
    rows = []
    for block in sorted(data.blocks, key=lambda b: b.id):
        row, _, _, _, _ = run_block(features, block, matrix, judgments, cfg)
        row["participant"] = data.participant
        if k:
            stream = (data.participant,)
            if row["auc"] is None:
                row["p_class"] = None
            else:
                row["p_class"], _ = permutation_test_classification(
                    features, block, cfg, k=k, seed=cfg.seed, stream=stream
                )
            row["p_retrieval"], _ = permutation_test_retrieval(
                features, block, matrix, judgments, cfg, k=k, seed=cfg.seed, stream=stream
            )
        rows.append(row)
    return rows


def pooled_significance(actuals, nulls) -> float:
    """Participant-level p-value from per-block statistics and null draws.

    The statistic is the mean over blocks; per-iteration null means are
    valid because block iterations use independent substreams.
    """
    actual = float(np.mean(actuals))
    null = np.mean(np.stack(nulls), axis=0)
    k = null.size
    return (int((null >= actual).sum()) + 1) / (k + 1)


# --------------------------------------------------------------------------
# file formats

_ROW_KEYS = (
    "participant", "block", "auc", "precision", "weighted_precision_rel",
    "weighted_precision_irr", "cg10", "cg20", "cg30", "p_class", "p_retrieval",
)


def write_results(rows: list[dict], path, meta: dict) -> None:
    """JSONL results: a meta line (config hash, seed) then one row per block."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"kind": "meta", **meta}, sort_keys=True) + "\n")
        for row in rows:
            record = {key: row.get(key) for key in _ROW_KEYS}
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_results(path) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("kind") != "meta":
        raise ValueError(f"results file missing meta line: {path}")
    return lines[0], lines[1:]


def save_judgments(judgments: dict[str, DocumentJudgments], path) -> None:
    """JSONL of (topic id, doc id, score); zero scores are implicit."""
    with open(path, "w", encoding="utf-8") as fh:
        for topic in sorted(judgments):
            for doc, score in sorted(judgments[topic].scores.items()):
                fh.write(json.dumps(
                    {"topic": topic, "doc": doc, "score": int(score)}, sort_keys=True
                ) + "\n")


def load_judgments(path) -> dict[str, DocumentJudgments]:
    out: dict[str, DocumentJudgments] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                topic, doc, score = rec["topic"], rec["doc"], int(rec["score"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"malformed judgment at {path}:{lineno}: {exc}")
            out.setdefault(topic, DocumentJudgments(topic=topic)).scores[doc] = score
    return out

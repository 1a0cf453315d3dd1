"""Brain-signal relevance feedback for document retrieval.

Pipeline: EEG epochs around read words are classified for relevance with
shrinkage LDA, the predictions feed a LinRel intent model over the corpus
vocabulary, and documents are ranked by Dirichlet-smoothed query
likelihood. An evaluation harness (leave-one-block-out, permutation
tests, cumulative gain) and a synthetic participant simulator make every
step testable without recordings.
"""

from .classifier import ShrinkageLda, binarize, shrink_covariance
from .config import PipelineConfig, rng_stream
from .corpus import (
    Document,
    TermDocumentMatrix,
    build_index,
    remove_stopwords,
    stem,
    tfidf_of,
    tokenize,
)
from .eeg import (
    Epoch,
    EpochSet,
    Recording,
    bandpass_filter,
    cut_epochs,
    extract_features,
    grand_average,
    interval_test,
    reject_artifacts,
)
from .evaluation import (
    DocumentJudgments,
    ExperimentBlock,
    ParticipantData,
    auc,
    cumulative_gain,
    leave_one_block_out,
    permutation_test_classification,
    permutation_test_retrieval,
    precision,
    weighted_precision,
)
from .intent import Feedback, IntentModel, LinRel, assemble_feedback, linrel_score, select_query
from .retrieval import RankedList, rank, score_document, smoothed_prob
from .simulator import SimulationConfig, generate_epoch, simulate_dataset

__version__ = "0.1.0"

__all__ = [
    "ShrinkageLda", "binarize", "shrink_covariance",
    "PipelineConfig", "rng_stream",
    "Document", "TermDocumentMatrix", "build_index", "remove_stopwords",
    "stem", "tfidf_of", "tokenize",
    "Epoch", "EpochSet", "Recording", "bandpass_filter", "cut_epochs",
    "extract_features", "grand_average", "interval_test", "reject_artifacts",
    "DocumentJudgments", "ExperimentBlock", "ParticipantData", "auc",
    "cumulative_gain", "leave_one_block_out",
    "permutation_test_classification", "permutation_test_retrieval",
    "precision", "weighted_precision",
    "Feedback", "IntentModel", "LinRel", "assemble_feedback", "linrel_score",
    "select_query",
    "RankedList", "rank", "score_document", "smoothed_prob",
    "SimulationConfig", "generate_epoch", "simulate_dataset",
]

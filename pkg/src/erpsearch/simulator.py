"""Synthetic participants: corpora with topic structure, reading blocks
with ground-truth word labels, graded document judgments, and EEG epochs
carrying label-dependent deflections.

Irrelevant words receive a negativity spanning 350-500 ms, relevant words
a positivity spanning 500-850 ms, both on a configurable subset of
centro-parietal channels. Deflections are raised-cosine bumps whose mean
over their span equals the configured amplitude, so grand-average window
means match the amplitude parameters directly.

Background activity is band-limited Gaussian noise: a white source with
standard deviation noise_sd low-passed into the ERP band. Epochs thereby
look like cleaned (already filtered) recordings, and at default noise
levels their peak-to-peak stays inside the artifact-rejection ceiling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import signal

from .config import PipelineConfig, rng_stream
from .corpus import Document, stem
from .eeg import (
    EPOCH_END_MS,
    EPOCH_START_MS,
    LABEL_IRRELEVANT,
    LABEL_RELEVANT,
    Epoch,
    EpochSet,
    window_indices,
)
from .evaluation import DocumentJudgments, ExperimentBlock, ParticipantData

__all__ = [
    "SimulationConfig",
    "SimulatedCorpus",
    "Topic",
    "SimulatedDataset",
    "template",
    "generate_epoch",
    "generate_corpus",
    "make_judgments",
    "simulate_participant",
    "simulate_dataset",
]

N400_SPAN = (350.0, 500.0)
P600_SPAN = (500.0, 850.0)
ARTIFACT_AMP = 60.0  # blink-like transient, microvolts
NOISE_BAND_HZ = 25.0  # background-activity band inside the ERP passband

_CHANNEL_POOL = [
    "Fz", "Cz", "Pz", "Oz", "F3", "F4", "C3", "C4",
    "P3", "P4", "O1", "O2", "F7", "F8", "T7", "T8",
]

_SYL_ONSET = "bdfgklmnprstvz"
_SYL_NUCLEUS = "aeiou"


@dataclass
class SimulationConfig:
    n_channels: int = 8
    fs: float = 200.0
    n_blocks: int = 8
    trials_per_block: int = 6
    noise_sd: float = 8.0
    n400_amp: float = 0.8
    p600_amp: float = 1.0
    affected_channels: tuple[str, ...] = ("Cz", "Pz")
    seed: int = 0
    artifact_rate: float = 0.0
    participants: int = 1
    n_topics: int = 16
    docs_per_topic: int = 12
    sentences_per_doc: int = 8
    words_per_sentence: int = 9
    topical_per_sentence: int = 3
    topical_vocab: int = 12
    filler_vocab: int = 40
    universal_fillers: int = 4

    def channel_names(self) -> list[str]:
        names = list(_CHANNEL_POOL)
        while len(names) < self.n_channels:
            names.append(f"E{len(names):02d}")
        return names[: self.n_channels]

    def validate(self) -> None:
        if not np.isfinite([self.n400_amp, self.p600_amp]).all():
            raise ValueError("deflection amplitudes must be finite")
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be positive")
        if not self.affected_channels:
            raise ValueError("affected_channels must be non-empty")
        missing = set(self.affected_channels) - set(self.channel_names())
        if missing:
            raise ValueError(f"affected channels not in montage: {sorted(missing)}")
        if self.n_topics < 2:
            raise ValueError("need at least 2 topics")
        if self.n_topics < 2 * self.n_blocks:
            raise ValueError("need 2 distinct topics per block (drawn without replacement)")
        if self.sentences_per_doc < self.trials_per_block:
            raise ValueError("documents need one sentence per trial")
        if self.topical_per_sentence + 1 > self.words_per_sentence:
            raise ValueError("sentence too short for topical words plus filler")

    @classmethod
    def from_pipeline(cls, cfg: PipelineConfig) -> "SimulationConfig":
        affected = tuple(
            name.strip() for name in str(cfg["simulation.affected_channels"]).split(",")
            if name.strip()
        )
        return cls(
            n_channels=cfg["simulation.n_channels"],
            fs=cfg["simulation.fs"],
            n_blocks=cfg["simulation.n_blocks"],
            trials_per_block=cfg["simulation.trials_per_block"],
            noise_sd=cfg["simulation.noise_sd"],
            n400_amp=cfg["simulation.n400_amp"],
            p600_amp=cfg["simulation.p600_amp"],
            affected_channels=affected,
            seed=cfg.seed,
            artifact_rate=cfg["simulation.artifact_rate"],
            participants=cfg["simulation.participants"],
            n_topics=cfg["simulation.n_topics"],
            docs_per_topic=cfg["simulation.docs_per_topic"],
            sentences_per_doc=cfg["simulation.sentences_per_doc"],
            words_per_sentence=cfg["simulation.words_per_sentence"],
            topical_per_sentence=cfg["simulation.topical_per_sentence"],
        )


def _epoch_samples(fs: float) -> int:
    return round((EPOCH_END_MS - EPOCH_START_MS) / 1000.0 * fs)


@lru_cache(maxsize=8)
def _noise_taps(fs: float) -> np.ndarray:
    ntaps = 2 * round(0.25 * fs) + 1
    cutoff = min(NOISE_BAND_HZ, 0.45 * fs)
    return signal.firwin(ntaps, cutoff, window="hamming", fs=fs)


def _band_noise(
    rng: np.random.Generator, n_channels: int, n_samples: int, sd: float, fs: float
) -> np.ndarray:
    taps = _noise_taps(fs)
    length = n_samples + 2 * taps.size
    white = rng.normal(0.0, sd, size=(n_channels, length))
    out = signal.fftconvolve(white, taps[None, :], mode="valid", axes=1)
    start = (out.shape[1] - n_samples) // 2
    return out[:, start: start + n_samples]


def _bump(fs: float, n_samples: int, span: tuple[float, float], amp: float) -> np.ndarray:
    """Raised-cosine deflection over [start, end) ms; span mean equals amp."""
    out = np.zeros(n_samples)
    idx = window_indices(fs, n_samples, span[0], span[1])
    n = idx.size
    if n:
        k = np.arange(n)
        out[idx] = amp * (1.0 - np.cos(2.0 * np.pi * k / n))
    return out


def template(config: SimulationConfig, label: str) -> np.ndarray:
    """Deterministic deflection pattern (channels x samples) for one label."""
    n_samples = _epoch_samples(config.fs)
    channels = config.channel_names()
    data = np.zeros((config.n_channels, n_samples))
    if label == LABEL_RELEVANT:
        curve = _bump(config.fs, n_samples, P600_SPAN, config.p600_amp)
    else:
        curve = _bump(config.fs, n_samples, N400_SPAN, -config.n400_amp)
    for name in config.affected_channels:
        data[channels.index(name)] += curve
    return data


def generate_epoch(
    label: str,
    config: SimulationConfig,
    rng: np.random.Generator,
    word: str = "",
    block: int = 0,
) -> Epoch:
    """One synthetic epoch: band-limited Gaussian noise plus the label's
    deflections.

    The pre-stimulus mean is removed per channel, mirroring baseline
    correction of recorded epochs.
    """
    n_samples = _epoch_samples(config.fs)
    data = template(config, label).copy()
    if config.noise_sd > 0:
        data = data + _band_noise(rng, config.n_channels, n_samples, config.noise_sd, config.fs)
    if config.artifact_rate > 0 and rng.random() < config.artifact_rate:
        onset = float(rng.uniform(EPOCH_START_MS, EPOCH_END_MS - 200.0))
        data[0] += _bump(config.fs, n_samples, (onset, onset + 200.0), ARTIFACT_AMP)
    pre = window_indices(config.fs, n_samples, EPOCH_START_MS, 0.0)
    data -= data[:, pre].mean(axis=1, keepdims=True)
    return Epoch(data=data, word=word, block=block, label=label)


# --------------------------------------------------------------------------
# corpus generation


@dataclass
class Topic:
    name: str
    words: list[str]
    terms: frozenset[str]
    doc_ids: list[str]


@dataclass
class SimulatedCorpus:
    documents: list[Document]
    sentences: dict[str, list[list[str]]]  # doc id -> per-sentence word lists
    topics: list[Topic]
    filler_words: list[str]
    universal_words: list[str]


def _word_maker(rng: np.random.Generator):
    from .corpus import STOP_WORDS

    seen_words: set[str] = set()
    seen_stems: set[str] = set()

    def make() -> str:
        while True:
            n_syll = int(rng.integers(2, 4))
            word = "".join(
                _SYL_ONSET[rng.integers(len(_SYL_ONSET))]
                + _SYL_NUCLEUS[rng.integers(len(_SYL_NUCLEUS))]
                for _ in range(n_syll)
            )
            stemmed = stem(word)
            if word in STOP_WORDS or word in seen_words or stemmed in seen_stems:
                continue
            seen_words.add(word)
            seen_stems.add(stemmed)
            return word

    return make


def generate_corpus(config: SimulationConfig, rng: np.random.Generator) -> SimulatedCorpus:
    """Topic-structured corpus: per-topic low-df vocabularies on top of
    shared filler words, so truly topical terms carry high tf-idf.

    A small set of universal fillers appears in every document and thus
    has tf-idf exactly 0.
    """
    make_word = _word_maker(rng)
    universal = [make_word() for _ in range(config.universal_fillers)]
    fillers = [make_word() for _ in range(config.filler_vocab)]

    topics: list[Topic] = []
    documents: list[Document] = []
    sentences: dict[str, list[list[str]]] = {}
    for t in range(config.n_topics):
        words = [make_word() for _ in range(config.topical_vocab)]
        topic = Topic(
            name=words[0],
            words=words,
            terms=frozenset(stem(w) for w in words),
            doc_ids=[],
        )
        for d in range(config.docs_per_topic):
            doc_id = f"{topic.name}-{d:02d}"
            doc_sentences = []
            for s in range(config.sentences_per_doc):
                topical = list(
                    rng.choice(words, size=config.topical_per_sentence, replace=False)
                )
                n_fill = config.words_per_sentence - config.topical_per_sentence - 1
                fill = list(rng.choice(fillers, size=n_fill, replace=True))
                sentence = topical + fill + [universal[s % len(universal)]]
                rng.shuffle(sentence)
                doc_sentences.append([str(w) for w in sentence])
            text = ". ".join(" ".join(s) for s in doc_sentences) + "."
            documents.append(
                Document(id=doc_id, title=f"{topic.name} ({d})", text=text)
            )
            sentences[doc_id] = doc_sentences
            topic.doc_ids.append(doc_id)
        topics.append(topic)
    return SimulatedCorpus(
        documents=documents,
        sentences=sentences,
        topics=topics,
        filler_words=fillers,
        universal_words=universal,
    )


def make_judgments(corpus: SimulatedCorpus) -> dict[str, DocumentJudgments]:
    """Graded expert-style judgments: with any document as the topic anchor,
    same-topic documents score 3 (first half) or 2, everything else 0."""
    judgments: dict[str, DocumentJudgments] = {}
    for topic in corpus.topics:
        half = (len(topic.doc_ids) + 1) // 2
        scores = {
            doc: 3 if pos < half else 2 for pos, doc in enumerate(topic.doc_ids)
        }
        for anchor in topic.doc_ids:
            judgments[anchor] = DocumentJudgments(topic=anchor, scores=dict(scores))
    return judgments


# --------------------------------------------------------------------------
# participants


def simulate_participant(
    config: SimulationConfig,
    corpus: SimulatedCorpus,
    participant: str,
    rng: np.random.Generator,
) -> ParticipantData:
    """Reading blocks for one participant.

    Each block pairs two topics drawn without replacement, reads one
    sentence of each document per trial in randomized presentation order,
    and labels words relevant only when they are topical terms of the
    relevant document.
    """
    topic_order = rng.permutation(len(corpus.topics))
    blocks: list[ExperimentBlock] = []
    epochs: list[Epoch] = []
    for b in range(1, config.n_blocks + 1):
        rel_topic = corpus.topics[topic_order[2 * (b - 1)]]
        irr_topic = corpus.topics[topic_order[2 * b - 1]]
        rel_doc = rel_topic.doc_ids[rng.integers(len(rel_topic.doc_ids))]
        irr_doc = irr_topic.doc_ids[rng.integers(len(irr_topic.doc_ids))]
        blocks.append(ExperimentBlock(id=b, relevant_doc=rel_doc, irrelevant_doc=irr_doc))
        for trial in range(config.trials_per_block):
            order = [(rel_doc, rel_topic, True), (irr_doc, irr_topic, False)]
            if rng.random() < 0.5:
                order.reverse()
            for doc_id, topic, is_relevant in order:
                for word in corpus.sentences[doc_id][trial]:
                    if is_relevant and stem(word) in topic.terms:
                        label = LABEL_RELEVANT
                    else:
                        label = LABEL_IRRELEVANT
                    epochs.append(generate_epoch(label, config, rng, word=word, block=b))
    epoch_set = EpochSet(
        participant=participant,
        fs=config.fs,
        channels=config.channel_names(),
        epochs=epochs,
    )
    return ParticipantData(participant=participant, epoch_set=epoch_set, blocks=blocks)


@dataclass
class SimulatedDataset:
    config: SimulationConfig
    corpus: SimulatedCorpus
    judgments: dict[str, DocumentJudgments]
    participants: list[ParticipantData] = field(default_factory=list)


def simulate_dataset(config: SimulationConfig) -> SimulatedDataset:
    """Corpus, judgments and all participants from one root seed."""
    config.validate()
    corpus = generate_corpus(config, rng_stream(config.seed, "corpus"))
    judgments = make_judgments(corpus)
    dataset = SimulatedDataset(config=config, corpus=corpus, judgments=judgments)
    for p in range(1, config.participants + 1):
        pid = f"SIM{p:03d}"
        dataset.participants.append(
            simulate_participant(config, corpus, pid, rng_stream(config.seed, "participant", pid))
        )
    return dataset

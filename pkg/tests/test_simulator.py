"""Synthetic-data checks: corpus topicality, deflection templates, label
statistics, determinism, and compatibility with artifact rejection.
"""

import filecmp

import numpy as np
import pytest
from scipy import stats

from erpsearch.corpus import build_index, stem, tfidf_of
from erpsearch.dataset import save_dataset
from erpsearch.eeg import (
    LABEL_IRRELEVANT,
    LABEL_RELEVANT,
    EpochSet,
    extract_features,
    reject_artifacts,
    window_indices,
)
from erpsearch.simulator import (
    SimulationConfig,
    generate_corpus,
    generate_epoch,
    make_judgments,
    simulate_dataset,
    simulate_participant,
    template,
)
from erpsearch.config import rng_stream


def _small_config(**kw):
    base = dict(
        n_channels=2, affected_channels=("Cz",), n_blocks=2, n_topics=4,
        docs_per_topic=3, sentences_per_doc=6, words_per_sentence=6,
        topical_per_sentence=2, trials_per_block=6, seed=3,
    )
    base.update(kw)
    return SimulationConfig(**base)


class TestCorpus:
    def test_two_topics_ten_docs(self):
        config = SimulationConfig(n_topics=2, docs_per_topic=10, seed=1)
        corpus = generate_corpus(config, rng_stream(1, "corpus"))
        assert len(corpus.documents) == 20
        terms_a, terms_b = (t.terms for t in corpus.topics)
        assert terms_a and terms_b
        assert not terms_a & terms_b

    def test_universal_fillers_have_zero_tfidf(self):
        config = SimulationConfig(n_topics=3, docs_per_topic=4, seed=2)
        corpus = generate_corpus(config, rng_stream(2, "corpus"))
        matrix = build_index(corpus.documents)
        for word in corpus.universal_words:
            for doc in corpus.documents:
                assert tfidf_of(matrix, stem(word), doc.id) == 0.0

    def test_topical_terms_outweigh_fillers(self):
        config = SimulationConfig(n_topics=4, docs_per_topic=4, seed=3)
        corpus = generate_corpus(config, rng_stream(3, "corpus"))
        matrix = build_index(corpus.documents)
        topical, filler = [], []
        for topic in corpus.topics:
            for doc_id in topic.doc_ids:
                for word in topic.words:
                    topical.append(tfidf_of(matrix, stem(word), doc_id))
                for word in corpus.filler_words + corpus.universal_words:
                    filler.append(tfidf_of(matrix, stem(word), doc_id))
        assert np.median(topical) > np.median(filler)


class TestGenerateEpoch:
    def test_zero_noise_reproduces_template(self):
        config = _small_config(noise_sd=0.0)
        rng = np.random.default_rng(0)
        ep = generate_epoch(LABEL_RELEVANT, config, rng)
        np.testing.assert_allclose(ep.data, template(config, LABEL_RELEVANT), atol=1e-12)
        ep_irr = generate_epoch(LABEL_IRRELEVANT, config, rng)
        np.testing.assert_allclose(ep_irr.data, template(config, LABEL_IRRELEVANT), atol=1e-12)

    def test_template_window_mean_equals_amplitude(self):
        config = _small_config(p600_amp=1.3, n400_amp=0.6)
        rel = template(config, LABEL_RELEVANT)
        irr = template(config, LABEL_IRRELEVANT)
        n = rel.shape[1]
        p600 = window_indices(config.fs, n, 500.0, 850.0)
        n400 = window_indices(config.fs, n, 350.0, 500.0)
        ci = config.channel_names().index("Cz")
        assert rel[ci, p600].mean() == pytest.approx(1.3, rel=1e-12)
        assert irr[ci, n400].mean() == pytest.approx(-0.6, rel=1e-12)
        # unaffected channel carries nothing
        other = 1 - ci
        assert np.abs(rel[other]).max() == 0.0

    def test_zero_amplitudes_indistinguishable(self):
        config = _small_config(n400_amp=0.0, p600_amp=0.0)
        calm = 0
        n_seeds = 60
        for seed in range(n_seeds):
            rng = np.random.default_rng(seed)
            n = round(1.25 * config.fs)
            win = window_indices(config.fs, n, 500.0, 850.0)
            ci = config.channel_names().index("Cz")
            rel = [generate_epoch(LABEL_RELEVANT, config, rng).data[ci, win].mean()
                   for _ in range(40)]
            irr = [generate_epoch(LABEL_IRRELEVANT, config, rng).data[ci, win].mean()
                   for _ in range(40)]
            _, p = stats.ttest_ind(rel, irr)
            if p > 0.05:
                calm += 1
        assert calm >= 0.9 * n_seeds

    def test_grand_average_difference_matches_amplitude(self):
        config = SimulationConfig(n_channels=2, affected_channels=("Cz",), seed=0)
        rng = np.random.default_rng(11)
        n = round(1.25 * config.fs)
        win = window_indices(config.fs, n, 500.0, 850.0)
        ci = config.channel_names().index("Cz")
        n_epochs = 1000
        rel = np.mean([
            generate_epoch(LABEL_RELEVANT, config, rng).data[ci, win].mean()
            for _ in range(n_epochs)
        ])
        irr = np.mean([
            generate_epoch(LABEL_IRRELEVANT, config, rng).data[ci, win].mean()
            for _ in range(n_epochs)
        ])
        bound = 3.0 * config.noise_sd / np.sqrt(n_epochs)
        assert abs((rel - irr) - config.p600_amp) <= bound


class TestParticipants:
    def test_default_block_count_and_minority_labels(self, tiny_dataset):
        config = SimulationConfig(seed=4, participants=1)
        dataset = simulate_dataset(config)
        data = dataset.participants[0]
        assert len(data.blocks) == 8
        labels = [ep.label for ep in data.epoch_set.epochs]
        rel_fraction = np.mean([l == LABEL_RELEVANT for l in labels])
        assert 0.0 < rel_fraction < 0.5  # relevant words are the minority

    def test_words_come_from_the_two_block_documents(self, tiny_dataset):
        data = tiny_dataset.participants[0]
        corpus = tiny_dataset.corpus
        for block in data.blocks:
            allowed = {
                w
                for doc in (block.relevant_doc, block.irrelevant_doc)
                for sent in corpus.sentences[doc]
                for w in sent
            }
            words = {ep.word for ep in data.epoch_set.epochs if ep.block == block.id}
            assert words <= allowed

    def test_relevant_labels_follow_topic_terms(self, tiny_dataset):
        data = tiny_dataset.participants[0]
        corpus = tiny_dataset.corpus
        topic_by_doc = {doc: t for t in corpus.topics for doc in t.doc_ids}
        for block in data.blocks:
            rel_terms = topic_by_doc[block.relevant_doc].terms
            for ep in data.epoch_set.epochs:
                if ep.block != block.id:
                    continue
                if ep.label == LABEL_RELEVANT:
                    assert stem(ep.word) in rel_terms

    def test_byte_identical_datasets_for_same_seed(self, tmp_path):
        config = _small_config(seed=9)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        save_dataset(simulate_dataset(config), out_a, meta={"seed": 9})
        save_dataset(simulate_dataset(config), out_b, meta={"seed": 9})
        for name in ("corpus.jsonl", "judgments.jsonl", "epochs_SIM001.epo",
                     "blocks_SIM001.json", "dataset.json"):
            assert filecmp.cmp(out_a / name, out_b / name, shallow=False), name

    def test_separation_grows_with_amplitude(self):
        distances = []
        for amp in (0.5, 1.5, 3.0):
            config = _small_config(p600_amp=amp, n400_amp=0.0, seed=6)
            data = simulate_participant(
                config, generate_corpus(config, rng_stream(6, "corpus")),
                "SIM001", rng_stream(6, "participant", "SIM001"),
            )
            fm = extract_features(data.epoch_set)
            rel = fm.X[fm.labels == LABEL_RELEVANT]
            irr = fm.X[fm.labels == LABEL_IRRELEVANT]
            distances.append(np.linalg.norm(rel.mean(axis=0) - irr.mean(axis=0)))
        assert distances[0] < distances[1] < distances[2]

    def test_low_rejection_at_noise_ceiling(self):
        config = _small_config(noise_sd=10.0, n_channels=8,
                               affected_channels=("Cz", "Pz"), seed=8)
        data = simulate_participant(
            config, generate_corpus(config, rng_stream(8, "corpus")),
            "SIM001", rng_stream(8, "participant", "SIM001"),
        )
        _, report = reject_artifacts(data.epoch_set)
        rejected = report.recorded_epochs - report.accepted_epochs
        assert rejected / report.recorded_epochs < 0.05
        assert report.removed_channels == []

    def test_artifact_injection_exercises_rejection(self):
        config = _small_config(artifact_rate=0.5, seed=10)
        data = simulate_participant(
            config, generate_corpus(config, rng_stream(10, "corpus")),
            "SIM001", rng_stream(10, "participant", "SIM001"),
        )
        bad = sum(
            1 for ep in data.epoch_set.epochs
            if (ep.data.max(axis=1) - ep.data.min(axis=1) > 40.0).any()
        )
        assert bad > 0.2 * len(data.epoch_set.epochs)


class TestJudgments:
    def test_same_topic_docs_graded(self, tiny_dataset):
        corpus = tiny_dataset.corpus
        judgments = make_judgments(corpus)
        topic = corpus.topics[0]
        anchor = topic.doc_ids[0]
        scores = judgments[anchor].scores
        assert set(scores) == set(topic.doc_ids)
        assert set(scores.values()) <= {2, 3}
        other_topic_doc = corpus.topics[1].doc_ids[0]
        assert judgments[anchor].score_of(other_topic_doc) == 0


class TestValidation:
    def test_noise_sd_positive(self):
        with pytest.raises(ValueError, match="noise_sd"):
            _small_config(noise_sd=0.0).validate()

    def test_affected_channels_exist(self):
        with pytest.raises(ValueError, match="not in montage"):
            _small_config(affected_channels=("Nope",)).validate()

    def test_enough_topics_for_blocks(self):
        with pytest.raises(ValueError, match="2 distinct topics"):
            _small_config(n_blocks=3, n_topics=4).validate()

    def test_enough_sentences_for_trials(self):
        with pytest.raises(ValueError, match="one sentence per trial"):
            _small_config(sentences_per_doc=3, trials_per_block=6).validate()

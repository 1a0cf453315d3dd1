"""CLI surface tests: every subcommand end to end on a miniature dataset,
exit codes, and the machine-readable error line.
"""

import json

import numpy as np
import pytest

from erpsearch.cli import main
from erpsearch.corpus import load_index
from erpsearch.eeg import Event, Recording, load_epochs, save_recording
from erpsearch.evaluation import read_results

SIM_ARGS = [
    "--set", "simulation.n_channels=4",
    "--set", "simulation.n_blocks=2",
    "--set", "simulation.n_topics=4",
    "--set", "simulation.docs_per_topic=3",
    "--set", "simulation.sentences_per_doc=6",
    "--set", "simulation.words_per_sentence=6",
    "--set", "simulation.topical_per_sentence=2",
]


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    rc = main(["simulate", "--out", str(out), "--set", "seed=5", *SIM_ARGS])
    assert rc == 0
    return out


class TestSimulate:
    def test_layout(self, dataset_dir):
        names = {p.name for p in dataset_dir.iterdir()}
        assert {"corpus.jsonl", "judgments.jsonl", "dataset.json",
                "epochs_SIM001.epo", "blocks_SIM001.json"} <= names
        meta = json.loads((dataset_dir / "dataset.json").read_text())
        assert meta["participants"] == ["SIM001"]
        assert meta["seed"] == 5
        assert len(meta["config_hash"]) == 64

    def test_epochs_loadable(self, dataset_dir):
        es = load_epochs(dataset_dir / "epochs_SIM001.epo")
        assert es.participant == "SIM001"
        assert len(es.channels) == 4
        assert len(es.epochs) == 2 * 6 * 2 * 6  # blocks x trials x docs x words


class TestIndex:
    def test_build_and_persist(self, dataset_dir, tmp_path):
        out = tmp_path / "index.npz"
        rc = main(["index", "--corpus", str(dataset_dir / "corpus.jsonl"),
                   "--out", str(out)])
        assert rc == 0
        matrix = load_index(out)
        assert matrix.n_docs == 12


class TestEvaluate:
    def test_results_file(self, dataset_dir, tmp_path):
        out = tmp_path / "results.jsonl"
        rc = main(["evaluate", "--data", str(dataset_dir), "--out", str(out),
                   "--set", "seed=5", "--set", "evaluation.permutations=5"])
        assert rc == 0
        meta, rows = read_results(out)
        assert meta["seed"] == 5
        assert [r["block"] for r in rows] == [1, 2]
        for row in rows:
            assert set(row) >= {"auc", "precision", "weighted_precision_rel",
                                "weighted_precision_irr", "cg10", "cg20", "cg30",
                                "p_class", "p_retrieval"}

    def test_byte_identical_reruns(self, dataset_dir, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        args = ["evaluate", "--data", str(dataset_dir), "--set", "seed=5",
                "--set", "evaluation.permutations=5"]
        assert main([*args, "--out", str(a)]) == 0
        assert main([*args, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestRunBlock:
    def test_outputs(self, dataset_dir, tmp_path):
        out = tmp_path / "rb"
        rc = main(["run-block", "--data", str(dataset_dir), "--participant",
                   "SIM001", "--block", "1", "--out", str(out), "--set", "seed=5"])
        assert rc == 0
        names = {p.name for p in out.iterdir()}
        assert {"predictions.jsonl", "intent.txt", "ranked.jsonl", "metrics.json"} <= names
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["block"] == 1
        assert "config_hash" in metrics and "seed" in metrics
        preds = [json.loads(l) for l in (out / "predictions.jsonl").read_text().splitlines()]
        assert all(0.0 <= p["probability"] <= 1.0 for p in preds)
        ranked = [json.loads(l) for l in (out / "ranked.jsonl").read_text().splitlines()]
        assert ranked[0]["rank"] == 1 and "title" in ranked[0]


class TestReport:
    def test_tables_written(self, dataset_dir, tmp_path):
        results = tmp_path / "results.jsonl"
        main(["evaluate", "--data", str(dataset_dir), "--out", str(results),
              "--set", "seed=5", "--set", "evaluation.permutations=5"])
        out = tmp_path / "report"
        rc = main(["report", "--data", str(dataset_dir), "--results", str(results),
                   "--out", str(out)])
        assert rc == 0
        names = {p.name for p in out.iterdir()}
        assert {"summary.csv", "blocks.csv", "erp_grand_average.csv",
                "interval_tests.csv", "tfidf_words.csv", "provenance.json"} <= names
        summary = (out / "summary.csv").read_text().splitlines()
        assert summary[0].startswith("participant,blocks,mean_auc")
        assert summary[1].startswith("SIM001,2,")
        erp = (out / "erp_grand_average.csv").read_text().splitlines()
        assert erp[0] == "time_ms,channel,relevant_uv,irrelevant_uv,difference_uv"
        assert len(erp) == 1 + 250  # one row per sample


class TestPreprocess:
    def test_recording_to_epochs(self, tmp_path):
        rng = np.random.default_rng(0)
        fs = 200.0
        data = rng.normal(0, 2.0, size=(3, 9000))
        events = [Event(sample=s, word=f"w{i}", block=1,
                        label="relevant" if i % 4 == 0 else "irrelevant")
                  for i, s in enumerate(range(1000, 7000, 300))]
        events.append(Event(sample=7500, word="3333", block=1, kind="separator"))
        rec = Recording(data=data, fs=fs, channels=["Fz", "Cz", "Pz"], events=events)
        rec_path = tmp_path / "rec.npz"
        save_recording(rec, rec_path)

        epo_path = tmp_path / "clean.epo"
        report_path = tmp_path / "report.json"
        rc = main(["preprocess", "--recording", str(rec_path), "--out", str(epo_path),
                   "--report", str(report_path), "--participant", "P7"])
        assert rc == 0
        es = load_epochs(epo_path)
        assert es.participant == "P7"
        assert 0 < len(es.epochs) <= 20
        report = json.loads(report_path.read_text())
        assert report["recorded_epochs"] == 20  # separator excluded
        assert "config_hash" in report


class TestErrors:
    def test_missing_file_machine_readable(self, tmp_path, capsys):
        rc = main(["index", "--corpus", str(tmp_path / "nope.jsonl"),
                   "--out", str(tmp_path / "x.npz")])
        assert rc == 2
        err_lines = capsys.readouterr().err.strip().splitlines()
        parsed = json.loads(err_lines[-1])
        assert "error" in parsed and "message" in parsed

    def test_invalid_config_fails_before_work(self, dataset_dir, tmp_path, capsys):
        out = tmp_path / "never.jsonl"
        rc = main(["evaluate", "--data", str(dataset_dir), "--out", str(out),
                   "--set", "retrieval.mu=-5"])
        assert rc == 2
        assert not out.exists()
        parsed = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert "invalid config" in parsed["message"]

    def test_config_file_flag(self, dataset_dir, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("evaluation.permutations = 5\nseed = 5\n")
        out = tmp_path / "res.jsonl"
        rc = main(["evaluate", "--data", str(dataset_dir), "--out", str(out),
                   "--config", str(cfg_file)])
        assert rc == 0
        meta, _ = read_results(out)
        assert meta["seed"] == 5

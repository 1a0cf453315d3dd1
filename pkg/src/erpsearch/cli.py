"""Command-line interface: index, preprocess, run-block, evaluate,
simulate and report subcommands with reproducible flat-key configs.

Every command resolves its configuration from defaults, an optional
config file and --set overrides, logs the resolved values with their
hash, and stamps output artifacts with (config hash, seed).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from contextlib import contextmanager

import numpy as np

from . import dataset as ds
from .config import PipelineConfig
from .corpus import build_index, load_corpus, save_index
from .eeg import (
    LABEL_IRRELEVANT,
    LABEL_RELEVANT,
    N400_WINDOW,
    P3_WINDOW,
    P600_WINDOW,
    bandpass_filter,
    cut_epochs,
    extract_features,
    grand_average,
    interval_test,
    load_recording,
    reject_artifacts,
    save_epochs,
    window_indices,
)
from .evaluation import leave_one_block_out, run_block, word_weight, write_results, read_results
from .intent import dump_intent
from .retrieval import save_ranked
from .simulator import SimulationConfig, simulate_dataset

log = logging.getLogger("erpsearch")


@contextmanager
def _atomic(path):
    """Write to a temp file, then atomically move into place."""
    tmp = f"{path}.tmp"
    yield tmp
    os.replace(tmp, path)


def _resolve_config(args) -> PipelineConfig:
    cfg = PipelineConfig.resolve(getattr(args, "config", None), getattr(args, "set", []))
    log.info("config hash=%s seed=%d", cfg.hash(), cfg.seed)
    log.info("config %s", cfg.describe())
    return cfg


def _provenance(cfg: PipelineConfig) -> dict:
    return {"config_hash": cfg.hash(), "seed": cfg.seed, "config": cfg.values}


def _load_index_for(directory):
    return build_index(ds.load_documents(directory))


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    sim = SimulationConfig.from_pipeline(cfg)
    sim.validate()
    dataset = simulate_dataset(sim)
    ds.save_dataset(dataset, args.out, meta=_provenance(cfg))
    log.info(
        "simulated %d participant(s), %d documents -> %s",
        len(dataset.participants), len(dataset.corpus.documents), args.out,
    )
    return 0


def cmd_index(args) -> int:
    cfg = _resolve_config(args)
    documents = load_corpus(args.corpus)
    matrix = build_index(documents)
    with _atomic(args.out) as tmp:
        save_index(matrix, tmp)
    log.info("indexed %d documents, %d terms -> %s", matrix.n_docs, matrix.n_terms, args.out)
    return 0


def cmd_preprocess(args) -> int:
    cfg = _resolve_config(args)
    recording = load_recording(args.recording)
    filtered = bandpass_filter(
        recording, low=cfg["eeg.highpass_hz"], high=cfg["eeg.lowpass_hz"]
    )
    epoch_set = cut_epochs(filtered)
    epoch_set.participant = args.participant
    clean, report = reject_artifacts(
        epoch_set,
        variance_floor=cfg["eeg.variance_floor"],
        ptp_ceiling=cfg["eeg.ptp_ceiling"],
        channel_fraction=cfg["eeg.channel_fraction"],
    )
    with _atomic(args.out) as tmp:
        save_epochs(clean, tmp)
    with _atomic(args.report) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump({**report.as_dict(), **_provenance(cfg)}, fh, sort_keys=True, indent=2)
            fh.write("\n")
    log.info(
        "kept %d/%d epochs on %d/%d channels",
        report.accepted_epochs, report.recorded_epochs,
        report.accepted_channels, report.recorded_channels,
    )
    return 0


def cmd_run_block(args) -> int:
    cfg = _resolve_config(args)
    matrix = _load_index_for(args.data)
    judgments = ds.load_dataset_judgments(args.data)
    data = ds.load_participant(args.data, args.participant)
    features = extract_features(data.epoch_set)
    block = data.block_by_id(args.block)
    row, probs, query, ranked, intent_model = run_block(features, block, matrix, judgments, cfg)

    os.makedirs(args.out, exist_ok=True)
    test_mask = features.blocks == block.id
    words = [w for w, m in zip(features.words, test_mask) if m]
    labels = features.labels[test_mask]
    with _atomic(os.path.join(args.out, "predictions.jsonl")) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            for word, prob, label in zip(words, probs, labels):
                fh.write(json.dumps(
                    {"block": block.id, "label": label, "probability": float(prob),
                     "word": word},
                    sort_keys=True) + "\n")
    if intent_model is not None:
        with _atomic(os.path.join(args.out, "intent.txt")) as tmp:
            dump_intent(intent_model, tmp)
    if ranked is not None:
        with _atomic(os.path.join(args.out, "ranked.jsonl")) as tmp:
            save_ranked(ranked, matrix, tmp)
    with _atomic(os.path.join(args.out, "metrics.json")) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(
                {**row, "participant": data.participant,
                 "config_hash": cfg.hash(), "seed": cfg.seed},
                fh, sort_keys=True, indent=2,
            )
            fh.write("\n")
    log.info("block %d: auc=%s cg30=%s", block.id, row.get("auc"), row.get("cg30"))
    return 0


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    matrix = _load_index_for(args.data)
    judgments = ds.load_dataset_judgments(args.data)
    participants = args.participant or ds.list_participants(args.data)
    rows = []
    for pid in sorted(participants):
        data = ds.load_participant(args.data, pid)
        rows.extend(leave_one_block_out(data, matrix, judgments, cfg))
        log.info("evaluated %s (%d blocks)", pid, len(data.blocks))
    with _atomic(args.out) as tmp:
        write_results(rows, tmp, meta={"config_hash": cfg.hash(), "seed": cfg.seed})
    return 0


def _mean_or_none(values):
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def _summary_rows(rows) -> list[dict]:
    by_pid: dict[str, list[dict]] = {}
    for row in rows:
        by_pid.setdefault(row["participant"], []).append(row)
    out = []
    for pid in sorted(by_pid):
        blocks = by_pid[pid]
        record = {"participant": pid, "blocks": len(blocks)}
        for key in ("auc", "precision", "weighted_precision_rel",
                    "weighted_precision_irr", "cg10", "cg20", "cg30"):
            record[f"mean_{key}"] = _mean_or_none([b.get(key) for b in blocks])
        for key, name in (("p_class", "sig_class"), ("p_retrieval", "sig_retrieval")):
            ps = [b.get(key) for b in blocks if b.get(key) is not None]
            record[f"{name}_blocks"] = sum(1 for p in ps if p < 0.05)
        out.append(record)
    return out


def _write_csv(path, fieldnames, records) -> None:
    with _atomic(path) as tmp:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames)
            writer.writeheader()
            for rec in records:
                writer.writerow({k: ("" if rec.get(k) is None else rec.get(k))
                                 for k in fieldnames})


def cmd_report(args) -> int:
    cfg = _resolve_config(args)
    meta, rows = read_results(args.results)
    os.makedirs(args.out, exist_ok=True)

    summary = _summary_rows(rows)
    if summary:
        _write_csv(os.path.join(args.out, "summary.csv"), list(summary[0].keys()), summary)
    row_keys = ["participant", "block", "auc", "precision", "weighted_precision_rel",
                "weighted_precision_irr", "cg10", "cg20", "cg30", "p_class", "p_retrieval"]
    _write_csv(os.path.join(args.out, "blocks.csv"), row_keys, rows)

    participants = ds.list_participants(args.data)
    dataset_meta = ds.read_meta(args.data)
    matrix = _load_index_for(args.data)

    affected = str(dataset_meta.get("config", {}).get("simulation.affected_channels", ""))
    preferred = [c.strip() for c in affected.split(",") if c.strip()]

    erp_records, interval_records, word_records = [], [], []
    rel_curves, irr_curves = [], []
    channel = None
    fs = None
    interval_means = {name: ([], []) for name in ("P3", "N400", "P600")}
    windows = {"P3": P3_WINDOW, "N400": N400_WINDOW, "P600": P600_WINDOW}

    for pid in sorted(participants):
        data = ds.load_participant(args.data, pid)
        es = data.epoch_set
        fs = es.fs
        if channel is None:
            channel = next((c for c in preferred if c in es.channels), es.channels[0])
        ci = es.channels.index(channel)
        try:
            rel = grand_average(es, LABEL_RELEVANT)
            irr = grand_average(es, LABEL_IRRELEVANT)
        except ValueError:
            continue
        rel_curves.append(rel[ci])
        irr_curves.append(irr[ci])
        n_samples = rel.shape[1]
        for name, (lo, hi) in windows.items():
            idx = window_indices(fs, n_samples, lo, hi)
            interval_means[name][0].append(float(rel[ci, idx].mean()))
            interval_means[name][1].append(float(irr[ci, idx].mean()))
        for block in data.blocks:
            for ep in es.epochs:
                if ep.block != block.id:
                    continue
                source = block.relevant_doc if ep.label == LABEL_RELEVANT else block.irrelevant_doc
                word_records.append({
                    "participant": pid, "block": block.id, "word": ep.word,
                    "label": ep.label,
                    "tfidf": word_weight(matrix, ep.word, source),
                })

    if rel_curves:
        rel_mean = np.mean(np.stack(rel_curves), axis=0)
        irr_mean = np.mean(np.stack(irr_curves), axis=0)
        from .eeg import EPOCH_START_MS

        for i in range(rel_mean.size):
            t_ms = EPOCH_START_MS + i * 1000.0 / fs
            erp_records.append({
                "time_ms": t_ms, "channel": channel,
                "relevant_uv": float(rel_mean[i]), "irrelevant_uv": float(irr_mean[i]),
                "difference_uv": float(rel_mean[i] - irr_mean[i]),
            })
        _write_csv(os.path.join(args.out, "erp_grand_average.csv"),
                   ["time_ms", "channel", "relevant_uv", "irrelevant_uv", "difference_uv"],
                   erp_records)
        for name, (rel_vals, irr_vals) in interval_means.items():
            if len(rel_vals) >= 2:
                try:
                    t, p = interval_test(np.asarray(rel_vals), np.asarray(irr_vals))
                except ValueError:
                    t, p = None, None
            else:
                t, p = None, None
            lo, hi = windows[name]
            interval_records.append({
                "window": name, "start_ms": lo, "end_ms": hi, "channel": channel,
                "n": len(rel_vals), "t": t, "p": p,
            })
        _write_csv(os.path.join(args.out, "interval_tests.csv"),
                   ["window", "start_ms", "end_ms", "channel", "n", "t", "p"],
                   interval_records)
    if word_records:
        _write_csv(os.path.join(args.out, "tfidf_words.csv"),
                   ["participant", "block", "word", "label", "tfidf"], word_records)

    with _atomic(os.path.join(args.out, "provenance.json")) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump({"results_meta": meta, "config_hash": cfg.hash(), "seed": cfg.seed},
                      fh, sort_keys=True, indent=2)
            fh.write("\n")
    log.info("report written to %s", args.out)
    return 0


def _add_common(parser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="erpsearch",
        description="ERP relevance classification, intent modeling and document retrieval",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic participant dataset")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("index", help="build and persist a tf-idf index")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("preprocess", help="filter, epoch and clean a raw recording")
    p.add_argument("--recording", required=True)
    p.add_argument("--out", required=True, help="epoch container output path")
    p.add_argument("--report", required=True, help="rejection report JSON path")
    p.add_argument("--participant", default="")
    _add_common(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("run-block", help="train-on-others, predict and retrieve one block")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--participant", required=True)
    p.add_argument("--block", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_run_block)

    p = sub.add_parser("evaluate", help="leave-one-block-out evaluation with permutation tests")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="results JSONL path")
    p.add_argument("--participant", action="append", help="restrict to participant (repeatable)")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="per-participant summary tables and plot data")
    p.add_argument("--data", required=True)
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

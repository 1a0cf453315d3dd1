"""Dataset directory layout shared by the CLI commands.

A dataset directory holds:
    corpus.jsonl         one document per line (id, title, text)
    judgments.jsonl      graded document judgments (topic, doc, score)
    epochs_<PID>.epo     binary epoch container per participant
    blocks_<PID>.json    per-block relevant/irrelevant document pairing
    dataset.json         participants list plus provenance metadata
"""

from __future__ import annotations

import json
import os

from .corpus import Document, load_corpus, save_corpus
from .eeg import load_epochs, save_epochs
from .evaluation import (
    DocumentJudgments,
    ExperimentBlock,
    ParticipantData,
    load_judgments,
    save_judgments,
)
from .simulator import SimulatedDataset

CORPUS_FILE = "corpus.jsonl"
JUDGMENTS_FILE = "judgments.jsonl"
META_FILE = "dataset.json"


def epochs_file(directory, participant: str) -> str:
    return os.path.join(directory, f"epochs_{participant}.epo")


def blocks_file(directory, participant: str) -> str:
    return os.path.join(directory, f"blocks_{participant}.json")


def save_dataset(dataset: SimulatedDataset, directory, meta: dict) -> None:
    os.makedirs(directory, exist_ok=True)
    save_corpus(dataset.corpus.documents, os.path.join(directory, CORPUS_FILE))
    save_judgments(dataset.judgments, os.path.join(directory, JUDGMENTS_FILE))
    for data in dataset.participants:
        save_epochs(data.epoch_set, epochs_file(directory, data.participant))
        with open(blocks_file(directory, data.participant), "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "participant": data.participant,
                    "blocks": [
                        {
                            "id": b.id,
                            "relevant_doc": b.relevant_doc,
                            "irrelevant_doc": b.irrelevant_doc,
                        }
                        for b in data.blocks
                    ],
                },
                fh, sort_keys=True, indent=2,
            )
            fh.write("\n")
    with open(os.path.join(directory, META_FILE), "w", encoding="utf-8") as fh:
        json.dump(
            {"participants": [d.participant for d in dataset.participants], **meta},
            fh, sort_keys=True, indent=2,
        )
        fh.write("\n")


def read_meta(directory) -> dict:
    with open(os.path.join(directory, META_FILE), encoding="utf-8") as fh:
        return json.load(fh)


def list_participants(directory) -> list[str]:
    return list(read_meta(directory)["participants"])


def load_documents(directory) -> list[Document]:
    return load_corpus(os.path.join(directory, CORPUS_FILE))


def load_dataset_judgments(directory) -> dict[str, DocumentJudgments]:
    return load_judgments(os.path.join(directory, JUDGMENTS_FILE))


def load_participant(directory, participant: str) -> ParticipantData:
    epoch_set = load_epochs(epochs_file(directory, participant))
    with open(blocks_file(directory, participant), encoding="utf-8") as fh:
        spec = json.load(fh)
    blocks = [
        ExperimentBlock(
            id=int(b["id"]),
            relevant_doc=str(b["relevant_doc"]),
            irrelevant_doc=str(b["irrelevant_doc"]),
        )
        for b in spec["blocks"]
    ]
    return ParticipantData(participant=participant, epoch_set=epoch_set, blocks=blocks)

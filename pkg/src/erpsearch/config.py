"""Pipeline configuration with flat dotted keys.

Configs resolve from defaults, then an optional plain-text file of
`key = value` lines, then command-line overrides. Every run is identified
by the sha256 hash of the resolved config; all randomness flows from the
single `seed` value through named substreams.
"""

from __future__ import annotations

import hashlib
import json
import zlib

import numpy as np

__all__ = ["DEFAULTS", "PipelineConfig", "rng_stream", "child_seed"]

DEFAULTS: dict[str, object] = {
    "seed": 0,
    # classifier
    "classifier.shrinkage": None,  # None = analytic intensity
    "classifier.threshold": 0.5,
    # intent model
    "intent.lambda": 0.5,
    "intent.c": 2.0,
    "intent.m_terms": 10,
    # retrieval
    "retrieval.mu": 2000.0,
    "retrieval.k": 30,
    # evaluation
    "evaluation.permutations": 1000,
    # eeg cleaning
    "eeg.lowpass_hz": 35.0,
    "eeg.highpass_hz": 0.5,
    "eeg.variance_floor": 0.5,
    "eeg.ptp_ceiling": 40.0,
    "eeg.channel_fraction": 0.1,
    # simulation
    "simulation.participants": 1,
    "simulation.n_channels": 8,
    "simulation.fs": 200.0,
    "simulation.n_blocks": 8,
    "simulation.trials_per_block": 6,
    "simulation.noise_sd": 8.0,
    "simulation.n400_amp": 0.8,
    "simulation.p600_amp": 1.0,
    "simulation.affected_channels": "Cz,Pz",
    "simulation.artifact_rate": 0.0,
    "simulation.n_topics": 16,
    "simulation.docs_per_topic": 12,
    "simulation.sentences_per_doc": 8,
    "simulation.words_per_sentence": 9,
    "simulation.topical_per_sentence": 3,
}


def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text  # bare strings allowed without quotes


def _coerce(key: str, value):
    default = DEFAULTS[key]
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        return bool(value)
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, float) and not value.is_integer():
            raise ValueError(f"{key} expects an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        return float(value)
    return str(value)


class PipelineConfig:
    """Resolved flat configuration with paper-stated defaults."""

    def __init__(self, values: dict[str, object] | None = None):
        self.values = dict(DEFAULTS)
        for key, value in (values or {}).items():
            self._set(key, value)
        self.validate()

    def _set(self, key: str, value) -> None:
        if key not in DEFAULTS:
            raise ValueError(f"unknown config key: {key!r}")
        self.values[key] = _coerce(key, value)

    @classmethod
    def resolve(cls, config_file=None, overrides=()) -> "PipelineConfig":
        """defaults < file < command-line overrides (key=value strings)."""
        values: dict[str, object] = {}
        if config_file is not None:
            values.update(cls._read_file(config_file))
        for item in overrides:
            if "=" not in item:
                raise ValueError(f"override must look like key=value: {item!r}")
            key, _, raw = item.partition("=")
            values[key.strip()] = _parse_value(raw)
        return cls(values)

    @staticmethod
    def _read_file(path) -> dict[str, object]:
        values: dict[str, object] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key = value")
                key, _, raw = line.partition("=")
                values[key.strip()] = _parse_value(raw)
        return values

    def validate(self) -> None:
        v = self.values
        checks = [
            (v["intent.lambda"] > 0, "intent.lambda must be positive"),
            (v["intent.c"] >= 0, "intent.c must be non-negative"),
            (v["intent.m_terms"] >= 1, "intent.m_terms must be >= 1"),
            (v["retrieval.mu"] > 0, "retrieval.mu must be positive"),
            (v["retrieval.k"] >= 1, "retrieval.k must be >= 1"),
            (v["evaluation.permutations"] >= 1, "evaluation.permutations must be >= 1"),
            (0.0 <= v["classifier.threshold"] <= 1.0, "classifier.threshold must lie in [0, 1]"),
            (v["eeg.lowpass_hz"] > v["eeg.highpass_hz"] > 0, "eeg passband must be ordered"),
        ]
        if v["classifier.shrinkage"] is not None:
            checks.append(
                (0.0 <= v["classifier.shrinkage"] <= 1.0, "classifier.shrinkage must lie in [0, 1]")
            )
        for ok, message in checks:
            if not ok:
                raise ValueError(f"invalid config: {message}")

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def seed(self) -> int:
        return int(self.values["seed"])

    def canonical_json(self) -> str:
        return json.dumps(self.values, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def describe(self) -> str:
        return " ".join(f"{k}={json.dumps(v)}" for k, v in sorted(self.values.items()))


def child_seed(seed: int, *names) -> np.random.SeedSequence:
    """Deterministic named substream of the root seed.

    Names may be strings or integers; strings are folded through crc32 so
    the derivation is stable across platforms and runs.
    """
    entropy = [int(seed)]
    for name in names:
        if isinstance(name, str):
            entropy.append(zlib.crc32(name.encode("utf-8")))
        else:
            entropy.append(int(name))
    return np.random.SeedSequence(entropy)


def rng_stream(seed: int, *names) -> np.random.Generator:
    return np.random.default_rng(child_seed(seed, *names))

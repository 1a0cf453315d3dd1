"""EEG preprocessing: band-pass filtering, word-locked epoching, artifact
rejection and spatio-temporal ERP feature extraction.

Epochs run from -250 ms to 1000 ms around word onset and are baseline
corrected against the pre-stimulus mean. Features are per-channel mean
potentials in seven contiguous 100 ms windows on [250, 950) ms,
concatenated channel-major.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal, stats

log = logging.getLogger(__name__)

LABEL_RELEVANT = "relevant"
LABEL_IRRELEVANT = "irrelevant"
LABEL_UNLABELED = "unlabeled"

KIND_WORD = "word"
KIND_SEPARATOR = "separator"

EPOCH_START_MS = -250.0
EPOCH_END_MS = 1000.0

FEATURE_WINDOW_COUNT = 7
FEATURE_SPAN_MS = (250.0, 950.0)

# canonical interval-analysis windows (ms after onset)
P3_WINDOW = (250.0, 350.0)
N400_WINDOW = (350.0, 500.0)
P600_WINDOW = (500.0, 850.0)


@dataclass
class Event:
    sample: int
    word: str
    block: int
    kind: str = KIND_WORD
    label: str = LABEL_UNLABELED


@dataclass
class Recording:
    """Continuous multi-channel EEG in microvolts with word-onset events."""

    data: np.ndarray  # channels x samples
    fs: float
    channels: list[str]
    events: list[Event] = field(default_factory=list)


@dataclass
class Epoch:
    data: np.ndarray  # channels x samples, onset at -EPOCH_START_MS
    word: str
    block: int
    label: str = LABEL_UNLABELED
    onset_ms: float = EPOCH_START_MS


@dataclass
class EpochSet:
    participant: str
    fs: float
    channels: list[str]
    epochs: list[Epoch]


@dataclass
class RejectionReport:
    """Cleaning statistics per participant (one row of the usual table)."""

    recorded_channels: int
    accepted_channels: int
    recorded_epochs: int
    accepted_epochs: int
    relevant_epochs: int
    irrelevant_epochs: int
    removed_channels: list[str]

    def as_dict(self) -> dict:
        return {
            "recorded_channels": self.recorded_channels,
            "accepted_channels": self.accepted_channels,
            "recorded_epochs": self.recorded_epochs,
            "accepted_epochs": self.accepted_epochs,
            "relevant_epochs": self.relevant_epochs,
            "irrelevant_epochs": self.irrelevant_epochs,
            "removed_channels": list(self.removed_channels),
        }


def _lowpass_taps(fs: float, cutoff: float) -> np.ndarray:
    ntaps = 2 * round(0.25 * fs) + 1  # order 100 at 200 Hz
    return signal.firwin(ntaps, cutoff, window="hamming", fs=fs)


def _highpass_taps(fs: float, cutoff: float) -> np.ndarray:
    # The 0.5 Hz edge needs a long kernel; 4 s gives a ~0.8 Hz transition.
    ntaps = 2 * round(2.0 * fs) + 1
    return signal.firwin(ntaps, cutoff, pass_zero=False, window="hamming", fs=fs)


def bandpass_filter(recording: Recording, low: float = 0.5, high: float = 35.0) -> Recording:
    """Zero-phase 0.5-35 Hz band limiting of a continuous recording.

    Linear-phase windowed-sinc (Hamming) low-pass and high-pass stages,
    each applied forward-backward. Length is preserved.
    """
    if recording.fs < 80.0:
        raise ValueError(f"sampling rate {recording.fs} Hz too low; need >= 80 Hz")
    if recording.fs <= 2.0 * high:
        raise ValueError("sampling rate must exceed twice the low-pass cutoff")
    lp = _lowpass_taps(recording.fs, high)
    hp = _highpass_taps(recording.fs, low)
    n = recording.data.shape[1]
    if n <= len(hp):
        raise ValueError(f"recording too short to filter: {n} samples")
    padlen = min(3 * (len(hp) - 1), n - 1)
    out = signal.filtfilt(lp, 1.0, recording.data, axis=1, padlen=min(3 * (len(lp) - 1), n - 1))
    out = signal.filtfilt(hp, 1.0, out, axis=1, padlen=padlen)
    return replace(recording, data=out)


def _epoch_span(fs: float) -> tuple[int, int]:
    pre = round(-EPOCH_START_MS / 1000.0 * fs)
    post = round(EPOCH_END_MS / 1000.0 * fs)
    return pre, post


def cut_epochs(recording: Recording) -> EpochSet:
    """Cut one baseline-corrected epoch per word event.

    Separator events are excluded; events whose epoch window falls outside
    the recording are skipped with a warning.
    """
    pre, post = _epoch_span(recording.fs)
    n = recording.data.shape[1]
    epochs = []
    for ev in recording.events:
        if ev.kind != KIND_WORD:
            continue
        if ev.sample - pre < 0 or ev.sample + post > n:
            log.warning("skipping out-of-bounds event %r at sample %d", ev.word, ev.sample)
            continue
        data = recording.data[:, ev.sample - pre: ev.sample + post].astype(np.float64)
        baseline = data[:, :pre].mean(axis=1, keepdims=True)
        epochs.append(Epoch(data=data - baseline, word=ev.word, block=ev.block, label=ev.label))
    return EpochSet(participant="", fs=recording.fs, channels=list(recording.channels), epochs=epochs)


def _violations(epoch_set: EpochSet, variance_floor: float, ptp_ceiling: float) -> np.ndarray:
    """Boolean epochs x channels matrix of per-channel criterion violations."""
    bad = np.zeros((len(epoch_set.epochs), len(epoch_set.channels)), dtype=bool)
    for k, ep in enumerate(epoch_set.epochs):
        var = ep.data.var(axis=1)
        ptp = ep.data.max(axis=1) - ep.data.min(axis=1)
        bad[k] = (var < variance_floor) | (ptp > ptp_ceiling)
    return bad


def reject_artifacts(
    epoch_set: EpochSet,
    variance_floor: float = 0.5,
    ptp_ceiling: float = 40.0,
    channel_fraction: float = 0.1,
) -> tuple[EpochSet, RejectionReport]:
    """Two-pass channel and epoch rejection.

    Pass 1 flags an epoch as invalid when any channel is flat
    (variance < variance_floor, in microvolts squared) or exceeds the
    peak-to-peak ceiling; a channel is removed when it violates the
    criteria in more than channel_fraction of all epochs. Pass 2 re-flags
    epochs on the remaining channels and drops them.
    """
    n_epochs = len(epoch_set.epochs)
    n_channels = len(epoch_set.channels)
    counts = {LABEL_RELEVANT: 0, LABEL_IRRELEVANT: 0}

    bad = _violations(epoch_set, variance_floor, ptp_ceiling)
    keep_channel = bad.sum(axis=0) <= channel_fraction * n_epochs
    if not keep_channel.any():
        raise ValueError("no usable channels")
    kept_idx = np.flatnonzero(keep_channel)
    removed = [c for c, k in zip(epoch_set.channels, keep_channel) if not k]

    clean = []
    for k, ep in enumerate(epoch_set.epochs):
        if bad[k, kept_idx].any():
            continue
        clean.append(replace(ep, data=ep.data[kept_idx]))
        if ep.label in counts:
            counts[ep.label] += 1

    report = RejectionReport(
        recorded_channels=n_channels,
        accepted_channels=int(keep_channel.sum()),
        recorded_epochs=n_epochs,
        accepted_epochs=len(clean),
        relevant_epochs=counts[LABEL_RELEVANT],
        irrelevant_epochs=counts[LABEL_IRRELEVANT],
        removed_channels=removed,
    )
    cleaned = EpochSet(
        participant=epoch_set.participant,
        fs=epoch_set.fs,
        channels=[epoch_set.channels[i] for i in kept_idx],
        epochs=clean,
    )
    return cleaned, report


def window_indices(fs: float, n_samples: int, start_ms: float, end_ms: float) -> np.ndarray:
    """Sample indices of an epoch falling in [start_ms, end_ms) post-onset.

    Index 0 corresponds to EPOCH_START_MS; comparisons are done in exact
    integer-scaled time to keep window edges stable across sampling rates.
    """
    idx = np.arange(n_samples)
    lo = (start_ms - EPOCH_START_MS) * fs
    hi = (end_ms - EPOCH_START_MS) * fs
    return idx[(idx * 1000.0 >= lo) & (idx * 1000.0 < hi)]


def feature_windows_ms() -> list[tuple[float, float]]:
    lo, hi = FEATURE_SPAN_MS
    width = (hi - lo) / FEATURE_WINDOW_COUNT
    return [(lo + k * width, lo + (k + 1) * width) for k in range(FEATURE_WINDOW_COUNT)]


@dataclass
class FeatureMatrix:
    """Rows are epochs, columns are channel-major window means."""

    X: np.ndarray
    labels: np.ndarray
    words: list[str]
    blocks: np.ndarray
    feature_names: list[str]


def extract_features(epoch_set: EpochSet) -> FeatureMatrix:
    """Spatio-temporal features: 7 window means per channel, channel-major."""
    if not epoch_set.epochs:
        raise ValueError("no epochs to featurize")
    n_samples = epoch_set.epochs[0].data.shape[1]
    windows = [
        window_indices(epoch_set.fs, n_samples, lo, hi) for lo, hi in feature_windows_ms()
    ]
    n_channels = len(epoch_set.channels)
    X = np.empty((len(epoch_set.epochs), n_channels * FEATURE_WINDOW_COUNT), dtype=np.float64)
    for k, ep in enumerate(epoch_set.epochs):
        means = np.stack([ep.data[:, w].mean(axis=1) for w in windows], axis=1)
        X[k] = means.ravel()  # channel-major: all windows of channel 0, then 1, ...
    names = [
        f"{ch}:w{w}" for ch in epoch_set.channels for w in range(FEATURE_WINDOW_COUNT)
    ]
    return FeatureMatrix(
        X=X,
        labels=np.asarray([ep.label for ep in epoch_set.epochs]),
        words=[ep.word for ep in epoch_set.epochs],
        blocks=np.asarray([ep.block for ep in epoch_set.epochs], dtype=np.int64),
        feature_names=names,
    )


def grand_average(epoch_set: EpochSet, label: str) -> np.ndarray:
    """Pointwise mean ERP (channels x samples) over epochs of one condition."""
    arrays = [ep.data for ep in epoch_set.epochs if ep.label == label]
    if not arrays:
        raise ValueError(f"no epochs with label {label!r}")
    return np.mean(np.stack(arrays), axis=0)


def average_curves(curves: list[np.ndarray]) -> np.ndarray:
    """Mean of per-participant ERP curves (all with identical shape)."""
    if not curves:
        raise ValueError("no curves to average")
    return np.mean(np.stack(curves), axis=0)


def interval_test(relevant: np.ndarray, irrelevant: np.ndarray) -> tuple[float, float]:
    """Two-sided paired t-test on per-participant interval mean amplitudes.

    Identical pairs yield (0, 1); constant nonzero differences make the
    statistic undefined and raise.
    """
    a = np.asarray(relevant, dtype=np.float64)
    b = np.asarray(irrelevant, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    n = a.size
    if n < 2:
        raise ValueError("need at least 2 pairs")
    d = a - b
    sd = d.std(ddof=1)
    if sd == 0.0:
        if np.all(d == 0.0):
            return 0.0, 1.0
        raise ValueError("degenerate paired differences: zero variance, nonzero mean")
    t = d.mean() / (sd / np.sqrt(n))
    p = 2.0 * stats.t.sf(abs(t), df=n - 1)
    return float(t), float(p)


# --------------------------------------------------------------------------
# Epoch container file format (see docs/formats.md)

_MAGIC = b"EPOC"
_VERSION = 1
_LABEL_CODES = {LABEL_UNLABELED: 0, LABEL_RELEVANT: 1, LABEL_IRRELEVANT: 2}
_CODE_LABELS = {v: k for k, v in _LABEL_CODES.items()}


def save_epochs(epoch_set: EpochSet, path) -> None:
    """Write the binary epoch container: header plus float32 payloads."""
    header = json.dumps(
        {
            "participant": epoch_set.participant,
            "fs": epoch_set.fs,
            "channels": list(epoch_set.channels),
        },
        sort_keys=True,
    ).encode("utf-8")
    m = len(epoch_set.channels)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HI", _VERSION, len(header)))
        fh.write(header)
        fh.write(struct.pack("<I", len(epoch_set.epochs)))
        for ep in epoch_set.epochs:
            if ep.data.shape[0] != m:
                raise ValueError("epoch channel count does not match header")
            word = ep.word.encode("utf-8")
            fh.write(struct.pack("<IBH", ep.block, _LABEL_CODES[ep.label], len(word)))
            fh.write(word)
            payload = np.ascontiguousarray(ep.data, dtype="<f4")
            fh.write(struct.pack("<I", payload.shape[1]))
            fh.write(payload.tobytes())


def load_epochs(path) -> EpochSet:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"not an epoch container: {path}")
        version, header_len = struct.unpack("<HI", fh.read(6))
        if version != _VERSION:
            raise ValueError(f"unsupported epoch container version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        channels = list(header["channels"])
        m = len(channels)
        (n_records,) = struct.unpack("<I", fh.read(4))
        epochs = []
        for _ in range(n_records):
            block, label_code, word_len = struct.unpack("<IBH", fh.read(7))
            word = fh.read(word_len).decode("utf-8")
            (s,) = struct.unpack("<I", fh.read(4))
            payload = np.frombuffer(fh.read(m * s * 4), dtype="<f4").reshape(m, s)
            epochs.append(
                Epoch(data=payload, word=word, block=block, label=_CODE_LABELS[label_code])
            )
        return EpochSet(
            participant=header["participant"], fs=float(header["fs"]),
            channels=channels, epochs=epochs,
        )


def save_recording(recording: Recording, path) -> None:
    """Persist a continuous recording as an npz archive."""
    with open(path, "wb") as fh:
        _write_recording_npz(fh, recording)


def _write_recording_npz(fh, recording: Recording) -> None:
    np.savez_compressed(
        fh,
        data=recording.data,
        fs=np.asarray(recording.fs),
        channels=np.asarray(recording.channels),
        event_sample=np.asarray([e.sample for e in recording.events], dtype=np.int64),
        event_word=np.asarray([e.word for e in recording.events]),
        event_block=np.asarray([e.block for e in recording.events], dtype=np.int64),
        event_kind=np.asarray([e.kind for e in recording.events]),
        event_label=np.asarray([e.label for e in recording.events]),
    )


def load_recording(path) -> Recording:
    with np.load(path, allow_pickle=False) as z:
        events = [
            Event(sample=int(s), word=str(w), block=int(b), kind=str(k), label=str(l))
            for s, w, b, k, l in zip(
                z["event_sample"], z["event_word"], z["event_block"],
                z["event_kind"], z["event_label"],
            )
        ]
        return Recording(
            data=z["data"], fs=float(z["fs"]), channels=[str(c) for c in z["channels"]],
            events=events,
        )

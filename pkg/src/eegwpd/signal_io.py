"""Recording ingestion: EDF files, CSV files, and seeded synthetic EEG.

EDF is read directly from the raw byte layout (256-byte fixed header,
256 bytes per signal, then int16 little-endian data records) rather than
through a third-party reader, so malformed files surface as the typed
errors below. CSV ingestion goes through polars for speed, with a stdlib
fallback that pinpoints the offending row or cell when parsing fails.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import polars as pl

from .errors import (
    DurationTooShort,
    MalformedHeader,
    NonFiniteSample,
    NonNumericCell,
    RaggedRows,
    TruncatedData,
)

NORMAL = "normal"
ABNORMAL = "abnormal"

# 10/20 electrode names used by the synthesizer (and by channel selection
# downstream), scalp order front to back.
TEN_TWENTY_21 = (
    "FP1", "FP2", "F7", "F3", "FZ", "F4", "F8",
    "T3", "C3", "CZ", "C4", "T4",
    "T5", "P3", "PZ", "P4", "T6",
    "O1", "O2", "A1", "A2",
)

SYNTH_RATE = 250.0


@dataclass
class ChannelSignal:
    """One electrode trace. sample_rate is only set when it differs from
    the recording-level rate (mixed-rate EDF files)."""

    label: str
    samples: np.ndarray
    sample_rate: float | None = None


@dataclass
class Recording:
    """Multi-channel signal with an optional class label.

    sample_rate is the common rate of all channels; it is None only when
    the source file declared differing per-channel rates, in which case
    every channel carries its own rate and lengths may differ until the
    preprocess stage resamples them onto one grid.
    """

    channels: list[ChannelSignal] = field(default_factory=list)
    sample_rate: float | None = None
    id: str = ""
    label: str | None = None

    def __post_init__(self):
        seen = set()
        for ch in self.channels:
            if ch.label in seen:
                raise ValueError(f"duplicate channel label {ch.label!r}")
            seen.add(ch.label)
            if ch.samples.size and not np.all(np.isfinite(ch.samples)):
                raise NonFiniteSample(f"channel {ch.label!r} contains NaN or Inf")
        if self.sample_rate is not None:
            if not self.sample_rate > 0:
                raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
            lengths = {ch.samples.size for ch in self.channels}
            if len(lengths) > 1:
                raise ValueError(f"channels have unequal lengths {sorted(lengths)}")
        else:
            for ch in self.channels:
                if ch.sample_rate is None or not ch.sample_rate > 0:
                    raise ValueError(
                        "recordings without a common rate need a positive rate per channel"
                    )

    @property
    def n_samples(self) -> int:
        return self.channels[0].samples.size if self.channels else 0

    def channel_labels(self) -> list[str]:
        return [ch.label for ch in self.channels]


# ---------------------------------------------------------------------------
# EDF

_EDF_HEADER_LEN = 256
_EDF_PER_SIGNAL_LEN = 256


def _ascii_field(raw: bytes, what: str) -> str:
    try:
        return raw.decode("ascii").strip()
    except UnicodeDecodeError as exc:
        raise MalformedHeader(f"non-ASCII bytes in EDF {what} field") from exc


def _int_field(raw: bytes, what: str) -> int:
    text = _ascii_field(raw, what)
    try:
        return int(text)
    except ValueError as exc:
        raise MalformedHeader(f"EDF {what} field is not an integer: {text!r}") from exc


def _float_field(raw: bytes, what: str) -> float:
    text = _ascii_field(raw, what)
    try:
        return float(text)
    except ValueError as exc:
        raise MalformedHeader(f"EDF {what} field is not a number: {text!r}") from exc


def read_edf(path) -> Recording:
    """Read an EDF file into a Recording in physical units.

    Annotation channels are dropped. If the signals declare a single
    common sampling rate the Recording carries it; otherwise each channel
    keeps its own rate for the preprocess stage to resolve.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _EDF_HEADER_LEN:
        raise MalformedHeader(f"{path.name}: shorter than the fixed EDF header")
    head = data[:_EDF_HEADER_LEN]
    version = _ascii_field(head[0:8], "version")
    if version != "0":
        raise MalformedHeader(f"{path.name}: bad version magic {version!r}")
    header_bytes = _int_field(head[184:192], "header-bytes")
    n_records = _int_field(head[236:244], "record-count")
    record_dur = _float_field(head[244:252], "record-duration")
    ns = _int_field(head[252:256], "signal-count")
    if ns <= 0:
        raise MalformedHeader(f"{path.name}: non-positive signal count {ns}")
    if header_bytes != _EDF_HEADER_LEN + ns * _EDF_PER_SIGNAL_LEN:
        raise MalformedHeader(
            f"{path.name}: header size field {header_bytes} does not match {ns} signals"
        )
    if n_records < 0:
        raise MalformedHeader(f"{path.name}: negative data record count {n_records}")
    if record_dur <= 0 and n_records > 0:
        raise MalformedHeader(f"{path.name}: non-positive record duration {record_dur}")
    if len(data) < header_bytes:
        raise MalformedHeader(f"{path.name}: truncated signal header block")

    sig = data[_EDF_HEADER_LEN:header_bytes]

    def block(offset: int, width: int, i: int) -> bytes:
        start = offset * ns + i * width
        return sig[start : start + width]

    labels = [_ascii_field(block(0, 16, i), "label") for i in range(ns)]
    # field offsets within the per-signal block, in bytes per signal
    phys_min = [_float_field(block(16 + 80 + 8, 8, i), "physical-min") for i in range(ns)]
    phys_max = [_float_field(block(16 + 80 + 8 + 8, 8, i), "physical-max") for i in range(ns)]
    dig_min = [_int_field(block(16 + 80 + 8 + 16, 8, i), "digital-min") for i in range(ns)]
    dig_max = [_int_field(block(16 + 80 + 8 + 24, 8, i), "digital-max") for i in range(ns)]
    spr = [_int_field(block(16 + 80 + 8 + 32 + 80, 8, i), "samples-per-record") for i in range(ns)]
    if any(s <= 0 for s in spr):
        raise MalformedHeader(f"{path.name}: non-positive samples-per-record")
    if any(dmax == dmin for dmin, dmax in zip(dig_min, dig_max)):
        raise MalformedHeader(f"{path.name}: zero digital range")

    samples_per_rec = sum(spr)
    usable = (len(data) - header_bytes) // 2
    payload = np.frombuffer(data, dtype="<i2", count=usable, offset=header_bytes)
    if payload.size < n_records * samples_per_rec:
        raise TruncatedData(
            f"{path.name}: header declares {n_records} records "
            f"({n_records * samples_per_rec} samples) but payload holds {payload.size}"
        )
    payload = payload[: n_records * samples_per_rec].reshape(n_records, samples_per_rec)

    rates = [s / record_dur if record_dur > 0 else 0.0 for s in spr]
    uniform = len({round(r, 9) for i, r in enumerate(rates) if "EDF ANNOTATIONS" not in labels[i].upper()}) <= 1

    channels = []
    offset = 0
    seen = {}
    for i in range(ns):
        width = spr[i]
        raw = payload[:, offset : offset + width].reshape(-1) if n_records else np.empty(0, dtype="<i2")
        offset += width
        if "EDF ANNOTATIONS" in labels[i].upper():
            continue
        gain = (phys_max[i] - phys_min[i]) / (dig_max[i] - dig_min[i])
        with np.errstate(invalid="ignore"):
            phys = (raw.astype(np.float64) - dig_min[i]) * gain + phys_min[i]
        if phys.size and not np.all(np.isfinite(phys)):
            raise NonFiniteSample(f"{path.name}: channel {labels[i]!r} scales to NaN/Inf")
        label = labels[i]
        if label in seen:
            seen[label] += 1
            label = f"{label}({seen[label]})"
        else:
            seen[label] = 1
        channels.append(
            ChannelSignal(
                label=label,
                samples=phys,
                sample_rate=None if uniform else rates[i],
            )
        )

    if uniform:
        rate = next((r for r in rates if r > 0), SYNTH_RATE)
        return Recording(channels=channels, sample_rate=rate, id=path.stem)
    return Recording(channels=channels, sample_rate=None, id=path.stem)


# ---------------------------------------------------------------------------
# CSV

def _diagnose_csv(path: Path) -> None:
    """Slow stdlib pass over a file polars refused, to raise a precise error."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedHeader(f"{path.name}: empty file") from None
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != width:
                raise RaggedRows(
                    f"{path.name}: line {lineno} has {len(row)} cells, header has {width}"
                )
            for col, cell in enumerate(row):
                try:
                    value = float(cell)
                except ValueError:
                    raise NonNumericCell(
                        f"{path.name}: line {lineno}, column {col + 1}: {cell!r}"
                    ) from None
                if not np.isfinite(value):
                    raise NonNumericCell(
                        f"{path.name}: line {lineno}, column {col + 1}: non-finite {cell!r}"
                    )


def read_csv(path, sample_rate: float) -> Recording:
    """Read a header-plus-columns CSV into a Recording at the given rate."""
    path = Path(path)
    with open(path, newline="") as fh:
        header_line = fh.readline()
    if not header_line:
        raise MalformedHeader(f"{path.name}: empty file")
    labels = next(csv.reader([header_line]))
    try:
        df = pl.read_csv(
            path,
            schema_overrides={lab: pl.Float64 for lab in labels},
            infer_schema_length=0,
        )
        if df.width != len(labels):
            raise RaggedRows(f"{path.name}: column count mismatch")
        matrix = df.to_numpy()
    except (pl.exceptions.ComputeError, pl.exceptions.SchemaError, RaggedRows):
        _diagnose_csv(path)
        raise  # diagnosis found nothing more specific
    if matrix.size and not np.all(np.isfinite(matrix)):
        _diagnose_csv(path)
        raise NonNumericCell(f"{path.name}: non-finite cell")
    channels = [
        ChannelSignal(label=lab, samples=np.ascontiguousarray(matrix[:, i]))
        for i, lab in enumerate(labels)
    ]
    return Recording(channels=channels, sample_rate=float(sample_rate), id=path.stem)


def write_csv(rec: Recording, path) -> None:
    """Write a Recording as header + one row per sample (read_csv inverse)."""
    path = Path(path)
    df = pl.DataFrame({ch.label: ch.samples for ch in rec.channels})
    df.write_csv(path)


# ---------------------------------------------------------------------------
# Synthetic recordings

def _seed_state(seed: int, *key: int) -> np.random.Generator:
    entropy = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy, spawn_key=key)))


def _pink_noise(rng: np.random.Generator, n_channels: int, n: int,
                low_boost: float = 1.0) -> np.ndarray:
    """1/f-shaped Gaussian noise, optionally with its sub-5 Hz band boosted."""
    freqs = np.fft.rfftfreq(n, d=1.0 / SYNTH_RATE)
    shape = 1.0 / np.sqrt(np.maximum(freqs, 0.5))
    if low_boost != 1.0:
        shape = shape * np.where((freqs > 0) & (freqs < 5.0), low_boost, 1.0)
    shape[0] = 0.0
    spec = rng.standard_normal((n_channels, freqs.size)) + 1j * rng.standard_normal(
        (n_channels, freqs.size)
    )
    x = np.fft.irfft(spec * shape, n=n, axis=-1)
    scale = 8.0 / np.std(x, axis=-1, keepdims=True)
    return x * scale


def synth_recording(class_label: str, duration_s: float, seed: int) -> Recording:
    """Generate a deterministic 21-channel test recording at 250 Hz.

    Normal recordings are 1/f background noise plus a 10 Hz rhythm.
    Abnormal recordings add slowing (boosted sub-5 Hz background) and
    intermittent high-amplitude 3 Hz bursts on a random subset of
    channels. Amplitudes are microvolt-scale and quantized to 0.1 uV so
    CSV round-trips stay compact. This is a test vehicle for the
    pipeline, not a clinical model.
    """
    if class_label not in (NORMAL, ABNORMAL):
        raise ValueError(f"class must be {NORMAL!r} or {ABNORMAL!r}, got {class_label!r}")
    if duration_s < 16:
        raise DurationTooShort(f"need at least 16 s (two segments), got {duration_s}")
    abnormal = class_label == ABNORMAL
    rng = _seed_state(seed, 1 if abnormal else 0)
    n = int(round(duration_s * SYNTH_RATE))
    E = len(TEN_TWENTY_21)
    t = np.arange(n) / SYNTH_RATE

    x = _pink_noise(rng, E, n, low_boost=1.6 if abnormal else 1.0)
    phases = rng.uniform(0, 2 * np.pi, size=(E, 1))
    x += 6.0 * np.sin(2 * np.pi * 10.0 * t[None, :] + phases)

    if abnormal:
        n_burst_ch = int(rng.integers(6, 11))
        burst_channels = np.sort(rng.choice(E, size=n_burst_ch, replace=False))
        burst_len = int(2.0 * SYNTH_RATE)
        window = np.hanning(burst_len)
        for ch in burst_channels:
            pos = 0.0
            while True:
                pos += float(rng.uniform(2.0, 6.0))
                start = int(pos * SYNTH_RATE)
                if start + burst_len >= n:
                    break
                phase = float(rng.uniform(0, 2 * np.pi))
                tt = t[start : start + burst_len]
                x[ch, start : start + burst_len] += (
                    45.0 * window * np.sin(2 * np.pi * 3.0 * tt + phase)
                )
                pos += burst_len / SYNTH_RATE

    x = np.round(x, 1)
    channels = [ChannelSignal(label=lab, samples=x[i]) for i, lab in enumerate(TEN_TWENTY_21)]
    rec_id = f"{class_label}-{seed}"
    return Recording(channels=channels, sample_rate=SYNTH_RATE, id=rec_id, label=class_label)

"""Channel selection, resampling to 250 Hz, and 8-second segmentation.

Vendor channel labels vary ("EEG FP1-REF", "FP1-LE", "Fp1"), so selection
first normalizes: uppercase, strip a leading "EEG " and a trailing "-REF"
or "-LE". Resampling is a windowed-sinc low-pass at the target Nyquist
followed by rational decimation, which keeps sub-band powers free of
aliasing that plain decimation would fold in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import firwin, upfirdn

from .errors import MissingChannel, RecordingTooShort, UpsamplingRequested
from .signal_io import ChannelSignal, Recording

TARGET_RATE = 250.0
SEGMENT_SECONDS = 8.0
MAX_SEGMENTS = 100

CANONICAL_CHANNELS = (
    "FP1", "FP2", "F7", "F3", "FZ", "F4", "F8",
    "T3", "C3", "CZ", "C4", "T4",
    "T5", "P3", "PZ", "P4", "T6",
    "O1", "O2", "A1", "A2",
)


@dataclass
class SegmentArray:
    """Segments of one recording: array [channel, segment, sample]."""

    recording_id: str
    label: str | None
    segments: np.ndarray
    sample_rate: float

    def __post_init__(self):
        if self.segments.ndim != 3:
            raise ValueError("segments must be a 3-d array")

    @property
    def n_segments(self) -> int:
        return self.segments.shape[1]


def normalize_label(label: str) -> str:
    """Map a vendor electrode label onto its bare 10/20 name."""
    name = label.strip().upper()
    if name.startswith("EEG "):
        name = name[4:]
    for suffix in ("-REF", "-LE"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return name.strip()


def select_standard_channels(rec: Recording) -> Recording:
    """Keep exactly the 21 standard channels, in canonical order.

    Raises MissingChannel naming the first absent electrode. Idempotent on
    already-selected recordings.
    """
    by_name = {}
    for ch in rec.channels:
        key = normalize_label(ch.label)
        if key not in by_name:
            by_name[key] = ch
    picked = []
    for name in CANONICAL_CHANNELS:
        if name not in by_name:
            raise MissingChannel(name)
        src = by_name[name]
        picked.append(ChannelSignal(label=name, samples=src.samples, sample_rate=src.sample_rate))
    return Recording(channels=picked, sample_rate=rec.sample_rate, id=rec.id, label=rec.label)


def _rational_ratio(target: float, source: float) -> tuple[int, int]:
    frac = Fraction(str(target)) / Fraction(str(source))
    return frac.numerator, frac.denominator


def _resample_1d(x: np.ndarray, up: int, down: int) -> np.ndarray:
    """Polyphase rational resample of one channel (up/down already reduced).

    The low-pass is a Kaiser-windowed sinc cut at the target Nyquist;
    boundaries are handled by reflecting the input past both edges so the
    filter never sees zero-padding transients. Output length is
    floor(n * up / down).
    """
    n = x.size
    n_out = (n * up) // down
    if n_out == 0:
        return np.zeros(0)
    maxud = max(up, down)
    half = 10 * maxud
    taps = firwin(2 * half + 1, 1.0 / maxud, window=("kaiser", 8.6)) * up
    # choose a left pad so the zero-phase output lands on the decimation grid
    pad_left = math.ceil(half / up)
    while (pad_left * up + half) % down:
        pad_left += 1
    pad_right = math.ceil(half / up) + math.ceil(down / up) + 1
    xp = np.pad(x, (pad_left, pad_right), mode="reflect")
    y = upfirdn(taps, xp, up=up, down=down)
    offset = (pad_left * up + half) // down
    if y.size < offset + n_out:
        raise AssertionError("resample padding arithmetic is wrong")
    return np.ascontiguousarray(y[offset : offset + n_out])


def resample(rec: Recording, target_rate: float = TARGET_RATE) -> Recording:
    """Resample every channel down to target_rate (250 Hz by default).

    A recording already at the target passes through bitwise untouched.
    Mixed-rate recordings are resampled per channel and trimmed to a
    common length. Upsampling is refused.
    """
    rates = (
        [rec.sample_rate] * len(rec.channels)
        if rec.sample_rate is not None
        else [ch.sample_rate for ch in rec.channels]
    )
    for rate, ch in zip(rates, rec.channels):
        if rate < target_rate:
            raise UpsamplingRequested(
                f"channel {ch.label!r} at {rate} Hz is below the {target_rate} Hz target"
            )
    if all(rate == target_rate for rate in rates):
        if rec.sample_rate is not None:
            return rec
        channels = [ChannelSignal(label=c.label, samples=c.samples) for c in rec.channels]
        return Recording(channels=channels, sample_rate=target_rate, id=rec.id, label=rec.label)

    resampled = []
    for rate, ch in zip(rates, rec.channels):
        if rate == target_rate:
            resampled.append(ch.samples)
        else:
            up, down = _rational_ratio(target_rate, rate)
            resampled.append(_resample_1d(np.asarray(ch.samples, dtype=np.float64), up, down))
    n_min = min(arr.size for arr in resampled)
    channels = [
        ChannelSignal(label=ch.label, samples=arr[:n_min])
        for ch, arr in zip(rec.channels, resampled)
    ]
    return Recording(channels=channels, sample_rate=target_rate, id=rec.id, label=rec.label)


def segment(rec: Recording, seg_seconds: float = SEGMENT_SECONDS,
            max_segments: int = MAX_SEGMENTS) -> SegmentArray:
    """Cut each channel into non-overlapping windows from the recording start.

    Expects the 21 canonical channels at 250 Hz. Trailing samples that do
    not fill a window are dropped; at most max_segments windows are kept.
    """
    if rec.sample_rate != TARGET_RATE:
        raise ValueError(f"segment expects a {TARGET_RATE} Hz recording, got {rec.sample_rate}")
    if rec.channel_labels() != list(CANONICAL_CHANNELS):
        raise ValueError("segment expects the 21 canonical channels in order")
    per_seg = int(round(seg_seconds * rec.sample_rate))
    n = rec.n_samples
    n_seg = min(max_segments, n // per_seg)
    if n_seg < 2:
        raise RecordingTooShort(
            f"{rec.id or 'recording'}: {n} samples give {n_seg} full segments, need 2"
        )
    data = np.stack([ch.samples[: n_seg * per_seg] for ch in rec.channels])
    segments = np.ascontiguousarray(data.reshape(len(rec.channels), n_seg, per_seg))
    return SegmentArray(
        recording_id=rec.id,
        label=rec.label,
        segments=segments,
        sample_rate=rec.sample_rate,
    )

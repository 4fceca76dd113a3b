"""Per-sub-band statistics, vector normalization, and median aggregation.

Each segment yields 96 values: the 16 selected wavelet packet nodes times
six statistics in the order MAV, AVP, SD, RMAV, SKEW, KURT (node-major).
A recording's [channel x segment x 96] tensor is reduced to one 4032-long
vector by taking, per channel and feature, the median of the first and of
the second half of its segments and concatenating both.

Feature matrices persist to the "WPDF" binary layout (magic, version u16,
rows u32, cols u32, row-major float64 little-endian, one label byte per
row, then a length-prefixed recording-id table) with a CSV mirror for
inspection.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyInput,
    MalformedHeader,
    TooFewSegments,
    TruncatedData,
    UnsupportedVersion,
    WrongLength,
)
from .preprocess import SegmentArray
from .wavelet import SELECTED_PATHS, SelectedCoefficients, decompose_paths_batch

N_NODES = 16
N_STATS = 6
VECTOR_LEN = N_NODES * N_STATS  # 96
STAT_NAMES = ("mav", "avp", "sd", "rmav", "skew", "kurt")

RMAV_EPS = 1e-12

LABEL_BYTES = {"normal": 0, "abnormal": 1, None: 255}
BYTE_LABELS = {0: "normal", 1: "abnormal", 255: None}

_WPDF_MAGIC = b"WPDF"
_WPDF_VERSION = 1


def _moment_stats(c: np.ndarray):
    """MAV, AVP, SD, skewness, excess kurtosis over the last axis.

    Population (biased) moments. Inputs whose spread is at float noise
    level relative to their magnitude (sd below 1e-12 * MAV) count as
    constant: skewness and kurtosis are 0 by convention.
    """
    mav = np.mean(np.abs(c), axis=-1)
    avp = np.mean(c * c, axis=-1)
    mu = np.mean(c, axis=-1, keepdims=True)
    d = c - mu
    d2 = d * d
    m2 = np.mean(d2, axis=-1)
    m3 = np.mean(d2 * d, axis=-1)
    m4 = np.mean(d2 * d2, axis=-1)
    sd = np.sqrt(m2)
    degenerate = m2 <= (1e-12 * mav) ** 2
    safe = np.where(degenerate, 1.0, m2)
    skew = np.where(degenerate, 0.0, m3 / safe ** 1.5)
    kurt = np.where(degenerate, 0.0, m4 / (safe * safe) - 3.0)
    return mav, avp, sd, skew, kurt


def subband_stats(coeffs):
    """Five statistics of one coefficient array: (mav, avp, sd, skew, kurt)."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.size == 0:
        raise EmptyInput("subband_stats needs a non-empty array")
    mav, avp, sd, skew, kurt = _moment_stats(c[None, :])
    return float(mav[0]), float(avp[0]), float(sd[0]), float(skew[0]), float(kurt[0])


def rmav_chain(mavs):
    """Ratio of each node's MAV to its successor's, wrapping at the end.

    out[i] = mavs[i] / max(mavs[(i+1) % 16], 1e-12), following the
    canonical 16-node order.
    """
    m = np.asarray(mavs, dtype=np.float64)
    if m.shape != (N_NODES,):
        raise WrongLength(f"expected {N_NODES} MAV values, got shape {m.shape}")
    nxt = np.maximum(np.roll(m, -1), RMAV_EPS)
    return m / nxt


def _features_from_node_arrays(node_arrays) -> np.ndarray:
    """(batch, 96) feature block from 16 per-node (batch, len) arrays."""
    batch = node_arrays[0].shape[0]
    out = np.empty((batch, N_NODES, N_STATS))
    mavs = np.empty((batch, N_NODES))
    for i, arr in enumerate(node_arrays):
        mav, avp, sd, skew, kurt = _moment_stats(arr)
        mavs[:, i] = mav
        out[:, i, 0] = mav
        out[:, i, 1] = avp
        out[:, i, 2] = sd
        out[:, i, 4] = skew
        out[:, i, 5] = kurt
    nxt = np.maximum(np.roll(mavs, -1, axis=1), RMAV_EPS)
    out[:, :, 3] = mavs / nxt
    return out.reshape(batch, VECTOR_LEN)


def segment_features(sel: SelectedCoefficients) -> np.ndarray:
    """The 96-value statistics vector of one segment's selected nodes."""
    if tuple(n.path for n in sel.nodes) != SELECTED_PATHS:
        raise ValueError("selected coefficients are not in canonical order")
    arrays = [np.asarray(n.coeffs, dtype=np.float64)[None, :] for n in sel.nodes]
    return _features_from_node_arrays(arrays)[0]


def normalize_vector(v):
    """Scale a vector to zero mean, unit population sd (zeros if constant)."""
    x = np.asarray(v, dtype=np.float64)
    if x.size == 0:
        raise EmptyInput("normalize_vector needs a non-empty vector")
    sd = np.std(x)
    if sd < 1e-12:
        return np.zeros_like(x)
    return (x - np.mean(x)) / sd


def _normalize_rows(block: np.ndarray) -> np.ndarray:
    mu = np.mean(block, axis=-1, keepdims=True)
    sd = np.std(block, axis=-1, keepdims=True)
    out = np.where(sd < 1e-12, 0.0, (block - mu) / np.where(sd < 1e-12, 1.0, sd))
    return out


@dataclass
class FeatureTensor:
    """Per-recording features: array [channel, segment, 96]."""

    recording_id: str
    label: str | None
    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != VECTOR_LEN:
            raise ValueError(f"expected [channel, segment, {VECTOR_LEN}], got {self.data.shape}")


def extract_features(seg: SegmentArray, ext: str = "periodic",
                     normalize: bool = True) -> FeatureTensor:
    """Featurize a whole SegmentArray in one vectorized pass.

    Equivalent to decompose_paths + segment_features (+ normalize_vector)
    per channel and segment, batched for speed.
    """
    E, S, n = seg.segments.shape
    flat = np.ascontiguousarray(seg.segments.reshape(E * S, n))
    node_arrays = decompose_paths_batch(flat, depth=8, ext=ext)
    feats = _features_from_node_arrays(node_arrays)
    if normalize:
        feats = _normalize_rows(feats)
    return FeatureTensor(
        recording_id=seg.recording_id,
        label=seg.label,
        data=np.ascontiguousarray(feats.reshape(E, S, VECTOR_LEN)),
    )


def aggregate(tensor: FeatureTensor) -> np.ndarray:
    """Collapse [channel, segment, 96] to one 4032-vector via half medians.

    Segments split at floor(S/2); per channel and feature the median of
    each half is taken, then concatenated channel-major (channel ->
    first-half 96 -> second-half 96).
    """
    data = tensor.data
    E, S, F = data.shape
    if S < 2:
        raise TooFewSegments(f"aggregation needs at least 2 segments, got {S}")
    h = S // 2
    med1 = np.median(data[:, :h, :], axis=1)
    med2 = np.median(data[:, h:, :], axis=1)
    return np.ascontiguousarray(np.stack([med1, med2], axis=1).reshape(E * 2 * F))


# ---------------------------------------------------------------------------
# Feature matrix persistence (WPDF)

def save_feature_matrix(path, matrix: np.ndarray, labels, ids) -> None:
    """Write rows of aggregated features with labels and recording ids."""
    X = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
    if X.ndim != 2:
        raise ValueError("feature matrix must be 2-d")
    rows, cols = X.shape
    if len(labels) != rows or len(ids) != rows:
        raise WrongLength("labels and ids must match the row count")
    label_bytes = bytes(LABEL_BYTES[lab] for lab in labels)
    with open(path, "wb") as fh:
        fh.write(_WPDF_MAGIC)
        fh.write(struct.pack("<HII", _WPDF_VERSION, rows, cols))
        fh.write(X.astype("<f8").tobytes())
        fh.write(label_bytes)
        for rid in ids:
            raw = rid.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)


def load_feature_matrix(path):
    """Read a WPDF file back as (matrix, labels, ids)."""
    data = Path(path).read_bytes()
    if len(data) < 14:
        raise TruncatedData(f"{Path(path).name}: too short for a WPDF header")
    if data[:4] != _WPDF_MAGIC:
        raise MalformedHeader(f"{Path(path).name}: bad magic {data[:4]!r}")
    version, rows, cols = struct.unpack_from("<HII", data, 4)
    if version != _WPDF_VERSION:
        raise UnsupportedVersion(f"WPDF version {version} not supported")
    need = 14 + rows * cols * 8 + rows
    if len(data) < need:
        raise TruncatedData(f"{Path(path).name}: payload shorter than header declares")
    X = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=14).reshape(rows, cols).copy()
    pos = 14 + rows * cols * 8
    raw_labels = data[pos : pos + rows]
    if any(b not in BYTE_LABELS for b in raw_labels):
        raise MalformedHeader(f"{Path(path).name}: unknown label byte")
    labels = [BYTE_LABELS[b] for b in raw_labels]
    pos += rows
    ids = []
    for _ in range(rows):
        if pos + 2 > len(data):
            raise TruncatedData(f"{Path(path).name}: id table cut short")
        (ln,) = struct.unpack_from("<H", data, pos)
        pos += 2
        if pos + ln > len(data):
            raise TruncatedData(f"{Path(path).name}: id table cut short")
        ids.append(data[pos : pos + ln].decode("utf-8"))
        pos += ln
    return X, labels, ids


def export_feature_csv(path, matrix: np.ndarray, labels, ids) -> None:
    """Human-readable mirror of a WPDF file: id,label,f0000..fNNNN."""
    X = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        cols = ",".join(f"f{i:04d}" for i in range(X.shape[1]))
        fh.write(f"id,label,{cols}\n")
        for rid, lab, row in zip(ids, labels, X):
            values = ",".join(repr(float(v)) for v in row)
            fh.write(f"{rid},{lab if lab is not None else ''},{values}\n")

"""Shared fixtures and the test-side EDF writer.

The EDF writer here is deliberately independent of the package reader: it
assembles the byte layout field by field so reader round-trips are checked
against a second implementation of the format.
"""

from __future__ import annotations

import numpy as np
import pytest


def _pad(text: str, width: int) -> bytes:
    raw = text.encode("ascii")
    if len(raw) > width:
        raise ValueError(f"field {text!r} exceeds {width} bytes")
    return raw.ljust(width)


def write_edf(path, channels, record_seconds=1.0, n_records=None,
              samples_per_record=None, phys_min=-1000.0, phys_max=1000.0,
              dig_min=-32768, dig_max=32767, header_signal_count=None,
              annotations_channel=False):
    """Write a minimal EDF file. channels: list of (label, float array).

    samples_per_record may be a list for mixed-rate files. Physical values
    are quantized onto the digital grid (use `edf_grid_values` to build
    inputs that survive the round trip exactly).
    """
    labels = [c[0] for c in channels]
    arrays = [np.asarray(c[1], dtype=np.float64) for c in channels]
    if annotations_channel:
        labels.append("EDF Annotations")
    ns = len(labels)
    if samples_per_record is None:
        samples_per_record = [int(round(record_seconds * 250.0))] * ns
    elif np.isscalar(samples_per_record):
        samples_per_record = [int(samples_per_record)] * ns
    else:
        samples_per_record = list(samples_per_record)
        if annotations_channel and len(samples_per_record) == ns - 1:
            samples_per_record.append(samples_per_record[0])
    if n_records is None:
        n_records = min(
            arr.size // spr for arr, spr in zip(arrays, samples_per_record)
        ) if arrays else 0

    header = b"".join([
        _pad("0", 8),
        _pad("test patient", 80),
        _pad("test recording", 80),
        _pad("01.01.20", 8),
        _pad("00.00.00", 8),
        _pad(str(256 * (ns + 1)), 8),
        _pad("", 44),
        _pad(str(n_records), 8),
        _pad(repr(record_seconds) if record_seconds != int(record_seconds)
             else str(int(record_seconds)), 8),
        _pad(str(header_signal_count if header_signal_count is not None else ns), 4),
    ])
    sig = b"".join(_pad(lab, 16) for lab in labels)
    sig += b"".join(_pad("transducer", 80) for _ in labels)
    sig += b"".join(_pad("uV", 8) for _ in labels)
    sig += b"".join(_pad(repr(phys_min), 8) for _ in labels)
    sig += b"".join(_pad(repr(phys_max), 8) for _ in labels)
    sig += b"".join(_pad(str(dig_min), 8) for _ in labels)
    sig += b"".join(_pad(str(dig_max), 8) for _ in labels)
    sig += b"".join(_pad("", 80) for _ in labels)
    sig += b"".join(_pad(str(spr), 8) for spr in samples_per_record)
    sig += b"".join(_pad("", 32) for _ in labels)

    gain = (phys_max - phys_min) / (dig_max - dig_min)
    records = []
    for r in range(n_records):
        for i, lab in enumerate(labels):
            spr = samples_per_record[i]
            if annotations_channel and i == len(labels) - 1:
                records.append(np.zeros(spr, dtype="<i2").tobytes())
                continue
            chunk = arrays[i][r * spr : (r + 1) * spr]
            dig = np.round((chunk - phys_min) / gain).astype(np.int64) + dig_min
            records.append(np.clip(dig, dig_min, dig_max).astype("<i2").tobytes())
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(sig)
        fh.write(b"".join(records))


def edf_grid_values(rng, n, phys_min=-1000.0, phys_max=1000.0,
                    dig_min=-32768, dig_max=32767):
    """Random physical values lying exactly on the EDF digital grid."""
    gain = (phys_max - phys_min) / (dig_max - dig_min)
    dig = rng.integers(dig_min, dig_max + 1, size=n)
    return (dig - dig_min) * gain + phys_min


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

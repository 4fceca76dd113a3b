import numpy as np
import pytest

from eegwpd import signal_io
from eegwpd.errors import (
    DurationTooShort,
    MalformedHeader,
    NonFiniteSample,
    NonNumericCell,
    RaggedRows,
    TruncatedData,
)

from conftest import edf_grid_values, write_edf


def test_read_edf_roundtrip(tmp_path, rng):
    x1 = edf_grid_values(rng, 500)
    x2 = edf_grid_values(rng, 500)
    path = tmp_path / "two.edf"
    write_edf(path, [("EEG FP1-REF", x1), ("EEG FP2-REF", x2)], record_seconds=1.0)
    rec = signal_io.read_edf(path)
    assert len(rec.channels) == 2
    assert rec.sample_rate == 250.0
    assert rec.channels[0].samples.size == 500
    assert np.max(np.abs(rec.channels[0].samples - x1)) < 1e-9
    assert np.max(np.abs(rec.channels[1].samples - x2)) < 1e-9
    assert rec.id == "two"


def test_read_edf_zero_records(tmp_path):
    path = tmp_path / "empty.edf"
    write_edf(path, [("FP1", np.zeros(0)), ("FP2", np.zeros(0))], n_records=0)
    rec = signal_io.read_edf(path)
    assert len(rec.channels) == 2
    assert all(ch.samples.size == 0 for ch in rec.channels)


def test_read_edf_truncated(tmp_path, rng):
    labels = [f"CH{i}" for i in range(21)]
    path = tmp_path / "trunc.edf"
    write_edf(path, [(lab, edf_grid_values(rng, 750)) for lab in labels])
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 3000])
    with pytest.raises(TruncatedData):
        signal_io.read_edf(path)


def test_read_edf_bad_magic(tmp_path):
    path = tmp_path / "bad.edf"
    path.write_bytes(b"9" * 300)
    with pytest.raises(MalformedHeader):
        signal_io.read_edf(path)


def test_read_edf_drops_annotations(tmp_path, rng):
    path = tmp_path / "ann.edf"
    write_edf(path, [("FP1", edf_grid_values(rng, 250))], annotations_channel=True)
    rec = signal_io.read_edf(path)
    assert rec.channel_labels() == ["FP1"]


def test_read_edf_nonfinite_scaling(tmp_path, rng):
    path = tmp_path / "inf.edf"
    write_edf(path, [("FP1", edf_grid_values(rng, 250))], phys_max=float("inf"))
    with pytest.raises(NonFiniteSample):
        signal_io.read_edf(path)


def test_read_edf_mixed_rates(tmp_path, rng):
    path = tmp_path / "mixed.edf"
    write_edf(
        path,
        [("FP1", edf_grid_values(rng, 1000)), ("FP2", edf_grid_values(rng, 500))],
        samples_per_record=[500, 250],
        n_records=2,
    )
    rec = signal_io.read_edf(path)
    assert rec.sample_rate is None
    assert rec.channels[0].sample_rate == 500.0
    assert rec.channels[1].sample_rate == 250.0


def test_read_csv_shape(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("A,B,C\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n")
    rec = signal_io.read_csv(path, sample_rate=250.0)
    assert rec.channel_labels() == ["A", "B", "C"]
    assert all(ch.samples.size == 4 for ch in rec.channels)
    assert np.array_equal(rec.channels[1].samples, [2.0, 5.0, 8.0, 11.0])


def test_read_csv_ragged(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("A,B,C\n1,2,3\n4,5\n")
    with pytest.raises(RaggedRows):
        signal_io.read_csv(path, sample_rate=250.0)


def test_read_csv_non_numeric(tmp_path):
    path = tmp_path / "n.csv"
    path.write_text("A,B,C\n1,2,3\n4,abc,6\n")
    with pytest.raises(NonNumericCell):
        signal_io.read_csv(path, sample_rate=250.0)


def test_read_csv_rejects_nan_cell(tmp_path):
    path = tmp_path / "nan.csv"
    path.write_text("A,B\n1,2\nnan,4\n")
    with pytest.raises(NonNumericCell):
        signal_io.read_csv(path, sample_rate=250.0)


def test_csv_roundtrip_identity(tmp_path, rng):
    rec = signal_io.synth_recording("normal", 16, 3)
    path = tmp_path / "rt.csv"
    signal_io.write_csv(rec, path)
    back = signal_io.read_csv(path, sample_rate=250.0)
    assert back.channel_labels() == rec.channel_labels()
    for a, b in zip(rec.channels, back.channels):
        assert np.array_equal(a.samples, b.samples)


def test_synth_shape():
    rec = signal_io.synth_recording("normal", 800, 7)
    assert len(rec.channels) == 21
    assert rec.sample_rate == 250.0
    assert all(ch.samples.size == 200000 for ch in rec.channels)
    assert rec.channel_labels() == list(signal_io.TEN_TWENTY_21)


def test_synth_deterministic():
    a = signal_io.synth_recording("abnormal", 24, 99)
    b = signal_io.synth_recording("abnormal", 24, 99)
    for ca, cb in zip(a.channels, b.channels):
        assert np.array_equal(ca.samples, cb.samples)


def test_synth_classes_differ():
    a = signal_io.synth_recording("normal", 24, 5)
    b = signal_io.synth_recording("abnormal", 24, 5)
    assert not np.array_equal(a.channels[0].samples, b.channels[0].samples)


def test_synth_duration_guard():
    with pytest.raises(DurationTooShort):
        signal_io.synth_recording("normal", 15, 0)


def test_synth_abnormal_has_more_low_band_power():
    # oracle: run the feature pipeline on both classes and compare average
    # power in the sub-band containing 3 Hz (the depth-5 approximation
    # node spans 0-3.9 Hz at 250 Hz sampling)
    from eegwpd import features, preprocess

    avp_idx = features.STAT_NAMES.index("avp")
    node_idx = 8 + 4  # path "AAAAA" in canonical order
    col = node_idx * features.N_STATS + avp_idx

    def mean_avp(class_label):
        rec = signal_io.synth_recording(class_label, 800, 7)
        seg = preprocess.segment(rec)
        tensor = features.extract_features(seg, normalize=False)
        return float(np.mean(tensor.data[:, :, col]))

    assert mean_avp("abnormal") > mean_avp("normal")


def test_recording_rejects_nonfinite():
    ch = [signal_io.ChannelSignal(label="FP1", samples=np.array([1.0, np.nan]))]
    with pytest.raises(NonFiniteSample):
        signal_io.Recording(channels=ch, sample_rate=250.0, id="x")


def test_recording_rejects_duplicate_labels():
    ch = [
        signal_io.ChannelSignal(label="FP1", samples=np.zeros(4)),
        signal_io.ChannelSignal(label="FP1", samples=np.zeros(4)),
    ]
    with pytest.raises(ValueError):
        signal_io.Recording(channels=ch, sample_rate=250.0, id="x")

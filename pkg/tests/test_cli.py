import json

import numpy as np
import pytest

from eegwpd import cli, features, gbdt, signal_io
from eegwpd.cli import PipelineConfig

from conftest import edf_grid_values, write_edf


def run_cli(*argv):
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def synth_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    cli.cmd_synth(3, 32.0, seed=7, out_dir=out)
    return out


def test_synth_layout_and_split(synth_dataset):
    manifest = synth_dataset / "manifest.csv"
    lines = manifest.read_text().splitlines()
    assert lines[0] == "path,label,split"
    assert len(lines) == 7  # 2 classes x 3 recordings
    rows = [line.split(",") for line in lines[1:]]
    train = [r for r in rows if r[2] == "train"]
    ev = [r for r in rows if r[2] == "eval"]
    assert len(train) == 4 and len(ev) == 2  # 80/20 with floor, both non-empty
    for r in rows:
        assert (synth_dataset / r[0]).exists()


def test_synth_minimum_case(tmp_path):
    cli.cmd_synth(2, 16.0, seed=1, out_dir=tmp_path)
    rows = (tmp_path / "manifest.csv").read_text().splitlines()[1:]
    assert len(rows) == 4
    splits = {r.split(",")[2] for r in rows}
    assert splits == {"train", "eval"}


def test_synth_determinism(tmp_path):
    cli.cmd_synth(2, 16.0, seed=9, out_dir=tmp_path / "a")
    cli.cmd_synth(2, 16.0, seed=9, out_dir=tmp_path / "b")
    for rel in sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file()):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_featurize_shapes_and_report(synth_dataset, tmp_path):
    cfg = PipelineConfig(manifest=synth_dataset / "manifest.csv", out=tmp_path)
    report = cli.cmd_featurize(cfg)
    X, labels, ids = features.load_feature_matrix(tmp_path / "train.wpdf")
    assert X.shape == (4, 4032)
    assert set(labels) == {"normal", "abnormal"}
    Xe, _, _ = features.load_feature_matrix(tmp_path / "eval.wpdf")
    assert Xe.shape == (2, 4032)
    assert report["computed"] == 6
    saved = json.loads((tmp_path / "featurize_report.json").read_text())
    assert saved["splits"]["train"]["rows"] == 4


def test_featurize_resumable(synth_dataset, tmp_path):
    cfg = PipelineConfig(manifest=synth_dataset / "manifest.csv", out=tmp_path)
    first = cli.cmd_featurize(cfg)
    assert first["computed"] == 6
    second = cli.cmd_featurize(cfg)
    assert second["computed"] == 0
    assert second["cached"] == 6


def test_featurize_skips_unreadable(synth_dataset, tmp_path):
    manifest = tmp_path / "manifest.csv"
    base = (synth_dataset / "manifest.csv").read_text().splitlines()
    extra = "recordings/missing.csv,normal,train"
    manifest.write_text("\n".join([base[0]] + base[1:] + [extra]) + "\n")
    for rel in ("recordings",):
        (tmp_path / rel).mkdir(exist_ok=True)
    for p in (synth_dataset / "recordings").iterdir():
        (tmp_path / "recordings" / p.name).write_bytes(p.read_bytes())
    cfg = PipelineConfig(manifest=manifest, out=tmp_path / "out")
    report = cli.cmd_featurize(cfg)
    skipped = report["splits"]["train"]["skipped"]
    assert len(skipped) == 1
    assert skipped[0]["id"] == "missing"


def test_featurize_majority_failure_fatal(tmp_path):
    manifest = tmp_path / "manifest.csv"
    manifest.write_text(
        "path,label,split\nnope1.csv,normal,train\nnope2.csv,abnormal,train\n"
        "ok.csv,normal,eval\nalso-missing.csv,abnormal,eval\n"
    )
    signal_io.write_csv(signal_io.synth_recording("normal", 16, 1), tmp_path / "ok.csv")
    cfg = PipelineConfig(manifest=manifest, out=tmp_path / "out")
    with pytest.raises(cli.DataError):
        cli.cmd_featurize(cfg)


def test_manifest_split_overlap_rejected(tmp_path):
    manifest = tmp_path / "manifest.csv"
    manifest.write_text(
        "path,label,split\nr.csv,normal,train\nr.csv,normal,eval\n"
    )
    with pytest.raises(cli.DataError):
        cli.read_manifest(manifest)


def test_train_and_evaluate_flow(synth_dataset, tmp_path):
    cfg = PipelineConfig(manifest=synth_dataset / "manifest.csv", out=tmp_path,
                         preset=None, seed=4)
    cfg.train_overrides = dict(n_estimators=30, max_depth=3, min_samples_leaf=1,
                               learning_rate=0.3)
    cli.cmd_featurize(cfg)
    model_path = cli.cmd_train(tmp_path / "train.wpdf", cfg)
    assert model_path.exists()
    log = (tmp_path / "train_log.csv").read_text().splitlines()
    assert log[0] == "iteration,train_logloss"
    assert len(log) == 32  # header + prior + 30 iterations
    report = cli.cmd_evaluate(model_path, tmp_path / "eval.wpdf", cfg)
    assert (tmp_path / "metrics.txt").exists()
    assert (tmp_path / "metrics.csv").exists()
    assert (tmp_path / "misclassified.txt").exists()
    assert 0.0 <= report.accuracy <= 100.0


def test_evaluate_separable_constructed_data(tmp_path, rng):
    # well-separated class blobs; the matched model must be near-perfect
    def blob(n, shift):
        X = rng.standard_normal((n, 64))
        X[:, :8] += shift
        return X

    Xtr = np.vstack([blob(60, 0.0), blob(60, 6.0)])
    ytr = ["normal"] * 60 + ["abnormal"] * 60
    Xev = np.vstack([blob(25, 0.0), blob(25, 6.0)])
    yev = ["normal"] * 25 + ["abnormal"] * 25
    features.save_feature_matrix(tmp_path / "train.wpdf", Xtr, ytr,
                                 [f"t{i}" for i in range(120)])
    features.save_feature_matrix(tmp_path / "eval.wpdf", Xev, yev,
                                 [f"e{i}" for i in range(50)])
    cfg = PipelineConfig(out=tmp_path)
    cfg.train_overrides = dict(n_estimators=40, max_depth=3, min_samples_leaf=5,
                               learning_rate=0.2)
    model_path = cli.cmd_train(tmp_path / "train.wpdf", cfg)
    report = cli.cmd_evaluate(model_path, tmp_path / "eval.wpdf", cfg)
    assert report.accuracy >= 99.0


def test_train_zero_estimators(synth_dataset, tmp_path):
    cfg = PipelineConfig(manifest=synth_dataset / "manifest.csv", out=tmp_path)
    cfg.train_overrides = dict(n_estimators=0)
    cli.cmd_featurize(cfg)
    model_path = cli.cmd_train(tmp_path / "train.wpdf", cfg)
    model = gbdt.load_model(model_path)
    assert len(model.trees) == 0


def test_preset_iteration_counts(synth_dataset, tmp_path):
    cfg = PipelineConfig(manifest=synth_dataset / "manifest.csv", out=tmp_path,
                         preset="xgboost-like")
    cfg.train_overrides = dict(min_samples_leaf=1)
    cli.cmd_featurize(cfg)
    cli.cmd_train(tmp_path / "train.wpdf", cfg)
    log = (tmp_path / "train_log.csv").read_text().splitlines()
    assert len(log) - 2 == 300  # header + prior row
    model = gbdt.load_model(tmp_path / "model.wpdm")
    assert model.params.max_depth == 8


def test_evaluate_shape_mismatch(synth_dataset, tmp_path, rng):
    cfg = PipelineConfig(manifest=synth_dataset / "manifest.csv", out=tmp_path)
    cfg.train_overrides = dict(n_estimators=2, min_samples_leaf=1)
    cli.cmd_featurize(cfg)
    cli.cmd_train(tmp_path / "train.wpdf", cfg)
    bad = tmp_path / "bad.wpdf"
    features.save_feature_matrix(bad, rng.standard_normal((3, 10)),
                                 ["normal", "abnormal", "normal"], ["a", "b", "c"])
    code = run_cli("evaluate", str(tmp_path / "model.wpdm"), str(bad),
                   "--out", str(tmp_path))
    assert code == cli.EXIT_DATA


def test_venn_wiring(tmp_path):
    (tmp_path / "a.txt").write_text("r1\nr2\nr3\n")
    (tmp_path / "b.txt").write_text("r2\nr3\nr4\n")
    (tmp_path / "c.txt").write_text("r3\n")
    counts = cli.cmd_venn([tmp_path / "a.txt", tmp_path / "b.txt", tmp_path / "c.txt"],
                          out=tmp_path / "venn.csv")
    assert counts["abc"] == 1  # r3
    assert counts["ab"] == 1   # r2
    assert counts["a"] == 1    # r1
    assert counts["b"] == 1    # r4
    lines = (tmp_path / "venn.csv").read_text().splitlines()
    assert lines[0] == "a,b,c,ab,ac,bc,abc"


def test_cli_exit_codes(tmp_path):
    assert run_cli("synth", "--n-per-class", "1", "--duration", "16",
                   "--out", str(tmp_path)) == cli.EXIT_USAGE
    assert run_cli("train", str(tmp_path / "absent.wpdf"),
                   "--out", str(tmp_path)) == cli.EXIT_DATA
    assert run_cli("definitely-not-a-command") == cli.EXIT_USAGE


def test_cli_end_to_end_via_main(tmp_path):
    ds = tmp_path / "ds"
    assert run_cli("synth", "--n-per-class", "3", "--duration", "32",
                   "--seed", "5", "--out", str(ds)) == 0
    out = tmp_path / "run"
    code = run_cli("pipeline", "--manifest", str(ds / "manifest.csv"),
                   "--out", str(out), "--seed", "5",
                   "--n-estimators", "25")
    assert code == 0
    assert (out / "metrics.txt").exists()
    assert (out / "model.wpdm").exists()


def test_config_file_and_flag_override(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text(
        "# training knobs\nextension = periodic\nworkers = 2\n"
        "n_estimators = 7\nthreshold = 0.4\n"
    )
    parser = cli.make_parser()
    args = parser.parse_args(["featurize", "--config", str(cfg_file),
                              "--manifest", "m.csv", "--out", str(tmp_path),
                              "--workers", "3"])
    cfg = cli.build_config(args)
    assert cfg.workers == 3          # flag wins
    assert cfg.threshold == 0.4      # file value
    assert cfg.train_overrides["n_estimators"] == 7


def test_config_file_bad_key(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("bogus = 1\n")
    parser = cli.make_parser()
    args = parser.parse_args(["featurize", "--config", str(cfg_file),
                              "--manifest", "m.csv", "--out", str(tmp_path)])
    with pytest.raises(cli.UsageError):
        cli.build_config(args)


def test_edf_manifest_pipeline(tmp_path, rng):
    # corpus-style flow: EDF recordings with vendor labels through the
    # whole pipeline
    ds = tmp_path / "edf_ds"
    rec_dir = ds / "recordings"
    rec_dir.mkdir(parents=True)
    rows = []
    labels_2120 = [f"EEG {name}-REF" for name in signal_io.TEN_TWENTY_21]
    for i in range(4):
        cls = "normal" if i % 2 == 0 else "abnormal"
        src = signal_io.synth_recording(cls, 16, seed=100 + i)
        chans = [(lab, ch.samples) for lab, ch in zip(labels_2120, src.channels)]
        # one extra channel to exercise channel dropping
        chans.append(("EEG X1-REF", edf_grid_values(rng, src.n_samples)))
        path = rec_dir / f"{cls}-{i}.edf"
        write_edf(path, chans, record_seconds=1.0)
        rows.append(f"recordings/{cls}-{i}.edf,{cls},{'train' if i < 2 else 'eval'}")
    (ds / "manifest.csv").write_text("path,label,split\n" + "\n".join(rows) + "\n")
    out = tmp_path / "out"
    cfg = PipelineConfig(manifest=ds / "manifest.csv", out=out)
    cfg.train_overrides = dict(n_estimators=5, min_samples_leaf=1)
    report = cli.cmd_pipeline(cfg)
    assert (out / "metrics.txt").exists()
    assert report.accuracy >= 0.0  # flow completes with a valid report


def test_featurize_cache_keyed_by_options(synth_dataset, tmp_path):
    cfg = PipelineConfig(manifest=synth_dataset / "manifest.csv", out=tmp_path)
    cli.cmd_featurize(cfg)
    train_default = (tmp_path / "train.wpdf").read_bytes()
    cfg_sym = PipelineConfig(manifest=synth_dataset / "manifest.csv", out=tmp_path,
                             extension="symmetric")
    report = cli.cmd_featurize(cfg_sym)
    assert report["computed"] == 6  # different options recompute, not reuse
    assert (tmp_path / "train.wpdf").read_bytes() != train_default

"""Command-line front end: featurize, train, evaluate, venn, synth, pipeline.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

The dataset manifest is a CSV with header ``path,label,split``; paths are
resolved relative to the manifest's directory. Config files are flat
``key = value`` text; command-line flags override file values.
"""

from __future__ import annotations

import argparse
import csv
import json
import multiprocessing
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import evaluation, features, gbdt, preprocess, signal_io
from .errors import EegwpdError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

LABELS = (signal_io.NORMAL, signal_io.ABNORMAL)
SPLITS = ("train", "eval")


class UsageError(Exception):
    pass


def _pool(workers: int) -> ProcessPoolExecutor:
    # spawn, not fork: polars and numba hold thread-pool state that a
    # forked child would inherit mid-lock
    return ProcessPoolExecutor(max_workers=workers,
                               mp_context=multiprocessing.get_context("spawn"))


class DataError(EegwpdError):
    pass


@dataclass
class ManifestRow:
    path: Path
    label: str
    split: str

    @property
    def recording_id(self) -> str:
        return self.path.stem


@dataclass
class PipelineConfig:
    manifest: Path | None = None
    extension: str = "periodic"
    normalization: str = "per_vector"  # or per_feature
    preset: str | None = None
    train_overrides: dict = field(default_factory=dict)
    out: Path = Path(".")
    workers: int = 1
    seed: int = 0
    threshold: float = 0.5


_CONFIG_KEYS = {
    "extension", "normalization", "preset", "workers", "seed", "threshold",
    "learning_rate", "max_depth", "n_estimators", "lambda_l2", "max_bins",
    "min_samples_leaf", "growth", "max_leaves", "goss_a", "goss_b",
}

_INT_KEYS = {"workers", "seed", "max_depth", "n_estimators", "max_bins",
             "min_samples_leaf", "max_leaves"}
_FLOAT_KEYS = {"threshold", "learning_rate", "lambda_l2", "goss_a", "goss_b"}


def read_config_file(path) -> dict:
    """Flat key=value text; '#' starts a comment, blank lines ignored."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}: line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}: unknown config key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            else:
                values[key] = val
        except ValueError:
            raise UsageError(f"{path}: bad value for {key}: {val!r}") from None
    return values


def build_config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}

    def pick(key, flag_value):
        return flag_value if flag_value is not None else file_values.get(key)

    ext = pick("extension", getattr(args, "extension", None))
    if ext is not None:
        cfg.extension = ext
    norm = pick("normalization", getattr(args, "normalization", None))
    if norm is not None:
        if norm not in ("per_vector", "per_feature"):
            raise UsageError(f"normalization must be per_vector or per_feature, got {norm!r}")
        cfg.normalization = norm
    preset = pick("preset", getattr(args, "preset", None))
    if preset is not None:
        if preset not in gbdt.PRESETS:
            raise UsageError(f"unknown preset {preset!r}; choose from {sorted(gbdt.PRESETS)}")
        cfg.preset = preset
    workers = pick("workers", getattr(args, "workers", None))
    if workers is not None:
        if workers < 1:
            raise UsageError("workers must be >= 1")
        cfg.workers = workers
    seed = pick("seed", getattr(args, "seed", None))
    if seed is not None:
        cfg.seed = seed
    threshold = pick("threshold", getattr(args, "threshold", None))
    if threshold is not None:
        if not (0 < threshold < 1):
            raise UsageError("threshold must lie in (0, 1)")
        cfg.threshold = threshold
    if getattr(args, "manifest", None):
        cfg.manifest = Path(args.manifest)
    if getattr(args, "out", None):
        cfg.out = Path(args.out)
    for key in ("learning_rate", "max_depth", "n_estimators", "lambda_l2",
                "max_bins", "min_samples_leaf", "growth", "max_leaves"):
        if key in file_values:
            cfg.train_overrides[key] = file_values[key]
    if "goss_a" in file_values or "goss_b" in file_values:
        cfg.train_overrides["goss"] = gbdt.GossParams(
            a=file_values.get("goss_a", 0.2), b=file_values.get("goss_b", 0.1)
        )
    flag_n = getattr(args, "n_estimators", None)
    if flag_n is not None:
        cfg.train_overrides["n_estimators"] = flag_n
    return cfg


def train_params_from_config(cfg: PipelineConfig) -> gbdt.TrainParams:
    overrides = dict(cfg.train_overrides)
    overrides["seed"] = cfg.seed
    if cfg.preset:
        return gbdt.preset_params(cfg.preset, **overrides)
    return gbdt.TrainParams(**overrides)


# ---------------------------------------------------------------------------
# Manifest

def read_manifest(path: Path) -> list[ManifestRow]:
    rows = []
    base = path.parent
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["path", "label", "split"]:
            raise DataError(f"{path}: manifest header must be path,label,split")
        for lineno, rec in enumerate(reader, start=2):
            label = rec["label"].strip()
            split = rec["split"].strip()
            if label not in LABELS:
                raise DataError(f"{path}: line {lineno}: label must be normal|abnormal")
            if split not in SPLITS:
                raise DataError(f"{path}: line {lineno}: split must be train|eval")
            p = Path(rec["path"].strip())
            if not p.is_absolute():
                p = base / p
            rows.append(ManifestRow(path=p, label=label, split=split))
    if not rows:
        raise DataError(f"{path}: manifest has no rows")
    by_split = {s: {r.recording_id for r in rows if r.split == s} for s in SPLITS}
    shared = by_split["train"] & by_split["eval"]
    if shared:
        raise DataError(f"{path}: ids in both splits: {sorted(shared)[:5]}")
    return rows


# ---------------------------------------------------------------------------
# featurize

def _featurize_one(task):
    """Worker: one recording path -> 4032-feature vector (or error text).

    EDF files carry their own sampling rates; CSV recordings are read at
    the hint rate (250 Hz, the pipeline target).
    """
    path_str, sample_rate_hint, extension, normalize = task
    try:
        path = Path(path_str)
        if path.suffix.lower() == ".edf":
            rec = signal_io.read_edf(path)
        else:
            rec = signal_io.read_csv(path, sample_rate=sample_rate_hint)
        rec = preprocess.select_standard_channels(rec)
        rec = preprocess.resample(rec)
        seg = preprocess.segment(rec)
        tensor = features.extract_features(seg, ext=extension, normalize=normalize)
        return features.aggregate(tensor), None
    except (EegwpdError, OSError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def cmd_featurize(cfg: PipelineConfig) -> dict:
    """Featurize every manifest recording into per-split WPDF files."""
    if cfg.manifest is None:
        raise UsageError("featurize needs --manifest")
    rows = read_manifest(cfg.manifest)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    # cache entries are only valid for the options they were computed with
    cache_dir = out / "feature_cache" / f"{cfg.extension}_{cfg.normalization}"
    cache_dir.mkdir(parents=True, exist_ok=True)
    normalize = cfg.normalization == "per_vector"

    pending = []
    for i, row in enumerate(rows):
        if not (cache_dir / f"{row.recording_id}.npy").exists():
            pending.append(i)
    tasks = [
        (str(rows[i].path), signal_io.SYNTH_RATE, cfg.extension, normalize)
        for i in pending
    ]
    if cfg.workers > 1 and len(tasks) > 1:
        with _pool(cfg.workers) as pool:
            results = list(pool.map(_featurize_one, tasks, chunksize=1))
    else:
        results = [_featurize_one(t) for t in tasks]
    failures = {}
    for i, (vec, err) in zip(pending, results):
        rid = rows[i].recording_id
        if err is not None:
            failures[i] = err
        else:
            np.save(cache_dir / f"{rid}.npy", vec)

    report = {"computed": len(tasks) - len(failures), "cached": len(rows) - len(tasks), "splits": {}}
    for split in SPLITS:
        split_rows = [(i, r) for i, r in enumerate(rows) if r.split == split]
        if not split_rows:
            report["splits"][split] = {"rows": 0, "skipped": []}
            continue
        vectors, labels, ids, skipped = [], [], [], []
        for i, r in split_rows:
            cache = cache_dir / f"{r.recording_id}.npy"
            if i in failures:
                skipped.append({"id": r.recording_id, "reason": failures[i]})
                continue
            if not cache.exists():
                skipped.append({"id": r.recording_id, "reason": "missing cache entry"})
                continue
            vectors.append(np.load(cache))
            labels.append(r.label)
            ids.append(r.recording_id)
        if len(skipped) * 2 > len(split_rows):
            raise DataError(
                f"{split} split: {len(skipped)} of {len(split_rows)} recordings failed"
            )
        matrix = np.vstack(vectors) if vectors else np.zeros((0, 2 * 21 * features.VECTOR_LEN))
        features.save_feature_matrix(out / f"{split}.wpdf", matrix, labels, ids)
        features.export_feature_csv(out / f"{split}_features.csv", matrix, labels, ids)
        report["splits"][split] = {"rows": len(ids), "skipped": skipped}

    (out / "featurize_report.json").write_text(json.dumps(report, sort_keys=True, indent=1) + "\n")
    return report


# ---------------------------------------------------------------------------
# train / evaluate / venn / synth

def _labels_to_binary(labels, what: str) -> np.ndarray:
    if any(lab is None for lab in labels):
        raise DataError(f"{what}: unlabeled rows cannot be used here")
    return np.asarray([1 if lab == signal_io.ABNORMAL else 0 for lab in labels])


def cmd_train(features_path: Path, cfg: PipelineConfig) -> Path:
    X, labels, _ = features.load_feature_matrix(features_path)
    y = _labels_to_binary(labels, str(features_path))
    params = train_params_from_config(cfg)
    scaler = None
    if cfg.normalization == "per_feature":
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        sd = np.where(sd < 1e-12, 1.0, sd)
        scaler = (mean, sd)
        X = (X - mean) / sd
    model = gbdt.train(X, y, params)
    if scaler is not None:
        model.feature_scaler = scaler
    cfg.out.mkdir(parents=True, exist_ok=True)
    model_path = cfg.out / "model.wpdm"
    gbdt.save_model(model, model_path)
    log_lines = ["iteration,train_logloss"]
    log_lines += [f"{i},{loss!r}" for i, loss in enumerate(model.training_loss)]
    (cfg.out / "train_log.csv").write_text("\n".join(log_lines) + "\n")
    return model_path


def cmd_evaluate(model_path: Path, features_path: Path, cfg: PipelineConfig) -> evaluation.MetricsReport:
    model = gbdt.load_model(model_path)
    X, labels, ids = features.load_feature_matrix(features_path)
    y = _labels_to_binary(labels, str(features_path))
    proba = gbdt.predict_proba(model, X)
    cm = evaluation.confusion(y, proba, threshold=cfg.threshold)
    report = evaluation.metrics(cm)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "metrics.txt").write_text(evaluation.format_metrics_text(cm, report))
    (cfg.out / "metrics.csv").write_text(evaluation.format_metrics_csv(cm, report))
    wrong = [rid for rid, truth, p in zip(ids, y, proba) if (p >= cfg.threshold) != bool(truth)]
    (cfg.out / "misclassified.txt").write_text("".join(f"{rid}\n" for rid in wrong))
    return report


def cmd_venn(paths, out: Path | None = None) -> dict:
    sets = []
    for p in paths:
        text = Path(p).read_text()
        sets.append({line.strip() for line in text.splitlines() if line.strip()})
    counts = evaluation.overlap(*sets)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        head = ",".join(counts)
        row = ",".join(str(counts[k]) for k in counts)
        out.write_text(f"{head}\n{row}\n")
    return counts


def _synth_one(task):
    class_label, duration_s, rec_seed, path_str = task
    rec = signal_io.synth_recording(class_label, duration_s, rec_seed)
    signal_io.write_csv(rec, Path(path_str))


def cmd_synth(n_per_class: int, duration_s: float, seed: int, out_dir: Path,
              workers: int = 1) -> Path:
    """Write a balanced synthetic dataset plus its manifest; returns the
    manifest path. Deterministic in (n_per_class, duration_s, seed)."""
    if n_per_class < 2:
        raise UsageError("n_per_class must be >= 2")
    out_dir = Path(out_dir)
    rec_dir = out_dir / "recordings"
    rec_dir.mkdir(parents=True, exist_ok=True)
    tasks = []
    manifest_rows = []
    for class_idx, class_label in enumerate(LABELS):
        n_train = int(n_per_class * 0.8)
        n_train = max(1, min(n_per_class - 1, n_train))
        for i in range(n_per_class):
            rid = f"{class_label}-{i:03d}"
            rec_seed = int(
                np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF,
                                       spawn_key=(class_idx, i)).generate_state(1, np.uint64)[0]
            )
            rel = f"recordings/{rid}.csv"
            tasks.append((class_label, duration_s, rec_seed, str(out_dir / rel)))
            split = "train" if i < n_train else "eval"
            manifest_rows.append((rel, class_label, split))
    if workers > 1:
        with _pool(workers) as pool:
            list(pool.map(_synth_one, tasks, chunksize=1))
    else:
        for t in tasks:
            _synth_one(t)
    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        fh.write("path,label,split\n")
        for rel, label, split in manifest_rows:
            fh.write(f"{rel},{label},{split}\n")
    return manifest


def cmd_pipeline(cfg: PipelineConfig) -> evaluation.MetricsReport:
    cmd_featurize(cfg)
    cmd_train(cfg.out / "train.wpdf", cfg)
    return cmd_evaluate(cfg.out / "model.wpdm", cfg.out / "eval.wpdf", cfg)


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p, *names):
    if "manifest" in names:
        p.add_argument("--manifest", help="dataset manifest CSV (path,label,split)")
    if "config" in names:
        p.add_argument("--config", help="flat key=value config file")
    if "preset" in names:
        p.add_argument("--preset", choices=sorted(gbdt.PRESETS), help="training preset")
    if "out" in names:
        p.add_argument("--out", help="output directory", required=True)
    if "workers" in names:
        p.add_argument("--workers", type=int, help="worker processes (default 1)")
    if "seed" in names:
        p.add_argument("--seed", type=int, help="random seed")
    if "threshold" in names:
        p.add_argument("--threshold", type=float, help="decision threshold (default 0.5)")
    if "extension" in names:
        p.add_argument("--extension", choices=["periodic", "symmetric"],
                       help="wavelet boundary extension")


def make_parser() -> _Parser:
    parser = _Parser(prog="eegwpd", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("featurize", help="manifest -> per-split feature files")
    _add_common(p, "manifest", "config", "out", "workers", "extension")
    p.add_argument("--normalization", choices=["per_vector", "per_feature"])

    p = sub.add_parser("train", help="train a model on a feature file")
    p.add_argument("features", help="training .wpdf file")
    _add_common(p, "config", "preset", "out", "seed")
    p.add_argument("--normalization", choices=["per_vector", "per_feature"])
    p.add_argument("--n-estimators", dest="n_estimators", type=int,
                   help="override the boosting round count")

    p = sub.add_parser("evaluate", help="score a model against a feature file")
    p.add_argument("model", help="model .wpdm file")
    p.add_argument("features", help="evaluation .wpdf file")
    _add_common(p, "config", "out", "threshold")

    p = sub.add_parser("venn", help="overlap of three misclassified-id files")
    p.add_argument("lists", nargs=3, help="three id-list files (one id per line)")
    p.add_argument("--out", help="optional CSV output path")

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--n-per-class", type=int, required=True)
    p.add_argument("--duration", type=float, required=True, help="seconds per recording")
    _add_common(p, "out", "workers", "seed")

    p = sub.add_parser("pipeline", help="featurize + train + evaluate")
    _add_common(p, "manifest", "config", "preset", "out", "workers", "seed",
                "threshold", "extension")
    p.add_argument("--normalization", choices=["per_vector", "per_feature"])
    p.add_argument("--n-estimators", dest="n_estimators", type=int)
    return parser


def run(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.command == "featurize":
        cfg = build_config(args)
        report = cmd_featurize(cfg)
        for split in SPLITS:
            info = report["splits"][split]
            print(f"{split}: {info['rows']} rows, {len(info['skipped'])} skipped")
    elif args.command == "train":
        cfg = build_config(args)
        model_path = cmd_train(Path(args.features), cfg)
        print(f"model written to {model_path}")
    elif args.command == "evaluate":
        cfg = build_config(args)
        report = cmd_evaluate(Path(args.model), Path(args.features), cfg)
        print(f"accuracy {report.accuracy:.2f}  sensitivity {report.sensitivity:.2f}  "
              f"specificity {report.specificity:.2f}")
    elif args.command == "venn":
        counts = cmd_venn(args.lists, Path(args.out) if args.out else None)
        for key, value in counts.items():
            print(f"{key}: {value}")
    elif args.command == "synth":
        cfg = build_config(args)
        manifest = cmd_synth(args.n_per_class, args.duration, cfg.seed, cfg.out,
                             workers=cfg.workers)
        print(f"manifest written to {manifest}")
    elif args.command == "pipeline":
        cfg = build_config(args)
        report = cmd_pipeline(cfg)
        print(f"accuracy {report.accuracy:.2f}  sensitivity {report.sensitivity:.2f}  "
              f"specificity {report.specificity:.2f}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        return run(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EegwpdError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

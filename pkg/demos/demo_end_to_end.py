"""Small end-to-end run: synthesize a dataset, featurize, train, evaluate.

Uses the same code paths as the `eegwpd` command line, scaled down so it
finishes in well under a minute.
"""

import tempfile
from pathlib import Path

from eegwpd import cli, evaluation

with tempfile.TemporaryDirectory() as d:
    work = Path(d)
    manifest = cli.cmd_synth(n_per_class=10, duration_s=64, seed=123,
                             out_dir=work / "dataset")
    print(f"dataset written under {manifest.parent}")

    cfg = cli.PipelineConfig(manifest=manifest, out=work / "run", seed=123)
    cfg.train_overrides = dict(n_estimators=150, max_depth=4,
                               min_samples_leaf=2, learning_rate=0.1)
    cli.cmd_featurize(cfg)
    cli.cmd_train(cfg.out / "train.wpdf", cfg)
    report = cli.cmd_evaluate(cfg.out / "model.wpdm", cfg.out / "eval.wpdf", cfg)
    print(f"eval accuracy {report.accuracy:.2f}  "
          f"sensitivity {report.sensitivity:.2f}  "
          f"specificity {report.specificity:.2f}")

    misses = (cfg.out / "misclassified.txt").read_text().splitlines()
    print(f"misclassified recordings: {misses if misses else 'none'}")

    # the overlap report compares misclassification lists across models
    counts = evaluation.overlap({"rec-03", "rec-11"}, {"rec-11", "rec-17"}, {"rec-11"})
    print(f"venn regions for three example models: {counts}")
    print("\nartifacts:", sorted(p.name for p in cfg.out.iterdir()))

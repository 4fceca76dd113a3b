"""Train the boosted-tree engine on a toy problem and inspect it.

Covers the three presets, the training-loss trace, GOSS sampling, and
model persistence.
"""

import tempfile
from pathlib import Path

import numpy as np

from eegwpd import gbdt

rng = np.random.default_rng(3)
X = rng.standard_normal((600, 12))
y = ((X[:, 0] + 0.8 * X[:, 3] + 0.3 * rng.standard_normal(600)) > 0).astype(int)

params = gbdt.TrainParams(learning_rate=0.1, max_depth=4, n_estimators=60,
                          min_samples_leaf=10, seed=7)
model = gbdt.train(X, y, params)
proba = gbdt.predict_proba(model, X)
acc = np.mean((proba >= 0.5) == y)
print(f"depth-wise model: {len(model.trees)} trees, train accuracy {acc:.3f}")
print("loss trace (every 10 rounds):",
      [f"{v:.4f}" for v in model.training_loss[::10]])

idx, w = gbdt.goss_sample(gbdt.logistic_grad_hess(y, np.zeros(600))[0],
                          a=0.2, b=0.1, seed=1)
print(f"\nGOSS keeps {idx.size} of 600 rows "
      f"({np.sum(w == 1.0)} top-gradient at weight 1, "
      f"{np.sum(w != 1.0)} sampled at weight {w.max():.0f})")

for name in ("catboost-like", "xgboost-like", "lightgbm-like"):
    p = gbdt.preset_params(name, n_estimators=30)  # shortened for the demo
    m = gbdt.train(X, y, p)
    a = np.mean((gbdt.predict_proba(m, X) >= 0.5) == y)
    print(f"{name:14s} growth={p.growth:10s} depth<={p.max_depth:2d} "
          f"train accuracy {a:.3f}")

with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "model.wpdm"
    gbdt.save_model(model, path)
    loaded = gbdt.load_model(path)
    same = np.array_equal(gbdt.predict_proba(loaded, X), proba)
    print(f"\nsaved {path.stat().st_size} bytes; reload reproduces predictions: {same}")

"""Histogram-based gradient-boosted decision trees for binary classification.

Second-order (Newton) boosting on the logistic loss: each round fits a
regression tree to per-row gradients g = p - y and hessians h = p(1-p),
with leaf weights -G/(H+lambda). Split finding is histogram-based over
per-feature quantile bins, with the exact gain

    gain = 1/2 [ G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l) ]

maximized over every feature and bin boundary. Trees grow either level by
level to a depth cap (depth_wise) or by repeatedly splitting the
highest-gain open leaf (leaf_wise). Optional GOSS keeps the
largest-gradient rows and reweights a uniform sample of the rest.

Three presets mirror the externally meaningful knobs of the well-known
GBDT libraries; their internals (ordered boosting, feature bundling) are
out of scope and one engine serves all three.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import (
    CorruptModelFile,
    EmptyMatrix,
    InvalidFractions,
    ShapeMismatch,
    SingleClassData,
    UnsupportedVersion,
)

_SEED_MASK = 0xFFFFFFFFFFFFFFFF
_MODEL_MAGIC = b"WPDM"
_MODEL_VERSION = 1

GROWTH_MODES = ("depth_wise", "leaf_wise")


@dataclass(frozen=True)
class GossParams:
    """Gradient-based one-side sampling fractions: keep the top `a` share of
    rows by |gradient|, sample a `b` share of the rest at weight (1-a)/b."""

    a: float
    b: float

    def __post_init__(self):
        if not (0 < self.a <= 1) or self.b < 0 or self.a + self.b > 1 + 1e-12:
            raise InvalidFractions(f"need 0 < a <= 1, b >= 0, a+b <= 1; got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class TrainParams:
    learning_rate: float = 0.1
    max_depth: int = 6
    n_estimators: int = 100
    lambda_l2: float = 1.0
    max_bins: int = 255
    min_samples_leaf: int = 20
    goss: GossParams | None = None
    seed: int = 0
    growth: str = "depth_wise"
    max_leaves: int = 31

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_depth < 1 or self.n_estimators < 0:
            raise ValueError("max_depth must be >= 1 and n_estimators >= 0")
        if self.lambda_l2 < 0:
            raise ValueError("lambda_l2 must be non-negative")
        if not (2 <= self.max_bins <= 255):
            raise ValueError("max_bins must lie in [2, 255]")
        if self.min_samples_leaf < 1 or self.max_leaves < 1:
            raise ValueError("min_samples_leaf and max_leaves must be >= 1")
        if self.growth not in GROWTH_MODES:
            raise ValueError(f"growth must be one of {GROWTH_MODES}")


# Table-driven presets: only the externally documented knobs of the three
# reference libraries differ; everything else uses this engine's defaults.
PRESETS = {
    "catboost-like": dict(learning_rate=0.02, max_depth=5, n_estimators=1500,
                          growth="depth_wise"),
    "xgboost-like": dict(learning_rate=0.0156, max_depth=8, n_estimators=300,
                         growth="depth_wise"),
    "lightgbm-like": dict(learning_rate=0.0182, max_depth=10, n_estimators=250,
                          growth="leaf_wise", max_leaves=1024,
                          goss=GossParams(a=0.2, b=0.1)),
}


def preset_params(name: str, **overrides) -> TrainParams:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    kwargs = dict(PRESETS[name])
    kwargs.update(overrides)
    return TrainParams(**kwargs)


def logistic_grad_hess(label, margin):
    """Gradient and hessian of the logistic loss at a raw margin."""
    m = np.asarray(margin, dtype=np.float64)
    p = 1.0 / (1.0 + np.exp(-m))
    g = p - np.asarray(label, dtype=np.float64)
    h = p * (1.0 - p)
    if np.isscalar(margin) or m.ndim == 0:
        return float(g), float(h)
    return g, h


# ---------------------------------------------------------------------------
# Binning

def build_bin_map(X, max_bins: int):
    """Per-feature ascending split thresholds from training-data quantiles.

    Features with at most max_bins distinct values get exact midpoints
    between consecutive distinct values; denser features get up to
    max_bins - 1 quantile cut points (deduplicated).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.size == 0:
        raise EmptyMatrix("need a non-empty 2-d matrix")
    thresholds = []
    qs = np.arange(1, max_bins) / max_bins
    for j in range(X.shape[1]):
        col = X[:, j]
        distinct = np.unique(col)
        if distinct.size <= max_bins:
            cuts = (distinct[:-1] + distinct[1:]) / 2.0
        else:
            cuts = np.unique(np.quantile(col, qs))
        thresholds.append(np.ascontiguousarray(cuts, dtype=np.float64))
    return thresholds


def apply_bin_map(X, bin_map) -> np.ndarray:
    """Digitize a matrix with a bin map; bin k holds values in
    (thr[k-1], thr[k]] with open ends."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != len(bin_map):
        raise ShapeMismatch(f"matrix has {X.shape[1]} features, bin map has {len(bin_map)}")
    out = np.empty(X.shape, dtype=np.uint8)
    for j, thr in enumerate(bin_map):
        out[:, j] = np.searchsorted(thr, X[:, j], side="left").astype(np.uint8)
    return out


# ---------------------------------------------------------------------------
# Split search

@dataclass(frozen=True)
class SplitDecision:
    feature: int
    bin: int
    gain: float


def _histograms(binned_rows, gvals, hvals):
    """Sum g, h and row counts into (features, bins) histograms."""
    r, F = binned_rows.shape
    B = 256
    key = (np.arange(F, dtype=np.int64)[None, :] * B + binned_rows).ravel()
    size = F * B
    cnt = np.bincount(key, minlength=size).reshape(F, B)
    gh = np.bincount(key, weights=np.repeat(gvals, F), minlength=size).reshape(F, B)
    hh = np.bincount(key, weights=np.repeat(hvals, F), minlength=size).reshape(F, B)
    return gh, hh, cnt


def _gain_term(G, H, lam):
    denom = H + lam
    return np.divide(G * G, denom, out=np.zeros_like(G), where=denom > 0)


def _best_split_from_hist(gh, hh, cnt, n_bins, params):
    """Pick (feature, bin, gain) from per-feature histograms, or None.

    Ties resolve to the lowest feature index, then the lowest bin index.
    """
    lam = params.lambda_l2
    GT = gh[0].sum()
    HT = hh[0].sum()
    CT = cnt[0].sum()
    cumG = np.cumsum(gh, axis=1)[:, :-1]
    cumH = np.cumsum(hh, axis=1)[:, :-1]
    cumC = np.cumsum(cnt, axis=1)[:, :-1]
    GR = GT - cumG
    HR = HT - cumH
    CR = CT - cumC
    gain = 0.5 * (_gain_term(cumG, cumH, lam) + _gain_term(GR, HR, lam)
                  - _gain_term(np.float64(GT), np.float64(HT), lam))
    k = np.arange(gain.shape[1])[None, :]
    valid = (cumC >= params.min_samples_leaf) & (CR >= params.min_samples_leaf) \
        & (k < (np.asarray(n_bins)[:, None] - 1))
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain))
    f, b = divmod(flat, gain.shape[1])
    best = gain[f, b]
    if not best > 0.0:
        return None
    return SplitDecision(feature=int(f), bin=int(b), gain=float(best))


def find_best_split(node_rows, g, h, binned, params, n_bins=None, weights=None):
    """Best histogram split of one node, or None when no gain is positive.

    node_rows indexes rows of the binned matrix; g and h are full-length
    gradient/hessian arrays. n_bins defaults to the per-feature maximum
    bin observed in the matrix plus one.
    """
    rows = np.asarray(node_rows, dtype=np.int64)
    if rows.size == 0:
        raise EmptyMatrix("node has no rows")
    if n_bins is None:
        n_bins = binned.max(axis=0).astype(np.int64) + 1
    gv = np.asarray(g, dtype=np.float64)[rows]
    hv = np.asarray(h, dtype=np.float64)[rows]
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        gv = gv * w
        hv = hv * w
    gh, hh, cnt = _histograms(binned[rows], gv, hv)
    return _best_split_from_hist(gh, hh, cnt, n_bins, params)


# The tree grower runs one histogram-plus-scan kernel per node, working on
# the transposed bin matrix so each feature's bins are scanned from one
# small in-cache buffer. With numba available that kernel is compiled (the
# boosting loop spends essentially all its time there); otherwise a numpy
# version with the same candidate semantics takes over.

try:  # pragma: no cover - exercised indirectly
    import numba as _numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _numba = None
    _HAVE_NUMBA = False


def _node_scan_py(binned_t, gv, hv, rows, n_bins, lam, msl):
    """Histogram one node and scan every (feature, bin) candidate.

    binned_t is the (features, rows) transposed bin matrix; rows indexes
    its columns. Returns (feature, bin, gain, G_total, H_total); feature
    is -1 when no candidate has positive gain under the row constraints.
    """
    F = binned_t.shape[0]
    offsets = np.concatenate([[0], np.cumsum(n_bins)]).astype(np.int64)
    sub = binned_t[:, rows]
    key = (offsets[:-1, None] + sub).ravel()
    size = int(offsets[-1])
    gvr = gv[rows]
    hvr = hv[rows]
    cnt = np.bincount(key, minlength=size)
    gh = np.bincount(key, weights=np.tile(gvr, F), minlength=size)
    hh = np.bincount(key, weights=np.tile(hvr, F), minlength=size)
    GT = float(np.sum(gvr))
    HT = float(np.sum(hvr))
    CT = int(rows.size)
    denom = HT + lam
    parent = GT * GT / denom if denom > 0 else 0.0
    best_gain = -np.inf
    best_f = -1
    best_b = -1
    for f in range(F):
        lo, hi = int(offsets[f]), int(offsets[f + 1])
        if hi - lo < 2:
            continue
        GL = np.cumsum(gh[lo : hi - 1])
        HL = np.cumsum(hh[lo : hi - 1])
        CL = np.cumsum(cnt[lo : hi - 1])
        dl = HL + lam
        dr = HT - HL + lam
        gl = np.divide(GL * GL, dl, out=np.zeros_like(GL), where=dl > 0)
        gr = np.divide((GT - GL) ** 2, dr, out=np.zeros_like(GL), where=dr > 0)
        gain = 0.5 * (gl + gr - parent)
        gain[(CL < msl) | (CT - CL < msl)] = -np.inf
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            best_gain = float(gain[k])
            best_f = f
            best_b = k
    if not best_gain > 0.0:
        return -1, -1, 0.0, GT, HT
    return best_f, best_b, best_gain, GT, HT


if _HAVE_NUMBA:

    @_numba.njit(cache=True)
    def _node_scan_jit(binned_t, gv, hv, rows, n_bins, lam, msl):  # pragma: no cover
        F = binned_t.shape[0]
        r = rows.size
        GT = 0.0
        HT = 0.0
        for ii in range(r):
            GT += gv[rows[ii]]
            HT += hv[rows[ii]]
        CT = r
        denom = HT + lam
        parent = GT * GT / denom if denom > 0 else 0.0
        gh = np.zeros(256)
        hh = np.zeros(256)
        ch = np.zeros(256, dtype=np.int64)
        best_gain = -np.inf
        best_f = -1
        best_b = -1
        for f in range(F):
            nb = n_bins[f]
            if nb < 2:
                continue
            for b in range(nb):
                gh[b] = 0.0
                hh[b] = 0.0
                ch[b] = 0
            brow = binned_t[f]
            for ii in range(r):
                i = rows[ii]
                b = brow[i]
                gh[b] += gv[i]
                hh[b] += hv[i]
                ch[b] += 1
            GL = 0.0
            HL = 0.0
            CL = 0
            for b in range(nb - 1):
                GL += gh[b]
                HL += hh[b]
                CL += ch[b]
                if CL < msl or CT - CL < msl:
                    continue
                dl = HL + lam
                dr = HT - HL + lam
                gl = GL * GL / dl if dl > 0 else 0.0
                gr = (GT - GL) * (GT - GL) / dr if dr > 0 else 0.0
                gain = 0.5 * (gl + gr - parent)
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_b = b
        if not best_gain > 0.0:
            return -1, -1, 0.0, GT, HT
        return best_f, best_b, best_gain, GT, HT


def _node_scan(binned_t, gv, hv, rows, n_bins, lam, msl):
    if _HAVE_NUMBA:
        return _node_scan_jit(binned_t, gv, hv, rows, n_bins, lam, msl)
    return _node_scan_py(binned_t, gv, hv, rows, n_bins, lam, msl)


# ---------------------------------------------------------------------------
# Trees

@dataclass
class Tree:
    """Flat arrays of nodes; feature == -1 marks a leaf."""

    feature: np.ndarray
    bin: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def max_path_length(self) -> int:
        depth = {0: 0}
        longest = 0
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
            else:
                longest = max(longest, depth[i])
        return longest

    def predict_binned(self, binned) -> np.ndarray:
        node = np.zeros(binned.shape[0], dtype=np.int64)
        while True:
            internal = self.feature[node] >= 0
            if not internal.any():
                break
            idx = np.flatnonzero(internal)
            cur = node[idx]
            vals = binned[idx, self.feature[cur]]
            go_left = vals <= self.bin[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
        return self.value[node]

    def predict_raw(self, X) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            internal = self.feature[node] >= 0
            if not internal.any():
                break
            idx = np.flatnonzero(internal)
            cur = node[idx]
            vals = X[idx, self.feature[cur]]
            go_left = ~(vals > self.threshold[cur])  # NaN routes left
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
        return self.value[node]


class _TreeBuilder:
    def __init__(self):
        self.feature = []
        self.bin = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []

    def add(self) -> int:
        for arr, fill in ((self.feature, -1), (self.bin, -1), (self.threshold, 0.0),
                          (self.left, -1), (self.right, -1), (self.value, 0.0)):
            arr.append(fill)
        return len(self.feature) - 1

    def close_leaf(self, node: int, G: float, H: float, lam: float) -> None:
        denom = max(H + lam, 1e-12)
        self.value[node] = -G / denom

    def split(self, node: int, feature: int, bin_idx: int, threshold: float) -> tuple[int, int]:
        lc = self.add()
        rc = self.add()
        self.feature[node] = feature
        self.bin[node] = bin_idx
        self.threshold[node] = threshold
        self.left[node] = lc
        self.right[node] = rc
        return lc, rc

    def build(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int64),
            bin=np.asarray(self.bin, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.asarray(self.value, dtype=np.float64),
        )


def grow_tree(g, h, binned, params: TrainParams, bin_map, rows=None, weights=None) -> Tree:
    """Fit one regression tree to gradients/hessians.

    rows restricts training to a subset (GOSS); weights scale g and h for
    those rows. Leaf weights are -G/(H+lambda).
    """
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if g.shape != h.shape or g.ndim != 1 or binned.shape[0] != g.size:
        raise ShapeMismatch("g, h and binned row counts must agree")
    if rows is None:
        rows = np.arange(g.size, dtype=np.int64)
        gv = g.copy()
        hv = h.copy()
    else:
        rows = np.asarray(rows, dtype=np.int64)
        gv = np.zeros_like(g)
        hv = np.zeros_like(h)
        gv[rows] = g[rows]
        hv[rows] = h[rows]
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        gv[rows] *= w
        hv[rows] *= w
    binned_t = np.ascontiguousarray(binned.T)
    n_bins = np.asarray([t.size + 1 for t in bin_map], dtype=np.int64)
    if params.growth == "depth_wise":
        return _grow_depth_wise(binned_t, gv, hv, rows, n_bins, params, bin_map)
    return _grow_leaf_wise(binned_t, gv, hv, rows, n_bins, params, bin_map)


def _grow_depth_wise(binned_t, gv, hv, root_rows, n_bins, params, bin_map) -> Tree:
    from collections import deque

    tb = _TreeBuilder()
    root = tb.add()
    lam = params.lambda_l2
    queue = deque([(root, root_rows, 0)])
    while queue:
        node, rows, depth = queue.popleft()
        if depth >= params.max_depth:
            tb.close_leaf(node, float(np.sum(gv[rows])), float(np.sum(hv[rows])), lam)
            continue
        f, b, _, GT, HT = _node_scan(binned_t, gv, hv, rows, n_bins,
                                     lam, params.min_samples_leaf)
        if f < 0:
            tb.close_leaf(node, GT, HT, lam)
            continue
        lc, rc = tb.split(node, f, b, float(bin_map[f][b]))
        go_left = binned_t[f, rows] <= b
        queue.append((lc, rows[go_left], depth + 1))
        queue.append((rc, rows[~go_left], depth + 1))
    return tb.build()


def _grow_leaf_wise(binned_t, gv, hv, root_rows, n_bins, params, bin_map) -> Tree:
    import heapq

    tb = _TreeBuilder()
    root = tb.add()
    lam = params.lambda_l2
    msl = params.min_samples_leaf

    def scan(rows, depth):
        """(split or None, totals); max-depth nodes are never candidates."""
        if depth >= params.max_depth:
            return None, (float(np.sum(gv[rows])), float(np.sum(hv[rows])))
        f, b, gain, GT, HT = _node_scan(binned_t, gv, hv, rows, n_bins, lam, msl)
        return (None if f < 0 else (f, b, gain)), (GT, HT)

    heap = []
    counter = 0
    node_rows = {root: root_rows}
    node_depth = {root: 0}
    dec, totals0 = scan(root_rows, 0)
    totals = {root: totals0}
    if dec is not None:
        heapq.heappush(heap, (-dec[2], counter, root, dec))
        counter += 1
    n_leaves = 1
    while heap and n_leaves < params.max_leaves:
        _, _, node, (f, b, _) = heapq.heappop(heap)
        rows = node_rows.pop(node)
        lc, rc = tb.split(node, f, b, float(bin_map[f][b]))
        go_left = binned_t[f, rows] <= b
        n_leaves += 1
        for child, child_rows in ((lc, rows[go_left]), (rc, rows[~go_left])):
            node_rows[child] = child_rows
            node_depth[child] = node_depth[node] + 1
            cdec, ctot = scan(child_rows, node_depth[child])
            totals[child] = ctot
            if cdec is not None:
                heapq.heappush(heap, (-cdec[2], counter, child, cdec))
                counter += 1
    for node, rows in node_rows.items():
        G, H = totals[node]
        tb.close_leaf(node, G, H, lam)
    return tb.build()


# ---------------------------------------------------------------------------
# Boosting

def _derive_seed(seed: int, t: int) -> int:
    ss = np.random.SeedSequence(int(seed) & _SEED_MASK, spawn_key=(t,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def goss_sample(g, a: float, b: float, seed: int):
    """Gradient-based one-side sampling: (row indices, weights).

    Keeps the ceil(a*n) rows with largest |g| at weight 1 and a uniform
    sample of ceil(b*n) of the rest at weight (1-a)/b. Indices come back
    sorted ascending; deterministic in the seed.
    """
    GossParams(a=a, b=b)  # validates the fractions
    g = np.asarray(g, dtype=np.float64)
    n = g.size
    top = math.ceil(a * n)
    order = np.argsort(-np.abs(g), kind="stable")
    top_idx = order[:top]
    rest = order[top:]
    take = min(math.ceil(b * n), rest.size)
    if take > 0:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & _SEED_MASK)))
        pick = rng.choice(rest.size, size=take, replace=False)
        sampled = rest[pick]
        idx = np.concatenate([top_idx, sampled])
        w = np.concatenate([np.ones(top_idx.size), np.full(take, (1.0 - a) / b)])
    else:
        idx = top_idx
        w = np.ones(top_idx.size)
    order2 = np.argsort(idx, kind="stable")
    return idx[order2], w[order2]


@dataclass
class GbdtModel:
    base_margin: float
    trees: list
    params: TrainParams
    bin_map: list
    feature_count: int
    feature_scaler: tuple | None = None  # optional (mean, sd) per column
    training_loss: list = field(default_factory=list)

    def decision_margin(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.feature_count:
            raise ShapeMismatch(
                f"model expects {self.feature_count} features, got {X.shape[1]}"
            )
        if self.feature_scaler is not None:
            mean, sd = self.feature_scaler
            X = (X - mean) / sd
        margin = np.full(X.shape[0], self.base_margin)
        for tree in self.trees:
            margin += self.params.learning_rate * tree.predict_raw(X)
        return margin


def train(X, y, params: TrainParams, iteration_callback=None) -> GbdtModel:
    """Boosted training; deterministic given params (seed included).

    iteration_callback, when given, is called after every round with
    (iteration, training_loss); returning True stops training early. This
    is the hook for early-stopping policies, which are otherwise out of
    scope here.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix("training matrix must be non-empty and 2-d")
    if y.shape != (X.shape[0],):
        raise ShapeMismatch(f"labels shape {y.shape} does not match {X.shape[0]} rows")
    if X.shape[0] < 2:
        raise EmptyMatrix("need at least 2 training rows")
    y = y.astype(np.float64)
    if not (np.any(y == 0) and np.any(y == 1)):
        raise SingleClassData("training data must contain both classes")

    bin_map = build_bin_map(X, params.max_bins)
    binned = apply_bin_map(X, bin_map)
    p_bar = float(np.mean(y))
    base = math.log(p_bar / (1.0 - p_bar))
    margins = np.full(X.shape[0], base)
    trees = []
    losses = [float(np.mean(np.logaddexp(0.0, margins) - y * margins))]
    for t in range(params.n_estimators):
        g, h = logistic_grad_hess(y, margins)
        if params.goss is not None:
            rows, w = goss_sample(g, params.goss.a, params.goss.b, _derive_seed(params.seed, t))
        else:
            rows, w = None, None
        tree = grow_tree(g, h, binned, params, bin_map, rows=rows, weights=w)
        margins += params.learning_rate * tree.predict_binned(binned)
        trees.append(tree)
        losses.append(float(np.mean(np.logaddexp(0.0, margins) - y * margins)))
        if iteration_callback is not None and iteration_callback(t, losses[-1]):
            break
    return GbdtModel(
        base_margin=base,
        trees=trees,
        params=params,
        bin_map=bin_map,
        feature_count=X.shape[1],
        training_loss=losses,
    )


def predict_proba(model: GbdtModel, x):
    """Probability of the positive (abnormal) class for a row or matrix."""
    x = np.asarray(x, dtype=np.float64)
    one_row = x.ndim == 1
    margin = model.decision_margin(x)
    proba = 1.0 / (1.0 + np.exp(-margin))
    return float(proba[0]) if one_row else proba


# ---------------------------------------------------------------------------
# Persistence (WPDM)

def _params_to_json(params: TrainParams) -> dict:
    d = asdict(params)
    return d


def _params_from_json(d: dict) -> TrainParams:
    goss = d.pop("goss", None)
    params = TrainParams(**d, goss=GossParams(**goss) if goss else None)
    return params


def save_model(model: GbdtModel, path) -> None:
    header = {
        "params": _params_to_json(model.params),
        "bin_map": [t.tolist() for t in model.bin_map],
        "base_margin": model.base_margin,
        "feature_count": model.feature_count,
        "n_trees": len(model.trees),
        "nan_default_left": True,
        "feature_scaler": (
            None
            if model.feature_scaler is None
            else {"mean": model.feature_scaler[0].tolist(),
                  "sd": model.feature_scaler[1].tolist()}
        ),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [_MODEL_MAGIC, struct.pack("<H", _MODEL_VERSION), struct.pack("<I", len(blob)), blob]
    for tree in model.trees:
        parts.append(struct.pack("<I", tree.n_nodes))
        parts.append(tree.feature.astype("<i8").tobytes())
        parts.append(tree.bin.astype("<i8").tobytes())
        parts.append(tree.threshold.astype("<f8").tobytes())
        parts.append(tree.left.astype("<i8").tobytes())
        parts.append(tree.right.astype("<i8").tobytes())
        parts.append(tree.value.astype("<f8").tobytes())
    body = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", zlib.crc32(body)))


def load_model(path) -> GbdtModel:
    data = Path(path).read_bytes()
    if len(data) < 14 or data[:4] != _MODEL_MAGIC:
        raise CorruptModelFile(f"{Path(path).name}: not a model file")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != _MODEL_VERSION:
        raise UnsupportedVersion(f"model version {version} not supported")
    body, tail = data[:-4], data[-4:]
    if struct.unpack("<I", tail)[0] != zlib.crc32(body):
        raise CorruptModelFile(f"{Path(path).name}: checksum mismatch")
    try:
        (hlen,) = struct.unpack_from("<I", data, 6)
        header = json.loads(data[10 : 10 + hlen].decode("utf-8"))
        pos = 10 + hlen
        trees = []
        for _ in range(header["n_trees"]):
            (n_nodes,) = struct.unpack_from("<I", data, pos)
            pos += 4
            arrays = []
            for dtype in ("<i8", "<i8", "<f8", "<i8", "<i8", "<f8"):
                arr = np.frombuffer(data, dtype=dtype, count=n_nodes, offset=pos).copy()
                pos += 8 * n_nodes
                arrays.append(arr)
            trees.append(Tree(feature=arrays[0], bin=arrays[1], threshold=arrays[2],
                              left=arrays[3], right=arrays[4], value=arrays[5]))
        params = _params_from_json(dict(header["params"]))
        scaler = header.get("feature_scaler")
        feature_scaler = (
            None
            if scaler is None
            else (np.asarray(scaler["mean"]), np.asarray(scaler["sd"]))
        )
        return GbdtModel(
            base_margin=header["base_margin"],
            trees=trees,
            params=params,
            bin_map=[np.asarray(t, dtype=np.float64) for t in header["bin_map"]],
            feature_count=header["feature_count"],
            feature_scaler=feature_scaler,
        )
    except (KeyError, ValueError, struct.error, json.JSONDecodeError) as exc:
        raise CorruptModelFile(f"{Path(path).name}: malformed model body") from exc

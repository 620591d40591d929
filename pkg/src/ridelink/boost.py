"""Gradient-boosted regression trees with ordered boosting.

The booster minimises mean squared error. To avoid the target-leakage bias of
plain gradient boosting (each tree scoring the very rows it was fitted on),
gradients are taken against permutation-prefix models: a seeded permutation is
cut into ``ordered_segments`` contiguous segments of geometrically growing
size, and the gradient for a row in segment ``j`` is computed from a side
model trained only on segments ``0..j-1``. Segment 0 has no preceding data,
so its gradients stay anchored to the global mean; the geometric sizing keeps
that segment small. ``ordered_segments=1`` disables the scheme and gives
classic gradient boosting.

Each main tree is built in two phases: its structure (splits) is chosen by
fitting the prefix-based gradients, then its leaf outputs are refit as
weighted means of the deployed model's own residuals. The second phase is the
classic per-leaf line-search step; without it the no-prefix segment's frozen
gradients would leave a permanent training-loss floor. The global step size
``gamma_m`` still comes from a one-dimensional line search on training loss,
scaled by the learning rate.

Randomness is consumed in a fixed order so a fit can be replayed exactly:
one permutation up front, then per iteration (a) bagging weights, drawn only
when ``bagging_temperature > 0``, (b) the column subset, drawn only when the
subset is proper, (c) split-score noise inside each tree build, drawn only
when ``random_strength > 0``, for the prefix trees in segment order and then
the main tree.

Trees are exact-greedy: every unique value of every candidate column is
scored by weighted variance reduction, ties resolved toward the lowest
feature index and then the lowest threshold. Split rule is ``x <= threshold``
to the left branch.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

PARAM_RANGES = {
    "iterations": (100, 1000),
    "learning_rate": (0.001, 0.1),
    "depth": (1, 10),
    "bagging_temperature": (0.0, 1.0),
    "random_strength": (0.0, 1.0),
    "column_sample_ratio": (0.05, 1.0),
    "min_data_in_leaf": (10, 100),
}

MODEL_FORMAT = "boost-model/1"


@dataclass(frozen=True)
class BoostParams:
    iterations: int = 300
    learning_rate: float = 0.05
    depth: int = 6
    bagging_temperature: float = 0.0
    random_strength: float = 0.0
    column_sample_ratio: float = 1.0
    min_data_in_leaf: int = 10
    ordered_segments: int = 4
    seed: int = 0

    def __post_init__(self):
        for name, (lo, hi) in PARAM_RANGES.items():
            value = getattr(self, name)
            if not (lo <= value <= hi):
                raise ValueError(f"{name} must be within [{lo}, {hi}], got {value}")
        if not (1 <= self.ordered_segments <= 10):
            raise ValueError("ordered_segments must be within [1, 10]")


@dataclass
class BoostModel:
    f0: float
    trees: list                 # nested {"feature","threshold","left","right"} / {"value"}
    gammas: list[float]         # effective per-tree step, learning rate included
    feature_names: list[str]
    target: str
    schema_hash: str
    permutation: list[int]
    params: BoostParams


def schema_hash(feature_names: Sequence[str], target: str) -> str:
    payload = json.dumps([list(feature_names), target]).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


# ---------------------------------------------------------------------------
# tree building


def _leaf(g: np.ndarray, w: np.ndarray) -> dict:
    sw = float(w.sum())
    value = float((w * g).sum() / sw) if sw > 0.0 else 0.0
    return {"value": value}


def _best_split(X, g, w, rows, cols, min_leaf, noise_scale, rng):
    """Scan candidate splits; returns (gain, feature, threshold) or None."""
    best = None
    parent_w = w[rows]
    parent_g = g[rows]
    sw = parent_w.sum()
    swg = (parent_w * parent_g).sum()
    swgg = (parent_w * parent_g * parent_g).sum()
    parent_sse = swgg - swg * swg / sw
    for j in cols:
        xs = X[rows, j]
        order = np.argsort(xs, kind="stable")
        xs_s = xs[order]
        w_s = parent_w[order]
        g_s = parent_g[order]
        cw = np.cumsum(w_s)
        cwg = np.cumsum(w_s * g_s)
        cwgg = np.cumsum(w_s * g_s * g_s)
        boundary = np.nonzero(xs_s[:-1] != xs_s[1:])[0]
        if boundary.size == 0:
            continue
        left_n = boundary + 1
        right_n = len(rows) - left_n
        feasible = (left_n >= min_leaf) & (right_n >= min_leaf)
        boundary = boundary[feasible]
        if boundary.size == 0:
            continue
        lw, lg, lgg = cw[boundary], cwg[boundary], cwgg[boundary]
        rw, rg, rgg = sw - lw, swg - lg, swgg - lgg
        sse = (lgg - lg * lg / lw) + (rgg - rg * rg / rw)
        gains = parent_sse - sse
        if noise_scale > 0.0:
            gains = gains + rng.normal(size=gains.shape) * noise_scale
        pick = int(np.argmax(gains))  # first maximum -> lowest threshold
        gain = float(gains[pick])
        threshold = float(xs_s[boundary[pick]])
        if best is None or gain > best[0]:
            best = (gain, int(j), threshold)
    if best is None or best[0] <= 0.0:
        return None
    return best


def _grow(X, g, w, rows, depth_left, cols, min_leaf, random_strength, rng) -> dict:
    if depth_left == 0 or len(rows) < 2 * min_leaf:
        return _leaf(g[rows], w[rows])
    noise_scale = 0.0
    if random_strength > 0.0:
        pw = w[rows]
        pg = g[rows]
        mean = (pw * pg).sum() / pw.sum()
        parent_sse = (pw * (pg - mean) ** 2).sum()
        noise_scale = random_strength * math.sqrt(parent_sse / len(rows) + 1e-12)
    found = _best_split(X, g, w, rows, cols, min_leaf, noise_scale, rng)
    if found is None:
        return _leaf(g[rows], w[rows])
    _, feature, threshold = found
    mask = X[rows, feature] <= threshold
    left = _grow(X, g, w, rows[mask], depth_left - 1, cols, min_leaf, random_strength, rng)
    right = _grow(X, g, w, rows[~mask], depth_left - 1, cols, min_leaf, random_strength, rng)
    return {"feature": feature, "threshold": threshold, "left": left, "right": right}


def _tree_predict(node: dict, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X), dtype=float)
    stack = [(node, np.arange(len(X)))]
    while stack:
        nd, idx = stack.pop()
        if "value" in nd:
            out[idx] = nd["value"]
            continue
        mask = X[idx, nd["feature"]] <= nd["threshold"]
        stack.append((nd["left"], idx[mask]))
        stack.append((nd["right"], idx[~mask]))
    return out


def _refit_leaves(node: dict, X: np.ndarray, r: np.ndarray, w: np.ndarray,
                  rows: np.ndarray) -> None:
    """Replace each leaf's output with the weighted mean of the deployed
    model's residuals among the rows the leaf captures."""
    if "value" in node:
        sw = float(w[rows].sum())
        if sw > 0.0:
            node["value"] = float((w[rows] * r[rows]).sum() / sw)
        return
    mask = X[rows, node["feature"]] <= node["threshold"]
    _refit_leaves(node["left"], X, r, w, rows[mask])
    _refit_leaves(node["right"], X, r, w, rows[~mask])


# ---------------------------------------------------------------------------
# fitting


def _fit_core(X: np.ndarray, y: np.ndarray, params, feature_names, target) -> BoostModel:
    """Boosting loop; ``params`` is duck-typed so pathological configurations
    can be exercised directly in tests without range validation."""
    n, d = X.shape
    rng = np.random.default_rng(params.seed)
    f0 = float(y.mean())
    perm = rng.permutation(n)
    model = BoostModel(
        f0=f0, trees=[], gammas=[], feature_names=list(feature_names),
        target=target, schema_hash=schema_hash(feature_names, target),
        permutation=[int(i) for i in perm], params=params,
    )
    if float(np.ptp(y)) == 0.0:
        return model

    k = params.ordered_segments
    segments = _segment_permutation(perm, k)
    prefix_rows = [np.sort(np.concatenate(segments[:j])) for j in range(1, k)]
    prefix_pred = [np.full(n, f0) for _ in range(1, k)]
    main_pred = np.full(n, f0)
    lr = params.learning_rate
    n_cols = max(1, math.ceil(params.column_sample_ratio * d))

    for _ in range(params.iterations):
        if params.bagging_temperature > 0.0:
            u = np.clip(rng.random(n), 1e-16, None)
            w = (-np.log(u)) ** params.bagging_temperature
        else:
            w = np.ones(n)
        if n_cols < d:
            cols = np.sort(rng.choice(d, size=n_cols, replace=False))
        else:
            cols = np.arange(d)

        for j in range(1, k):
            rows = prefix_rows[j - 1]
            g = y[rows] - prefix_pred[j - 1][rows]
            tree = _grow(X, _scatter(g, rows, n), w, rows, params.depth, cols,
                         params.min_data_in_leaf, params.random_strength, rng)
            h = _tree_predict(tree, X)
            denom = float(h[rows] @ h[rows])
            gamma = lr * float(g @ h[rows]) / denom if denom > 0.0 else 0.0
            prefix_pred[j - 1] += gamma * h

        if k == 1:
            grad_base = main_pred
        else:
            grad_base = np.full(n, f0)
            for j in range(1, k):
                grad_base[segments[j]] = prefix_pred[j - 1][segments[j]]
        g_main = y - grad_base
        tree = _grow(X, g_main, w, np.arange(n), params.depth, cols,
                     params.min_data_in_leaf, params.random_strength, rng)
        r = y - main_pred
        _refit_leaves(tree, X, r, w, np.arange(n))
        h = _tree_predict(tree, X)
        denom = float(h @ h)
        gamma = lr * float(r @ h) / denom if denom > 0.0 else 0.0
        main_pred += gamma * h
        model.trees.append(tree)
        model.gammas.append(gamma)
    return model


def _scatter(values: np.ndarray, rows: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n)
    out[rows] = values
    return out


def _segment_permutation(perm: np.ndarray, k: int) -> list[np.ndarray]:
    """Cut the permutation into k segments of geometrically growing size
    (proportions 1:2:4:...), so the leading no-prefix segment, whose gradients
    stay anchored to the global mean, covers only a small share of the rows."""
    n = len(perm)
    if k == 1:
        return [perm]
    total = 2 ** k - 1
    bounds = [round(n * (2 ** (j + 1) - 1) / total) for j in range(k - 1)]
    segments = np.split(perm, bounds)
    if any(len(s) == 0 for s in segments):
        raise ValueError("too few rows for ordered_segments")
    return segments


def fit(X: np.ndarray, y: np.ndarray, params: BoostParams,
        feature_names: Optional[Sequence[str]] = None, target: str = "y") -> BoostModel:
    """Train a boosted model; deterministic given (X, y, params)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-d and aligned with y")
    if np.isnan(X).any() or np.isnan(y).any():
        raise ValueError("missing values in training data")
    if len(X) < 2 * params.min_data_in_leaf:
        raise ValueError("too few rows for min_data_in_leaf")
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(X.shape[1])]
    if len(feature_names) != X.shape[1]:
        raise ValueError("feature_names must match columns")
    return _fit_core(X, y, params, feature_names, target)


def predict(model: BoostModel, X: np.ndarray,
            feature_names: Optional[Sequence[str]] = None) -> np.ndarray:
    """Evaluate F(x) = F0 + sum gamma_m h_m(x); columns are remapped by name
    when the caller's layout differs from the training schema."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if feature_names is not None:
        names = list(feature_names)
        if names != model.feature_names:
            if sorted(names) != sorted(model.feature_names):
                raise ValueError("feature names do not match the model schema")
            order = [names.index(n) for n in model.feature_names]
            X = X[:, order]
    out = np.full(len(X), model.f0)
    for tree, gamma in zip(model.trees, model.gammas):
        if gamma != 0.0:
            out += gamma * _tree_predict(tree, X)
    return out


# ---------------------------------------------------------------------------
# serialization


def model_to_json(model: BoostModel) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "f0": model.f0,
        "trees": model.trees,
        "gammas": model.gammas,
        "feature_names": model.feature_names,
        "target": model.target,
        "schema_hash": model.schema_hash,
        "permutation": model.permutation,
        "params": asdict(model.params),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def model_from_json(text: str) -> BoostModel:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("unrecognized model format")
    return BoostModel(
        f0=doc["f0"], trees=doc["trees"], gammas=doc["gammas"],
        feature_names=doc["feature_names"], target=doc["target"],
        schema_hash=doc["schema_hash"], permutation=doc["permutation"],
        params=BoostParams(**doc["params"]),
    )


def save_model(model: BoostModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(model_to_json(model))
        handle.write("\n")


def load_model(path: str) -> BoostModel:
    with open(path, "r", encoding="utf-8") as handle:
        return model_from_json(handle.read())


# ---------------------------------------------------------------------------
# evaluation and spatial cross-validation


@dataclass(frozen=True)
class EvalReport:
    r2: float
    mae: float
    mse: float
    rmse: float


def evaluate(y_true: np.ndarray, y_pred: np.ndarray) -> EvalReport:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    err = y_true - y_pred
    mse = float((err ** 2).mean())
    mae = float(np.abs(err).mean())
    ss_res = float((err ** 2).sum())
    ss_tot = float(((y_true - y_true.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else float("-inf")
    else:
        r2 = 1.0 - ss_res / ss_tot
    return EvalReport(r2=r2, mae=mae, mse=mse, rmse=math.sqrt(mse))


def evaluate_model(model: BoostModel, X: np.ndarray, y: np.ndarray) -> EvalReport:
    return evaluate(y, predict(model, X))


def spatial_kfold(cells: Sequence[str], k: int = 5, seed: int = 0) -> np.ndarray:
    """Contiguous spatial folds: cells sorted by axial (q, r) are cut into k
    nearly equal tiles. The cut is deterministic; ``seed`` is accepted for
    interface stability but does not influence it."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > len(cells):
        raise ValueError("k exceeds the number of cells")
    axial = []
    for i, cid in enumerate(cells):
        q_s, r_s = cid.split(",")
        axial.append((int(q_s), int(r_s), i))
    order = [i for _, _, i in sorted(axial)]
    fold_of = np.empty(len(cells), dtype=int)
    for f, chunk in enumerate(np.array_split(np.array(order), k)):
        fold_of[chunk] = f
    return fold_of


@dataclass
class CvReport:
    folds: list[EvalReport]
    pooled: EvalReport


def cross_validate(X: np.ndarray, y: np.ndarray, cells: Sequence[str],
                   params: BoostParams, k: int = 5,
                   feature_names: Optional[Sequence[str]] = None,
                   target: str = "y") -> CvReport:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    fold_of = spatial_kfold(cells, k, params.seed)
    pooled_pred = np.empty(len(y))
    folds = []
    for f in range(k):
        test = fold_of == f
        train = ~test
        model = fit(X[train], y[train], params, feature_names, target)
        pred = predict(model, X[test])
        pooled_pred[test] = pred
        folds.append(evaluate(y[test], pred))
    return CvReport(folds=folds, pooled=evaluate(y, pooled_pred))


def write_cv_report(report: CvReport, path: str) -> None:
    doc = {
        "folds": [asdict(f) for f in report.folds],
        "pooled": asdict(report.pooled),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


# ---------------------------------------------------------------------------
# random hyperparameter search


@dataclass(frozen=True)
class ParamSpace:
    """Closed sampling ranges; every range must sit inside the validated
    parameter bounds so all sampled configurations are constructible."""

    iterations: tuple[int, int] = PARAM_RANGES["iterations"]
    learning_rate: tuple[float, float] = PARAM_RANGES["learning_rate"]
    depth: tuple[int, int] = PARAM_RANGES["depth"]
    bagging_temperature: tuple[float, float] = PARAM_RANGES["bagging_temperature"]
    random_strength: tuple[float, float] = PARAM_RANGES["random_strength"]
    column_sample_ratio: tuple[float, float] = PARAM_RANGES["column_sample_ratio"]
    min_data_in_leaf: tuple[int, int] = PARAM_RANGES["min_data_in_leaf"]
    ordered_segments: int = 4

    def __post_init__(self):
        for name, (full_lo, full_hi) in PARAM_RANGES.items():
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range is inverted")
            if lo < full_lo or hi > full_hi:
                raise ValueError(f"{name} range must sit inside [{full_lo}, {full_hi}]")

    def sample(self, rng: np.random.Generator) -> BoostParams:
        return BoostParams(
            iterations=int(rng.integers(self.iterations[0], self.iterations[1] + 1)),
            learning_rate=float(rng.uniform(*self.learning_rate)),
            depth=int(rng.integers(self.depth[0], self.depth[1] + 1)),
            bagging_temperature=float(rng.uniform(*self.bagging_temperature)),
            random_strength=float(rng.uniform(*self.random_strength)),
            column_sample_ratio=float(rng.uniform(*self.column_sample_ratio)),
            min_data_in_leaf=int(rng.integers(self.min_data_in_leaf[0],
                                              self.min_data_in_leaf[1] + 1)),
            ordered_segments=self.ordered_segments,
            seed=int(rng.integers(2 ** 31)),
        )


@dataclass
class Trial:
    index: int
    params: BoostParams
    cv_mse: float
    cv_r2: float


def random_search(X: np.ndarray, y: np.ndarray, cells: Sequence[str],
                  space: ParamSpace, trials: int, seed: int, k: int = 5,
                  feature_names: Optional[Sequence[str]] = None,
                  target: str = "y", jobs: int = 1) -> tuple[BoostParams, list[Trial]]:
    """Seeded uniform random search over ``space``; the winner is the trial
    with the lowest pooled cross-validation MSE (ties to the earliest)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    candidates = [space.sample(rng) for _ in range(trials)]

    def run(item):
        index, params = item
        report = cross_validate(X, y, cells, params, k, feature_names, target)
        return Trial(index=index, params=params,
                     cv_mse=report.pooled.mse, cv_r2=report.pooled.r2)

    items = list(enumerate(candidates))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            log = list(pool.map(run, items))
    else:
        log = [run(item) for item in items]
    best = min(log, key=lambda t: (t.cv_mse, t.index))
    return best.params, log


TRIAL_COLUMNS = ["trial", "iterations", "learning_rate", "depth",
                 "bagging_temperature", "random_strength", "column_sample_ratio",
                 "min_data_in_leaf", "ordered_segments", "seed", "cv_mse", "cv_r2"]


def write_trial_log(log: Sequence[Trial], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRIAL_COLUMNS)
        for t in log:
            p = t.params
            writer.writerow([
                t.index, p.iterations, repr(p.learning_rate), p.depth,
                repr(p.bagging_temperature), repr(p.random_strength),
                repr(p.column_sample_ratio), p.min_data_in_leaf,
                p.ordered_segments, p.seed, repr(t.cv_mse), repr(t.cv_r2),
            ])


__all__ = [
    "MODEL_FORMAT",
    "PARAM_RANGES",
    "TRIAL_COLUMNS",
    "BoostModel",
    "BoostParams",
    "CvReport",
    "EvalReport",
    "ParamSpace",
    "Trial",
    "cross_validate",
    "evaluate",
    "evaluate_model",
    "fit",
    "load_model",
    "model_from_json",
    "model_to_json",
    "predict",
    "random_search",
    "save_model",
    "schema_hash",
    "spatial_kfold",
    "write_cv_report",
    "write_trial_log",
]

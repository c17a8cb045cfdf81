"""One-vs-all random forests over TF-IDF features, plus evaluation metrics.

Each taxonomy label with at least one positive and one negative training
instance gets its own forest (binary relevance). Trees are grown with Gini
impurity on bootstrap samples, examining ceil(sqrt(V)) randomly chosen
features per split; growth stops at pure nodes, min_samples_leaf or
max_depth. Training is fully determined by (data, hyperparams, seed), and
models serialize to versioned JSON so a bundle trained in one run loads in
another.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .balance import MultilabelDataset

MODEL_FORMAT = "forest-1"
DEFAULT_THETA = 0.5


class ForestError(Exception):
    pass


class DegenerateLabelError(ForestError):
    """Training data contains a single class; caller marks the label untrainable."""


@dataclass(frozen=True)
class Hyperparams:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    features_per_split: str | int = "sqrt"  # "sqrt" means ceil(sqrt(V))
    bootstrap: bool = True

    def split_size(self, n_features: int) -> int:
        if self.features_per_split == "sqrt":
            return min(n_features, math.ceil(math.sqrt(n_features)))
        return min(n_features, int(self.features_per_split))


# Tree nodes: internal {"f": feature, "t": threshold, "l": left, "r": right},
# leaf {"p": positive-class probability}. x goes left when x[f] <= t.
Node = dict


@dataclass
class DecisionTree:
    nodes: list[Node]

    def predict_proba(self, x: np.ndarray) -> float:
        i = 0
        while "p" not in self.nodes[i]:
            node = self.nodes[i]
            i = node["l"] if x[node["f"]] <= node["t"] else node["r"]
        return self.nodes[i]["p"]


@dataclass
class RandomForestModel:
    trees: list[DecisionTree]
    hyperparams: Hyperparams
    seed: int
    n_features: int


def _best_split(
    X: np.ndarray, y: np.ndarray, rows: np.ndarray, feats: np.ndarray, min_leaf: int
):
    """Lowest weighted child Gini over candidate thresholds of the sampled
    features. Candidates are midpoints between consecutive distinct values;
    ties keep the first (feature-order, then lowest threshold) candidate."""
    best = None  # (score, feature, threshold)
    n = len(rows)
    yr = y[rows]
    for f in feats:
        vals = X[rows, int(f)]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = yr[order]
        boundary = np.nonzero(sv[1:] != sv[:-1])[0]
        if boundary.size == 0:
            continue
        pos_cum = np.cumsum(sy)
        total_pos = pos_cum[-1]
        nl = boundary + 1
        nr = n - nl
        ok = (nl >= min_leaf) & (nr >= min_leaf)
        if not ok.any():
            continue
        nl, nr, cut = nl[ok], nr[ok], boundary[ok]
        pl = pos_cum[cut]
        pr = total_pos - pl
        gini_l = 1.0 - (pl / nl) ** 2 - ((nl - pl) / nl) ** 2
        gini_r = 1.0 - (pr / nr) ** 2 - ((nr - pr) / nr) ** 2
        weighted = (nl * gini_l + nr * gini_r) / n
        i = int(np.argmin(weighted))
        if best is None or weighted[i] < best[0]:
            threshold = (sv[cut[i]] + sv[cut[i] + 1]) / 2.0
            best = (float(weighted[i]), int(f), float(threshold))
    return best


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    depth: int,
    hyper: Hyperparams,
    rng: np.random.Generator,
    nodes: list[Node],
) -> int:
    """Append the subtree for ``rows`` to ``nodes``, returning its index."""
    yr = y[rows]
    prob = float(yr.mean())
    if (
        prob == 0.0
        or prob == 1.0
        or (hyper.max_depth is not None and depth >= hyper.max_depth)
        or len(rows) < 2 * hyper.min_samples_leaf
    ):
        nodes.append({"p": prob})
        return len(nodes) - 1
    m = hyper.split_size(X.shape[1])
    feats = rng.choice(X.shape[1], size=m, replace=False)
    split = _best_split(X, y, rows, feats, hyper.min_samples_leaf)
    if split is None:
        nodes.append({"p": prob})
        return len(nodes) - 1
    _, f, t = split
    idx = len(nodes)
    nodes.append({"f": f, "t": t, "l": -1, "r": -1})
    mask = X[rows, f] <= t
    nodes[idx]["l"] = _grow(X, y, rows[mask], depth + 1, hyper, rng, nodes)
    nodes[idx]["r"] = _grow(X, y, rows[~mask], depth + 1, hyper, rng, nodes)
    return idx


def train_forest(
    features: np.ndarray, labels: np.ndarray, hyper: Hyperparams, seed: int
) -> RandomForestModel:
    """Train a binary random forest. Deterministic given (data, hyper, seed);
    per-tree RNG substreams are spawned from the seed."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int8)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ForestError("features must be (n, V) and labels (n,)")
    if y.min() == y.max():
        raise DegenerateLabelError("degenerate label: single-class training data")
    trees: list[DecisionTree] = []
    for child_seq in np.random.SeedSequence(seed).spawn(hyper.n_trees):
        rng = np.random.default_rng(child_seq)
        if hyper.bootstrap:
            rows = rng.integers(0, X.shape[0], size=X.shape[0])
        else:
            rows = np.arange(X.shape[0])
        nodes: list[Node] = []
        _grow(X, y, np.asarray(rows), 0, hyper, rng, nodes)
        trees.append(DecisionTree(nodes=nodes))
    return RandomForestModel(trees=trees, hyperparams=hyper, seed=seed, n_features=X.shape[1])


def predict_proba(model: RandomForestModel, vec: np.ndarray) -> float:
    """Mean of per-tree leaf probabilities."""
    x = np.asarray(vec, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ForestError(
            f"dimension mismatch: vector has {x.shape}, model expects ({model.n_features},)"
        )
    return float(sum(t.predict_proba(x) for t in model.trees) / len(model.trees))


@dataclass
class BinaryRelevanceModel:
    forests: dict[str, RandomForestModel]  # label id -> forest
    label_order: tuple[str, ...]
    untrainable: tuple[str, ...]  # labels without both classes in training
    taxonomy_version: str
    theta: float = DEFAULT_THETA


def train_binary_relevance(
    ds: MultilabelDataset,
    label_order: list[str],
    hyper: Hyperparams,
    seed: int,
    taxonomy_version: str,
    theta: float = DEFAULT_THETA,
) -> BinaryRelevanceModel:
    """One forest per label with both classes present; the rest are recorded
    as untrainable rather than silently dropped. Per-label RNG substreams
    keep training order-independent."""
    if len(label_order) != ds.n_labels:
        raise ForestError("label_order length does not match dataset labels")
    forests: dict[str, RandomForestModel] = {}
    untrainable: list[str] = []
    label_seqs = np.random.SeedSequence(seed).spawn(ds.n_labels)
    for j, label_id in enumerate(label_order):
        y = ds.labels[:, j]
        if y.min() == y.max():
            untrainable.append(label_id)
            continue
        label_seed = int(label_seqs[j].generate_state(1)[0])
        forests[label_id] = train_forest(ds.features, y, hyper, label_seed)
    return BinaryRelevanceModel(
        forests=forests,
        label_order=tuple(label_order),
        untrainable=tuple(untrainable),
        taxonomy_version=taxonomy_version,
        theta=theta,
    )


def predict_labels(
    br: BinaryRelevanceModel, vec: np.ndarray, theta: Optional[float] = None
) -> dict[str, float]:
    """Labels whose forest probability reaches the decision threshold, with
    parent closure: a predicted subdomain pulls in its parent domain (at the
    parent's own score). Untrainable labels are never predicted."""
    cut = br.theta if theta is None else theta
    scores = {label: predict_proba(model, vec) for label, model in br.forests.items()}
    chosen = {label: s for label, s in scores.items() if s >= cut}
    for label in list(chosen):
        if "/" in label:
            parent = label.split("/", 1)[0]
            if parent not in chosen and parent in scores:
                chosen[parent] = scores[parent]
    return chosen


@dataclass
class EvalReport:
    tp: np.ndarray  # (L,)
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    split_description: str = ""
    synthetic_rows_excluded: bool = True
    label_order: tuple[str, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {
            "micro": {
                "precision": self.micro_precision,
                "recall": self.micro_recall,
                "f1": self.micro_f1,
            },
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "per_label": {
                label: {
                    "tp": int(self.tp[j]),
                    "fp": int(self.fp[j]),
                    "fn": int(self.fn[j]),
                    "tn": int(self.tn[j]),
                }
                for j, label in enumerate(self.label_order)
            }
            if self.label_order
            else {},
            "split": self.split_description,
            "synthetic_rows_excluded": self.synthetic_rows_excluded,
        }


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def _f1_counts(tp: int, fp: int, fn: int) -> float:
    # harmonic mean of precision and recall, computed from counts so that
    # e.g. P = R = 0.8 yields exactly 0.8
    return _safe_div(2 * tp, 2 * tp + fp + fn)


def evaluate_micro(gold: np.ndarray, predicted: np.ndarray, **report_fields) -> EvalReport:
    """Confusion counts per label plus micro and macro precision/recall/F1.

    Micro sums counts over every (row, label) cell; 0/0 divisions yield 0.
    Macro averages per-label scores over all labels.
    """
    g = np.asarray(gold, dtype=np.int8)
    p = np.asarray(predicted, dtype=np.int8)
    if g.shape != p.shape:
        raise ForestError(f"shape mismatch: gold {g.shape} vs predicted {p.shape}")
    tp = ((g == 1) & (p == 1)).sum(axis=0)
    fp = ((g == 0) & (p == 1)).sum(axis=0)
    fn = ((g == 1) & (p == 0)).sum(axis=0)
    tn = ((g == 0) & (p == 0)).sum(axis=0)
    stp, sfp, sfn = int(tp.sum()), int(fp.sum()), int(fn.sum())
    micro_p = _safe_div(stp, stp + sfp)
    micro_r = _safe_div(stp, stp + sfn)
    n_labels = g.shape[1]
    label_p = [_safe_div(int(tp[j]), int(tp[j] + fp[j])) for j in range(n_labels)]
    label_r = [_safe_div(int(tp[j]), int(tp[j] + fn[j])) for j in range(n_labels)]
    label_f = [_f1_counts(int(tp[j]), int(fp[j]), int(fn[j])) for j in range(n_labels)]
    return EvalReport(
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=_f1_counts(stp, sfp, sfn),
        macro_precision=sum(label_p) / n_labels,
        macro_recall=sum(label_r) / n_labels,
        macro_f1=sum(label_f) / n_labels,
        **report_fields,
    )


def split_dataset(
    ds: MultilabelDataset, ratio: float = 0.8, seed: int = 0
) -> tuple[MultilabelDataset, MultilabelDataset]:
    """Row-disjoint train/test partition. Real rows are shuffled and split at
    floor(ratio * n_real); synthetic rows always land in train."""
    if not 0.0 < ratio < 1.0:
        raise ForestError(f"split ratio must be in (0, 1), got {ratio}")
    if ds.n_rows < 2:
        raise ForestError("dataset must have at least 2 rows to split")
    real = np.nonzero(ds.real_mask())[0]
    synthetic = np.nonzero(~ds.real_mask())[0]
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(real))
    n_train = int(math.floor(ratio * len(real)))
    train_rows = np.concatenate([real[perm[:n_train]], synthetic]).astype(int)
    test_rows = real[perm[n_train:]].astype(int)
    return ds.take(np.sort(train_rows)), ds.take(np.sort(test_rows))


def forest_to_dict(model: RandomForestModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "seed": model.seed,
        "n_features": model.n_features,
        "hyperparams": {
            "n_trees": model.hyperparams.n_trees,
            "max_depth": model.hyperparams.max_depth,
            "min_samples_leaf": model.hyperparams.min_samples_leaf,
            "features_per_split": model.hyperparams.features_per_split,
            "bootstrap": model.hyperparams.bootstrap,
        },
        "trees": [t.nodes for t in model.trees],
    }


def forest_from_dict(data: dict) -> RandomForestModel:
    if data.get("format") != MODEL_FORMAT:
        raise ForestError(f"unsupported forest format: {data.get('format')!r}")
    hp = data["hyperparams"]
    return RandomForestModel(
        trees=[DecisionTree(nodes=nodes) for nodes in data["trees"]],
        hyperparams=Hyperparams(
            n_trees=hp["n_trees"],
            max_depth=hp["max_depth"],
            min_samples_leaf=hp["min_samples_leaf"],
            features_per_split=hp["features_per_split"],
            bootstrap=hp["bootstrap"],
        ),
        seed=data["seed"],
        n_features=data["n_features"],
    )


def forest_to_json(model: RandomForestModel) -> str:
    return json.dumps(forest_to_dict(model), sort_keys=True)


def forest_from_json(payload: str) -> RandomForestModel:
    return forest_from_dict(json.loads(payload))

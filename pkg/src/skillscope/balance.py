"""Label-imbalance measurement and MLSMOTE oversampling.

IRLbl of a label is the highest positive count across labels divided by this
label's positive count; MeanIR is the mean over labels that have at least one
positive. Labels whose IRLbl exceeds MeanIR are minority labels and get
synthetic rows: each instance bearing the label is interpolated toward one of
its k nearest same-label neighbors, and the synthetic row inherits every
label present in strictly more than half of the reference bag (the instance
plus its neighbors).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

REAL = "real"
SYNTHETIC = "synthetic"


class BalanceError(Exception):
    pass


@dataclass
class MultilabelDataset:
    """Numeric feature rows with a binary label matrix.

    ``provenance[i]`` is ``"real"`` or ``"synthetic"``; real rows carry the
    issue number they came from (``issue_numbers[i]`` is None for synthetic
    rows).
    """

    features: np.ndarray  # (n, V) float64
    labels: np.ndarray  # (n, L) int8, values in {0, 1}
    provenance: list[str] = field(default_factory=list)
    issue_numbers: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.features.ndim != 2 or self.labels.ndim != 2:
            raise BalanceError("features and labels must be 2-D")
        if self.features.shape[0] != self.labels.shape[0]:
            raise BalanceError("features and labels row counts differ")
        if not self.provenance:
            self.provenance = [REAL] * self.features.shape[0]
        if not self.issue_numbers:
            self.issue_numbers = [None] * self.features.shape[0]
        if len(self.provenance) != self.features.shape[0]:
            raise BalanceError("provenance length mismatch")
        if len(self.issue_numbers) != self.features.shape[0]:
            raise BalanceError("issue_numbers length mismatch")
        bad = set(np.unique(self.labels)) - {0, 1}
        if bad:
            raise BalanceError(f"labels must be binary, found {sorted(bad)}")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_labels(self) -> int:
        return self.labels.shape[1]

    def real_mask(self) -> np.ndarray:
        return np.array([p == REAL for p in self.provenance], dtype=bool)

    def take(self, rows: np.ndarray) -> "MultilabelDataset":
        return MultilabelDataset(
            features=self.features[rows].copy(),
            labels=self.labels[rows].copy(),
            provenance=[self.provenance[i] for i in rows],
            issue_numbers=[self.issue_numbers[i] for i in rows],
        )


@dataclass(frozen=True)
class ImbalanceReport:
    positive_counts: np.ndarray  # (L,) int
    irlbl: np.ndarray  # (L,) float, NaN where the label has no positives
    mean_ir: float
    zero_labels: tuple[int, ...]  # untrainable: no positive instance


def imbalance_report(ds: MultilabelDataset) -> ImbalanceReport:
    """Per-label positive counts, IRLbl and MeanIR.

    Labels with zero positives are excluded from MeanIR and listed in
    ``zero_labels``.
    """
    if ds.n_rows == 0:
        raise BalanceError("empty dataset")
    counts = ds.labels.sum(axis=0).astype(np.int64)
    max_count = counts.max()
    irlbl = np.full(ds.n_labels, np.nan, dtype=np.float64)
    nonzero = counts > 0
    irlbl[nonzero] = max_count / counts[nonzero]
    mean_ir = float(irlbl[nonzero].mean()) if nonzero.any() else float("nan")
    return ImbalanceReport(
        positive_counts=counts,
        irlbl=irlbl,
        mean_ir=mean_ir,
        zero_labels=tuple(int(j) for j in np.nonzero(~nonzero)[0]),
    )


def minority_labels(ds: MultilabelDataset) -> list[int]:
    report = imbalance_report(ds)
    return [
        j
        for j in range(ds.n_labels)
        if not np.isnan(report.irlbl[j]) and report.irlbl[j] > report.mean_ir
    ]


def _nearest_same_label(features: np.ndarray, rows: np.ndarray, r: int, k: int) -> np.ndarray:
    """Indices of the k nearest rows to r among ``rows`` (excluding r),
    Euclidean distance, distance ties broken by row index."""
    others = rows[rows != r]
    dists = np.sqrt(((features[others] - features[r]) ** 2).sum(axis=1))
    order = np.lexsort((others, dists))
    return others[order[:k]]


def mlsmote(ds: MultilabelDataset, k: int = 5, seed: int = 0) -> MultilabelDataset:
    """One MLSMOTE pass: append synthetic rows for every minority label.

    Minority labels are decided once, on the input dataset, and processed in
    label order; within a label, instances are processed in row order. For
    each instance the RNG draws the neighbor choice first, then the
    interpolation coefficient u ~ Uniform[0,1); the synthetic row lies on the
    segment between the instance and the chosen neighbor. A single-instance
    label is cloned instead (no RNG draws). Real rows pass through untouched;
    neighbor pools contain input rows only.
    """
    minority = minority_labels(ds)
    if not minority:
        return ds
    rng = np.random.default_rng(seed)
    new_features: list[np.ndarray] = []
    new_labels: list[np.ndarray] = []
    for j in minority:
        rows = np.nonzero(ds.labels[:, j] == 1)[0]
        if len(rows) == 1:
            r = int(rows[0])
            new_features.append(ds.features[r].copy())
            new_labels.append(ds.labels[r].copy())
            continue
        for r in rows:
            r = int(r)
            kk = min(k, len(rows) - 1)
            neighbors = _nearest_same_label(ds.features, rows, r, kk)
            pick = int(neighbors[rng.integers(0, len(neighbors))])
            u = rng.random()
            synth = ds.features[r] + u * (ds.features[pick] - ds.features[r])
            bag = np.concatenate(([r], neighbors))
            votes = ds.labels[bag].sum(axis=0)
            lab = (2 * votes > len(bag)).astype(np.int8)
            new_features.append(synth)
            new_labels.append(lab)
    return MultilabelDataset(
        features=np.vstack([ds.features] + [f[None, :] for f in new_features]),
        labels=np.vstack([ds.labels] + [l[None, :] for l in new_labels]),
        provenance=list(ds.provenance) + [SYNTHETIC] * len(new_features),
        issue_numbers=list(ds.issue_numbers) + [None] * len(new_features),
    )

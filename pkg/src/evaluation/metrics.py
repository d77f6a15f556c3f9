"""Multi-label coding metrics: F1, AUC, P@K, MAP and frequency-bucketed F1."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from sklearn.metrics import f1_score, roc_auc_score

logger = logging.getLogger(__name__)

# (name, lowest frequency, highest frequency) from most to least frequent
FREQUENCY_BUCKETS: Tuple[Tuple[str, int, float], ...] = (
    (">500", 501, float("inf")),
    ("101-500", 101, 500),
    ("51-100", 51, 100),
    ("11-50", 11, 50),
    ("1-10", 1, 10),
)
RARE_BUCKET = "1-10"


class MetricError(Exception):
    """Exception for malformed evaluation inputs."""

    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


@dataclass(frozen=True)
class EvalBatch:
    """Scores and labels of an evaluation split, plus training frequencies."""

    scores: np.ndarray  # [M, C] in [0, 1]
    labels: np.ndarray  # [M, C] binary
    train_code_frequencies: Optional[np.ndarray] = None  # [C]

    def __post_init__(self):
        if self.scores.ndim != 2 or self.scores.shape != self.labels.shape:
            raise MetricError(f"scores {self.scores.shape} and labels {self.labels.shape} must be equal 2-D shapes")
        if self.scores.size and (self.scores.min() < 0.0 or self.scores.max() > 1.0):
            raise MetricError("scores must lie in [0, 1]")
        if self.train_code_frequencies is not None and self.train_code_frequencies.shape != (self.scores.shape[1],):
            raise MetricError("train_code_frequencies must have one entry per code")


def _ranking(scores: np.ndarray) -> np.ndarray:
    # descending score, ties by ascending code index
    return np.argsort(-scores, axis=1, kind="stable")


def precision_at_k(scores: np.ndarray, labels: np.ndarray, k: int) -> float:
    """Mean fraction of the top-k scored codes that are true."""
    if not 1 <= k <= scores.shape[1]:
        raise MetricError(f"k={k} outside [1, {scores.shape[1]}]")
    if scores.shape[0] == 0:
        return 0.0
    top = _ranking(scores)[:, :k]
    hits = np.take_along_axis(labels, top, axis=1).sum(axis=1)
    return float(np.mean(hits / k))


def f1_scores(scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> Tuple[float, float]:
    """Macro and micro F1 after binarising at ``threshold``.

    Returns:
        Tuple of (macro, micro); codes with no positives and no predictions count 0
    """
    predictions = (scores >= threshold).astype(np.int64)
    truth = labels.astype(np.int64)
    macro = f1_score(truth, predictions, average="macro", zero_division=0)
    micro = f1_score(truth, predictions, average="micro", zero_division=0)
    return float(macro), float(micro)


def auc_scores(scores: np.ndarray, labels: np.ndarray) -> Tuple[Optional[float], Optional[float]]:
    """Macro AUC over non-degenerate codes and micro AUC over all cells.

    Returns:
        Tuple of (macro, micro); an entry is None when undefined
    """
    per_code: List[float] = []
    for j in range(labels.shape[1]):
        column = labels[:, j]
        positives = int(column.sum())
        if 0 < positives < column.shape[0]:
            per_code.append(roc_auc_score(column, scores[:, j]))
    macro = float(np.mean(per_code)) if per_code else None

    flat = labels.ravel()
    micro = None
    if 0 < int(flat.sum()) < flat.shape[0]:
        micro = float(roc_auc_score(flat, scores.ravel()))
    return macro, micro


def mean_average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """Document-wise average precision of the code ranking, averaged over documents with positives."""
    ranked = np.take_along_axis(labels, _ranking(scores), axis=1).astype(np.float64)
    positives = ranked.sum(axis=1)
    keep = positives > 0
    if not keep.any():
        return 0.0
    ranked = ranked[keep]
    ranks = np.arange(1, ranked.shape[1] + 1)
    precision_at_hits = np.cumsum(ranked, axis=1) / ranks * ranked
    return float(np.mean(precision_at_hits.sum(axis=1) / positives[keep]))


def bucket_of(frequency: int) -> Optional[str]:
    """Frequency bucket name, or None for codes never seen in training."""
    for name, low, high in FREQUENCY_BUCKETS:
        if low <= frequency <= high:
            return name
    return None


def frequency_bucketed_f1(
    scores: np.ndarray,
    labels: np.ndarray,
    train_code_frequencies: np.ndarray,
    threshold: float = 0.5,
) -> Dict[str, Optional[float]]:
    """Micro-F1 within each training-frequency bucket; None for empty buckets."""
    buckets = np.array([bucket_of(int(f)) or "" for f in train_code_frequencies])
    result: Dict[str, Optional[float]] = {}
    for name, _, _ in FREQUENCY_BUCKETS:
        columns = np.flatnonzero(buckets == name)
        if columns.size == 0:
            result[name] = None
            continue
        _, micro = f1_scores(scores[:, columns], labels[:, columns], threshold)
        result[name] = micro
    unseen = int(np.sum(buckets == ""))
    if unseen:
        logger.debug(f"{unseen} codes never occur in training and fall in no bucket")
    return result

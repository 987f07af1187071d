"""Evaluation metrics: weighted F1, F-beta, and the three-part report.

The three-part report splits performance into the questions a user cares
about: did the system recognize correct form (M1), how well does it name
the mistake when it is confident (M2), and how often does it flag a
mistake it cannot name (M3). Every ground-truth-incorrect example lands
in exactly one of the M2 set, the M3 set, or the mistaken-as-correct set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CORRECT = 0  # class index of the correct-form class, by convention


class EmptyEvalSet(ValueError):
    """Metrics were requested for an evaluation set with no examples."""


@dataclass(frozen=True)
class EvalSet:
    """Ground truths and predicted class distributions, plus knobs.

    ``tau`` is the confidence threshold of the three-part metric: a
    mistake prediction counts as confident when its strongest mistake
    probability is at or above tau. ``beta`` weights precision against
    recall in M1's binary score.
    """

    truths: np.ndarray  # (n,) class indices
    probs: np.ndarray  # (n, 3) rows summing to 1
    tau: float = 0.5
    beta: float = 1.0
    class_names: tuple[str, str, str] = ("correct", "mistake_1", "mistake_2")

    def __post_init__(self) -> None:
        truths = np.asarray(self.truths)
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "truths", truths)
        object.__setattr__(self, "probs", probs)
        if len(truths) == 0:
            raise EmptyEvalSet("evaluation set has no examples")
        if probs.shape != (len(truths), 3):
            raise ValueError(f"probs must be (n, 3), got {probs.shape}")
        if truths.min() < 0 or truths.max() > 2:
            raise ValueError("truth class indices must lie in {0, 1, 2}")
        if np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("every probability row must sum to 1")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")

    @classmethod
    def from_pairs(cls, pairs, tau: float = 0.5, beta: float = 1.0) -> "EvalSet":
        """Build from (truth index, ClassPrediction) pairs."""
        truths = np.array([t for t, _ in pairs], dtype=int)
        probs = np.array([p.probs for _, p in pairs], dtype=np.float64)
        return cls(truths=truths, probs=probs, tau=tau, beta=beta)

    @property
    def predictions(self) -> np.ndarray:
        return self.probs.argmax(axis=1)

    @property
    def max_mistake_probs(self) -> np.ndarray:
        return self.probs[:, 1:].max(axis=1)


@dataclass(frozen=True)
class ThreePartReport:
    """M1/M2/M3 plus the index partition they were computed from."""

    m1: float
    m2: float | None  # None when no confident mistake predictions exist
    m3_percent: float
    m2_indices: tuple[int, ...]
    m3_indices: tuple[int, ...]
    mistaken_as_correct_indices: tuple[int, ...]


def f_beta(precision: float, recall: float, beta: float = 1.0) -> float:
    """F-beta from precision and recall; 0 when the denominator is 0."""
    b2 = beta * beta
    denominator = b2 * precision + recall
    if denominator == 0.0:
        return 0.0
    return (1.0 + b2) * precision * recall / denominator


def _precision_recall(tp: int, fp: int, fn: int) -> tuple[float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall


def _weighted_f1(truths: np.ndarray, preds: np.ndarray, classes) -> float:
    """Support-weighted one-vs-rest F1 over the given classes."""
    supports = {c: int((truths == c).sum()) for c in classes}
    total = sum(supports.values())
    weighted = 0.0
    for c in classes:
        support = supports[c]
        if support == 0:
            continue
        tp = int(((truths == c) & (preds == c)).sum())
        fp = int(((truths != c) & (preds == c)).sum())
        fn = int(((truths == c) & (preds != c)).sum())
        precision, recall = _precision_recall(tp, fp, fn)
        weighted += (support / total) * f_beta(precision, recall, 1.0)
    return weighted


def weighted_f1(eval_set: EvalSet) -> float:
    """Support-weighted multiclass F1 of the argmax predictions."""
    return _weighted_f1(eval_set.truths, eval_set.predictions, (0, 1, 2))


def three_part(eval_set: EvalSet) -> ThreePartReport:
    """The three-part assessment report for one evaluation set.

    M1 is the binary F-beta score for recognizing correct form, computed
    over examples whose truth or prediction is the correct class (the
    remaining examples are true negatives and provably cannot change the
    score). M2 is the weighted F1 over mistake classes among confident
    mistake predictions; with no such predictions it is None, never 0.
    M3 is the percentage of ground-truth-incorrect examples predicted as
    some mistake but without a confident one.
    """
    truths = eval_set.truths
    preds = eval_set.predictions
    confident = eval_set.max_mistake_probs >= eval_set.tau

    m1_mask = (truths == CORRECT) | (preds == CORRECT)
    tp = int(((truths == CORRECT) & (preds == CORRECT) & m1_mask).sum())
    fp = int(((truths != CORRECT) & (preds == CORRECT) & m1_mask).sum())
    fn = int(((truths == CORRECT) & (preds != CORRECT) & m1_mask).sum())
    precision, recall = _precision_recall(tp, fp, fn)
    m1 = f_beta(precision, recall, eval_set.beta)

    incorrect = truths != CORRECT
    as_mistake = preds != CORRECT
    m2_mask = incorrect & as_mistake & confident
    m3_mask = incorrect & as_mistake & ~confident
    mistaken_correct_mask = incorrect & ~as_mistake

    m2_idx = tuple(int(i) for i in np.flatnonzero(m2_mask))
    m2 = _weighted_f1(truths[m2_mask], preds[m2_mask], (1, 2)) if m2_idx else None

    total_incorrect = int(incorrect.sum())
    m3_count = int(m3_mask.sum())
    m3_percent = 100.0 * m3_count / total_incorrect if total_incorrect else 0.0

    return ThreePartReport(
        m1=m1,
        m2=m2,
        m3_percent=m3_percent,
        m2_indices=m2_idx,
        m3_indices=tuple(int(i) for i in np.flatnonzero(m3_mask)),
        mistaken_as_correct_indices=tuple(int(i) for i in np.flatnonzero(mistaken_correct_mask)),
    )


def summary(eval_set: EvalSet) -> dict:
    """Flat report dictionary: headline F1, M1/M2/M3, and set sizes."""
    report = three_part(eval_set)
    return {
        "multiclass_f1": weighted_f1(eval_set),
        "m1": report.m1,
        "m2": report.m2,
        "m3_percent": report.m3_percent,
        "counts": {
            "examples": int(len(eval_set.truths)),
            "truth_incorrect": int((eval_set.truths != CORRECT).sum()),
            "confident_mistakes": len(report.m2_indices),
            "uncertain_mistakes": len(report.m3_indices),
            "mistaken_as_correct": len(report.mistaken_as_correct_indices),
        },
    }

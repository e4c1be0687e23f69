"""Token-level detection metrics and significance testing.

The positive class is the "incorrect" label. Precision, recall, and
F-beta are returned as fractions in [0, 1]; f_beta itself is
scale-invariant, so the same formula reproduces percent-scale figures.

Significance between two systems uses the approximate randomization
test: the statistic is the absolute F0.5 difference, each round swaps
the systems' outputs on every sentence independently with probability
one half, and the p-value is (hits + 1) / (rounds + 1). Swapping whole
sentences keeps within-sentence correlation intact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .align import LABEL_INCORRECT, LabeledSentence


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


def f_beta(p: float, r: float, beta: float = 0.5) -> float:
    """Weighted harmonic mean of precision and recall; 0 on a 0 denominator."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    denom = beta * beta * p + r
    if denom == 0:
        return 0.0
    return (1.0 + beta * beta) * p * r / denom


def sentence_counts(predicted: LabeledSentence, gold: LabeledSentence) -> ConfusionCounts:
    if len(predicted.labels) != len(gold.labels):
        raise ValueError(
            "%d predicted tokens vs %d gold tokens" % (len(predicted.labels), len(gold.labels))
        )
    tp = fp = fn = tn = 0
    for pred, ref in zip(predicted.labels, gold.labels):
        if pred == LABEL_INCORRECT:
            if ref == LABEL_INCORRECT:
                tp += 1
            else:
                fp += 1
        elif ref == LABEL_INCORRECT:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def counts_to_metrics(counts: ConfusionCounts, beta: float = 0.5) -> tuple[float, float, float]:
    p = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    r = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    return p, r, f_beta(p, r, beta)


def score(
    predictions: Sequence[LabeledSentence], gold: Sequence[LabeledSentence], beta: float = 0.5
) -> tuple[float, float, float, ConfusionCounts]:
    """(precision, recall, F-beta, summed confusion counts) over a corpus."""
    if len(predictions) != len(gold):
        raise ValueError(
            "prediction corpus has %d sentences but gold has %d" % (len(predictions), len(gold))
        )
    total = ConfusionCounts()
    for idx, (pred, ref) in enumerate(zip(predictions, gold)):
        try:
            total = total + sentence_counts(pred, ref)
        except ValueError as exc:
            raise ValueError("sentence %d: %s" % (idx, exc)) from None
    p, r, f = counts_to_metrics(total, beta)
    return p, r, f, total


def _count_matrix(system: Sequence[LabeledSentence], gold: Sequence[LabeledSentence]) -> np.ndarray:
    rows = []
    for idx, (pred, ref) in enumerate(zip(system, gold)):
        try:
            c = sentence_counts(pred, ref)
        except ValueError as exc:
            raise ValueError("sentence %d: %s" % (idx, exc)) from None
        rows.append((c.tp, c.fp, c.fn, c.tn))
    return np.array(rows, dtype=np.float64)


def _f05_from_totals(totals: np.ndarray) -> np.ndarray:
    tp, fp, fn = totals[..., 0], totals[..., 1], totals[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        r = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
        denom = 0.25 * p + r
        f = np.where(denom > 0, 1.25 * p * r / denom, 0.0)
    return f


def observed_statistic(
    sys_a: Sequence[LabeledSentence], sys_b: Sequence[LabeledSentence], gold: Sequence[LabeledSentence]
) -> float:
    """|F0.5(a) - F0.5(b)| on the full corpora."""
    _, _, fa, _ = score(sys_a, gold)
    _, _, fb, _ = score(sys_b, gold)
    return abs(fa - fb)


def randomization_test(
    sys_a: Sequence[LabeledSentence],
    sys_b: Sequence[LabeledSentence],
    gold: Sequence[LabeledSentence],
    rounds: int = 10000,
    rng: np.random.Generator | int | None = None,
) -> float:
    """Approximate randomization p-value for the F0.5 gap between systems."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not (len(sys_a) == len(sys_b) == len(gold)):
        raise ValueError(
            "mismatched corpora: %d vs %d system sentences, %d gold"
            % (len(sys_a), len(sys_b), len(gold))
        )
    if rng is None or isinstance(rng, int):
        rng = np.random.default_rng(rng)
    a = _count_matrix(sys_a, gold)
    b = _count_matrix(sys_b, gold)
    observed = abs(float(_f05_from_totals(a.sum(axis=0)) - _f05_from_totals(b.sum(axis=0))))

    hits = 0
    chunk = max(1, min(rounds, 4096))
    done = 0
    while done < rounds:
        n = min(chunk, rounds - done)
        swap = rng.random((n, len(gold), 1)) < 0.5
        tot_a = np.where(swap, b, a).sum(axis=1)
        tot_b = np.where(swap, a, b).sum(axis=1)
        stat = np.abs(_f05_from_totals(tot_a) - _f05_from_totals(tot_b))
        hits += int((stat >= observed).sum())
        done += n
    return (hits + 1) / (rounds + 1)


def format_metrics(p: float, r: float, f: float, counts: ConfusionCounts, beta: float = 0.5) -> str:
    """Aligned-column report in percent."""
    lines = [
        "%-12s %8.2f" % ("precision", 100.0 * p),
        "%-12s %8.2f" % ("recall", 100.0 * r),
        "%-12s %8.2f" % ("F%.1f" % beta, 100.0 * f),
        "%-12s %8d %8d %8d %8d" % ("tp/fp/fn/tn", counts.tp, counts.fp, counts.fn, counts.tn),
    ]
    return "\n".join(lines)

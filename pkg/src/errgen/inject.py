"""Insert learned error patterns into clean tagged text.

The corruption of a corpus reproduces the background corpus statistics:

* the configured proportion of sentences is left untouched (to within one
  sentence of rounding), the remainder gets per-sentence error counts
  sampled from the background count distribution conditioned on >= 1;
* candidate patterns are drawn by weighted sampling without overlap,
  weight = pattern frequency x a quota factor that boosts error types
  currently below their background frequency;
* every run is keyed to a single integer seed (numpy PCG64), so outputs
  are bitwise reproducible.

Matches are collected once per clean sentence, then applied right to left
so earlier token positions stay valid. A sentence whose candidates run out
before reaching its error budget is reported as exhausted in its record,
not treated as an error.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .align import LABEL_CORRECT, LABEL_INCORRECT, LabeledSentence
from .corpus import ErrorCountDistribution, TaggedSentence, Token
from .patterns import ErrorPattern, PatternStore

# steady-state tracking error of realized type frequencies scales with the
# floor, so it must sit well below the per-type background probabilities
QUOTA_FLOOR = 0.005
MIN_QUOTA_WEIGHT = 0.0005


@dataclass
class InjectionConfig:
    background: ErrorCountDistribution
    seed: int = 0
    max_attempts: int = 100
    quota_floor: float = QUOTA_FLOOR

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class InjectionRecord:
    sentence_id: str
    applied: tuple[tuple[ErrorPattern, int], ...]
    result: LabeledSentence
    requested_errors: int

    @property
    def exhausted(self) -> bool:
        return len(self.applied) < self.requested_errors


def sample_error_count(dist: ErrorCountDistribution, rng: np.random.Generator) -> int:
    """Draw a per-sentence error count from the background distribution."""
    counts = sorted(dist.count_probs)
    probs = np.array([dist.count_probs[c] for c in counts], dtype=float)
    return int(counts[rng.choice(len(counts), p=probs / probs.sum())])


def _sample_positive_count(dist: ErrorCountDistribution, rng: np.random.Generator) -> int:
    positive = sorted(c for c in dist.count_probs if c >= 1 and dist.count_probs[c] > 0)
    if not positive:
        return 1
    probs = np.array([dist.count_probs[c] for c in positive], dtype=float)
    return int(positive[rng.choice(len(positive), p=probs / probs.sum())])


def _extent(pattern: ErrorPattern, position: int) -> tuple[int, int]:
    # the full matched region, context included, claimed to keep edits disjoint
    return position, position + len(pattern.correct_side)


def _quota_factor(
    error_type: str,
    type_quota: Mapping[str, float],
    realized: Mapping[str, int],
    floor: float,
) -> float:
    if not type_quota:
        return 1.0
    total = sum(realized.values())
    target = type_quota.get(error_type, 0.0)
    current = realized.get(error_type, 0) / total if total else 0.0
    return max(MIN_QUOTA_WEIGHT, target - current + floor)


def corrupt_sentence(
    sentence: TaggedSentence,
    store: PatternStore,
    n_errors: int,
    type_quota: Mapping[str, float],
    rng: np.random.Generator,
    realized_types: dict[str, int] | None = None,
    max_attempts: int = 100,
    quota_floor: float = QUOTA_FLOOR,
) -> InjectionRecord:
    """Apply up to n_errors sampled patterns to one clean sentence.

    realized_types is the running per-type tally shared across a corpus
    run; it is updated in place as patterns are applied.
    """
    if realized_types is None:
        realized_types = {}
    matches = store.match(sentence)
    chosen: list[tuple[ErrorPattern, int]] = []
    claimed: list[tuple[int, int]] = []
    attempts = 0
    while len(chosen) < n_errors and attempts < max_attempts:
        attempts += 1
        candidates = []
        for p, pos in matches:
            lo, hi = _extent(p, pos)
            if all(hi <= clo or chi <= lo for clo, chi in claimed):
                candidates.append((p, pos))
        if not candidates:
            break
        weights = np.array(
            [
                p.count * _quota_factor(p.error_type, type_quota, realized_types, quota_floor)
                for p, _ in candidates
            ],
            dtype=float,
        )
        pick = int(rng.choice(len(candidates), p=weights / weights.sum()))
        pattern, pos = candidates[pick]
        chosen.append((pattern, pos))
        claimed.append(_extent(pattern, pos))
        realized_types[pattern.error_type] = realized_types.get(pattern.error_type, 0) + 1

    # apply right to left: claimed extents are disjoint, so positions to the
    # left of each application are unaffected by the ones already applied
    entries = [[tok, LABEL_CORRECT] for tok in sentence.tokens]
    for pattern, pos in sorted(chosen, key=lambda c: -c[1]):
        start = pos + pattern.lead
        span_len = len(pattern.correct_side) - pattern.lead - pattern.trail
        replacement = pattern.incorrect_side[pattern.lead : len(pattern.incorrect_side) - pattern.trail]
        middle = [[Token(it.surface, it.pos), LABEL_INCORRECT] for it in replacement]
        entries = entries[:start] + middle + entries[start + span_len :]
        if not replacement:
            entries[min(start, len(entries) - 1)][1] = LABEL_INCORRECT
    labeled = LabeledSentence(
        tokens=tuple(e[0] for e in entries), labels=tuple(e[1] for e in entries)
    )
    return InjectionRecord(
        sentence_id=sentence.id,
        applied=tuple(chosen),
        result=labeled,
        requested_errors=n_errors,
    )


def corrupt_corpus(
    corpus: Sequence[TaggedSentence], store: PatternStore, config: InjectionConfig
) -> list[InjectionRecord]:
    """Corrupt a corpus, matching the background statistics; deterministic."""
    rng = np.random.default_rng(config.seed)
    n = len(corpus)
    n_untouched = int(n * config.background.correct_proportion + 0.5)
    order = rng.permutation(n)
    untouched = set(int(i) for i in order[:n_untouched])
    realized_types: dict[str, int] = {}
    records = []
    for idx, sentence in enumerate(corpus):
        if idx in untouched:
            records.append(
                InjectionRecord(
                    sentence_id=sentence.id,
                    applied=(),
                    result=LabeledSentence(sentence.tokens, (LABEL_CORRECT,) * len(sentence)),
                    requested_errors=0,
                )
            )
            continue
        n_errors = _sample_positive_count(config.background, rng)
        records.append(
            corrupt_sentence(
                sentence,
                store,
                n_errors,
                config.background.type_probs,
                rng,
                realized_types,
                max_attempts=config.max_attempts,
                quota_floor=config.quota_floor,
            )
        )
    return records


def generate_versions(
    corpus: Sequence[TaggedSentence], store: PatternStore, config: InjectionConfig, k: int
) -> list[list[InjectionRecord]]:
    """k independent corruptions of the corpus, seeded seed+0 .. seed+k-1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return [
        corrupt_corpus(corpus, store, replace(config, seed=config.seed + j)) for j in range(k)
    ]


def write_audit_log(records: Sequence[InjectionRecord], stream) -> None:
    """JSONL audit trail: per sentence, the requested count and applied patterns."""
    import json

    for rec in records:
        stream.write(
            json.dumps(
                {
                    "id": rec.sentence_id,
                    "requested": rec.requested_errors,
                    "applied": [
                        {"pattern": p.render(), "type": p.error_type, "position": pos}
                        for p, pos in rec.applied
                    ],
                    "exhausted": rec.exhausted,
                }
            )
            + "\n"
        )

"""Phrase-based translation of clean text into learner-style text.

The "translation model" treats corrected sentences as the source language
and the original learner sentences as the target, so decoding a clean
sentence produces a plausibly erroneous rendering of it. Word alignments
come from the token-level edit script (match and substitute ops are the
links), phrase pairs are the standard alignment-consistent blocks: at
least one internal link, no link crossing the block boundary, unaligned
boundary words absorbed, both sides at most max_len tokens.

Each pair carries relative-frequency probabilities in both directions and
the character-level Levenshtein distance between its space-joined sides.
Every source-side vocabulary token is guaranteed an identity entry: where
a token has observed translations their p(t|s) mass is rescaled by
(1 - floor) and the identity entry receives the remaining floor, so the
per-source distribution still sums to one. p(s|t) of synthesized identity
entries is set to the floor itself and that column is treated as a feature
score, not a strict distribution.

Decoding is monotone stack search. Hypotheses are recombined on (tokens
covered, last order-1 output words), each recombination node keeps a short
list of best derivations so an n-best list survives recombination, and
stacks are pruned to the beam width. Scores are linear in six features,
in this order throughout the module and its file formats:

    log p_lm(output)   log p(t|s)   log p(s|t)   char distance
    word count         phrase count

Tokens absent from the phrase table pass through as identity translations.
"""

from __future__ import annotations

import itertools
import math
from bisect import insort
from dataclasses import dataclass
from typing import Iterable, Sequence

from .align import (
    MATCH,
    EditScript,
    LabeledSentence,
    align_surfaces,
    char_distance,
    label_from_alignment,
)
from .corpus import PLACEHOLDER_TAG, FormatError, TaggedSentence, Token
from .lm import BOS, EOS

MAX_PHRASE_LEN = 7
IDENTITY_FLOOR = 0.05

DEFAULT_WEIGHTS = (0.5, 0.2, 0.2, -0.1, -1.0, -1.0)
FEATURE_NAMES = ("lm", "tgt_given_src", "src_given_tgt", "char_distance", "word_count", "phrase_count")


@dataclass(frozen=True)
class PhrasePair:
    source: tuple[str, ...]
    target: tuple[str, ...]
    p_tgt_src: float
    p_src_tgt: float
    char_dist: int

    def __post_init__(self):
        if not self.source or not self.target:
            raise ValueError("phrase pair sides must be non-empty")
        if not (0.0 < self.p_tgt_src <= 1.0 and 0.0 < self.p_src_tgt <= 1.0):
            raise ValueError("phrase probabilities must lie in (0, 1]")


class PhraseTable:
    """Immutable source-phrase → candidate-translations mapping."""

    def __init__(self, entries: Iterable[PhrasePair], max_len: int = MAX_PHRASE_LEN):
        table: dict[tuple[str, ...], list[PhrasePair]] = {}
        for pair in entries:
            if len(pair.source) > max_len or len(pair.target) > max_len:
                raise ValueError("phrase pair exceeds max_len=%d: %r" % (max_len, pair))
            table.setdefault(pair.source, []).append(pair)
        self._table = {
            src: tuple(sorted(pairs, key=lambda p: (-p.p_tgt_src, p.target)))
            for src, pairs in table.items()
        }
        self.max_len = max_len
        for src, pairs in self._table.items():
            total = sum(p.p_tgt_src for p in pairs)
            if total > 1.0 + 1e-9:
                raise ValueError("p(t|s) for source %r sums to %g > 1" % (" ".join(src), total))

    def lookup(self, span: Sequence[str]) -> tuple[PhrasePair, ...]:
        return self._table.get(tuple(span), ())

    def __len__(self) -> int:
        return sum(len(v) for v in self._table.values())

    def __iter__(self):
        for src in sorted(self._table):
            yield from self._table[src]

    def sources(self) -> list[tuple[str, ...]]:
        return sorted(self._table)


def alignment_links(script: EditScript) -> list[tuple[int, int]]:
    """(source index, target index) pairs from match and substitute ops.

    The script must have been produced by aligning corrected (as the first
    sequence) to original (as the second), so orig_index indexes the source
    side here and corr_index the target side.
    """
    return [
        (op.orig_index, op.corr_index)
        for op in script.ops
        if op.orig_index is not None and op.corr_index is not None
    ]


def extract_phrase_spans(
    n_src: int, n_tgt: int, links: Sequence[tuple[int, int]], max_len: int = MAX_PHRASE_LEN
) -> set[tuple[int, int, int, int]]:
    """All consistent (i1, i2, j1, j2) blocks, spans inclusive."""
    tgt_aligned = [False] * n_tgt
    for _, j in links:
        tgt_aligned[j] = True
    spans = set()
    for i1 in range(n_src):
        for i2 in range(i1, min(i1 + max_len, n_src)):
            linked = [j for s, j in links if i1 <= s <= i2]
            if not linked:
                continue
            j1, j2 = min(linked), max(linked)
            if any(not (i1 <= s <= i2) for s, j in links if j1 <= j <= j2):
                continue
            js = j1
            while True:
                je = j2
                while True:
                    if je - js < max_len:
                        spans.add((i1, i2, js, je))
                    je += 1
                    if je >= n_tgt or tgt_aligned[je]:
                        break
                js -= 1
                if js < 0 or tgt_aligned[js]:
                    break
    return spans


def extract_phrase_table(
    pairs: Iterable[tuple],
    max_len: int = MAX_PHRASE_LEN,
    identity_floor: float = IDENTITY_FLOOR,
) -> PhraseTable:
    """Count consistent phrase pairs over a corpus and estimate probabilities.

    `pairs` holds (corrected, original, EditScript) triples; each side may
    be a TaggedSentence or a plain sequence of surfaces. identity_floor
    guarantees an identity translation for every source vocabulary token.
    """
    if not 0.0 < identity_floor < 1.0:
        raise ValueError("identity_floor must lie in (0, 1)")
    counts: dict[tuple, int] = {}
    src_totals: dict[tuple, int] = {}
    tgt_totals: dict[tuple, int] = {}
    vocab: set[str] = set()
    seen_as_target: set[str] = set()
    for corrected, original, script in pairs:
        src = tuple(corrected.surfaces) if hasattr(corrected, "surfaces") else tuple(corrected)
        tgt = tuple(original.surfaces) if hasattr(original, "surfaces") else tuple(original)
        vocab.update(src)
        links = alignment_links(script)
        for i1, i2, j1, j2 in extract_phrase_spans(len(src), len(tgt), links, max_len):
            key = (src[i1 : i2 + 1], tgt[j1 : j2 + 1])
            counts[key] = counts.get(key, 0) + 1
            src_totals[key[0]] = src_totals.get(key[0], 0) + 1
            tgt_totals[key[1]] = tgt_totals.get(key[1], 0) + 1
            if len(key[1]) == 1:
                seen_as_target.add(key[1][0])

    by_source: dict[tuple, dict[tuple, PhrasePair]] = {}
    for (src, tgt), c in counts.items():
        by_source.setdefault(src, {})[tgt] = PhrasePair(
            src,
            tgt,
            c / src_totals[src],
            c / tgt_totals[tgt],
            char_distance(" ".join(src), " ".join(tgt)),
        )

    for word in vocab:
        src = (word,)
        existing = by_source.get(src)
        if existing is None:
            p_rev = identity_floor if word in seen_as_target else 1.0
            by_source[src] = {src: PhrasePair(src, src, 1.0, p_rev, 0)}
            continue
        rescaled = {}
        for tgt, pair in existing.items():
            rescaled[tgt] = PhrasePair(
                src, tgt, pair.p_tgt_src * (1.0 - identity_floor), pair.p_src_tgt, pair.char_dist
            )
        if src in rescaled:
            old = rescaled[src]
            rescaled[src] = PhrasePair(
                src, src, old.p_tgt_src + identity_floor, old.p_src_tgt, 0
            )
        else:
            rescaled[src] = PhrasePair(src, src, identity_floor, identity_floor, 0)
        by_source[src] = rescaled

    entries = [pair for targets in by_source.values() for pair in targets.values()]
    return PhraseTable(entries, max_len)


def write_phrase_table(table: PhraseTable, stream) -> None:
    """One pair per line: `source ||| target ||| p(t|s) p(s|t) lev ||| `."""
    for pair in table:
        for side in (pair.source, pair.target):
            for tok in side:
                if "|||" in tok or any(ch.isspace() for ch in tok):
                    raise ValueError("token %r cannot be serialized in a phrase table" % tok)
        stream.write(
            "%s ||| %s ||| %r %r %d ||| \n"
            % (" ".join(pair.source), " ".join(pair.target), pair.p_tgt_src, pair.p_src_tgt, pair.char_dist)
        )


def read_phrase_table(stream, max_len: int = MAX_PHRASE_LEN) -> PhraseTable:
    from .corpus import _as_lines

    entries = []
    for n, raw in enumerate(_as_lines(stream), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split("|||")]
        if len(fields) < 3:
            raise FormatError("line %d: expected `src ||| tgt ||| scores ||| `, got %r" % (n, line))
        scores = fields[2].split()
        if len(scores) != 3:
            raise FormatError("line %d: expected 3 scores, got %d" % (n, len(scores)))
        try:
            entries.append(
                PhrasePair(
                    tuple(fields[0].split()),
                    tuple(fields[1].split()),
                    float(scores[0]),
                    float(scores[1]),
                    int(scores[2]),
                )
            )
        except ValueError as exc:
            raise FormatError("line %d: %s" % (n, exc)) from None
    return PhraseTable(entries, max_len)


@dataclass(frozen=True)
class DecoderConfig:
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    beam_width: int = 100
    nbest: int = 10

    def __post_init__(self):
        if len(self.weights) != len(FEATURE_NAMES):
            raise ValueError("expected %d feature weights" % len(FEATURE_NAMES))
        if self.beam_width < 1 or self.nbest < 1:
            raise ValueError("beam_width and nbest must be >= 1")


@dataclass(frozen=True)
class Derivation:
    output: tuple[str, ...]
    segmentation: tuple[tuple[int, int, PhrasePair], ...]
    features: tuple[float, ...]
    score: float


def _dot(weights, features):
    return sum(w * f for w, f in zip(weights, features))


def _phrase_options(src: tuple[str, ...], table: PhraseTable) -> list[list[tuple[int, PhrasePair]]]:
    options: list[list[tuple[int, PhrasePair]]] = []
    for i in range(len(src)):
        here = []
        for L in range(1, min(table.max_len, len(src) - i) + 1):
            for pair in table.lookup(src[i : i + L]):
                here.append((i + L, pair))
        if not any(end == i + 1 for end, _ in here):
            word = src[i]
            here.append((i + 1, PhrasePair((word,), (word,), 1.0, 1.0, 0)))
        options.append(here)
    return options


def decode(sentence, table: PhraseTable, lm, config: DecoderConfig = DecoderConfig()) -> list[Derivation]:
    """Monotone beam search; up to nbest derivations with distinct outputs."""
    src = tuple(sentence.surfaces) if hasattr(sentence, "surfaces") else tuple(sentence)
    if not src:
        raise ValueError("cannot decode an empty sentence")
    weights = tuple(config.weights)
    ctx_len = max(lm.order - 1, 0)
    keep = config.nbest + 8  # slack so near-best entries survive recombination
    tick = itertools.count()

    options = _phrase_options(src, table)
    start_state = (BOS,)[:ctx_len]
    zero = (0.0,) * len(FEATURE_NAMES)
    # per stack: lm state -> ascending list of (-score, output, serial, feats, segmentation)
    stacks: list[dict[tuple, list]] = [{} for _ in range(len(src) + 1)]
    stacks[0][start_state] = [(0.0, (), next(tick), zero, ())]

    for covered in range(len(src)):
        stack = stacks[covered]
        if not stack:
            continue
        ranked = sorted(
            (entry[0], entry[1], state, entry)
            for state, entries in stack.items()
            for entry in entries
        )[: config.beam_width]
        survivors: dict[tuple, list] = {}
        for _, _, state, entry in ranked:
            survivors.setdefault(state, []).append(entry)

        for state, entries in survivors.items():
            for end, pair in options[covered]:
                lm_delta = 0.0
                history = state
                for word in pair.target:
                    lm_delta += lm.log_prob(word, history)
                    history = (history + (word,))[-ctx_len:] if ctx_len else ()
                delta = (
                    lm_delta,
                    math.log(pair.p_tgt_src),
                    math.log(pair.p_src_tgt),
                    float(pair.char_dist),
                    float(len(pair.target)),
                    1.0,
                )
                step = _dot(weights, delta)
                node = stacks[end].setdefault(history, [])
                for neg_score, output, _, feats, seg in entries:
                    new_out = output + pair.target
                    cand = (
                        neg_score - step,
                        new_out,
                        next(tick),
                        tuple(f + d for f, d in zip(feats, delta)),
                        seg + ((covered, end, pair),),
                    )
                    if len(node) >= keep and cand[:2] >= node[-1][:2]:
                        continue
                    # same state and output means identical continuations, so
                    # only the better of the two entries can ever matter
                    stale = next((i for i, held in enumerate(node) if held[1] == new_out), -1)
                    if stale >= 0:
                        if node[stale][:2] <= cand[:2]:
                            continue
                        del node[stale]
                    insort(node, cand)
                    del node[keep:]

    finals = []
    for state, entries in stacks[len(src)].items():
        eos = lm.log_prob(EOS, state)
        for _, output, _, feats, seg in entries:
            full = (feats[0] + eos,) + feats[1:]
            finals.append((-_dot(weights, full), output, full, seg))
    finals.sort(key=lambda e: e[:2])

    results = []
    seen_outputs = set()
    for neg, output, feats, seg in finals:
        if output in seen_outputs:
            continue
        seen_outputs.add(output)
        results.append(Derivation(output, seg, feats, -neg))
        if len(results) == config.nbest:
            break
    return results


def _labeled_output(source: TaggedSentence, derivation: Derivation) -> LabeledSentence:
    """Label the decoder output against its clean source sentence.

    Output tokens keep the source POS tag where the word is unchanged and
    get the placeholder tag where it is not (the output is untagged text).
    """
    out = derivation.output
    script = align_surfaces(out, source.surfaces)
    tags = [PLACEHOLDER_TAG] * len(out)
    for op in script.ops:
        if op.kind == MATCH:
            tags[op.orig_index] = source.tokens[op.corr_index].pos
    tokens = tuple(Token(surf, tag) for surf, tag in zip(out, tags))
    return label_from_alignment(TaggedSentence(tokens, id=source.id), script)


def generate_artificial(
    corpus: Sequence[TaggedSentence], table: PhraseTable, lm, config: DecoderConfig, k: int = 1
) -> list[list[LabeledSentence]]:
    """k corpora where version j takes each sentence's rank-j derivation.

    Sentences whose n-best list is shorter than k reuse their last (worst)
    derivation for the remaining versions.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > config.nbest:
        raise ValueError("k=%d exceeds the configured n-best size %d" % (k, config.nbest))
    versions: list[list[LabeledSentence]] = [[] for _ in range(k)]
    for sentence in corpus:
        derivations = decode(sentence, table, lm, config)
        for j in range(k):
            chosen = derivations[min(j, len(derivations) - 1)]
            versions[j].append(_labeled_output(sentence, chosen))
    return versions


def write_nbest(stream, sent_id: str, derivations: Sequence[Derivation]) -> None:
    """`sent_id ||| output ||| feature scores ||| total`, best first."""
    for d in derivations:
        stream.write(
            "%s ||| %s ||| %s ||| %r\n"
            % (sent_id, " ".join(d.output), " ".join(repr(f) for f in d.features), d.score)
        )


def read_nbest(stream) -> dict[str, list[tuple[tuple[str, ...], tuple[float, ...], float]]]:
    from .corpus import _as_lines

    lists: dict[str, list] = {}
    for n, raw in enumerate(_as_lines(stream), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split("|||")]
        if len(fields) != 4:
            raise FormatError("line %d: expected 4 `|||` fields, got %r" % (n, line))
        scores = tuple(float(x) for x in fields[2].split())
        if len(scores) != len(FEATURE_NAMES):
            raise FormatError("line %d: expected %d feature scores" % (n, len(FEATURE_NAMES)))
        lists.setdefault(fields[0], []).append((tuple(fields[1].split()), scores, float(fields[3])))
    return lists

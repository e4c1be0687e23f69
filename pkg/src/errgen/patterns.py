"""Transformation patterns over words and POS tags.

A pattern is a pair (incorrect phrase, correct phrase) harvested from an
aligned annotated pair: the tokens of one maximal run of non-match edit
ops, plus up to one token of context on each side where the sentence
allows it. Tokens whose word form differs between the two sides are kept
in full (`surface_POS`); context tokens match on POS alone. Example:

    original  "We went shop on Saturday"   (PPIS2 VVD VV0 II NP1)
    corrected "We went shopping on Saturday"
    pattern   (VVD shop_VV0 II, VVD shopping_VVG II)

For injection the patterns are used in reverse: the correct side is
matched against clean input and replaced by the incorrect side.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .align import DELETE, INSERT, MATCH, SUB, EditScript
from .corpus import AnnotatedPair, FormatError, TaggedSentence, Token, _as_lines

DEFAULT_THRESHOLD = 5
UNKNOWN_TYPE = "UNK"


@dataclass(frozen=True)
class PatternItem:
    """POS-only item when surface is None, full word form otherwise."""

    pos: str
    surface: str | None = None

    @property
    def is_word_form(self) -> bool:
        return self.surface is not None

    def matches(self, token: Token) -> bool:
        if self.surface is not None and self.surface != token.surface:
            return False
        return self.pos == token.pos

    def render(self) -> str:
        if self.surface is None:
            return self.pos
        return "%s_%s" % (self.surface, self.pos)

    @staticmethod
    def parse(text: str) -> "PatternItem":
        if "_" in text:
            surface, pos = text.rsplit("_", 1)
            return PatternItem(pos=pos, surface=surface)
        return PatternItem(pos=text)


@dataclass(frozen=True)
class ErrorPattern:
    incorrect_side: tuple[PatternItem, ...]
    correct_side: tuple[PatternItem, ...]
    error_type: str
    count: int = 1

    # number of shared context items on each flank
    lead: int = 0
    trail: int = 0

    def render(self) -> str:
        inc = " ".join(it.render() for it in self.incorrect_side)
        cor = " ".join(it.render() for it in self.correct_side)
        return "(%s, %s)" % (inc, cor)

    def key(self) -> tuple:
        return (self.incorrect_side, self.correct_side, self.error_type, self.lead, self.trail)


def _run_spans(ops, start: int, end: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Original/corrected index spans touched by ops[start:end]."""
    orig = [op.orig_index for op in ops[start:end] if op.orig_index is not None]
    corr = [op.corr_index for op in ops[start:end] if op.corr_index is not None]
    # cursor positions just before the run, for empty sides
    oc = cc = 0
    for op in ops[:start]:
        if op.orig_index is not None:
            oc = op.orig_index + 1
        if op.corr_index is not None:
            cc = op.corr_index + 1
    o_span = (orig[0], orig[-1] + 1) if orig else (oc, oc)
    c_span = (corr[0], corr[-1] + 1) if corr else (cc, cc)
    return o_span, c_span


def _spans_overlap(a: tuple[int, int], b: tuple[int, int]) -> bool:
    if a[0] == a[1]:
        return b[0] <= a[0] <= b[1]
    if b[0] == b[1]:
        return a[0] <= b[0] <= a[1]
    return a[0] < b[1] and b[0] < a[1]


def extract_patterns(pair: AnnotatedPair, script: EditScript) -> list[ErrorPattern]:
    """One pattern per maximal run of non-match ops in the alignment."""
    ops = script.ops
    out = []
    i = 0
    while i < len(ops):
        if ops[i].kind == MATCH:
            i += 1
            continue
        j = i
        while j < len(ops) and ops[j].kind != MATCH:
            j += 1
        pattern = _pattern_from_run(pair, ops, i, j)
        if pattern is not None:
            out.append(pattern)
        i = j
    return out


def _pattern_from_run(pair: AnnotatedPair, ops, start: int, end: int) -> ErrorPattern | None:
    (o_start, o_end), (c_start, c_end) = _run_spans(ops, start, end)
    has_lead = start > 0
    has_trail = end < len(ops)
    # an empty in-span side is only usable with context on both flanks
    if (o_start == o_end or c_start == c_end) and not (has_lead and has_trail):
        return None

    inc = []
    cor = []
    if has_lead:
        ctx = PatternItem(pos=pair.corrected.tokens[c_start - 1].pos)
        inc.append(ctx)
        cor.append(ctx)
    inc.extend(
        PatternItem(pos=t.pos, surface=t.surface) for t in pair.original.tokens[o_start:o_end]
    )
    cor.extend(
        PatternItem(pos=t.pos, surface=t.surface) for t in pair.corrected.tokens[c_start:c_end]
    )
    if has_trail:
        ctx = PatternItem(pos=pair.corrected.tokens[c_end].pos)
        inc.append(ctx)
        cor.append(ctx)
    if tuple(inc) == tuple(cor):
        return None

    error_type = UNKNOWN_TYPE
    for edit in pair.edits:
        if _spans_overlap((o_start, o_end), edit.orig_span):
            error_type = edit.type
            break
    return ErrorPattern(
        incorrect_side=tuple(inc),
        correct_side=tuple(cor),
        error_type=error_type,
        count=1,
        lead=1 if has_lead else 0,
        trail=1 if has_trail else 0,
    )


class PatternStore:
    """Frequency-filtered pattern collection indexed for correct-side lookup."""

    def __init__(self, patterns: Iterable[ErrorPattern], threshold: int = DEFAULT_THRESHOLD):
        if threshold < 1:
            raise ValueError("threshold must be >= 1")
        self.threshold = threshold
        kept = [p for p in patterns if p.count >= threshold]
        kept.sort(key=lambda p: (tuple(it.render() for it in p.correct_side), p.error_type,
                                 tuple(it.render() for it in p.incorrect_side)))
        self.patterns: tuple[ErrorPattern, ...] = tuple(kept)
        self.type_totals: dict[str, int] = {}
        self._by_first_pos: dict[str, list[ErrorPattern]] = {}
        for p in kept:
            self.type_totals[p.error_type] = self.type_totals.get(p.error_type, 0) + p.count
            self._by_first_pos.setdefault(p.correct_side[0].pos, []).append(p)

    def __len__(self) -> int:
        return len(self.patterns)

    def match(self, sentence: TaggedSentence) -> list[tuple[ErrorPattern, int]]:
        """All (pattern, start position) whose correct side matches; overlaps allowed."""
        tokens = sentence.tokens
        n = len(tokens)
        found = []
        for pos in range(n):
            for pattern in self._by_first_pos.get(tokens[pos].pos, ()):
                side = pattern.correct_side
                if pos + len(side) > n:
                    continue
                if all(item.matches(tokens[pos + k]) for k, item in enumerate(side)):
                    found.append((pattern, pos))
        return found


def build_store(
    corpus: Iterable[tuple[AnnotatedPair, EditScript]], threshold: int = DEFAULT_THRESHOLD
) -> PatternStore:
    """Aggregate patterns over a corpus; drop those below the frequency threshold."""
    counts: dict[tuple, ErrorPattern] = {}
    totals: dict[tuple, int] = {}
    for pair, script in corpus:
        for p in extract_patterns(pair, script):
            k = p.key()
            counts[k] = p
            totals[k] = totals.get(k, 0) + 1
    merged = [
        ErrorPattern(p.incorrect_side, p.correct_side, p.error_type, totals[k], p.lead, p.trail)
        for k, p in counts.items()
    ]
    return PatternStore(merged, threshold)


def match(store: PatternStore, sentence: TaggedSentence) -> list[tuple[ErrorPattern, int]]:
    return store.match(sentence)


def apply_pattern(
    tokens: Sequence[Token], pattern: ErrorPattern, position: int
) -> tuple[list[Token], list[int], int | None]:
    """Apply a reversed pattern at a matched position.

    Returns (new tokens, indices of introduced/altered tokens in the new
    sequence, index to mark when the application only removed tokens).
    The caller is responsible for having verified the match.
    """
    span_len = len(pattern.correct_side) - pattern.lead - pattern.trail
    replacement = pattern.incorrect_side[pattern.lead : len(pattern.incorrect_side) - pattern.trail]
    start = position + pattern.lead
    new_tokens = list(tokens[:start])
    for item in replacement:
        if item.surface is None:
            raise ValueError("pattern %s has a POS-only item inside the edited span" % pattern.render())
        new_tokens.append(Token(item.surface, item.pos))
    new_tokens.extend(tokens[start + span_len :])
    if replacement:
        return new_tokens, list(range(start, start + len(replacement))), None
    # pure removal: mark the token that now follows the deleted span
    return new_tokens, [], min(start, len(new_tokens) - 1)


def write_patterns(store: PatternStore, stream) -> None:
    """One `incorrect ||| correct ||| type ||| count` line per pattern."""
    stream.write("# errgen patterns v1 threshold=%d\n" % store.threshold)
    for p in store.patterns:
        for item in list(p.incorrect_side) + list(p.correct_side):
            if "|||" in item.pos or any(c.isspace() for c in item.pos) or "_" in item.pos:
                raise ValueError("POS tag %r cannot be serialized" % item.pos)
            if item.surface is not None and (
                "|||" in item.surface or any(c.isspace() for c in item.surface)
            ):
                raise ValueError("surface %r cannot be serialized" % item.surface)
        inc = " ".join(it.render() for it in p.incorrect_side)
        cor = " ".join(it.render() for it in p.correct_side)
        stream.write("%s ||| %s ||| %s ||| %d\n" % (inc, cor, p.error_type, p.count))


def read_patterns(stream) -> PatternStore:
    threshold = DEFAULT_THRESHOLD
    patterns = []
    for n, line in enumerate(_as_lines(stream), start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            for field in line.split():
                if field.startswith("threshold="):
                    threshold = int(field.split("=", 1)[1])
            continue
        fields = line.split(" ||| ")
        if len(fields) != 4:
            raise FormatError("line %d: expected 4 `|||` fields, got %r" % (n, line))
        inc = tuple(PatternItem.parse(t) for t in fields[0].split())
        cor = tuple(PatternItem.parse(t) for t in fields[1].split())
        lead = 1 if (inc and cor and not inc[0].is_word_form and inc[0] == cor[0]) else 0
        trail = 1 if (len(inc) > lead and len(cor) > lead and not inc[-1].is_word_form and inc[-1] == cor[-1]) else 0
        try:
            patterns.append(
                ErrorPattern(inc, cor, fields[2], int(fields[3]), lead, trail)
            )
        except ValueError as exc:
            raise FormatError("line %d: %s" % (n, exc)) from None
    return PatternStore(patterns, threshold)

"""Corpus formats and background error statistics.

All inputs arrive pre-tokenized; tagged input is additionally pre-tagged
with an arbitrary tagset (tags are opaque symbols). Supported formats:

* M2 annotation files: `S` lines with the tokenized learner sentence,
  `A` lines with `start end|||type|||replacement|||...` edits, stanzas
  separated by blank lines. When several annotators are present only
  annotator 0 is kept. `noop` edits contribute no corrections.
* Tagged TSV: one `surface<TAB>pos` token per line, blank line between
  sentences.
* Background statistics exported as JSON lines.

M2 carries no POS tags, so sentences parsed from it get the placeholder
tag "UNK"; attach_tags() merges tags in from sidecar tagged TSV files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

PLACEHOLDER_TAG = "UNK"


class FormatError(ValueError):
    """Malformed input file; message carries the line or stanza location."""


@dataclass(frozen=True)
class Token:
    surface: str
    pos: str

    def __post_init__(self):
        if not self.surface:
            raise ValueError("empty token surface")
        if not self.pos:
            raise ValueError("empty POS tag for token %r" % (self.surface,))


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[Token, ...]
    id: str = ""

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("sentence %r has no tokens" % (self.id,))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(t.pos for t in self.tokens)


@dataclass(frozen=True)
class Edit:
    """One annotated correction: token spans on both sides plus its type."""

    orig_span: tuple[int, int]
    corr_span: tuple[int, int]
    type: str


@dataclass(frozen=True)
class AnnotatedPair:
    original: TaggedSentence
    corrected: TaggedSentence
    edits: tuple[Edit, ...]


@dataclass
class ErrorCountDistribution:
    """Empirical per-sentence error statistics of a background corpus."""

    count_probs: dict[int, float]
    correct_proportion: float
    type_probs: dict[str, float]

    def __post_init__(self):
        for name, probs in (("count", self.count_probs), ("type", self.type_probs)):
            if probs:
                total = sum(probs.values())
                if abs(total - 1.0) > 1e-9:
                    raise ValueError("%s probabilities sum to %r, not 1" % (name, total))
                if any(p < 0 for p in probs.values()):
                    raise ValueError("negative %s probability" % name)
        if not 0.0 <= self.correct_proportion <= 1.0:
            raise ValueError("correct proportion %r outside [0, 1]" % self.correct_proportion)


def _stanzas(lines: Iterable[str]) -> Iterator[tuple[int, list[tuple[int, str]]]]:
    """Yield (first line number, [(line number, line), ...]) per stanza."""
    block: list[tuple[int, str]] = []
    start = 1
    for n, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if line.strip():
            if not block:
                start = n
            block.append((n, line))
        elif block:
            yield start, block
            block = []
    if block:
        yield start, block


def _as_lines(stream: str | Iterable[str]) -> Iterable[str]:
    if isinstance(stream, str):
        return stream.splitlines()
    return stream


def parse_m2(stream: str | Iterable[str]) -> list[AnnotatedPair]:
    """Parse an M2 file into annotated pairs (annotator 0 only).

    The corrected sentence is reconstructed by applying the kept edits
    right to left. Raises FormatError for malformed lines or spans that
    do not fit the sentence.
    """
    pairs = []
    for start_line, block in _stanzas(_as_lines(stream)):
        sent_id = str(len(pairs))
        orig_tokens: list[str] | None = None
        raw_edits: list[tuple[int, int, str, list[str]]] = []
        for n, line in block:
            if line.startswith("S ") or line == "S":
                if orig_tokens is not None:
                    raise FormatError("line %d: second S line in stanza" % n)
                orig_tokens = line[2:].split()
                if not orig_tokens:
                    raise FormatError("line %d: empty sentence" % n)
            elif line.startswith("A "):
                if orig_tokens is None:
                    raise FormatError("line %d: A line before S line" % n)
                fields = line[2:].split("|||")
                if len(fields) < 3:
                    raise FormatError("line %d: expected `start end|||type|||replacement|||...`" % n)
                span = fields[0].split()
                if len(span) != 2:
                    raise FormatError("line %d: bad edit span %r" % (n, fields[0]))
                try:
                    s, e = int(span[0]), int(span[1])
                except ValueError:
                    raise FormatError("line %d: non-integer edit span %r" % (n, fields[0])) from None
                etype = fields[1]
                annotator = 0
                if len(fields) >= 6:
                    try:
                        annotator = int(fields[5])
                    except ValueError:
                        raise FormatError("line %d: non-integer annotator id %r" % (n, fields[5])) from None
                if annotator != 0:
                    continue
                if etype == "noop" or (s, e) == (-1, -1):
                    continue
                replacement = [t for t in fields[2].split() if t]
                raw_edits.append((s, e, etype, replacement))
            else:
                raise FormatError("line %d: unrecognized line %r" % (n, line))
        if orig_tokens is None:
            raise FormatError("stanza at line %d: no S line" % start_line)
        pairs.append(_build_pair(sent_id, start_line, orig_tokens, raw_edits))
    return pairs


def _build_pair(
    sent_id: str,
    start_line: int,
    orig_tokens: list[str],
    raw_edits: list[tuple[int, int, str, list[str]]],
) -> AnnotatedPair:
    n = len(orig_tokens)
    raw_edits = sorted(raw_edits, key=lambda e: (e[0], e[1]))
    prev_end = 0
    for s, e, etype, _ in raw_edits:
        if not (0 <= s <= e <= n):
            raise FormatError(
                "stanza at line %d: edit span %d %d outside sentence of %d tokens" % (start_line, s, e, n)
            )
        if s < prev_end:
            raise FormatError("stanza at line %d: overlapping edit spans" % start_line)
        prev_end = max(prev_end, e if e > s else s)
    corrected = list(orig_tokens)
    for s, e, _, repl in reversed(raw_edits):
        corrected[s:e] = repl
    if not corrected:
        raise FormatError("stanza at line %d: edits delete the whole sentence" % start_line)
    edits = []
    offset = 0
    for s, e, etype, repl in raw_edits:
        cs = s + offset
        edits.append(Edit((s, e), (cs, cs + len(repl)), etype))
        offset += len(repl) - (e - s)
    tag = PLACEHOLDER_TAG
    return AnnotatedPair(
        original=TaggedSentence(tuple(Token(t, tag) for t in orig_tokens), id=sent_id),
        corrected=TaggedSentence(tuple(Token(t, tag) for t in corrected), id=sent_id),
        edits=tuple(edits),
    )


def serialize_m2(pairs: Sequence[AnnotatedPair]) -> str:
    """Inverse of parse_m2 (annotator 0, required-field conventions)."""
    out = []
    for pair in pairs:
        out.append("S " + " ".join(pair.original.surfaces))
        for edit in pair.edits:
            s, e = edit.orig_span
            cs, ce = edit.corr_span
            repl = " ".join(pair.corrected.surfaces[cs:ce])
            out.append("A %d %d|||%s|||%s|||REQUIRED|||-NONE-|||0" % (s, e, edit.type, repl))
        out.append("")
    return "\n".join(out)


def parse_tagged(stream: str | Iterable[str]) -> list[TaggedSentence]:
    """Parse tagged TSV (`surface<TAB>pos` lines, blank-line separated)."""
    sentences = []
    for _, block in _stanzas(_as_lines(stream)):
        tokens = []
        for n, line in block:
            fields = line.split("\t")
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise FormatError("line %d: expected `surface<TAB>pos`, got %r" % (n, line))
            tokens.append(Token(fields[0], fields[1]))
        sentences.append(TaggedSentence(tuple(tokens), id=str(len(sentences))))
    return sentences


def serialize_tagged(sentences: Sequence[TaggedSentence]) -> str:
    out = []
    for sent in sentences:
        for tok in sent.tokens:
            out.append("%s\t%s" % (tok.surface, tok.pos))
        out.append("")
    return "\n".join(out)


def attach_tags(
    pairs: Sequence[AnnotatedPair],
    original_tagged: Sequence[TaggedSentence],
    corrected_tagged: Sequence[TaggedSentence],
) -> list[AnnotatedPair]:
    """Merge sidecar POS tags into M2-parsed pairs, by sentence order.

    Surfaces must agree token for token; tags come from the sidecars.
    """
    if len(pairs) != len(original_tagged) or len(pairs) != len(corrected_tagged):
        raise FormatError(
            "sidecar length mismatch: %d pairs vs %d original / %d corrected sentences"
            % (len(pairs), len(original_tagged), len(corrected_tagged))
        )
    merged = []
    for pair, orig, corr in zip(pairs, original_tagged, corrected_tagged):
        for side, have, want in (("original", orig, pair.original), ("corrected", corr, pair.corrected)):
            if have.surfaces != want.surfaces:
                raise FormatError(
                    "sentence %s: %s sidecar surfaces do not match the M2 stanza" % (pair.original.id, side)
                )
        merged.append(
            AnnotatedPair(
                original=TaggedSentence(orig.tokens, id=pair.original.id),
                corrected=TaggedSentence(corr.tokens, id=pair.corrected.id),
                edits=pair.edits,
            )
        )
    return merged


def compute_background(pairs: Sequence[AnnotatedPair]) -> ErrorCountDistribution:
    """Empirical edits-per-sentence, correct-sentence and error-type stats."""
    if not pairs:
        raise ValueError("cannot compute background statistics of an empty corpus")
    counts: dict[int, int] = {}
    types: dict[str, int] = {}
    for pair in pairs:
        counts[len(pair.edits)] = counts.get(len(pair.edits), 0) + 1
        for edit in pair.edits:
            types[edit.type] = types.get(edit.type, 0) + 1
    n = len(pairs)
    total_edits = sum(types.values())
    return ErrorCountDistribution(
        count_probs={k: c / n for k, c in sorted(counts.items())},
        correct_proportion=counts.get(0, 0) / n,
        type_probs={t: c / total_edits for t, c in sorted(types.items())} if total_edits else {},
    )


def write_background(dist: ErrorCountDistribution, stream) -> None:
    """JSONL export: one record per line, deterministic order."""
    stream.write(json.dumps({"record": "correct_proportion", "value": dist.correct_proportion}) + "\n")
    for count in sorted(dist.count_probs):
        stream.write(json.dumps({"record": "count", "count": count, "p": dist.count_probs[count]}) + "\n")
    for etype in sorted(dist.type_probs):
        stream.write(json.dumps({"record": "type", "type": etype, "p": dist.type_probs[etype]}) + "\n")


def read_background(stream: str | Iterable[str]) -> ErrorCountDistribution:
    correct = None
    count_probs: dict[int, float] = {}
    type_probs: dict[str, float] = {}
    for n, line in enumerate(_as_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            kind = rec["record"]
        except (json.JSONDecodeError, TypeError, KeyError) as exc:
            raise FormatError("line %d: bad background record (%s)" % (n, exc)) from None
        if kind == "correct_proportion":
            correct = float(rec["value"])
        elif kind == "count":
            count_probs[int(rec["count"])] = float(rec["p"])
        elif kind == "type":
            type_probs[str(rec["type"])] = float(rec["p"])
        else:
            raise FormatError("line %d: unknown record kind %r" % (n, kind))
    if correct is None:
        raise FormatError("background file lacks a correct_proportion record")
    return ErrorCountDistribution(count_probs, correct, type_probs)

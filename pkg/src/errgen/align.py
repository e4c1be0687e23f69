"""Token-level Levenshtein alignment and binary token labeling.

Alignment compares token surfaces case-sensitively; POS tags play no role
in the edit cost. Among equal-cost alignments the canonical script prefers
substitution over an insert/delete pair, then the op advancing the original
sentence first, so scripts are deterministic.

Labels: a token of the original sentence is "i" (incorrect) when it is
substituted or deleted; an insertion (a word missing from the original)
marks the original token immediately after the insertion point, or the
last token when the insertion is sentence-final.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .corpus import TaggedSentence, Token

LABEL_CORRECT = "c"
LABEL_INCORRECT = "i"

MATCH = "match"
SUB = "sub"
DELETE = "del"
INSERT = "ins"

_OP_NAMES = {
    _kernels.OP_MATCH: MATCH,
    _kernels.OP_SUB: SUB,
    _kernels.OP_DEL: DELETE,
    _kernels.OP_INS: INSERT,
}


@dataclass(frozen=True)
class EditOp:
    kind: str
    orig_index: int | None = None
    corr_index: int | None = None


@dataclass(frozen=True)
class EditScript:
    ops: tuple[EditOp, ...]
    cost: int


@dataclass(frozen=True)
class LabeledSentence:
    tokens: tuple[Token, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise ValueError("%d tokens but %d labels" % (len(self.tokens), len(self.labels)))
        if any(l not in (LABEL_CORRECT, LABEL_INCORRECT) for l in self.labels):
            raise ValueError("labels must be %r or %r" % (LABEL_CORRECT, LABEL_INCORRECT))

    def __len__(self) -> int:
        return len(self.tokens)


def _intern_ids(a: Sequence[str], b: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    table: dict[str, int] = {}
    ids_a = np.fromiter((table.setdefault(s, len(table)) for s in a), dtype=np.int32, count=len(a))
    ids_b = np.fromiter((table.setdefault(s, len(table)) for s in b), dtype=np.int32, count=len(b))
    return ids_a, ids_b


def align_surfaces(a: Sequence[str], b: Sequence[str]) -> EditScript:
    """Canonical minimal edit script turning token sequence a into b."""
    ids_a, ids_b = _intern_ids(a, b)
    cost, raw_ops = _kernels.edit_script(ids_a, ids_b)
    ops = []
    i = j = 0
    for code in raw_ops:
        kind = _OP_NAMES[code]
        if kind == MATCH or kind == SUB:
            ops.append(EditOp(kind, orig_index=i, corr_index=j))
            i += 1
            j += 1
        elif kind == DELETE:
            ops.append(EditOp(kind, orig_index=i))
            i += 1
        else:
            ops.append(EditOp(kind, corr_index=j))
            j += 1
    return EditScript(tuple(ops), cost)


def align_tokens(a: TaggedSentence, b: TaggedSentence) -> EditScript:
    return align_surfaces(a.surfaces, b.surfaces)


def apply_script(script: EditScript, a: Sequence[str], b: Sequence[str]) -> list[str]:
    """Replay script on sequence a, taking inserted/substituted tokens from b."""
    out = []
    for op in script.ops:
        if op.kind == MATCH:
            out.append(a[op.orig_index])
        elif op.kind in (SUB, INSERT):
            out.append(b[op.corr_index])
        # deletions emit nothing
    return out


def char_distance(a: str, b: str) -> int:
    """Character-level Levenshtein distance."""
    ids_a = np.frombuffer(a.encode("utf-32-le"), dtype=np.int32)
    ids_b = np.frombuffer(b.encode("utf-32-le"), dtype=np.int32)
    return _kernels.edit_cost(ids_a, ids_b)


def label_from_alignment(original: TaggedSentence, script: EditScript) -> LabeledSentence:
    """Binary labels for the original sentence given its edit script."""
    n = len(original)
    incorrect = [False] * n
    orig_cursor = 0
    for op in script.ops:
        if op.kind in (MATCH, SUB, DELETE):
            if op.orig_index is None or not 0 <= op.orig_index < n:
                raise ValueError("op %r indexes outside the original sentence" % (op,))
            if op.kind != MATCH:
                incorrect[op.orig_index] = True
            orig_cursor = op.orig_index + 1
        else:  # insertion: mark the following original token, or the last one
            incorrect[min(orig_cursor, n - 1)] = True
    labels = tuple(LABEL_INCORRECT if bad else LABEL_CORRECT for bad in incorrect)
    return LabeledSentence(original.tokens, labels)


def write_labeled_tsv(sentences: Sequence[LabeledSentence], stream) -> None:
    """`surface<TAB>pos<TAB>{c|i}` per token, blank line between sentences."""
    for sent in sentences:
        for tok, label in zip(sent.tokens, sent.labels):
            stream.write("%s\t%s\t%s\n" % (tok.surface, tok.pos, label))
        stream.write("\n")


def read_labeled_tsv(stream) -> list[LabeledSentence]:
    from .corpus import FormatError, _as_lines, _stanzas

    sentences = []
    for _, block in _stanzas(_as_lines(stream)):
        tokens = []
        labels = []
        for n, line in block:
            fields = line.split("\t")
            if len(fields) != 3 or fields[2] not in (LABEL_CORRECT, LABEL_INCORRECT):
                raise FormatError("line %d: expected `surface<TAB>pos<TAB>{c|i}`, got %r" % (n, line))
            tokens.append(Token(fields[0], fields[1]))
            labels.append(fields[2])
        sentences.append(LabeledSentence(tuple(tokens), tuple(labels)))
    return sentences

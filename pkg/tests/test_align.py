"""Token alignment, labeling conventions, character distance."""

import io

import numpy as np
import pytest

from errgen.align import (
    DELETE,
    INSERT,
    LABEL_CORRECT,
    LABEL_INCORRECT,
    MATCH,
    SUB,
    EditOp,
    EditScript,
    LabeledSentence,
    align_surfaces,
    align_tokens,
    apply_script,
    char_distance,
    label_from_alignment,
    read_labeled_tsv,
    write_labeled_tsv,
)
from errgen.corpus import FormatError, TaggedSentence, Token

import oracles


def _sent(text, pos="X"):
    return TaggedSentence(tuple(Token(w, pos) for w in text.split()))


def _random_words(rng, n, vocab=6):
    return ["w%d" % k for k in rng.integers(0, vocab, size=n)]


def test_fuzz_against_forward_dp_oracle():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        a = _random_words(rng, rng.integers(0, 15))
        b = _random_words(rng, rng.integers(0, 15))
        script = align_surfaces(a, b)
        assert script.cost == oracles.edit_distance(a, b)
        assert apply_script(script, a, b) == b
        assert sum(1 for op in script.ops if op.kind != MATCH) == script.cost


def test_indices_are_monotone_and_complete():
    rng = np.random.default_rng(8)
    for _ in range(200):
        a = _random_words(rng, rng.integers(0, 12))
        b = _random_words(rng, rng.integers(0, 12))
        script = align_surfaces(a, b)
        i = j = 0
        for op in script.ops:
            if op.kind in (MATCH, SUB):
                assert op.orig_index == i and op.corr_index == j
                i += 1
                j += 1
            elif op.kind == DELETE:
                assert op.orig_index == i and op.corr_index is None
                i += 1
            else:
                assert op.corr_index == j and op.orig_index is None
                j += 1
        assert (i, j) == (len(a), len(b))


def test_canonical_tie_breaks():
    assert align_surfaces(["x"], ["y"]).ops == (EditOp(SUB, 0, 0),)
    assert [op.kind for op in align_surfaces(["a", "b"], ["b", "a"]).ops] == [SUB, SUB]
    assert [op.kind for op in align_surfaces(["a", "b"], ["b"]).ops] == [DELETE, MATCH]
    assert [op.kind for op in align_surfaces(["b"], ["a", "b"]).ops] == [INSERT, MATCH]


def test_substitution_marks_the_token():
    original = _sent("We is here")
    corrected = _sent("We are here")
    labeled = label_from_alignment(original, align_tokens(original, corrected))
    assert labeled.labels == ("c", "i", "c")


def test_deletion_marks_the_extra_token():
    original = _sent("We are are here")
    corrected = _sent("We are here")
    labeled = label_from_alignment(original, align_tokens(original, corrected))
    assert labeled.labels == ("c", "c", "i", "c")


def test_insertion_marks_the_following_token():
    original = _sent("We here")
    corrected = _sent("We are here")
    labeled = label_from_alignment(original, align_tokens(original, corrected))
    assert labeled.labels == ("c", "i")


def test_sentence_final_insertion_marks_the_last_token():
    original = _sent("We are")
    corrected = _sent("We are here")
    labeled = label_from_alignment(original, align_tokens(original, corrected))
    assert labeled.labels == ("c", "i")


def test_label_counts_bound_by_cost():
    rng = np.random.default_rng(11)
    for _ in range(300):
        a = _random_words(rng, rng.integers(1, 12))
        b = _random_words(rng, rng.integers(0, 12))
        original = TaggedSentence(tuple(Token(w, "X") for w in a))
        script = align_surfaces(a, b)
        labeled = label_from_alignment(original, script)
        flagged = labeled.labels.count(LABEL_INCORRECT)
        assert flagged <= script.cost
        if script.cost == 0:
            assert flagged == 0


def test_char_distance():
    assert char_distance("shop", "shopping") == 4
    assert char_distance("", "abc") == 3
    assert char_distance("same", "same") == 0
    assert char_distance("café", "cafe") == 1
    assert char_distance("went shop", "went shopping") == 4


def test_labeled_sentence_validation():
    tokens = (Token("a", "X"),)
    with pytest.raises(ValueError):
        LabeledSentence(tokens, ("c", "i"))
    with pytest.raises(ValueError):
        LabeledSentence(tokens, ("bogus",))
    assert len(LabeledSentence(tokens, (LABEL_CORRECT,))) == 1


def test_labeled_tsv_round_trip():
    sentences = [
        LabeledSentence(
            (Token("We", "PPIS2"), Token("went", "VVD"), Token("shop", "VV0")),
            ("c", "c", "i"),
        ),
        LabeledSentence((Token(".", "PU"),), ("c",)),
    ]
    buf = io.StringIO()
    write_labeled_tsv(sentences, buf)
    back = read_labeled_tsv(buf.getvalue())
    assert back == sentences


def test_labeled_tsv_rejects_bad_label():
    with pytest.raises(FormatError) as err:
        read_labeled_tsv("We\tPPIS2\tc\nwent\tVVD\tq\n")
    assert "line 2" in str(err.value)


def test_apply_script_handles_empty_sides():
    script = align_surfaces([], ["a", "b"])
    assert apply_script(script, [], ["a", "b"]) == ["a", "b"]
    script = align_surfaces(["a", "b"], [])
    assert apply_script(script, ["a", "b"], []) == []

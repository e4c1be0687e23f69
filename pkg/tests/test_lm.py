"""Modified Kneser-Ney n-gram model and ARPA round trip."""

import io
import math

import numpy as np
import pytest

from errgen.corpus import FormatError
from errgen.lm import (
    BOS,
    EOS,
    UNK,
    NGramLM,
    read_arpa,
    sequence_log_prob,
    train_lm,
    write_arpa,
)

import oracles
import synthworld

TOY = [["a", "b", "a", "b"]]


def _normalization_error(lm, context):
    return abs(sum(lm.prob(w, context) for w in lm.vocab) - 1.0)


def test_hand_oracle_toy_corpus():
    lm = train_lm(TOY, order=2)
    oracle = oracles.kn_hand_oracle()
    assert lm.vocab == {"a", "b", EOS, UNK}
    for word, p in oracle["unigrams"].items():
        assert lm.prob(word) == pytest.approx(p, abs=1e-12)
    for (ctx, word), p in oracle["bigrams"].items():
        assert lm.prob(word, (ctx,)) == pytest.approx(p, abs=1e-12)
    for k, expected in oracle["discounts"].items():
        assert lm._discounts[k] == pytest.approx(expected, abs=1e-12)


def test_toy_normalization_is_exact():
    lm = train_lm(TOY, order=2)
    for context in ((), ("a",), ("b",), (BOS,), ("never-seen",)):
        assert _normalization_error(lm, context) < 1e-12


def test_normalization_on_synthetic_corpus():
    corpus = [s.surfaces for s in synthworld.clean_corpus(600, seed=51)]
    lm = train_lm(corpus, order=5)
    rng = np.random.default_rng(5)
    sentences = [s.surfaces for s in synthworld.clean_corpus(100, seed=52)]
    for _ in range(150):
        sent = sentences[rng.integers(len(sentences))]
        k = int(rng.integers(0, min(4, len(sent)) + 1))
        start = int(rng.integers(0, len(sent) - k + 1))
        context = (BOS,) + sent[start : start + k] if rng.random() < 0.3 else sent[start : start + k]
        assert _normalization_error(lm, context) < 1e-9


def test_probabilities_strictly_positive():
    corpus = [s.surfaces for s in synthworld.clean_corpus(300, seed=53)]
    lm = train_lm(corpus, order=4)
    contexts = [(), ("the",), ("the", "dog"), ("xyzzy",), (BOS,), ("dog", "xyzzy", "runs")]
    for ctx in contexts:
        for w in list(lm.vocab)[:20] + ["totally-unseen"]:
            assert lm.prob(w, ctx) > 0.0


def test_unseen_context_backs_off_to_shorter():
    lm = train_lm(TOY, order=2)
    assert lm.prob("a", ("never-seen",)) == pytest.approx(lm.prob("a", ()), abs=1e-15)


def test_reserved_symbols_rejected():
    for bad in (BOS, EOS, UNK):
        with pytest.raises(ValueError):
            train_lm([["a", bad, "b"]], order=2)


def test_order_validation():
    with pytest.raises(ValueError):
        train_lm(TOY, order=0)
    with pytest.raises(ValueError):
        train_lm([], order=2)


def test_unigram_only_model():
    lm = train_lm(TOY, order=1)
    assert _normalization_error(lm, ()) < 1e-12
    # context is ignored at order 1
    assert lm.prob("a", ("b",)) == lm.prob("a")


def test_sequence_log_prob_matches_stepwise():
    corpus = [s.surfaces for s in synthworld.clean_corpus(200, seed=54)]
    lm = train_lm(corpus, order=3)
    sent = corpus[7]
    total = lm.prob(sent[0], (BOS,))
    manual = math.log(total)
    history = (BOS, sent[0])
    for tok in list(sent[1:]) + [EOS]:
        manual += math.log(lm.prob(tok, history))
        history = (history + (tok,))[-2:]
    assert sequence_log_prob(lm, sent) == pytest.approx(manual, rel=1e-12)


def test_fallback_discount_warnings_on_sparse_data():
    lm = train_lm([["q", "r"]], order=3)
    assert lm.warnings
    for k, (d1, d2, d3) in lm._discounts.items():
        assert d1 > 0 and d2 > 0 and d3 > 0


def test_unknown_words_map_to_unk():
    lm = train_lm(TOY, order=2)
    assert lm.prob("zzz", ("a",)) == lm.prob(UNK, ("a",))
    assert lm.prob("a", ("zzz",)) == lm.prob("a", (UNK,))


def test_arpa_round_trip_probabilities():
    corpus = [s.surfaces for s in synthworld.clean_corpus(300, seed=55)]
    lm = train_lm(corpus, order=4)
    buf = io.StringIO()
    write_arpa(lm, buf)
    arpa = read_arpa(buf.getvalue())
    assert arpa.order == lm.order
    rng = np.random.default_rng(9)
    words = sorted(lm.vocab)
    test_words = [words[i] for i in rng.integers(0, len(words), size=30)] + [EOS, UNK, "unseen"]
    contexts = [
        (),
        (BOS,),
        ("the",),
        ("the", "dog"),
        ("unseen-context",),
        (BOS, "the", "dog"),
        ("dog", "runs", "in"),
    ]
    for ctx in contexts:
        for w in test_words:
            assert arpa.prob(w, ctx) == pytest.approx(lm.prob(w, ctx), rel=1e-10)


def test_arpa_text_shape():
    lm = train_lm(TOY, order=2)
    buf = io.StringIO()
    write_arpa(lm, buf)
    text = buf.getvalue()
    lines = text.splitlines()
    assert lines[0] == "\\data\\"
    assert lines[-1] == "\\end\\"
    counts = {}
    for line in lines:
        if line.startswith("ngram"):
            k, n = line.split()[1].split("=")
            counts[int(k)] = int(n)
    assert set(counts) == {1, 2}
    # declared counts match emitted rows
    in_section = 0
    seen = {1: 0, 2: 0}
    for line in lines:
        if line.startswith("\\") and line.endswith("-grams:"):
            in_section = int(line[1])
        elif line.startswith("\\"):
            in_section = 0
        elif line.strip() and in_section:
            seen[in_section] += 1
    assert seen == counts
    assert "-99.0\t%s" % BOS in text
    assert any(UNK in line for line in lines)


def test_read_arpa_errors():
    lm = train_lm(TOY, order=2)
    buf = io.StringIO()
    write_arpa(lm, buf)
    good = buf.getvalue()

    with pytest.raises(FormatError):
        read_arpa("no header here\n")
    # a declared count that does not match the section
    broken = good.replace("ngram 1=", "ngram 1=9")
    with pytest.raises(FormatError) as err:
        read_arpa(broken)
    assert "1-gram" in str(err.value)
    with pytest.raises(FormatError):
        read_arpa(good.replace("\\2-grams:", "\\x-grams:"))
    # an entry whose gram length does not match its section
    with pytest.raises(FormatError):
        read_arpa(good.replace("\\2-grams:\n", "\\2-grams:\n-0.5\tlonely\n", 1))


def test_cache_does_not_change_answers():
    lm = train_lm(TOY, order=2)
    first = lm.prob("b", ("a",))
    again = lm.prob("b", ("a",))
    assert first == again == pytest.approx(5 / 16, abs=1e-12)

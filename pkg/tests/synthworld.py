"""Synthetic benchmark world shared by the test suite.

A tiny invented language with a fixed tagset and sentence templates, plus
a bank of 40 planted error rules grouped into six error types:

    AG  agreement        runs -> run            (10 rules)
    WF  word form        dogs -> dog            (6)
    MD  missing word     the dog -> dog         (6)
    UW  unnecessary word run -> to run          (6)
    RP  wrong preposition in -> on              (8)
    SP  spelling         because -> becuase     (4)

Clean sentences come from templates; corrupting one samples an error
count from a background distribution, picks that many non-overlapping
rule sites, and applies them, producing AnnotatedPair objects whose edits
carry the planted error types. Everything is driven by numpy generators,
so corpora are reproducible from a single seed.
"""

from __future__ import annotations

import numpy as np

from errgen.align import align_tokens, label_from_alignment
from errgen.corpus import AnnotatedPair, Edit, TaggedSentence, Token

NOUNS_SG = ("dog", "cat", "man", "woman", "child", "house", "tree", "book", "car", "city")
NOUNS_PL = ("dogs", "cats", "men", "women", "children", "houses", "trees", "books", "cars", "cities")
VERBS_Z = ("runs", "sees", "likes", "finds", "takes", "gives", "makes", "keeps", "wants", "holds")
VERBS_0 = ("run", "see", "like", "find", "take", "give", "make", "keep", "want", "hold")
PREPS = ("in", "on", "at", "with", "by", "from", "of", "for")
ADJS = ("big", "small", "old", "new", "good", "bad", "different", "beautiful", "interesting")
ADVS = ("often", "always", "never", "soon")

MD_NOUNS = NOUNS_SG[:6]
UW_VERBS = VERBS_0[:6]
RP_MAP = {"in": "on", "on": "at", "at": "in", "with": "by", "by": "from", "from": "of", "of": "for", "for": "with"}
SP_MAP = {
    "because": "becuase",
    "different": "diferent",
    "beautiful": "beutiful",
    "interesting": "intresting",
}

# surface -> (error type, erroneous token); the 28 single-token substitutions
SUB_RULES: dict[str, tuple[str, Token]] = {}
for _z, _b in zip(VERBS_Z, VERBS_0):
    SUB_RULES[_z] = ("AG", Token(_b, "VV0"))
for _pl, _sg in zip(NOUNS_PL[:6], NOUNS_SG[:6]):
    SUB_RULES[_pl] = ("WF", Token(_sg, "NN1"))
for _src, _dst in RP_MAP.items():
    SUB_RULES[_src] = ("RP", Token(_dst, "II"))
for _src, _dst in SP_MAP.items():
    SUB_RULES[_src] = ("SP", Token(_dst, "CS" if _src == "because" else "JJ"))

RULE_COUNT = len(SUB_RULES) + len(MD_NOUNS) + len(UW_VERBS)

DEFAULT_COUNT_PROBS = {0: 0.30, 1: 0.45, 2: 0.20, 3: 0.05}

# template slots: literal words or category symbols
_TEMPLATES = (
    ("the", "N1", "VZ", "P", "the", "J", "N1", "."),
    ("the", "J", "N2", "V0", "P", "the", "N1", "."),
    ("a", "N1", "VZ", "the", "N2", "."),
    ("the", "N2", "V0", "R", "P", "the", "J", "N1", "."),
    ("the", "N1", "VZ", "because", "the", "N2", "V0", "."),
    ("a", "J", "N1", "VZ", "the", "N1", "P", "the", "N2", "."),
    ("the", "N2", "V0", "the", "J", "N1", "."),
    ("the", "N1", "VZ", "P", "a", "N1", "."),
)

# longer templates over restricted pools (N1r/N2r/V0r draw only from the
# rule-covered words) so every sentence offers several disjoint,
# type-diverse rule sites; used for injector distribution checks
_RICH_TEMPLATES = (
    ("the", "N1r", "VZ", "P", "the", "J", "N1r", "because", "the", "N2r", "V0r", "P", "the", "N2r", "."),
    ("the", "N2r", "V0r", "P", "the", "N1r", "because", "the", "N1r", "VZ", "the", "J", "N2r", "."),
    ("a", "J", "N1r", "VZ", "P", "the", "N1r", "P", "the", "N2r", "V0r", "R", "."),
    ("the", "N1r", "VZ", "the", "N2r", "because", "the", "N2r", "V0r", "P", "the", "J", "N1r", "."),
)

_LITERAL_TAGS = {"the": "AT", "a": "AT", "because": "CS", ".": "PU"}
_SLOT_POOLS = {
    "N1": [Token(w, "NN1") for w in NOUNS_SG],
    "N2": [Token(w, "NN2") for w in NOUNS_PL],
    "VZ": [Token(w, "VVZ") for w in VERBS_Z],
    "V0": [Token(w, "VV0") for w in VERBS_0],
    "P": [Token(w, "II") for w in PREPS],
    "J": [Token(w, "JJ") for w in ADJS],
    "R": [Token(w, "RR") for w in ADVS],
    "N1r": [Token(w, "NN1") for w in MD_NOUNS],
    "N2r": [Token(w, "NN2") for w in NOUNS_PL[:6]],
    "V0r": [Token(w, "VV0") for w in UW_VERBS],
}


def clean_sentence(rng: np.random.Generator, sent_id: str = "", rich: bool = False) -> TaggedSentence:
    family = _RICH_TEMPLATES if rich else _TEMPLATES
    template = family[rng.integers(len(family))]
    tokens = []
    for slot in template:
        if slot in _LITERAL_TAGS:
            tokens.append(Token(slot, _LITERAL_TAGS[slot]))
        else:
            pool = _SLOT_POOLS[slot]
            tokens.append(pool[rng.integers(len(pool))])
    return TaggedSentence(tuple(tokens), id=sent_id)


def clean_corpus(n: int, seed: int = 0, rich: bool = False) -> list[TaggedSentence]:
    rng = np.random.default_rng(seed)
    return [clean_sentence(rng, sent_id=str(i), rich=rich) for i in range(n)]


def _rule_sites(tokens: tuple[Token, ...]) -> list[tuple[int, int, str, tuple[Token, ...]]]:
    """(start, clean length, error type, replacement tokens) per applicable rule."""
    sites = []
    for i, tok in enumerate(tokens):
        sub = SUB_RULES.get(tok.surface)
        if sub is not None:
            sites.append((i, 1, sub[0], (sub[1],)))
        if tok.pos == "AT" and i + 1 < len(tokens) and tokens[i + 1].surface in MD_NOUNS:
            sites.append((i, 2, "MD", (tokens[i + 1],)))
        if tok.surface in UW_VERBS:
            sites.append((i, 1, "UW", (Token("to", "TO"), tok)))
    return sites


def corrupt_clean(
    sentence: TaggedSentence,
    n_errors: int,
    rng: np.random.Generator,
) -> AnnotatedPair:
    """Plant up to n_errors non-overlapping rule applications."""
    tokens = sentence.tokens
    sites = _rule_sites(tokens)
    chosen: list[tuple[int, int, str, tuple[Token, ...]]] = []
    available = list(sites)
    while available and len(chosen) < n_errors:
        pick = int(rng.integers(len(available)))
        site = available.pop(pick)
        s, length = site[0], site[1]
        if all(s + length <= c[0] or c[0] + c[1] <= s for c in chosen):
            chosen.append(site)
    chosen.sort(key=lambda c: c[0])

    original: list[Token] = []
    edits = []
    cursor = 0
    offset = 0
    for s, length, etype, replacement in chosen:
        original.extend(tokens[cursor:s])
        original.extend(replacement)
        edits.append(Edit((s + offset, s + offset + len(replacement)), (s, s + length), etype))
        offset += len(replacement) - length
        cursor = s + length
    original.extend(tokens[cursor:])
    return AnnotatedPair(
        original=TaggedSentence(tuple(original), id=sentence.id),
        corrected=sentence,
        edits=tuple(edits),
    )


def annotated_corpus(
    n: int,
    seed: int = 0,
    count_probs: dict[int, float] = DEFAULT_COUNT_PROBS,
    rich: bool = False,
) -> list[AnnotatedPair]:
    rng = np.random.default_rng(seed)
    counts = sorted(count_probs)
    probs = np.array([count_probs[c] for c in counts], dtype=float)
    probs /= probs.sum()
    pairs = []
    for i in range(n):
        clean = clean_sentence(rng, sent_id=str(i), rich=rich)
        n_errors = int(counts[rng.choice(len(counts), p=probs)])
        pairs.append(corrupt_clean(clean, n_errors, rng))
    return pairs


def gold_labeled(pairs) -> list:
    """Gold detector labels for the original side of each pair."""
    return [label_from_alignment(p.original, align_tokens(p.original, p.corrected)) for p in pairs]

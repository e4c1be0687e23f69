"""Interpolated modified Kneser-Ney n-gram language model.

Training follows the Chen & Goodman formulation. With n_k the number of
grams of a given order whose adjusted count is exactly k:

    Y   = n1 / (n1 + 2*n2)
    D1  = 1 - 2*Y*n2/n1        (applied to count-1 grams)
    D2  = 2 - 3*Y*n3/n2        (count-2 grams)
    D3+ = 3 - 4*Y*n4/n3        (count >= 3)

and the interpolated estimate at order k with context c is

    p(w|c) = max(a(c.w) - D(a), 0) / a(c) + gamma(c) * p'(w|c[1:])
    gamma(c) = (D1*N1(c.) + D2*N2(c.) + D3+*N3+(c.)) / a(c)

where a() are adjusted counts: raw counts at the highest order,
continuation counts (number of distinct left extensions) below, except
that grams starting with the sentence-start symbol keep raw counts since
nothing can precede them. The unigram level interpolates with the uniform
distribution over the prediction vocabulary, so every conditional
distribution sums to one exactly, unknown words included.

When an n_k needed by a discount formula is zero (corpus too small), or a
computed discount comes out non-positive (degenerate count-of-count
profile), that discount falls back to 0.75 and a warning is recorded on
the model; a positive discount at every order keeps every conditional
probability strictly positive.

Sentences are padded with one "<s>" and one "</s>"; queries near the
sentence start simply use the shorter context. "<unk>" absorbs unknown
words. Models export to and load from the standard ARPA text format
(log10 probabilities and backoff weights).
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

FALLBACK_DISCOUNT = 0.75


def _surfaces(sentence) -> tuple[str, ...]:
    if hasattr(sentence, "surfaces"):
        return tuple(sentence.surfaces)
    return tuple(sentence)


class NGramLM:
    """Count-based modified Kneser-Ney model; immutable once trained."""

    def __init__(self, order: int, adjusted, ctx_stats, discounts, vocab, warnings):
        self.order = order
        self._adjusted = adjusted  # per order k: dict[gram tuple -> adjusted count]
        self._ctx_stats = ctx_stats  # per order k: dict[context -> (denom, N1, N2, N3+)]
        self._discounts = discounts  # per order k: (D1, D2, D3+)
        self.vocab = vocab  # predictable symbols: words + EOS + UNK
        self.warnings = list(warnings)
        self._unigram_total = sum(adjusted[1].values())
        self._cache: dict[tuple, float] = {}

    def _map(self, token: str) -> str:
        if token == BOS or token in self.vocab:
            return token
        return UNK

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        """p(word | context); unknowns map to <unk>, unseen contexts back off."""
        w = self._map(word)
        ctx = tuple(self._map(t) for t in context[max(0, len(context) - (self.order - 1)) :])
        key = ctx + (w,)
        cached = self._cache.get(key)
        if cached is None:
            cached = self._cache[key] = self._p(w, ctx)
        return cached

    def _p(self, w: str, ctx: tuple) -> float:
        k = len(ctx) + 1
        if k == 1:
            total = self._unigram_total
            d1, d2, d3 = self._discounts[1]
            a = self._adjusted[1].get((w,), 0)
            denom, n1, n2, n3p = self._root_stats
            gamma = (d1 * n1 + d2 * n2 + d3 * n3p) / total
            return max(a - self._d_for(a, 1), 0.0) / total + gamma / len(self.vocab)
        stats = self._ctx_stats[k].get(ctx)
        if stats is None:
            return self._p(w, ctx[1:])
        denom, n1, n2, n3p = stats
        d1, d2, d3 = self._discounts[k]
        a = self._adjusted[k].get(ctx + (w,), 0)
        gamma = (d1 * n1 + d2 * n2 + d3 * n3p) / denom
        return max(a - self._d_for(a, k), 0.0) / denom + gamma * self._p(w, ctx[1:])

    def _d_for(self, count: int, k: int) -> float:
        if count == 0:
            return 0.0
        d1, d2, d3 = self._discounts[k]
        if count == 1:
            return d1
        if count == 2:
            return d2
        return d3

    @property
    def _root_stats(self):
        return self._ctx_stats[1][()]

    def log_prob(self, word: str, context: Sequence[str] = ()) -> float:
        return math.log(self.prob(word, context))

    def sequence_log_prob(self, sentence) -> float:
        return sequence_log_prob(self, sentence)


def train_lm(corpus: Iterable, order: int = 5) -> NGramLM:
    """Estimate a modified Kneser-Ney model of the given order from surfaces."""
    if order < 1:
        raise ValueError("order must be >= 1")
    sentences = [_surfaces(s) for s in corpus]
    if not sentences:
        raise ValueError("cannot train a language model on an empty corpus")
    vocab = {UNK, EOS}
    raw: dict[int, dict[tuple, int]] = {k: {} for k in range(1, order + 1)}
    for surf in sentences:
        for tok in surf:
            if tok in (BOS, EOS, UNK):
                raise ValueError("corpus contains reserved symbol %r" % tok)
            vocab.add(tok)
        padded = (BOS,) + surf + (EOS,)
        for k in range(1, order + 1):
            table = raw[k]
            for i in range(len(padded) - k + 1):
                g = padded[i : i + k]
                if k == 1 and g[0] == BOS:
                    continue  # <s> is a context symbol, never a prediction
                table[g] = table.get(g, 0) + 1

    adjusted: dict[int, dict[tuple, int]] = {order: raw[order]}
    for k in range(order - 1, 0, -1):
        table: dict[tuple, int] = {}
        for g in raw[k + 1]:
            suffix = g[1:]
            table[suffix] = table.get(suffix, 0) + 1
        for g, c in raw[k].items():
            if g[0] == BOS and not (k == 1):
                table[g] = c
        adjusted[k] = table

    warnings: list[str] = []
    discounts = {}
    for k in range(1, order + 1):
        discounts[k] = _estimate_discounts(adjusted[k].values(), k, warnings)

    ctx_stats: dict[int, dict[tuple, tuple]] = {}
    for k in range(1, order + 1):
        stats: dict[tuple, list] = {}
        for g, c in adjusted[k].items():
            st = stats.setdefault(g[:-1], [0, 0, 0, 0])
            st[0] += c
            if c == 1:
                st[1] += 1
            elif c == 2:
                st[2] += 1
            else:
                st[3] += 1
        ctx_stats[k] = {ctx: tuple(st) for ctx, st in stats.items()}

    return NGramLM(order, adjusted, ctx_stats, discounts, vocab, warnings)


def _estimate_discounts(counts: Iterable[int], k: int, warnings: list[str]) -> tuple[float, float, float]:
    n1 = n2 = n3 = n4 = 0
    for c in counts:
        if c == 1:
            n1 += 1
        elif c == 2:
            n2 += 1
        elif c == 3:
            n3 += 1
        elif c == 4:
            n4 += 1
    y = n1 / (n1 + 2 * n2) if (n1 + 2 * n2) > 0 else 0.0

    def estimate(level: int, num: int, den: int) -> float:
        if den == 0 or n1 == 0:
            warnings.append(
                "order %d: cannot estimate D%s (count-of-count zero), using %.2f"
                % (k, level, FALLBACK_DISCOUNT)
            )
            return FALLBACK_DISCOUNT
        d = level - (level + 1) * y * num / den
        if d <= 0:
            warnings.append(
                "order %d: estimated D%s non-positive (%.4f), using %.2f"
                % (k, level, d, FALLBACK_DISCOUNT)
            )
            return FALLBACK_DISCOUNT
        return d

    return (estimate(1, n2, n1), estimate(2, n3, n2), estimate(3, n4, n3))


def log_prob(lm, word: str, context: Sequence[str] = ()) -> float:
    """Natural-log p(word | context)."""
    return lm.log_prob(word, context)


def sequence_log_prob(lm, sentence) -> float:
    """Sum of stepwise log probabilities with <s> padding and a </s> step."""
    surf = _surfaces(sentence)
    history: tuple[str, ...] = (BOS,)
    total = 0.0
    for tok in surf + (EOS,):
        total += lm.log_prob(tok, history)
        history = (history + (tok,))[-(lm.order - 1) :] if lm.order > 1 else ()
    return total


def write_arpa(lm: NGramLM, stream) -> None:
    """Standard ARPA export: log10 probabilities, log10 backoff weights."""
    entries: dict[int, list[tuple[tuple, float, float | None]]] = {}
    for k in range(1, lm.order + 1):
        rows = []
        grams = set(lm._adjusted[k])
        if k == 1:
            grams.add((BOS,))
            grams.add((UNK,))
        for g in sorted(grams):
            if g == (BOS,):
                lp = -99.0
            else:
                lp = math.log10(lm.prob(g[-1], g[:-1]))
            bow = None
            if k < lm.order:
                stats = lm._ctx_stats[k + 1].get(g)
                if stats is not None and stats[0] > 0:
                    d1, d2, d3 = lm._discounts[k + 1]
                    denom, n1, n2, n3p = stats
                    gamma = (d1 * n1 + d2 * n2 + d3 * n3p) / denom
                    bow = math.log10(gamma)
                else:
                    bow = 0.0
            rows.append((g, lp, bow))
        entries[k] = rows

    stream.write("\\data\\\n")
    for k in range(1, lm.order + 1):
        stream.write("ngram %d=%d\n" % (k, len(entries[k])))
    for k in range(1, lm.order + 1):
        stream.write("\n\\%d-grams:\n" % k)
        for g, lp, bow in entries[k]:
            if bow is None:
                stream.write("%r\t%s\n" % (lp, " ".join(g)))
            else:
                stream.write("%r\t%s\t%r\n" % (lp, " ".join(g), bow))
    stream.write("\n\\end\\\n")


class ArpaLM:
    """Backoff model over an ARPA table; same query interface as NGramLM."""

    def __init__(self, order: int, probs: dict[tuple, float], backoffs: dict[tuple, float]):
        self.order = order
        self._probs = probs  # gram -> log10 p
        self._backoffs = backoffs  # gram -> log10 backoff weight
        self.vocab = {g[0] for g in probs if len(g) == 1 and g[0] != BOS}

    def _map(self, token: str) -> str:
        if token == BOS or token in self.vocab:
            return token
        return UNK

    def log10_prob(self, word: str, context: Sequence[str] = ()) -> float:
        w = self._map(word)
        ctx = tuple(self._map(t) for t in context[max(0, len(context) - (self.order - 1)) :])
        return self._lp10(w, ctx)

    def _lp10(self, w: str, ctx: tuple) -> float:
        gram = ctx + (w,)
        lp = self._probs.get(gram)
        if lp is not None:
            return lp
        if not ctx:
            raise KeyError("word %r missing from the unigram table" % w)
        return self._backoffs.get(ctx, 0.0) + self._lp10(w, ctx[1:])

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        return 10.0 ** self.log10_prob(word, context)

    def log_prob(self, word: str, context: Sequence[str] = ()) -> float:
        return self.log10_prob(word, context) * math.log(10.0)

    def sequence_log_prob(self, sentence) -> float:
        return sequence_log_prob(self, sentence)


def read_arpa(stream) -> ArpaLM:
    """Read an ARPA file (ours or externally produced)."""
    from .corpus import FormatError, _as_lines

    lines = iter(enumerate(_as_lines(stream), start=1))
    probs: dict[tuple, float] = {}
    backoffs: dict[tuple, float] = {}
    declared: dict[int, int] = {}
    section = None
    for n, raw in lines:
        line = raw.strip()
        if not line:
            continue
        if line == "\\data\\":
            section = "data"
            continue
        if line == "\\end\\":
            section = "end"
            continue
        if line.startswith("\\") and line.endswith("-grams:"):
            try:
                section = int(line[1:-7])
            except ValueError:
                raise FormatError("line %d: bad section header %r" % (n, line)) from None
            continue
        if section == "data":
            if not line.startswith("ngram "):
                raise FormatError("line %d: expected `ngram k=count`, got %r" % (n, line))
            k, _, count = line[6:].partition("=")
            declared[int(k)] = int(count)
            continue
        if isinstance(section, int):
            fields = line.split("\t")
            if len(fields) == 1:
                fields = line.split()
                fields = [fields[0], " ".join(fields[1 : 1 + section]), *fields[1 + section :]]
            if len(fields) not in (2, 3):
                raise FormatError("line %d: expected 2 or 3 fields, got %r" % (n, line))
            gram = tuple(fields[1].split())
            if len(gram) != section:
                raise FormatError(
                    "line %d: %d-gram section contains %d-token entry %r" % (n, section, len(gram), line)
                )
            probs[gram] = float(fields[0])
            if len(fields) == 3:
                backoffs[gram] = float(fields[2])
            continue
        raise FormatError("line %d: content outside any ARPA section: %r" % (n, line))
    if not declared:
        raise FormatError("not an ARPA file: missing \\data\\ section")
    order = max(declared)
    for k, count in declared.items():
        have = sum(1 for g in probs if len(g) == k)
        if have != count:
            raise FormatError("declared %d %d-grams but found %d" % (count, k, have))
    return ArpaLM(order, probs, backoffs)

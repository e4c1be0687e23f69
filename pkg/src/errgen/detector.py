"""Token-level error detector: BiLSTM over embeddings, trained from scratch.

Architecture per token: embedding lookup, a forward and a backward LSTM
pass over the sentence, concatenation of the two hidden states, a tanh
feedforward layer, and a two-way softmax (index 0 = correct, index 1 =
incorrect). Everything is float64 numpy; gradients are exact
backpropagation through time (verified against finite differences in the
test suite), optimized with AdaDelta.

Batches are padded to the longest sentence and processed under a 0/1
mask: on padded steps the recurrent state passes through unchanged and no
gradient reaches the gate parameters, so batching is exactly equivalent
to per-sentence processing. Gate blocks are ordered [input, forget,
output, candidate] inside each 4H-wide parameter matrix.

Parameters live in a flat name → array dict so the optimizer and the
serializer stay generic. Models round-trip exactly through ``save_model``
and ``load_model`` (numpy .npz, version-tagged).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .align import LABEL_CORRECT, LABEL_INCORRECT, LabeledSentence
from .corpus import Token

UNKNOWN_WORD = "<unk>"

SERIAL_VERSION = 1

_PARAM_NAMES = (
    "emb",
    "fw_W", "fw_U", "fw_b",
    "bw_W", "bw_U", "bw_b",
    "ff_W", "ff_b",
    "out_W", "out_b",
)


@dataclass(frozen=True)
class TrainConfig:
    emb_dim: int = 50
    hidden_dim: int = 100
    ff_dim: int = 50
    epochs: int = 15
    batch_size: int = 32
    rho: float = 0.95
    epsilon: float = 1e-6
    seed: int = 0
    threshold: float = 0.5
    min_freq: int = 2  # words rarer than this become the unknown symbol

    def __post_init__(self):
        if min(self.emb_dim, self.hidden_dim, self.ff_dim) < 1:
            raise ValueError("layer dimensions must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


class DetectorModel:
    def __init__(self, vocab: dict[str, int], params: dict[str, np.ndarray]):
        self.vocab = vocab
        self.params = params
        self.history: list[dict] = []

    @property
    def emb_dim(self) -> int:
        return self.params["emb"].shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.params["fw_U"].shape[0]

    @property
    def ff_dim(self) -> int:
        return self.params["ff_W"].shape[1]

    def word_id(self, surface: str) -> int:
        return self.vocab.get(surface, self.vocab[UNKNOWN_WORD])


def build_vocab(corpus: Sequence, min_freq: int = 2) -> dict[str, int]:
    """Word → id, most frequent first; rare words fold into the unknown id."""
    freq: dict[str, int] = {}
    for sent in corpus:
        for surf in _surfaces(sent):
            freq[surf] = freq.get(surf, 0) + 1
    vocab = {UNKNOWN_WORD: 0}
    for surf in sorted(freq, key=lambda w: (-freq[w], w)):
        if freq[surf] >= min_freq:
            vocab[surf] = len(vocab)
    return vocab


def _surfaces(sent) -> tuple[str, ...]:
    if hasattr(sent, "surfaces"):
        return tuple(sent.surfaces)
    if hasattr(sent, "tokens"):
        return tuple(t.surface for t in sent.tokens)
    return tuple(sent)


def _glorot(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    bound = np.sqrt(6.0 / sum(shape))
    return rng.uniform(-bound, bound, size=shape)


def init_model(vocab: dict[str, int], config: TrainConfig) -> DetectorModel:
    """Glorot-uniform weights, zero biases except forget-gate bias +1."""
    rng = np.random.default_rng(config.seed)
    v, e, h, f = len(vocab), config.emb_dim, config.hidden_dim, config.ff_dim
    params = {
        "emb": _glorot(rng, (v, e)),
        "fw_W": _glorot(rng, (e, 4 * h)),
        "fw_U": _glorot(rng, (h, 4 * h)),
        "fw_b": np.zeros(4 * h),
        "bw_W": _glorot(rng, (e, 4 * h)),
        "bw_U": _glorot(rng, (h, 4 * h)),
        "bw_b": np.zeros(4 * h),
        "ff_W": _glorot(rng, (2 * h, f)),
        "ff_b": np.zeros(f),
        "out_W": _glorot(rng, (f, 2)),
        "out_b": np.zeros(2),
    }
    for name in ("fw_b", "bw_b"):
        params[name][h : 2 * h] = 1.0
    return DetectorModel(vocab, params)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def pack_batch(model: DetectorModel, sentences: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """(ids, mask), both (batch, max_len); padding uses the unknown id."""
    if not sentences:
        raise ValueError("empty batch")
    surfs = [_surfaces(s) for s in sentences]
    if any(not s for s in surfs):
        raise ValueError("cannot run the detector on an empty sentence")
    max_len = max(len(s) for s in surfs)
    ids = np.zeros((len(surfs), max_len), dtype=np.int64)
    mask = np.zeros((len(surfs), max_len))
    for b, surf in enumerate(surfs):
        ids[b, : len(surf)] = [model.word_id(w) for w in surf]
        mask[b, : len(surf)] = 1.0
    return ids, mask


def _lstm_forward(x, mask, W, U, b):
    """Masked LSTM over (B, T, E) inputs; returns hidden states and caches."""
    B, T, _ = x.shape
    H = U.shape[0]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.empty((B, T, H))
    caches = []
    for t in range(T):
        m = mask[:, t][:, None]
        a = x[:, t] @ W + h @ U + b
        i = _sigmoid(a[:, :H])
        f = _sigmoid(a[:, H : 2 * H])
        o = _sigmoid(a[:, 2 * H : 3 * H])
        g = np.tanh(a[:, 3 * H :])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        caches.append((h, c, i, f, o, g, tc, m))
        c = m * c_new + (1.0 - m) * c
        h = m * h_new + (1.0 - m) * h
        hs[:, t] = h
    return hs, caches


def _lstm_backward(dhs, x, mask, W, U, caches):
    """Gradients for a masked LSTM pass; dhs is (B, T, H) from above."""
    B, T, _ = x.shape
    H = U.shape[0]
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * H)
    dx = np.zeros_like(x)
    dh_rec = np.zeros((B, H))
    dc_rec = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        h_prev, c_prev, i, f, o, g, tc, m = caches[t]
        dh = dhs[:, t] + dh_rec
        dc = dc_rec + dh * o * (1.0 - tc * tc)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        do = dh * tc
        da = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                do * o * (1.0 - o),
                dg * (1.0 - g * g),
            ],
            axis=1,
        )
        da *= m
        dW += x[:, t].T @ da
        dU += h_prev.T @ da
        db += da.sum(axis=0)
        dx[:, t] = da @ W.T
        dh_rec = da @ U.T + dh * (1.0 - m)
        dc_rec = dc * f * m + dc_rec * (1.0 - m)
    return dW, dU, db, dx


def _forward_batch(model: DetectorModel, ids: np.ndarray, mask: np.ndarray):
    p = model.params
    x = p["emb"][ids]
    hf, cache_f = _lstm_forward(x, mask, p["fw_W"], p["fw_U"], p["fw_b"])
    rev = slice(None, None, -1)
    hb_rev, cache_b = _lstm_forward(x[:, rev], mask[:, rev], p["bw_W"], p["bw_U"], p["bw_b"])
    hb = hb_rev[:, rev]
    concat = np.concatenate([hf, hb], axis=2)
    d = np.tanh(concat @ p["ff_W"] + p["ff_b"])
    logits = d @ p["out_W"] + p["out_b"]
    shifted = logits - logits.max(axis=2, keepdims=True)
    ex = np.exp(shifted)
    probs = ex / ex.sum(axis=2, keepdims=True)
    return probs, (x, hf, hb, cache_f, cache_b, concat, d)


def forward(model: DetectorModel, sentence) -> np.ndarray:
    """(len, 2) array of (p(correct), p(incorrect)) per token."""
    ids, mask = pack_batch(model, [sentence])
    probs, _ = _forward_batch(model, ids, mask)
    return probs[0]


def loss_and_gradients(model: DetectorModel, batch: Sequence[LabeledSentence]):
    """Mean cross-entropy over real tokens and gradients for every parameter."""
    ids, mask = pack_batch(model, batch)
    B, T = ids.shape
    gold = np.zeros((B, T), dtype=np.int64)
    for b, sent in enumerate(batch):
        gold[b, : len(sent.labels)] = [1 if l == LABEL_INCORRECT else 0 for l in sent.labels]

    probs, cache = _forward_batch(model, ids, mask)
    x, hf, hb, cache_f, cache_b, concat, d = cache
    p = model.params
    n_tokens = mask.sum()
    token_losses = -np.log(probs[np.arange(B)[:, None], np.arange(T)[None, :], gold])
    loss = float((token_losses * mask).sum() / n_tokens)

    dlogits = probs.copy()
    dlogits[np.arange(B)[:, None], np.arange(T)[None, :], gold] -= 1.0
    dlogits *= (mask / n_tokens)[:, :, None]

    flat_d = d.reshape(-1, d.shape[2])
    flat_dlogits = dlogits.reshape(-1, 2)
    grads = {
        "out_W": flat_d.T @ flat_dlogits,
        "out_b": flat_dlogits.sum(axis=0),
    }
    dd = (dlogits @ p["out_W"].T) * (1.0 - d * d)
    flat_concat = concat.reshape(-1, concat.shape[2])
    flat_dd = dd.reshape(-1, dd.shape[2])
    grads["ff_W"] = flat_concat.T @ flat_dd
    grads["ff_b"] = flat_dd.sum(axis=0)
    dconcat = dd @ p["ff_W"].T

    H = model.hidden_dim
    rev = slice(None, None, -1)
    dW, dU, db, dx_f = _lstm_backward(dconcat[:, :, :H], x, mask, p["fw_W"], p["fw_U"], cache_f)
    grads["fw_W"], grads["fw_U"], grads["fw_b"] = dW, dU, db
    dW, dU, db, dx_b_rev = _lstm_backward(
        dconcat[:, rev, H:], x[:, rev], mask[:, rev], p["bw_W"], p["bw_U"], cache_b
    )
    grads["bw_W"], grads["bw_U"], grads["bw_b"] = dW, dU, db

    dx = dx_f + dx_b_rev[:, rev]
    demb = np.zeros_like(p["emb"])
    np.add.at(demb, ids.ravel(), dx.reshape(-1, dx.shape[2]))
    grads["emb"] = demb
    return loss, grads


@dataclass
class AdaDeltaState:
    rho: float = 0.95
    epsilon: float = 1e-6
    sq_grad: dict = field(default_factory=dict)
    sq_delta: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], rho: float = 0.95, epsilon: float = 1e-6):
        return cls(
            rho,
            epsilon,
            {k: np.zeros_like(v) for k, v in params.items()},
            {k: np.zeros_like(v) for k, v in params.items()},
        )


def adadelta_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdaDeltaState) -> None:
    """In-place AdaDelta update; rejects non-finite gradients."""
    rho, eps = state.rho, state.epsilon
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(
                "non-finite gradient for %r (max |g| = %g)" % (name, float(np.abs(g).max()))
            )
        eg = state.sq_grad[name]
        ed = state.sq_delta[name]
        eg *= rho
        eg += (1.0 - rho) * g * g
        delta = -np.sqrt(ed + eps) / np.sqrt(eg + eps) * g
        ed *= rho
        ed += (1.0 - rho) * delta * delta
        params[name] += delta


def predict(model: DetectorModel, corpus: Sequence, threshold: float = 0.5, batch_size: int = 64) -> list[LabeledSentence]:
    """Label every token: incorrect iff p(incorrect) >= threshold."""
    out = []
    for start in range(0, len(corpus), batch_size):
        chunk = corpus[start : start + batch_size]
        ids, mask = pack_batch(model, chunk)
        probs, _ = _forward_batch(model, ids, mask)
        for b, sent in enumerate(chunk):
            n = len(_surfaces(sent))
            labels = tuple(
                LABEL_INCORRECT if probs[b, t, 1] >= threshold else LABEL_CORRECT for t in range(n)
            )
            tokens = getattr(sent, "tokens", None)
            if tokens is None:
                tokens = tuple(Token(surf, "UNK") for surf in _surfaces(sent))
            out.append(LabeledSentence(tuple(tokens), labels))
    return out


def train(train_corpus: Sequence[LabeledSentence], dev_corpus: Sequence[LabeledSentence], config: TrainConfig = TrainConfig()) -> DetectorModel:
    """AdaDelta training; returns the epoch snapshot with the best dev F0.5."""
    from .evaluation import score

    if not train_corpus or not dev_corpus:
        raise ValueError("training and dev corpora must be non-empty")
    vocab = build_vocab(train_corpus, config.min_freq)
    model = init_model(vocab, config)
    state = AdaDeltaState.for_params(model.params, config.rho, config.epsilon)
    rng = np.random.default_rng(config.seed)
    order = np.arange(len(train_corpus))
    best_f = -1.0
    best_params = copy.deepcopy(model.params)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_corpus))
        total = 0.0
        batches = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_corpus[i] for i in order[start : start + config.batch_size]]
            loss, grads = loss_and_gradients(model, batch)
            adadelta_step(model.params, grads, state)
            total += loss
            batches += 1
        predictions = predict(model, dev_corpus, config.threshold)
        _, _, dev_f, _ = score(predictions, dev_corpus)
        model.history.append({"epoch": epoch, "train_loss": total / batches, "dev_f05": dev_f})
        if dev_f > best_f:
            best_f = dev_f
            best_params = copy.deepcopy(model.params)
    model.params = best_params
    return model


def save_model(model: DetectorModel, path) -> None:
    words = sorted(model.vocab, key=model.vocab.get)
    arrays = {"param_%s" % k: v for k, v in model.params.items()}
    np.savez(
        path,
        version=np.array([SERIAL_VERSION]),
        words=np.array(words, dtype=np.str_),
        **arrays,
    )


def load_model(path) -> DetectorModel:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"][0])
        if version != SERIAL_VERSION:
            raise ValueError("unsupported model version %d" % version)
        vocab = {w: i for i, w in enumerate(data["words"].tolist())}
        params = {}
        for name in _PARAM_NAMES:
            key = "param_%s" % name
            if key not in data:
                raise ValueError("model file missing parameter %r" % name)
            params[name] = data[key].copy()
    if UNKNOWN_WORD not in vocab:
        raise ValueError("model vocabulary lacks the unknown symbol")
    return DetectorModel(vocab, params)

"""Skip-gram negative-sampling embeddings and exact cosine queries.

The trainer follows the classic reference implementation: a sigmoid lookup
table over [-6, 6], a 10^7-entry noise table over the unigram distribution
raised to 3/4, per-pair uniformly sampled window radius, frequent-token
subsampling, and linear learning-rate decay.  The hot loop is numba-compiled;
with workers=1 and a fixed seed training is bit-reproducible.  workers > 1
runs lock-free asynchronous updates over sentence shards (nondeterministic).
"""

from __future__ import annotations

import json
import struct
import threading
from collections import Counter
from dataclasses import dataclass, asdict, field
from typing import Callable, Iterable

import numpy as np
from numba import njit

from .corpus import TokenSentence
from .errors import ConfigError

SIGMOID_TABLE_SIZE = 512
MAX_EXP = 6.0
NOISE_TABLE_SIZE = 10_000_000
NOISE_POWER = 0.75
LR_FLOOR_FACTOR = 1e-4

_SIGMOID_TABLE = 1.0 / (
    1.0 + np.exp(-((2.0 * np.arange(SIGMOID_TABLE_SIZE) / SIGMOID_TABLE_SIZE - 1.0) * MAX_EXP))
)
_SIGMOID_TABLE = _SIGMOID_TABLE.astype(np.float32)


@dataclass
class TrainConfig:
    dim: int = 100
    window: int = 5
    negative: int = 5
    epochs: int = 5
    min_count: int = 5
    subsample: float = 1e-4
    initial_lr: float = 0.025
    seed: int = 1
    workers: int = 1

    def validate(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.negative < 1:
            raise ConfigError(f"negative must be >= 1, got {self.negative}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.min_count < 1:
            raise ConfigError(f"min_count must be >= 1, got {self.min_count}")
        if not 0.0 < self.initial_lr < 1.0:
            raise ConfigError(f"initial_lr must be in (0,1), got {self.initial_lr}")
        if self.subsample < 0:
            raise ConfigError(f"subsample must be >= 0, got {self.subsample}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


@dataclass
class Vocabulary:
    terms: list[str]
    counts: np.ndarray  # int64, parallel to terms
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {t: i for i, t in enumerate(self.terms)}

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index


def _as_factory(sentences):
    if callable(sentences):
        return sentences
    if isinstance(sentences, (list, tuple)):
        return lambda: sentences
    data = list(sentences)
    return lambda: data


def _token_lists(factory):
    for sent in factory():
        yield sent.tokens if isinstance(sent, TokenSentence) else sent


def build_vocab(sentences, min_count: int = 5) -> Vocabulary:
    """Count tokens and keep those with count >= min_count.

    Order: descending count, ties broken lexicographically.
    """
    counter = Counter()
    empty = True
    for tokens in _token_lists(_as_factory(sentences)):
        empty = False
        counter.update(tokens)
    if empty:
        raise ValueError("empty corpus")
    kept = sorted(
        ((t, c) for t, c in counter.items() if c >= min_count),
        key=lambda tc: (-tc[1], tc[0]),
    )
    if not kept:
        raise ValueError("vocabulary empty: no token reaches min_count")
    terms = [t for t, _ in kept]
    counts = np.array([c for _, c in kept], dtype=np.int64)
    return Vocabulary(terms=terms, counts=counts)


@dataclass
class EmbeddingModel:
    vocab: Vocabulary
    input_vectors: np.ndarray  # |V| x dim float32
    output_vectors: np.ndarray  # |V| x dim float32
    config: TrainConfig

    def vector(self, term: str) -> np.ndarray:
        return self.input_vectors[self.vocab.index[term]]


def build_noise_table(counts: np.ndarray, size: int = NOISE_TABLE_SIZE) -> np.ndarray:
    """Noise table for negative sampling: unigram^0.75 distribution."""
    weights = counts.astype(np.float64) ** NOISE_POWER
    cum = np.cumsum(weights)
    cum /= cum[-1]
    # position i of the table holds the term whose cumulative mass covers i/size
    positions = (np.arange(size, dtype=np.float64) + 0.5) / size
    return np.searchsorted(cum, positions).astype(np.int32)


# ---------------------------------------------------------------------------
# closed-form objective and gradients (float64, exact sigmoid); the training
# kernel is checked against these


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def sgns_objective(v_w, u_c, u_negs) -> float:
    """log sigma(u_c.v_w) + sum_i log sigma(-u_ni.v_w)."""
    v_w = np.asarray(v_w, dtype=np.float64)
    u_c = np.asarray(u_c, dtype=np.float64)
    u_negs = np.atleast_2d(np.asarray(u_negs, dtype=np.float64))
    obj = np.log(_sigmoid(u_c @ v_w))
    obj += np.sum(np.log(_sigmoid(-(u_negs @ v_w))))
    return float(obj)


def sgns_gradients(v_w, u_c, u_negs):
    """Analytic gradients of sgns_objective w.r.t. (v_w, u_c, each u_ni)."""
    v_w = np.asarray(v_w, dtype=np.float64)
    u_c = np.asarray(u_c, dtype=np.float64)
    u_negs = np.atleast_2d(np.asarray(u_negs, dtype=np.float64))
    s_pos = _sigmoid(u_c @ v_w)
    s_negs = _sigmoid(u_negs @ v_w)
    grad_v = (1.0 - s_pos) * u_c - s_negs @ u_negs
    grad_c = (1.0 - s_pos) * v_w
    grad_negs = -np.outer(s_negs, v_w)
    return grad_v, grad_c, grad_negs


def apply_step(v_w, u_c, u_negs, alpha, table_sigmoid=True):
    """One gradient-ascent step mirroring the kernel's arithmetic.

    Returns updated copies of (v_w, u_c, u_negs).  With table_sigmoid=True
    the lookup table used by the compiled kernel is applied, otherwise the
    exact sigmoid.
    """
    v_w = np.array(v_w, dtype=np.float32)
    u_c = np.array(u_c, dtype=np.float32)
    u_negs = np.atleast_2d(np.array(u_negs, dtype=np.float32))

    def sig(x):
        if not table_sigmoid:
            return 1.0 / (1.0 + np.exp(-x))
        if x >= MAX_EXP:
            return 1.0
        if x <= -MAX_EXP:
            return 0.0
        idx = int((x + MAX_EXP) * (SIGMOID_TABLE_SIZE / (2 * MAX_EXP)))
        return float(_SIGMOID_TABLE[idx])

    e = np.zeros_like(v_w)
    g = (1.0 - sig(float(u_c @ v_w))) * alpha
    e += g * u_c
    u_c = u_c + np.float32(g) * v_w
    for i in range(u_negs.shape[0]):
        g = (0.0 - sig(float(u_negs[i] @ v_w))) * alpha
        e += g * u_negs[i]
        u_negs[i] = u_negs[i] + np.float32(g) * v_w
    v_w = v_w + e
    return v_w, u_c, u_negs


# ---------------------------------------------------------------------------
# compiled training kernel


@njit(cache=True, inline="always")
def _splitmix64(x):
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = x
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(
        0xFFFFFFFFFFFFFFFF
    )
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(
        0xFFFFFFFFFFFFFFFF
    )
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _train_shard(
    data,
    offsets,
    token_prefix,
    syn0,
    syn1,
    keep_prob,
    noise_table,
    sigmoid_table,
    window,
    negative,
    epochs,
    alpha0,
    total_tokens,
    seed,
    sent_start,
    sent_end,
):
    dim = syn0.shape[1]
    table_size = noise_table.shape[0]
    sig_size = sigmoid_table.shape[0]
    work = np.empty(data.shape[0] if data.shape[0] < 10000 else 10000, dtype=np.int32)
    e = np.empty(dim, dtype=np.float32)
    total_scheduled = np.float64(epochs) * np.float64(total_tokens)
    lcg_mult = np.uint64(25214903917)
    lcg_add = np.uint64(11)
    mask64 = np.uint64(0xFFFFFFFFFFFFFFFF)
    for epoch in range(epochs):
        for s in range(sent_start, sent_end):
            lo = offsets[s]
            hi = offsets[s + 1]
            if hi <= lo:
                continue
            # per-sentence rng stream: deterministic for any sharding
            rng = _splitmix64(
                np.uint64(seed)
                ^ (np.uint64(epoch) * np.uint64(0x9E3779B97F4A7C15))
                ^ (np.uint64(s) * np.uint64(0xD1B54A32D192ED03))
            )
            if rng == np.uint64(0):
                rng = np.uint64(88172645463325252)
            # linear lr decay by scheduled token position
            processed = np.float64(epoch) * np.float64(total_tokens) + np.float64(
                token_prefix[s]
            )
            frac = processed / total_scheduled
            alpha = np.float32(alpha0 * (1.0 - (1.0 - LR_FLOOR_FACTOR) * frac))
            # subsample frequent tokens into the work buffer
            n = 0
            for p in range(lo, hi):
                w = data[p]
                kp = keep_prob[w]
                if kp < 1.0:
                    rng = (rng * lcg_mult + lcg_add) & mask64
                    u = np.float64(rng >> np.uint64(40)) / np.float64(1 << 24)
                    if u >= kp:
                        continue
                if n < work.shape[0]:
                    work[n] = w
                    n += 1
            for pos in range(n):
                w = work[pos]
                rng = (rng * lcg_mult + lcg_add) & mask64
                radius = 1 + np.int64(rng % np.uint64(window))
                lo_c = pos - radius
                hi_c = pos + radius
                if lo_c < 0:
                    lo_c = 0
                if hi_c > n - 1:
                    hi_c = n - 1
                for cpos in range(lo_c, hi_c + 1):
                    if cpos == pos:
                        continue
                    c = work[cpos]
                    for d in range(dim):
                        e[d] = 0.0
                    for k in range(negative + 1):
                        if k == 0:
                            target = c
                            label = np.float32(1.0)
                        else:
                            rng = (rng * lcg_mult + lcg_add) & mask64
                            target = noise_table[
                                np.int64((rng >> np.uint64(16)) % np.uint64(table_size))
                            ]
                            if target == c:
                                continue
                            label = np.float32(0.0)
                        f = np.float32(0.0)
                        for d in range(dim):
                            f += syn0[w, d] * syn1[target, d]
                        if f >= MAX_EXP:
                            sig = np.float32(1.0)
                        elif f <= -MAX_EXP:
                            sig = np.float32(0.0)
                        else:
                            sig = sigmoid_table[
                                np.int64((f + MAX_EXP) * (sig_size / (2 * MAX_EXP)))
                            ]
                        g = (label - sig) * alpha
                        for d in range(dim):
                            e[d] += g * syn1[target, d]
                        for d in range(dim):
                            syn1[target, d] += g * syn0[w, d]
                    for d in range(dim):
                        syn0[w, d] += e[d]


def encode_corpus(sentences, vocab: Vocabulary):
    """Map a token-list stream to (data, offsets) int arrays; OOV dropped."""
    data = []
    offsets = [0]
    index = vocab.index
    for tokens in _token_lists(_as_factory(sentences)):
        ids = [index[t] for t in tokens if t in index]
        if ids:
            data.extend(ids)
            offsets.append(len(data))
    return np.array(data, dtype=np.int32), np.array(offsets, dtype=np.int64)


def train_sgns(sentences, config: TrainConfig | None = None) -> EmbeddingModel:
    """Train skip-gram negative-sampling embeddings.

    `sentences` is a list of token lists / TokenSentences or a zero-arg
    callable producing a fresh stream (large corpora are read twice: once
    for the vocabulary, once for encoding).
    """
    if config is None:
        config = TrainConfig()
    config.validate()
    factory = _as_factory(sentences)
    vocab = build_vocab(factory, config.min_count)
    data, offsets = encode_corpus(factory, vocab)
    return _train_encoded(data, offsets, vocab, config)


def _train_encoded(data, offsets, vocab, config) -> EmbeddingModel:
    rng = np.random.default_rng(config.seed)
    dim = config.dim
    n_vocab = len(vocab)
    syn0 = ((rng.random((n_vocab, dim), dtype=np.float32) - 0.5) / dim).astype(np.float32)
    syn1 = np.zeros((n_vocab, dim), dtype=np.float32)

    total_tokens = int(data.shape[0])
    if total_tokens == 0:
        raise ValueError("no in-vocabulary tokens to train on")
    freqs = vocab.counts.astype(np.float64) / float(vocab.counts.sum())
    keep_prob = np.ones_like(freqs)
    if config.subsample > 0:
        frequent = freqs > config.subsample
        keep_prob[frequent] = np.sqrt(config.subsample / freqs[frequent])
    noise_table = build_noise_table(vocab.counts)
    token_prefix = offsets.copy()  # tokens before each sentence

    n_sent = offsets.shape[0] - 1
    workers = min(config.workers, max(1, n_sent))
    if workers == 1:
        _train_shard(
            data, offsets, token_prefix, syn0, syn1, keep_prob, noise_table,
            _SIGMOID_TABLE, config.window, config.negative, config.epochs,
            config.initial_lr, total_tokens, config.seed & 0xFFFFFFFFFFFFFFFF, 0, n_sent,
        )
    else:
        bounds = np.linspace(0, n_sent, workers + 1).astype(np.int64)
        threads = []
        for i in range(workers):
            t = threading.Thread(
                target=_train_shard,
                args=(
                    data, offsets, token_prefix, syn0, syn1, keep_prob,
                    noise_table, _SIGMOID_TABLE, config.window, config.negative,
                    config.epochs, config.initial_lr, total_tokens, config.seed & 0xFFFFFFFFFFFFFFFF,
                    int(bounds[i]), int(bounds[i + 1]),
                ),
            )
            t.start()
            threads.append(t)
        for t in threads:
            t.join()
    return EmbeddingModel(vocab=vocab, input_vectors=syn0, output_vectors=syn1, config=config)


# ---------------------------------------------------------------------------
# queries


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def nearest_neighbors(
    model: EmbeddingModel,
    seed_vector,
    k: int,
    filter: Callable[[str], bool] | None = None,
    exclude: Iterable[str] = (),
) -> list[tuple[str, float]]:
    """Exact top-k cosine search over the input vectors.

    Sorted by cosine descending, ties broken by vocabulary index ascending.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    seed_vector = np.asarray(seed_vector, dtype=np.float64)
    seed_norm = np.linalg.norm(seed_vector)
    if seed_norm == 0.0:
        raise ValueError("degenerate seed")
    if k == 0:
        return []
    mat = model.input_vectors.astype(np.float64)
    norms = np.linalg.norm(mat, axis=1)
    sims = mat @ seed_vector
    nonzero = norms > 0.0
    sims[nonzero] /= norms[nonzero] * seed_norm
    sims[~nonzero] = 0.0
    excluded = set(exclude)
    order = np.lexsort((np.arange(len(sims)), -sims))
    out = []
    for idx in order:
        term = model.vocab.terms[idx]
        if term in excluded:
            continue
        if filter is not None and not filter(term):
            continue
        out.append((term, float(sims[idx])))
        if len(out) == k:
            break
    return out


# ---------------------------------------------------------------------------
# persistence

_MAGIC = b"NSTK"
_VERSION = 1


def save_model(model: EmbeddingModel, path):
    """Binary model file: magic, version, dim, |V|, terms+counts, matrices.

    A JSON block with the training config is appended after the matrices.
    """
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", _VERSION, model.config.dim, len(model.vocab)))
        for term, count in zip(model.vocab.terms, model.vocab.counts):
            fh.write(term.encode("utf-8") + b"\0")
            fh.write(struct.pack("<Q", int(count)))
        fh.write(np.ascontiguousarray(model.input_vectors, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(model.output_vectors, dtype="<f4").tobytes())
        blob = json.dumps(asdict(model.config), sort_keys=True).encode("utf-8")
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)


def load_model(path) -> EmbeddingModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise ValueError(f"not a model file (bad magic): {path}")
    version, dim, n_vocab = struct.unpack_from("<III", raw, 4)
    if version != _VERSION:
        raise ValueError(f"unsupported model version {version}")
    pos = 16
    terms = []
    counts = np.empty(n_vocab, dtype=np.int64)
    for i in range(n_vocab):
        end = raw.index(b"\0", pos)
        terms.append(raw[pos:end].decode("utf-8"))
        pos = end + 1
        (counts[i],) = struct.unpack_from("<Q", raw, pos)
        pos += 8
    mat_bytes = n_vocab * dim * 4
    syn0 = np.frombuffer(raw, dtype="<f4", count=n_vocab * dim, offset=pos).reshape(
        n_vocab, dim
    ).copy()
    pos += mat_bytes
    syn1 = np.frombuffer(raw, dtype="<f4", count=n_vocab * dim, offset=pos).reshape(
        n_vocab, dim
    ).copy()
    pos += mat_bytes
    config = TrainConfig()
    if pos < len(raw):
        (blob_len,) = struct.unpack_from("<I", raw, pos)
        pos += 4
        config = TrainConfig(**json.loads(raw[pos : pos + blob_len].decode("utf-8")))
    vocab = Vocabulary(terms=terms, counts=counts)
    return EmbeddingModel(vocab=vocab, input_vectors=syn0, output_vectors=syn1, config=config)


def save_text(model: EmbeddingModel, path):
    """Text export: one `term v1 v2 ...` line per vocabulary entry."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, term in enumerate(model.vocab.terms):
            vec = " ".join(repr(float(x)) for x in model.input_vectors[i])
            fh.write(f"{term} {vec}\n")

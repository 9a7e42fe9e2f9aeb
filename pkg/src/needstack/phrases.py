"""Collocation phrase mining and phrase annotation.

Salient multiword phrases are mined from the tokenized corpus by scoring
adjacent token pairs with rescaled NPMI and iteratively rewriting the corpus
so that merged pairs can extend into longer runs.  Annotation joins phrase
components with "-" so a phrase becomes a single token for embedding
training, matching the hyphen-joined surface form of ranked output terms.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import TokenSentence
from .errors import ConfigError

JOIN_CHAR = "-"


@dataclass
class PhraseConfig:
    threshold: float = 0.8
    min_pair_count: int = 5
    max_passes: int = 3

    def validate(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in [0,1], got {self.threshold}")
        if self.min_pair_count < 1:
            raise ConfigError(f"min_pair_count must be >= 1, got {self.min_pair_count}")
        if self.max_passes < 1:
            raise ConfigError(f"max_passes must be >= 1, got {self.max_passes}")


@dataclass
class PhraseTable:
    """Map from phrase component tuple (>= 2 tokens) to salience in [0,1]."""

    entries: dict[tuple[str, ...], float] = field(default_factory=dict)

    def add(self, components: Sequence[str], score: float):
        components = tuple(components)
        if len(components) < 2:
            raise ValueError("phrase needs at least 2 components")
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"score out of [0,1]: {score}")
        self.entries[components] = score

    def __len__(self):
        return len(self.entries)

    def __contains__(self, components):
        return tuple(components) in self.entries

    def max_len(self) -> int:
        return max((len(c) for c in self.entries), default=0)

    def dump(self, fh):
        """TSV `component1 component2 ...<TAB>score`, score descending."""
        rows = sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))
        for components, score in rows:
            fh.write(f"{' '.join(components)}\t{score:.6f}\n")

    @classmethod
    def load(cls, fh) -> "PhraseTable":
        table = cls()
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            phrase, score = line.split("\t")
            table.add(phrase.split(" "), float(score))
        return table


def npmi_rescaled(pair_count: int, count_x: int, count_y: int, total_pairs: int) -> float:
    """Rescaled normalized PMI in [0,1].

    npmi = pmi(x,y) / -ln p(x,y) with all probabilities normalized by the
    total adjacent-pair count; the result is mapped from [-1,1] to [0,1].
    """
    p_xy = pair_count / total_pairs
    p_x = count_x / total_pairs
    p_y = count_y / total_pairs
    if p_xy >= 1.0:
        # single repeated pair dominates the corpus; maximally correlated
        return 1.0
    pmi = math.log(p_xy / (p_x * p_y))
    npmi = pmi / -math.log(p_xy)
    return (max(-1.0, min(1.0, npmi)) + 1.0) / 2.0


def _flatten(token: str) -> tuple[str, ...]:
    return tuple(token.split(JOIN_CHAR))


def _as_factory(corpus):
    """Accept a list, a re-iterable, or a zero-arg factory of token lists."""
    if callable(corpus):
        return corpus
    if isinstance(corpus, (list, tuple)):
        data = corpus
    else:
        data = list(corpus)
    return lambda: data


def _token_lists(factory):
    for sent in factory():
        yield sent.tokens if isinstance(sent, TokenSentence) else sent


def mine_phrases(corpus, config: PhraseConfig | None = None) -> PhraseTable:
    """Mine a PhraseTable by iterative NPMI bigram merging.

    `corpus` is a list of token lists / TokenSentences, or a zero-argument
    callable producing a fresh stream of them (so large corpora can be
    re-read from disk instead of held in memory).

    Each pass counts adjacent pairs on the corpus rewritten with the phrases
    found so far, so pairs involving already-merged tokens grow into longer
    phrases.  Stops early when a pass adds nothing new.
    """
    if config is None:
        config = PhraseConfig()
    config.validate()
    factory = _as_factory(corpus)

    table = PhraseTable()
    for pass_no in range(config.max_passes):
        # stream 1: unigram counts on the rewritten corpus
        unigrams = Counter()
        n_sentences = 0
        for tokens in _token_lists(factory):
            if len(table):
                tokens = annotate_phrases(tokens, table)
            unigrams.update(tokens)
            n_sentences += 1
        if n_sentences == 0:
            raise ValueError("empty corpus")
        # stream 2: pair counts, gated so pairs that cannot reach
        # min_pair_count are never stored (keeps memory bounded)
        gate = config.min_pair_count
        pairs = Counter()
        total_pairs = 0
        for tokens in _token_lists(factory):
            if len(table):
                tokens = annotate_phrases(tokens, table)
            for i in range(len(tokens) - 1):
                x, y = tokens[i], tokens[i + 1]
                total_pairs += 1
                if unigrams[x] >= gate and unigrams[y] >= gate:
                    pairs[(x, y)] += 1
        if total_pairs == 0:
            break
        added = 0
        for (x, y), n in sorted(pairs.items()):
            if n < gate:
                continue
            score = npmi_rescaled(n, unigrams[x], unigrams[y], total_pairs)
            if score >= config.threshold:
                components = _flatten(x) + _flatten(y)
                if components not in table:
                    table.add(components, score)
                    added += 1
        if added == 0:
            break
    return table


def annotate_phrases(tokens: Sequence[str], table: PhraseTable) -> list[str]:
    """Greedy leftmost-longest phrase merging over a token list.

    At each position the longest table phrase starting there is merged into
    one hyphen-joined token; matches never overlap.  Splitting every output
    token back on "-" reproduces the input sequence.
    """
    if not table.entries:
        return list(tokens)
    max_len = table.max_len()
    out = []
    i = 0
    n = len(tokens)
    while i < n:
        # candidate spans must be compared on flattened components so that
        # already-merged tokens ("a-b") can extend into longer phrases
        best_end = None
        best_components = None
        components: tuple[str, ...] = ()
        j = i
        while j < n:
            components = components + _flatten(tokens[j])
            if len(components) > max_len:
                break
            j += 1
            if len(components) >= 2 and components in table:
                best_end = j
                best_components = components
        if best_end is None:
            out.append(tokens[i])
            i += 1
        else:
            out.append(JOIN_CHAR.join(best_components))
            i = best_end
    return out

"""Ranked resource-need lists from embedding proximity to seed terms.

Candidates are restricted to nouns under a majority-POS lexicon built from
externally tagged input (CoNLL-U or token/tag TSV).  A hyphen-joined phrase
is a noun iff its final component is a noun.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .embeddings import EmbeddingModel, nearest_neighbors
from .errors import InputFormatError

NOUN_TAGS = frozenset(["NOUN", "PROPN"])

# word forms of the seed lemmas; excluded from rankings when the exclusion
# switch is on (see rank_top_needs)
NEED_WORD_FORMS = frozenset(["need", "needs", "needing", "needed", "supply", "supplies"])

DEFAULT_SEEDS = ("needs", "supplies")


@dataclass
class PosLexicon:
    """Per-token POS tag histograms over lowercased tokens."""

    entries: dict[str, dict[str, int]] = field(default_factory=dict)

    def add(self, token: str, tag: str, count: int = 1):
        hist = self.entries.setdefault(token.lower(), {})
        hist[tag] = hist.get(tag, 0) + count

    def __len__(self):
        return len(self.entries)


def build_pos_lexicon(tagged_input: Iterable[tuple[str, str]]) -> PosLexicon:
    lexicon = PosLexicon()
    for token, tag in tagged_input:
        lexicon.add(token, tag)
    if not len(lexicon):
        raise ValueError("empty tagged input")
    return lexicon


def read_tagged_conllu(fh) -> Iterator[tuple[str, str]]:
    """Yield (FORM, UPOS) pairs from CoNLL-U token lines."""
    for lineno, line in enumerate(fh, start=1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise InputFormatError(
                f"expected 10 columns, got {len(cols)}", line=lineno
            )
        if "-" in cols[0] or "." in cols[0]:
            continue
        yield cols[1], cols[3]


def read_tagged_tsv(fh) -> Iterator[tuple[str, str]]:
    """Yield (token, tag) pairs from two-column TSV."""
    for lineno, line in enumerate(fh, start=1):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise InputFormatError(
                f"expected token<TAB>tag, got {len(parts)} columns", line=lineno
            )
        yield parts[0], parts[1]


def is_noun(lexicon: PosLexicon, term: str) -> bool:
    """A term is a noun iff a noun tag attains the maximum count of its
    histogram (ties resolve to noun).  Hyphen-joined phrases are decided on
    their final component; unknown terms are not nouns."""
    component = term.lower().split("-")[-1]
    hist = lexicon.entries.get(component)
    if not hist:
        return False
    best = max(hist.values())
    return any(hist.get(tag, 0) == best for tag in NOUN_TAGS)


@dataclass
class RankedResourceList:
    items: list[tuple[str, float]]
    seeds: list[str]
    k: int

    def dump(self, fh):
        """TSV `rank<TAB>term<TAB>score`."""
        for rank, (term, score) in enumerate(self.items, start=1):
            fh.write(f"{rank}\t{term}\t{score:.6f}\n")

    @classmethod
    def load(cls, fh) -> "RankedResourceList":
        items = []
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise InputFormatError(
                    f"expected rank<TAB>term<TAB>score, got {len(parts)} columns",
                    line=lineno,
                )
            items.append((parts[1], float(parts[2])))
        return cls(items=items, seeds=[], k=len(items))


def rank_top_needs(
    model: EmbeddingModel,
    lexicon: PosLexicon | None,
    seeds: Iterable[str] = DEFAULT_SEEDS,
    k: int = 100,
    merge: str = "max",
    exclude_word_forms: bool = False,
) -> RankedResourceList:
    """Top-k noun terms closest to the seed embeddings.

    Candidate score is the max (or mean, with merge="mean") cosine to the
    seeds.  Seeds themselves are always excluded; the wider need/supply
    word-form set only when exclude_word_forms is on (forms like "needing"
    are legitimate ranked output, so the default keeps them).
    With lexicon=None the noun filter is disabled.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed term required")
    if merge not in ("max", "mean"):
        raise ValueError(f"merge must be 'max' or 'mean', got {merge!r}")
    for seed in seeds:
        if seed not in model.vocab:
            raise ValueError(f"seed term not in vocabulary: {seed!r}")
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return RankedResourceList(items=[], seeds=seeds, k=0)

    excluded = set(seeds)
    if exclude_word_forms:
        excluded |= NEED_WORD_FORMS

    mat = model.input_vectors.astype(np.float64)
    norms = np.linalg.norm(mat, axis=1)
    scores = np.full((len(seeds), mat.shape[0]), 0.0)
    for i, seed in enumerate(seeds):
        sv = mat[model.vocab.index[seed]]
        sn = np.linalg.norm(sv)
        sims = mat @ sv
        ok = (norms > 0) & (sn > 0)
        sims[ok] /= norms[ok] * sn
        sims[~ok] = 0.0
        scores[i] = sims
    merged = scores.max(axis=0) if merge == "max" else scores.mean(axis=0)

    order = np.lexsort((np.arange(len(merged)), -merged))
    items = []
    for idx in order:
        term = model.vocab.terms[idx]
        if term in excluded:
            continue
        if lexicon is not None and not is_noun(lexicon, term):
            continue
        items.append((term, float(merged[idx])))
        if len(items) == k:
            break
    return RankedResourceList(items=items, seeds=seeds, k=k)


def rank_via_neighbors(
    model: EmbeddingModel,
    lexicon: PosLexicon | None,
    seeds: Iterable[str] = DEFAULT_SEEDS,
    k: int = 100,
    exclude_word_forms: bool = False,
) -> RankedResourceList:
    """Oracle path: per-seed nearest_neighbors merged by max score.

    Must agree exactly with rank_top_needs(merge="max"); kept as an
    independent implementation for cross-checking.
    """
    seeds = list(seeds)
    for seed in seeds:
        if seed not in model.vocab:
            raise ValueError(f"seed term not in vocabulary: {seed!r}")
    excluded = set(seeds)
    if exclude_word_forms:
        excluded |= NEED_WORD_FORMS

    def passes(term):
        if term in excluded:
            return False
        return lexicon is None or is_noun(lexicon, term)

    best: dict[str, float] = {}
    for seed in seeds:
        full = nearest_neighbors(
            model, model.vector(seed), len(model.vocab), filter=passes
        )
        for term, score in full:
            if term not in best or score > best[term]:
                best[term] = score
    index = model.vocab.index
    ranked = sorted(best.items(), key=lambda ts: (-ts[1], index[ts[0]]))[:k]
    return RankedResourceList(items=ranked, seeds=seeds, k=k)

"""Evaluation harness: precision@k, P/R/F1, Cohen's kappa, cosine baseline.

Ranked-term matching normalizes both sides (lowercase, hyphens to spaces,
collapsed whitespace) so "medical-equipment" matches a lexicon entry
"medical equipment".  The baseline reranks tweets by cosine similarity of
their mean stemmed-token vector to the stemmed seed terms and labels the
top `cutoff` tweets positive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import TweetRecord
from .embeddings import EmbeddingModel, cosine
from .porter import STOPWORDS, stem
from .topneeds import RankedResourceList


def normalize_term(term: str) -> str:
    return " ".join(term.lower().replace("-", " ").split())


@dataclass
class ResourceLexicon:
    name: str
    terms: set[str]

    @classmethod
    def from_terms(cls, name: str, terms: Iterable[str]) -> "ResourceLexicon":
        normalized = {normalize_term(t) for t in terms}
        normalized.discard("")
        if not normalized:
            raise ValueError(f"lexicon {name!r} is empty")
        return cls(name=name, terms=normalized)

    @classmethod
    def load(cls, name: str, fh) -> "ResourceLexicon":
        """One term per line; `# ` starts a comment.

        A bare `#` glued to text is a term (hashtags such as "#ppe" occur in
        ranked output), so only `#` followed by whitespace comments a line.
        """
        terms = []
        for line in fh:
            line = line.strip()
            if not line or line == "#" or line.startswith("# "):
                continue
            terms.append(line)
        return cls.from_terms(name, terms)

    def __contains__(self, term: str) -> bool:
        return normalize_term(term) in self.terms


@dataclass
class GoldLabels:
    labels: dict[str, bool]

    @classmethod
    def load(cls, fh) -> "GoldLabels":
        """TSV sent_id<TAB>0|1."""
        labels = {}
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            sent_id, value = line.split("\t")
            labels[sent_id] = value.strip() == "1"
        return cls(labels=labels)


@dataclass
class EvalReport:
    metrics: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    def dump(self, fh):
        for name in sorted(self.counts):
            fh.write(f"{name}\t{self.counts[name]}\n")
        for name in sorted(self.metrics):
            fh.write(f"{name}\t{self.metrics[name]:.6f}\n")
        for flag in self.flags:
            fh.write(f"# {flag}\n")


def precision_at_k(
    ranked: RankedResourceList,
    lexicons: Sequence[ResourceLexicon],
    ks: Iterable[int],
) -> EvalReport:
    """precision@k per lexicon plus their union, for each requested k."""
    ks = list(ks)
    terms = [normalize_term(t) for t, _ in ranked.items]
    for k in ks:
        if k > len(terms):
            raise ValueError(f"rank list shorter than k: {k} > {len(terms)}")
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
    union = set()
    for lex in lexicons:
        union |= lex.terms
    report = EvalReport()
    for k in ks:
        top = terms[:k]
        for lex in lexicons:
            hits = sum(1 for t in top if t in lex.terms)
            report.metrics[f"p@{k}:{lex.name}"] = hits / k
        hits = sum(1 for t in top if t in union)
        report.metrics[f"p@{k}:union"] = hits / k
    return report


def prf1(predicted: dict[str, bool], gold: GoldLabels) -> EvalReport:
    """Precision/recall/F1 of boolean predictions against gold labels."""
    missing = sorted(set(gold.labels) - set(predicted))
    extra = sorted(set(predicted) - set(gold.labels))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing from predictions: {', '.join(missing[:10])}")
        if extra:
            parts.append(f"not in gold: {', '.join(extra[:10])}")
        raise ValueError("sentence id mismatch; " + "; ".join(parts))
    tp = fp = fn = tn = 0
    for sent_id, g in gold.labels.items():
        p = predicted[sent_id]
        if p and g:
            tp += 1
        elif p and not g:
            fp += 1
        elif not p and g:
            fn += 1
        else:
            tn += 1
    report = EvalReport(counts={"TP": tp, "FP": fp, "FN": fn, "TN": tn})
    if tp + fp == 0:
        precision = 0.0
        report.flags.append("precision undefined (no predicted positives); reported as 0.0")
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall = 0.0
        report.flags.append("recall undefined (no gold positives); reported as 0.0")
    else:
        recall = tp / (tp + fn)
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    report.metrics.update({"precision": precision, "recall": recall, "f1": f1})
    return report


def cohens_kappa(a: GoldLabels, b: GoldLabels) -> float:
    """Chance-corrected agreement between two binary annotations."""
    if set(a.labels) != set(b.labels):
        raise ValueError("annotator id sets differ")
    n = len(a.labels)
    if n == 0:
        raise ValueError("no items to compare")
    agree = 0
    a_pos = 0
    b_pos = 0
    for sent_id, va in a.labels.items():
        vb = b.labels[sent_id]
        if va == vb:
            agree += 1
        a_pos += va
        b_pos += vb
    p_o = agree / n
    p_a1, p_b1 = a_pos / n, b_pos / n
    p_e = p_a1 * p_b1 + (1 - p_a1) * (1 - p_b1)
    if p_e == 1.0:
        # degenerate: a single class on both sides
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1 - p_e)


# ---------------------------------------------------------------------------
# cosine-ranking baseline


_STRIP_RE = re.compile(r"https?://\S+|www\.\S+|[@#]\w+")
_WORD_RE = re.compile(r"[a-z]+(?:'[a-z]+)*")


def baseline_preprocess(text: str) -> list[str]:
    """Lowercase, strip URLs/mentions/hashtags/punctuation, drop stopwords,
    Porter-stem the remaining tokens."""
    text = _STRIP_RE.sub(" ", text.lower())
    tokens = _WORD_RE.findall(text)
    return [stem(t) for t in tokens if t not in STOPWORDS]


def baseline_scores(
    tweets: Sequence[TweetRecord],
    model: EmbeddingModel,
    seeds: Sequence[str] = ("need", "requir"),
    vector_agg: str = "mean",
    seed_merge: str = "max",
) -> dict[str, float]:
    """Cosine of each tweet's aggregate token vector to the seed vectors.

    Tweets with no in-vocabulary tokens score -1.
    """
    if vector_agg not in ("mean", "sum"):
        raise ValueError(f"vector_agg must be 'mean' or 'sum', got {vector_agg!r}")
    if seed_merge not in ("max", "mean"):
        raise ValueError(f"seed_merge must be 'max' or 'mean', got {seed_merge!r}")
    for seed in seeds:
        if seed not in model.vocab:
            raise ValueError(f"baseline seed term not in vocabulary: {seed!r}")
    seed_vecs = [model.vector(s) for s in seeds]
    scores = {}
    for tweet in tweets:
        tokens = baseline_preprocess(tweet.text)
        vecs = [model.vector(t) for t in tokens if t in model.vocab]
        if not vecs:
            scores[tweet.id] = -1.0
            continue
        agg = np.sum(vecs, axis=0)
        if vector_agg == "mean":
            agg = agg / len(vecs)
        sims = [cosine(agg, sv) for sv in seed_vecs]
        scores[tweet.id] = max(sims) if seed_merge == "max" else float(np.mean(sims))
    return scores


def labels_from_scores(scores: dict[str, float], cutoff: int) -> dict[str, bool]:
    """Label the `cutoff` highest-scoring ids positive (ties broken by id)."""
    order = sorted(scores, key=lambda tid: (-scores[tid], tid))
    positive = set(order[:cutoff])
    return {tid: tid in positive for tid in scores}


def baseline_rank(
    tweets: Sequence[TweetRecord],
    model: EmbeddingModel,
    cutoff: int = 250,
    seeds: Sequence[str] = ("need", "requir"),
    vector_agg: str = "mean",
    seed_merge: str = "max",
) -> dict[str, bool]:
    scores = baseline_scores(tweets, model, seeds, vector_agg, seed_merge)
    return labels_from_scores(scores, cutoff)

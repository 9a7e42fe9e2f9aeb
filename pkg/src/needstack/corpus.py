"""Tweet corpus ingestion, sentence splitting and social-media tokenization.

Tweets come in as JSON lines (one object per line with at least "id" and
"text").  Text is split into sentences with a rule-based splitter, then each
sentence is tokenized with a tweet-aware tokenizer: URLs collapse to the
literal token "URL", hashtags and mentions stay whole, punctuation is peeled
off into separate tokens, internal hyphens/apostrophes do not split, and
everything except the URL placeholder is lowercased.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import InputFormatError


@dataclass
class TweetRecord:
    id: str
    text: str
    timestamp: str | None = None
    lang: str | None = None


@dataclass
class TokenSentence:
    tweet_id: str
    tokens: list[str]
    index_in_tweet: int


@dataclass
class IngestStats:
    """Counters reported at end-of-stream by load_tweets."""

    read: int = 0
    loaded: int = 0
    skipped: int = 0
    skipped_lines: list[int] = field(default_factory=list)


def load_tweets(path, on_error="skip", stats=None) -> Iterator[TweetRecord]:
    """Stream TweetRecords from a JSON-lines file.

    on_error="skip" counts malformed lines in `stats` and keeps going;
    on_error="fail" raises InputFormatError naming the offending line.
    Duplicate ids are malformed under the same policy.
    """
    if on_error not in ("skip", "fail"):
        raise ValueError(f"unknown on_error policy: {on_error!r}")
    if stats is None:
        stats = IngestStats()
    seen_ids = set()
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            stats.read += 1
            record = None
            reason = None
            try:
                obj = json.loads(raw.decode("utf-8", errors="replace"))
            except json.JSONDecodeError as exc:
                reason = f"invalid JSON: {exc.msg}"
                obj = None
            if obj is not None:
                if not isinstance(obj, dict):
                    reason = "line is not a JSON object"
                elif "id" not in obj or "text" not in obj:
                    reason = 'missing "id" or "text" field'
                else:
                    tid = str(obj["id"])
                    text = str(obj["text"])
                    if not text.strip():
                        reason = "empty text"
                    elif tid in seen_ids:
                        reason = f"duplicate id {tid!r}"
                    else:
                        record = TweetRecord(
                            id=tid,
                            text=text,
                            timestamp=obj.get("timestamp"),
                            lang=obj.get("lang"),
                        )
            if record is None:
                if on_error == "fail":
                    raise InputFormatError(reason, line=lineno, path=str(path))
                stats.skipped += 1
                stats.skipped_lines.append(lineno)
                continue
            seen_ids.add(record.id)
            stats.loaded += 1
            yield record


# Sentence-final tokens that do not end a sentence.
ABBREVIATIONS = frozenset(
    ["dr.", "mr.", "mrs.", "ms.", "st.", "vs.", "u.s.", "e.g.", "i.e."]
)

_BOUNDARY_RE = re.compile(r"[.!?]+(?=\s)|[.!?]+$|\n")


def split_sentences(text: str) -> list[str]:
    """Split text into sentences at terminal punctuation and newlines.

    The terminal punctuation stays with its sentence.  A period that closes a
    known abbreviation (see ABBREVIATIONS) does not split.
    """
    sentences = []
    start = 0
    for m in _BOUNDARY_RE.finditer(text):
        end = m.end()
        chunk = text[start:end]
        if m.group() != "\n" and m.group().endswith("."):
            words = chunk.split()
            if words and words[-1].lower() in ABBREVIATIONS:
                continue
        sentence = chunk.strip()
        if sentence:
            sentences.append(sentence)
        start = end
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


_URL_RE = r"https?://\S+|www\.\S+"
_TOKEN_RE = re.compile(
    rf"""(?P<url>{_URL_RE})
     | (?P<tag>[#@]\w+(?:[-']\w+)*)
     | (?P<word>\w+(?:['-]\w+)*)
     | (?P<other>\S)""",
    re.VERBOSE,
)

URL_TOKEN = "URL"


def tokenize(sentence: str) -> list[str]:
    """Tokenize one sentence into lowercase tokens.

    URLs become the literal token "URL" (kept uppercase so tokenization is
    idempotent on its own space-joined output).
    """
    tokens = []
    for m in _TOKEN_RE.finditer(sentence):
        if m.lastgroup == "url":
            tokens.append(URL_TOKEN)
        elif m.group() == URL_TOKEN:
            tokens.append(URL_TOKEN)
        else:
            tokens.append(m.group().lower())
    return tokens


def sentences_of_tweet(tweet: TweetRecord) -> Iterator[TokenSentence]:
    idx = 0
    for sent in split_sentences(tweet.text):
        tokens = tokenize(sent)
        if tokens:
            yield TokenSentence(tweet_id=tweet.id, tokens=tokens, index_in_tweet=idx)
            idx += 1


def write_corpus(sentences: Iterable[TokenSentence], fh) -> int:
    """Write the tokenized corpus format: tweet_id<TAB>index<TAB>tokens."""
    n = 0
    for sent in sentences:
        fh.write(f"{sent.tweet_id}\t{sent.index_in_tweet}\t{' '.join(sent.tokens)}\n")
        n += 1
    return n


def read_corpus(path) -> Iterator[TokenSentence]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise InputFormatError(
                    "expected tweet_id<TAB>index<TAB>tokens", line=lineno, path=str(path)
                )
            tweet_id, idx, toks = parts
            try:
                index = int(idx)
            except ValueError:
                raise InputFormatError(
                    f"non-integer sentence index {idx!r}", line=lineno, path=str(path)
                ) from None
            yield TokenSentence(tweet_id=tweet_id, tokens=toks.split(" "), index_in_tweet=index)

"""Who-needs-what triple extraction over CoNLL-U dependency trees.

Two rules. Rule 1 covers need as a verb: a subject child on the left and a
direct-object child on the right. Rule 2 covers need as a noun in the
"X is in need of Y" pattern, with two label schemes: `clear`, where the
copular verb governs a preposition whose object is *need* (nsubj/dobj/prep/
pobj labels), and `ud`, where *need* heads the clause with cop/nsubj/nmod/
case children (the labels modern CoNLL-U parsers emit).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import InputFormatError

NEED_FORMS = frozenset(["need", "needs", "needing", "needed"])
WHO_POS = frozenset(["NOUN", "PROPN", "PRON"])
WHAT_POS = frozenset(["NOUN", "PROPN"])


@dataclass
class DepToken:
    index: int  # 1-based
    form: str
    lemma: str
    upos: str
    head: int  # 0 = root
    deprel: str


@dataclass
class DepSentence:
    sent_id: str
    tokens: list[DepToken]
    text: str | None = None

    def token(self, index: int) -> DepToken:
        return self.tokens[index - 1]

    def children(self, index: int) -> list[DepToken]:
        return [t for t in self.tokens if t.head == index]

    def subtree_indices(self, index: int) -> list[int]:
        out = [index]
        stack = [index]
        while stack:
            head = stack.pop()
            for t in self.tokens:
                if t.head == head:
                    out.append(t.index)
                    stack.append(t.index)
        return sorted(out)

    def yield_text(self, index: int) -> str:
        return " ".join(self.token(i).form for i in self.subtree_indices(index))


@dataclass(frozen=True)
class LabelScheme:
    name: str
    subject: str
    direct_object: str
    preposition: str
    prep_object: str
    copula: str
    nmod: str
    case: str


CLEAR_SCHEME = LabelScheme(
    name="clear",
    subject="nsubj",
    direct_object="dobj",
    preposition="prep",
    prep_object="pobj",
    copula="cop",
    nmod="nmod",
    case="case",
)

UD_SCHEME = LabelScheme(
    name="ud",
    subject="nsubj",
    direct_object="obj",
    preposition="case",
    prep_object="nmod",
    copula="cop",
    nmod="nmod",
    case="case",
)

SCHEMES = {"clear": CLEAR_SCHEME, "ud": UD_SCHEME}


@dataclass(frozen=True)
class NeedTriple:
    sent_id: str
    rule: str  # "R1" or "R2"
    who_head: int
    who_text: str
    need_index: int
    what_head: int
    what_text: str


def parse_conllu(lines: Iterable[str]) -> list[DepSentence]:
    """Parse CoNLL-U input into DepSentences.

    Multiword range lines (id "a-b") and empty nodes (id "a.b") are skipped.
    Malformed columns, non-integer or out-of-range heads, and cyclic trees
    raise InputFormatError with the offending line number.
    """
    sentences = []
    current: list[tuple[int, DepToken]] = []  # (lineno, token)
    sent_id = None
    text = None
    auto_id = 0

    def flush(end_lineno):
        nonlocal current, sent_id, text, auto_id
        if not current:
            sent_id = None
            text = None
            return
        auto_id += 1
        sid = sent_id if sent_id is not None else f"s{auto_id}"
        tokens = [tok for _, tok in current]
        n = len(tokens)
        for lineno, tok in current:
            if not 0 <= tok.head <= n:
                raise InputFormatError(
                    f"HEAD {tok.head} out of range for {n}-token sentence",
                    line=lineno,
                )
            if tok.head == tok.index:
                raise InputFormatError("token is its own head", line=lineno)
        expected = {t.index for t in tokens}
        if expected != set(range(1, n + 1)):
            raise InputFormatError(
                f"non-contiguous token ids in sentence {sid!r}", line=end_lineno
            )
        # every head chain must reach the root without revisiting a node
        for lineno, tok in current:
            seen = set()
            cur = tok.index
            while cur != 0:
                if cur in seen:
                    raise InputFormatError("cyclic dependency tree", line=lineno)
                seen.add(cur)
                cur = tokens[cur - 1].head
        sentences.append(DepSentence(sent_id=sid, tokens=tokens, text=text))
        current = []
        sent_id = None
        text = None

    lineno = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush(lineno)
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                key = key.strip()
                if key == "sent_id":
                    sent_id = value.strip()
                elif key == "text":
                    text = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise InputFormatError(
                f"expected 10 columns, got {len(cols)}", line=lineno
            )
        tok_id = cols[0]
        if "-" in tok_id or "." in tok_id:
            continue
        try:
            index = int(tok_id)
        except ValueError:
            raise InputFormatError(f"non-integer token id {tok_id!r}", line=lineno) from None
        try:
            head = int(cols[6])
        except ValueError:
            raise InputFormatError(f"non-integer HEAD {cols[6]!r}", line=lineno) from None
        current.append(
            (
                lineno,
                DepToken(
                    index=index,
                    form=cols[1],
                    lemma=cols[2],
                    upos=cols[3],
                    head=head,
                    deprel=cols[7],
                ),
            )
        )
    flush(lineno + 1)
    return sentences


def _is_need_token(tok: DepToken, lemma_trigger: bool) -> bool:
    if tok.form.lower() in NEED_FORMS:
        return True
    return lemma_trigger and tok.lemma.lower() == "need"


def match_rule1(
    sent: DepSentence,
    scheme: LabelScheme = UD_SCHEME,
    strict_pos: bool = False,
    lemma_trigger: bool = False,
) -> list[NeedTriple]:
    """Need as a verb: subject child to the left, direct object to the right.

    With multiple qualifying children on a side, the one nearest the need
    token wins.  strict_pos additionally constrains the subject to
    noun/pronoun and the object to noun.
    """
    triples = []
    for tok in sent.tokens:
        if tok.upos != "VERB" or not _is_need_token(tok, lemma_trigger):
            continue
        subjects = [
            c
            for c in sent.children(tok.index)
            if c.deprel == scheme.subject and c.index < tok.index
        ]
        objects = [
            c
            for c in sent.children(tok.index)
            if c.deprel == scheme.direct_object and c.index > tok.index
        ]
        if strict_pos:
            subjects = [c for c in subjects if c.upos in WHO_POS]
            objects = [c for c in objects if c.upos in WHAT_POS]
        if not subjects or not objects:
            continue
        who = max(subjects, key=lambda c: c.index)  # nearest on the left
        what = min(objects, key=lambda c: c.index)  # nearest on the right
        if who.index == what.index:
            continue
        triples.append(
            NeedTriple(
                sent_id=sent.sent_id,
                rule="R1",
                who_head=who.index,
                who_text=sent.yield_text(who.index),
                need_index=tok.index,
                what_head=what.index,
                what_text=sent.yield_text(what.index),
            )
        )
    return triples


def match_rule2(
    sent: DepSentence,
    scheme: LabelScheme = UD_SCHEME,
    lemma_trigger: bool = False,
) -> list[NeedTriple]:
    """Need as a noun: the "X is in need of Y" pattern.

    clear scheme: *need* is the prepositional object of a preposition under
    the copular verb; *who* is the verb's subject; *what* is the
    prepositional object of a preposition under *need*.

    ud scheme: *need* heads the clause and must carry a copula child; *who*
    is its subject child; *what* is an nmod child bearing a case child.
    """
    triples = []
    for tok in sent.tokens:
        if tok.upos != "NOUN" or not _is_need_token(tok, lemma_trigger):
            continue
        who = None
        what = None
        if scheme.name == "clear":
            if tok.deprel != scheme.prep_object or tok.head == 0:
                continue
            prep = sent.token(tok.head)
            if prep.deprel != scheme.preposition or prep.head == 0:
                continue
            verb = sent.token(prep.head)
            subjects = [
                c for c in sent.children(verb.index) if c.deprel == scheme.subject
            ]
            if subjects:
                who = min(subjects, key=lambda c: c.index)
            for sub_prep in sent.children(tok.index):
                if sub_prep.deprel != scheme.preposition:
                    continue
                pobjs = [
                    c
                    for c in sent.children(sub_prep.index)
                    if c.deprel == scheme.prep_object
                ]
                if pobjs:
                    what = min(pobjs, key=lambda c: c.index)
                    break
        else:
            kids = sent.children(tok.index)
            if not any(c.deprel == scheme.copula for c in kids):
                continue
            subjects = [c for c in kids if c.deprel == scheme.subject]
            if subjects:
                who = min(subjects, key=lambda c: c.index)
            for c in kids:
                if c.deprel == scheme.nmod and any(
                    g.deprel == scheme.case for g in sent.children(c.index)
                ):
                    what = c
                    break
        if who is None or what is None or who.index == what.index:
            continue
        triples.append(
            NeedTriple(
                sent_id=sent.sent_id,
                rule="R2",
                who_head=who.index,
                who_text=sent.yield_text(who.index),
                need_index=tok.index,
                what_head=what.index,
                what_text=sent.yield_text(what.index),
            )
        )
    return triples


def extract_triples(
    sentences: Iterable[DepSentence],
    scheme: LabelScheme | str = UD_SCHEME,
    strict_pos: bool = False,
    lemma_trigger: bool = False,
) -> tuple[list[NeedTriple], list[tuple[str, bool]]]:
    """Union of both rules per sentence plus per-sentence boolean labels.

    Triples are deduplicated on (sent_id, who_head, need_index, what_head);
    a sentence is labeled positive iff it yields at least one triple.
    """
    if isinstance(scheme, str):
        scheme = SCHEMES[scheme]
    triples = []
    labels = []
    for sent in sentences:
        seen = set()
        found = []
        for t in match_rule1(sent, scheme, strict_pos, lemma_trigger) + match_rule2(
            sent, scheme, lemma_trigger
        ):
            key = (t.sent_id, t.who_head, t.need_index, t.what_head)
            if key in seen:
                continue
            seen.add(key)
            found.append(t)
        triples.extend(found)
        labels.append((sent.sent_id, bool(found)))
    return triples, labels


def write_triples(triples: Iterable[NeedTriple], fh, sentences=None) -> int:
    """TSV: sent_id, rule, who_text, need_form, what_text, head indices."""
    by_id = {s.sent_id: s for s in sentences} if sentences else {}
    n = 0
    for t in triples:
        sent = by_id.get(t.sent_id)
        need_form = sent.token(t.need_index).form if sent else ""
        fh.write(
            f"{t.sent_id}\t{t.rule}\t{t.who_text}\t{need_form}\t{t.what_text}"
            f"\t{t.who_head}\t{t.need_index}\t{t.what_head}\n"
        )
        n += 1
    return n


def write_labels(labels: Iterable[tuple[str, bool]], fh) -> int:
    n = 0
    for sent_id, positive in labels:
        fh.write(f"{sent_id}\t{1 if positive else 0}\n")
        n += 1
    return n

"""Command-line front end: composable subcommands over files.

Exit codes: 0 success, 1 usage/config error, 2 input format error.  Data
goes to stdout (or --out); diagnostics and the per-command timing summary
go to stderr.  A flat `key = value` config file may supply defaults
(NEEDSTACK_CONFIG or --config); explicit flags win.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from . import corpus, embeddings, evaluation, phrases, topneeds, wnw
from .errors import ConfigError, InputFormatError

CONFIG_KEYS = {
    "dim": int,
    "window": int,
    "negative": int,
    "epochs": int,
    "min-count": int,
    "subsample": float,
    "lr": float,
    "seed": int,
    "workers": int,
    "threshold": float,
    "min-pair-count": int,
    "max-passes": int,
    "scheme": str,
    "strict-pos": bool,
    "lemma-trigger": bool,
    "seeds": str,
    "k": int,
    "merge": str,
    "exclude-word-forms": bool,
    "cutoff": int,
}

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def load_config(path) -> dict:
    """Parse a flat `key = value` config file; unknown keys are rejected."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            typ = CONFIG_KEYS[key]
            try:
                if typ is bool:
                    low = raw.lower()
                    if low in _BOOL_TRUE:
                        value = True
                    elif low in _BOOL_FALSE:
                        value = False
                    else:
                        raise ValueError(f"not a boolean: {raw!r}")
                else:
                    value = typ(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
            values[key] = value
    return values


def _open_out(args):
    if getattr(args, "out", None):
        return open(args.out, "w", encoding="utf-8")
    return sys.stdout


def _cfg(args, key, default):
    """Flag value if given, else config-file value, else default."""
    attr = key.replace("-", "_")
    val = getattr(args, attr, None)
    if val is not None:
        return val
    return args._config.get(key, default)


def _train_config(args) -> embeddings.TrainConfig:
    return embeddings.TrainConfig(
        dim=_cfg(args, "dim", 100),
        window=_cfg(args, "window", 5),
        negative=_cfg(args, "negative", 5),
        epochs=_cfg(args, "epochs", 5),
        min_count=_cfg(args, "min-count", 5),
        subsample=_cfg(args, "subsample", 1e-4),
        initial_lr=_cfg(args, "lr", 0.025),
        seed=_cfg(args, "seed", 1),
        workers=_cfg(args, "workers", 1),
    )


def _phrase_config(args) -> phrases.PhraseConfig:
    return phrases.PhraseConfig(
        threshold=_cfg(args, "threshold", 0.8),
        min_pair_count=_cfg(args, "min-pair-count", 5),
        max_passes=_cfg(args, "max-passes", 3),
    )


def _require_file(path):
    if not Path(path).is_file():
        raise InputFormatError(f"input file not found: {path}")
    return path


def _load_pos_lexicon(path):
    _require_file(path)
    with open(path, encoding="utf-8") as fh:
        if str(path).endswith(".conllu"):
            pairs = list(topneeds.read_tagged_conllu(fh))
        else:
            pairs = list(topneeds.read_tagged_tsv(fh))
    return topneeds.build_pos_lexicon(pairs)


def _seed_list(args):
    raw = _cfg(args, "seeds", "needs,supplies")
    return [s.strip() for s in raw.split(",") if s.strip()]


# ---------------------------------------------------------------------------
# subcommand handlers; each returns (item_count, item_name)


def cmd_ingest(args):
    _require_file(args.infile)
    stats = corpus.IngestStats()

    def sentences():
        for tweet in corpus.load_tweets(args.infile, on_error=args.on_error, stats=stats):
            yield from corpus.sentences_of_tweet(tweet)

    out = _open_out(args)
    try:
        n = corpus.write_corpus(sentences(), out)
    finally:
        if out is not sys.stdout:
            out.close()
    if stats.skipped:
        print(f"[ingest] skipped {stats.skipped} malformed line(s)", file=sys.stderr)
    return n, "sentences"


def cmd_mine_phrases(args):
    _require_file(args.infile)
    config = _phrase_config(args)
    table = phrases.mine_phrases(lambda: corpus.read_corpus(args.infile), config)
    out = _open_out(args)
    try:
        table.dump(out)
    finally:
        if out is not sys.stdout:
            out.close()
    return len(table), "phrases"


def cmd_annotate(args):
    _require_file(args.infile)
    _require_file(args.phrases)
    with open(args.phrases, encoding="utf-8") as fh:
        table = phrases.PhraseTable.load(fh)
    out = _open_out(args)
    n = 0
    try:
        for sent in corpus.read_corpus(args.infile):
            merged = phrases.annotate_phrases(sent.tokens, table)
            out.write(f"{sent.tweet_id}\t{sent.index_in_tweet}\t{' '.join(merged)}\n")
            n += 1
    finally:
        if out is not sys.stdout:
            out.close()
    return n, "sentences"


def cmd_train(args):
    _require_file(args.infile)
    config = _train_config(args)
    model = embeddings.train_sgns(lambda: corpus.read_corpus(args.infile), config)
    embeddings.save_model(model, args.out)
    if args.text_out:
        embeddings.save_text(model, args.text_out)
    return len(model.vocab), "vocabulary terms"


def cmd_top_needs(args):
    _require_file(args.model)
    model = embeddings.load_model(args.model)
    lexicon = _load_pos_lexicon(args.pos_lex) if args.pos_lex else None
    ranked = topneeds.rank_top_needs(
        model,
        lexicon,
        seeds=_seed_list(args),
        k=_cfg(args, "k", 100),
        merge=_cfg(args, "merge", "max"),
        exclude_word_forms=_cfg(args, "exclude-word-forms", False),
    )
    out = _open_out(args)
    try:
        ranked.dump(out)
    finally:
        if out is not sys.stdout:
            out.close()
    return len(ranked.items), "ranked terms"


def cmd_extract(args):
    _require_file(args.conllu)
    with open(args.conllu, encoding="utf-8") as fh:
        sentences = wnw.parse_conllu(fh)
    triples, labels = wnw.extract_triples(
        sentences,
        scheme=_cfg(args, "scheme", "ud"),
        strict_pos=_cfg(args, "strict-pos", False),
        lemma_trigger=_cfg(args, "lemma-trigger", False),
    )
    out = _open_out(args)
    try:
        wnw.write_triples(triples, out, sentences=sentences)
    finally:
        if out is not sys.stdout:
            out.close()
    if args.labels:
        with open(args.labels, "w", encoding="utf-8") as fh:
            wnw.write_labels(labels, fh)
    return len(sentences), "sentences"


def cmd_baseline(args):
    _require_file(args.infile)
    _require_file(args.model)
    model = embeddings.load_model(args.model)
    tweets = list(corpus.load_tweets(args.infile, on_error="skip"))
    labels = evaluation.baseline_rank(
        tweets,
        model,
        cutoff=_cfg(args, "cutoff", 250),
        vector_agg=args.vector_agg,
        seed_merge=args.seed_merge,
    )
    out = _open_out(args)
    try:
        for tid in sorted(labels):
            out.write(f"{tid}\t{1 if labels[tid] else 0}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return len(tweets), "tweets"


def cmd_eval_topk(args):
    _require_file(args.ranked)
    with open(args.ranked, encoding="utf-8") as fh:
        ranked = topneeds.RankedResourceList.load(fh)
    lexicons = []
    for spec in args.lexicon:
        if "=" not in spec:
            raise ConfigError(f"--lexicon expects NAME=path, got {spec!r}")
        name, _, path = spec.partition("=")
        _require_file(path)
        with open(path, encoding="utf-8") as fh:
            lexicons.append(evaluation.ResourceLexicon.load(name, fh))
    ks = [int(x) for x in args.ks.split(",")]
    report = evaluation.precision_at_k(ranked, lexicons, ks)
    report.dump(sys.stdout)
    return len(ks) * (len(lexicons) + 1), "metrics"


def cmd_eval_triples(args):
    _require_file(args.pred)
    _require_file(args.gold)
    with open(args.pred, encoding="utf-8") as fh:
        pred = evaluation.GoldLabels.load(fh).labels
    with open(args.gold, encoding="utf-8") as fh:
        gold = evaluation.GoldLabels.load(fh)
    report = evaluation.prf1(pred, gold)
    report.dump(sys.stdout)
    return len(gold.labels), "sentences"


def cmd_kappa(args):
    _require_file(args.a)
    _require_file(args.b)
    with open(args.a, encoding="utf-8") as fh:
        a = evaluation.GoldLabels.load(fh)
    with open(args.b, encoding="utf-8") as fh:
        b = evaluation.GoldLabels.load(fh)
    kappa = evaluation.cohens_kappa(a, b)
    print(f"kappa\t{kappa:.6f}")
    return len(a.labels), "items"


def cmd_pipeline(args):
    """ingest -> mine-phrases -> annotate -> train -> top-needs."""
    _require_file(args.infile)
    workdir = Path(args.workdir) if args.workdir else Path(args.out).parent
    workdir.mkdir(parents=True, exist_ok=True)
    corpus_file = workdir / "corpus.tsv"
    phrases_file = workdir / "phrases.tsv"
    annotated_file = workdir / "annotated.tsv"
    model_file = workdir / "model.bin"

    stats = corpus.IngestStats()
    with open(corpus_file, "w", encoding="utf-8") as out:
        corpus.write_corpus(
            (
                sent
                for tweet in corpus.load_tweets(args.infile, on_error="skip", stats=stats)
                for sent in corpus.sentences_of_tweet(tweet)
            ),
            out,
        )

    table = phrases.mine_phrases(lambda: corpus.read_corpus(corpus_file), _phrase_config(args))
    with open(phrases_file, "w", encoding="utf-8") as out:
        table.dump(out)

    with open(annotated_file, "w", encoding="utf-8") as out:
        for sent in corpus.read_corpus(corpus_file):
            merged = phrases.annotate_phrases(sent.tokens, table)
            out.write(f"{sent.tweet_id}\t{sent.index_in_tweet}\t{' '.join(merged)}\n")

    model = embeddings.train_sgns(
        lambda: corpus.read_corpus(annotated_file), _train_config(args)
    )
    embeddings.save_model(model, model_file)

    lexicon = _load_pos_lexicon(args.pos_lex) if args.pos_lex else None
    ranked = topneeds.rank_top_needs(
        model,
        lexicon,
        seeds=_seed_list(args),
        k=_cfg(args, "k", 100),
        merge=_cfg(args, "merge", "max"),
        exclude_word_forms=_cfg(args, "exclude-word-forms", False),
    )
    with open(args.out, "w", encoding="utf-8") as out:
        ranked.dump(out)
    with open(args.out, encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    return len(ranked.items), "ranked terms"


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are exit code 1, not argparse's default 2
        raise ConfigError(message)


def _add_train_flags(p):
    p.add_argument("--dim", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--negative", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--min-count", type=int)
    p.add_argument("--subsample", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)


def _add_phrase_flags(p):
    p.add_argument("--threshold", type=float)
    p.add_argument("--min-pair-count", type=int)
    p.add_argument("--max-passes", type=int)


def _add_rank_flags(p):
    p.add_argument("--pos-lex", help="tagged input for the noun filter (.conllu or token/tag TSV)")
    p.add_argument("--seeds", help="comma-separated seed terms (default needs,supplies)")
    p.add_argument("--k", type=int)
    p.add_argument("--merge", choices=["max", "mean"])
    p.add_argument(
        "--exclude-word-forms",
        action="store_const",
        const=True,
        help="drop need/supply word forms from the ranking",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="needstack", description=__doc__)
    parser.add_argument("--config", help="flat key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="tweets JSONL -> tokenized corpus TSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.add_argument("--on-error", choices=["skip", "fail"], default="skip")
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("mine-phrases", help="tokenized corpus -> phrase table TSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    _add_phrase_flags(p)
    p.set_defaults(handler=cmd_mine_phrases)

    p = sub.add_parser("annotate", help="merge mined phrases into corpus tokens")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--phrases", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_annotate)

    p = sub.add_parser("train", help="train embeddings on a tokenized corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="binary model file")
    p.add_argument("--text-out", help="also write text vectors")
    _add_train_flags(p)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("top-needs", help="ranked resource list from a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    _add_rank_flags(p)
    p.set_defaults(handler=cmd_top_needs)

    p = sub.add_parser("extract", help="who-needs-what triples from CoNLL-U")
    p.add_argument("--conllu", required=True)
    p.add_argument("--out")
    p.add_argument("--labels", help="also write per-sentence 0/1 labels")
    p.add_argument("--scheme", choices=["ud", "clear"])
    p.add_argument("--strict-pos", action="store_const", const=True)
    p.add_argument("--lemma-trigger", action="store_const", const=True)
    p.set_defaults(handler=cmd_extract)

    p = sub.add_parser("baseline", help="cosine-ranking need/non-need baseline")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    p.add_argument("--cutoff", type=int)
    p.add_argument("--vector-agg", choices=["mean", "sum"], default="mean")
    p.add_argument("--seed-merge", choices=["max", "mean"], default="max")
    p.set_defaults(handler=cmd_baseline)

    p = sub.add_parser("eval-topk", help="precision@k of a ranked list vs lexicons")
    p.add_argument("--ranked", required=True)
    p.add_argument("--lexicon", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--ks", default="10,20,30,40,50,60,70,80,90,100")
    p.set_defaults(handler=cmd_eval_topk)

    p = sub.add_parser("eval-triples", help="P/R/F1 of predicted labels vs gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.set_defaults(handler=cmd_eval_triples)

    p = sub.add_parser("kappa", help="inter-annotator agreement of two label files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(handler=cmd_kappa)

    p = sub.add_parser("pipeline", help="ingest -> phrases -> train -> top-needs")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="ranked TSV output")
    p.add_argument("--workdir", help="where intermediate files go (default: beside --out)")
    _add_phrase_flags(p)
    _add_train_flags(p)
    _add_rank_flags(p)
    p.set_defaults(handler=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config_path = args.config or os.environ.get("NEEDSTACK_CONFIG")
        args._config = load_config(config_path) if config_path else {}
        start = time.perf_counter()
        n, unit = args.handler(args)
        elapsed = time.perf_counter() - start
        print(f"[{args.command}] {n} {unit} in {elapsed:.2f}s", file=sys.stderr)
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InputFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

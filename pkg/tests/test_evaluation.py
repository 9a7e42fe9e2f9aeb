import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from needstack.corpus import TweetRecord
from needstack.embeddings import EmbeddingModel, TrainConfig, Vocabulary
from needstack.evaluation import (
    GoldLabels,
    ResourceLexicon,
    baseline_preprocess,
    baseline_rank,
    baseline_scores,
    cohens_kappa,
    labels_from_scores,
    normalize_term,
    precision_at_k,
    prf1,
)
from needstack.porter import STOPWORDS, stem
from needstack.topneeds import RankedResourceList


def ranked_of(terms):
    items = [(t, 1.0 - i * 0.001) for i, t in enumerate(terms)]
    return RankedResourceList(items=items, seeds=[], k=len(items))


def gold(pairs):
    return GoldLabels(labels=dict(pairs))


class TestNormalize:
    def test_hyphens_become_spaces(self):
        assert normalize_term("Medical-Equipment") == "medical equipment"

    def test_whitespace_collapsed(self):
        assert normalize_term("  hand   sanitizer ") == "hand sanitizer"

    def test_lexicon_membership_uses_normal_form(self):
        lex = ResourceLexicon.from_terms("x", ["medical equipment"])
        assert "medical-equipment" in lex
        assert "Medical  Equipment" in lex
        assert "ventilators" not in lex


class TestPrecisionAtK:
    def test_simple_hits(self):
        lex = ResourceLexicon.from_terms("who", ["masks", "gloves"])
        report = precision_at_k(ranked_of(["masks", "junk", "gloves", "more"]), [lex], [2, 4])
        assert report.metrics["p@2:who"] == pytest.approx(0.5)
        assert report.metrics["p@4:who"] == pytest.approx(0.5)

    def test_union_counts_either(self):
        a = ResourceLexicon.from_terms("a", ["masks"])
        b = ResourceLexicon.from_terms("b", ["gloves"])
        report = precision_at_k(ranked_of(["masks", "gloves"]), [a, b], [2])
        assert report.metrics["p@2:a"] == pytest.approx(0.5)
        assert report.metrics["p@2:b"] == pytest.approx(0.5)
        assert report.metrics["p@2:union"] == pytest.approx(1.0)

    def test_k_exceeds_list(self):
        lex = ResourceLexicon.from_terms("a", ["masks"])
        with pytest.raises(ValueError, match="shorter"):
            precision_at_k(ranked_of(["masks"]), [lex], [5])

    def test_k_below_one(self):
        lex = ResourceLexicon.from_terms("a", ["masks"])
        with pytest.raises(ValueError):
            precision_at_k(ranked_of(["masks"]), [lex], [0])

    def test_fixture_reference_values(self, fixtures):
        with open(fixtures / "ranked_top100.tsv") as fh:
            ranked = RankedResourceList.load(fh)
        with open(fixtures / "lexicon_who.txt") as fh:
            who = ResourceLexicon.load("who", fh)
        with open(fixtures / "lexicon_hhs.txt") as fh:
            hhs = ResourceLexicon.load("hhs", fh)
        report = precision_at_k(ranked, [who, hhs], [10, 100])
        assert report.metrics["p@10:who"] == pytest.approx(0.8)
        assert report.metrics["p@10:hhs"] == pytest.approx(0.9)
        assert report.metrics["p@10:union"] == pytest.approx(1.0)
        assert report.metrics["p@100:who"] == pytest.approx(0.41)
        assert report.metrics["p@100:hhs"] == pytest.approx(0.57)
        assert report.metrics["p@100:union"] == pytest.approx(0.64)

    @given(
        terms=st.lists(
            st.text(alphabet="abcdef", min_size=1, max_size=4),
            min_size=1,
            max_size=20,
            unique=True,
        ),
        lex_terms=st.lists(st.text(alphabet="abcdef", min_size=1, max_size=4), min_size=1),
    )
    def test_union_at_least_each_part(self, terms, lex_terms):
        a = ResourceLexicon.from_terms("a", lex_terms)
        b = ResourceLexicon.from_terms("b", lex_terms[:1])
        report = precision_at_k(ranked_of(terms), [a, b], [len(terms)])
        k = len(terms)
        union = report.metrics[f"p@{k}:union"]
        assert union >= report.metrics[f"p@{k}:a"] - 1e-12
        assert union >= report.metrics[f"p@{k}:b"] - 1e-12


class TestPrf1:
    def test_balanced_example(self):
        # TP=7 FP=3 FN=3 TN=7 -> P=R=F1=0.7
        g = {}
        p = {}
        for i in range(20):
            sid = f"s{i:02d}"
            g[sid] = i < 10
            p[sid] = (i < 7) or (10 <= i < 13)
        report = prf1(p, gold(g))
        assert report.counts == {"TP": 7, "FP": 3, "FN": 3, "TN": 7}
        for name in ("precision", "recall", "f1"):
            assert report.metrics[name] == pytest.approx(0.7, abs=1e-9)

    def test_perfect(self):
        g = {"a": True, "b": False}
        report = prf1(dict(g), gold(g))
        assert report.metrics["f1"] == pytest.approx(1.0)

    def test_no_predicted_positives_flagged(self):
        report = prf1({"a": False, "b": False}, gold({"a": True, "b": False}))
        assert report.metrics["precision"] == 0.0
        assert report.metrics["f1"] == 0.0
        assert any("precision undefined" in f for f in report.flags)

    def test_no_gold_positives_flagged(self):
        report = prf1({"a": True}, gold({"a": False}))
        assert report.metrics["recall"] == 0.0
        assert any("recall undefined" in f for f in report.flags)

    def test_id_mismatch_error(self):
        with pytest.raises(ValueError, match="id mismatch"):
            prf1({"a": True}, gold({"b": True}))

    @given(
        st.dictionaries(
            st.text(alphabet="xyz", min_size=1, max_size=3),
            st.tuples(st.booleans(), st.booleans()),
            min_size=1,
        )
    )
    def test_f1_is_harmonic_mean(self, joint):
        pred = {k: v[0] for k, v in joint.items()}
        g = gold({k: v[1] for k, v in joint.items()})
        report = prf1(pred, g)
        p, r, f1 = (report.metrics[n] for n in ("precision", "recall", "f1"))
        assert 0.0 <= f1 <= 1.0
        if p + r > 0:
            assert f1 == pytest.approx(2 * p * r / (p + r), abs=1e-12)
        assert f1 <= max(p, r) + 1e-12


class TestKappa:
    def test_reference_table(self):
        # agreement table a=80, b=20, c=10, d=90: p_o=0.85, p_e=0.5
        a = {}
        b = {}
        i = 0
        for _ in range(80):
            a[f"i{i}"] = True
            b[f"i{i}"] = True
            i += 1
        for _ in range(20):
            a[f"i{i}"] = True
            b[f"i{i}"] = False
            i += 1
        for _ in range(10):
            a[f"i{i}"] = False
            b[f"i{i}"] = True
            i += 1
        for _ in range(90):
            a[f"i{i}"] = False
            b[f"i{i}"] = False
            i += 1
        assert cohens_kappa(gold(a), gold(b)) == pytest.approx(0.7, abs=1e-9)

    def test_perfect_agreement(self):
        labels = {"a": True, "b": False, "c": True}
        assert cohens_kappa(gold(labels), gold(labels)) == pytest.approx(1.0)

    def test_degenerate_single_class(self):
        labels = {"a": True, "b": True}
        assert cohens_kappa(gold(labels), gold(labels)) == 1.0

    def test_degenerate_disagreement(self):
        a = {"x": True}
        b = {"x": False}
        # p_e = 0*1 + 1*0 = 0 here, so not degenerate; kappa = -... check sign
        assert cohens_kappa(gold(a), gold(b)) <= 0.0

    def test_id_set_mismatch(self):
        with pytest.raises(ValueError):
            cohens_kappa(gold({"a": True}), gold({"b": True}))

    @given(
        st.dictionaries(
            st.integers(0, 30).map(str),
            st.tuples(st.booleans(), st.booleans()),
            min_size=1,
        )
    )
    def test_symmetric_and_bounded(self, joint):
        a = gold({k: v[0] for k, v in joint.items()})
        b = gold({k: v[1] for k, v in joint.items()})
        k_ab = cohens_kappa(a, b)
        k_ba = cohens_kappa(b, a)
        assert k_ab == pytest.approx(k_ba, abs=1e-12)
        assert -1.0 - 1e-12 <= k_ab <= 1.0 + 1e-12


class TestPorter:
    @pytest.mark.parametrize(
        "word,expected",
        [
            ("caresses", "caress"),
            ("ponies", "poni"),
            ("ties", "ti"),
            ("caress", "caress"),
            ("cats", "cat"),
            ("feed", "feed"),
            ("agreed", "agre"),
            ("plastered", "plaster"),
            ("motoring", "motor"),
            ("sing", "sing"),
            ("conflated", "conflat"),
            ("hopping", "hop"),
            ("falling", "fall"),
            ("filing", "file"),
            ("happy", "happi"),
            ("relational", "relat"),
            ("conditional", "condit"),
            ("vileli", "vile"),
            ("triplicate", "triplic"),
            ("formative", "form"),
            ("hopefulness", "hope"),
            ("revival", "reviv"),
            ("adoption", "adopt"),
            ("activate", "activ"),
            ("effective", "effect"),
            ("probate", "probat"),
            ("rate", "rate"),
            ("controll", "control"),
            ("roll", "roll"),
            ("require", "requir"),
            ("required", "requir"),
            ("requires", "requir"),
            ("needed", "need"),
            ("needs", "need"),
            ("supplies", "suppli"),
        ],
    )
    def test_classic_cases(self, word, expected):
        assert stem(word) == expected

    def test_stopwords_contains_function_words(self):
        for w in ("the", "and", "of", "is", "we", "you"):
            assert w in STOPWORDS
        assert "masks" not in STOPWORDS


def baseline_model():
    """Four stems on fixed axes so cosine scores are easy to reason about."""
    terms = ["need", "requir", "mask", "beach"]
    vecs = np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.7, 0.7, 0.0],
            [0.0, 0.0, 1.0],
        ],
        dtype=np.float32,
    )
    vocab = Vocabulary(terms=terms, counts=np.full(4, 5, dtype=np.int64))
    return EmbeddingModel(
        vocab=vocab,
        input_vectors=vecs,
        output_vectors=np.zeros_like(vecs),
        config=TrainConfig(dim=3),
    )


class TestBaseline:
    def test_preprocess_strips_noise(self):
        tokens = baseline_preprocess(
            "We URGENTLY need masks! https://t.co/x @mayor #covid19"
        )
        assert tokens == ["urgent", "need", "mask"]

    def test_preprocess_drops_stopwords(self):
        assert baseline_preprocess("the of and") == []

    def test_scores_rank_needy_tweets_higher(self):
        model = baseline_model()
        tweets = [
            TweetRecord(id="t1", text="Hospitals need masks"),
            TweetRecord(id="t2", text="Lovely day at the beach"),
        ]
        scores = baseline_scores(tweets, model)
        assert scores["t1"] > scores["t2"]

    def test_empty_vocab_tweet_scores_minus_one(self):
        model = baseline_model()
        tweets = [TweetRecord(id="t1", text="zzz qqq")]
        assert baseline_scores(tweets, model)["t1"] == -1.0

    def test_missing_seed_error(self):
        model = baseline_model()
        with pytest.raises(ValueError, match="seed"):
            baseline_scores([], model, seeds=("absent",))

    def test_cutoff_labels(self):
        scores = {"a": 0.9, "b": 0.5, "c": 0.1}
        labels = labels_from_scores(scores, 2)
        assert labels == {"a": True, "b": True, "c": False}

    def test_cutoff_tie_broken_by_id(self):
        labels = labels_from_scores({"b": 0.5, "a": 0.5, "c": 0.5}, 1)
        assert labels == {"a": True, "b": False, "c": False}

    def test_cutoff_saturates(self):
        labels = labels_from_scores({"a": 0.1}, 250)
        assert labels == {"a": True}

    def test_rank_composition(self):
        model = baseline_model()
        tweets = [
            TweetRecord(id="t1", text="Hospitals need masks"),
            TweetRecord(id="t2", text="Lovely day at the beach"),
            TweetRecord(id="t3", text="zzz"),
        ]
        labels = baseline_rank(tweets, model, cutoff=1)
        assert labels == {"t1": True, "t2": False, "t3": False}

    def test_score_shift_invariance(self):
        scores = {"a": 0.9, "b": 0.4, "c": -1.0}
        shifted = {k: v + 0.05 for k, v in scores.items()}
        assert labels_from_scores(scores, 2) == labels_from_scores(shifted, 2)


class TestReportDump:
    def test_layout(self):
        from needstack.evaluation import EvalReport

        report = EvalReport(
            metrics={"precision": 0.5}, counts={"TP": 1}, flags=["note"]
        )
        buf = io.StringIO()
        report.dump(buf)
        assert buf.getvalue() == "TP\t1\nprecision\t0.500000\n# note\n"

import pytest
from hypothesis import given, strategies as st

from needstack.corpus import (
    IngestStats,
    TokenSentence,
    URL_TOKEN,
    load_tweets,
    read_corpus,
    sentences_of_tweet,
    split_sentences,
    tokenize,
    write_corpus,
)
from needstack.errors import InputFormatError


def write_jsonl(tmp_path, lines, name="tweets.jsonl"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


class TestLoadTweets:
    def test_basic_line(self, tmp_path):
        path = write_jsonl(tmp_path, ['{"id":"1","text":"We need masks"}'])
        records = list(load_tweets(path))
        assert len(records) == 1
        assert records[0].id == "1"
        assert records[0].text == "We need masks"

    def test_skip_policy_counts(self, tmp_path):
        path = write_jsonl(
            tmp_path, ['{"id":"1","text":"ok"}', "not json", '{"id":"2","text":"ok"}']
        )
        stats = IngestStats()
        records = list(load_tweets(path, on_error="skip", stats=stats))
        assert [r.id for r in records] == ["1", "2"]
        assert stats.skipped == 1
        assert stats.skipped_lines == [2]

    def test_fail_policy_names_line(self, tmp_path):
        path = write_jsonl(tmp_path, ['{"id":"1","text":"ok"}', "not json"])
        with pytest.raises(InputFormatError) as exc:
            list(load_tweets(path, on_error="fail"))
        assert exc.value.line == 2

    def test_empty_file(self, tmp_path):
        path = write_jsonl(tmp_path, [])
        assert list(load_tweets(path)) == []

    def test_duplicate_id_skipped(self, tmp_path):
        path = write_jsonl(
            tmp_path, ['{"id":"1","text":"a"}', '{"id":"1","text":"b"}']
        )
        stats = IngestStats()
        records = list(load_tweets(path, stats=stats))
        assert len(records) == 1
        assert stats.skipped == 1

    def test_optional_fields(self, tmp_path):
        path = write_jsonl(
            tmp_path,
            ['{"id":"1","text":"hi","timestamp":"2020-03-01T00:00:00Z","lang":"en"}'],
        )
        rec = next(load_tweets(path))
        assert rec.timestamp == "2020-03-01T00:00:00Z"
        assert rec.lang == "en"

    @given(st.binary(max_size=200))
    def test_skip_never_raises_on_arbitrary_bytes(self, tmp_path_factory, payload):
        tmp = tmp_path_factory.mktemp("bytes")
        path = tmp / "t.jsonl"
        path.write_bytes(payload)
        list(load_tweets(path, on_error="skip"))


class TestSplitSentences:
    def test_two_terminals(self):
        assert split_sentences("We need masks. Send help!") == [
            "We need masks.",
            "Send help!",
        ]

    def test_abbreviation_no_split(self):
        assert split_sentences("Dr. Smith needs PPE") == ["Dr. Smith needs PPE"]

    def test_empty(self):
        assert split_sentences("") == []

    def test_newline_boundary(self):
        assert split_sentences("first line\nsecond line") == [
            "first line",
            "second line",
        ]

    def test_question_and_multi_punct(self):
        assert split_sentences("Really?! Yes.") == ["Really?!", "Yes."]

    @pytest.mark.parametrize("abbr", ["Mr.", "Mrs.", "St.", "vs.", "e.g.", "i.e."])
    def test_abbreviation_list(self, abbr):
        text = f"{abbr} something more"
        assert split_sentences(text) == [text]

    @given(st.text(max_size=300))
    def test_no_character_loss(self, text):
        joined = "".join(split_sentences(text))
        kept = [c for c in text if not c.isspace()]
        got = [c for c in joined if not c.isspace()]
        assert got == kept


class TestTokenize:
    def test_hashtag_and_punct(self):
        assert tokenize("#PPE needed NOW!") == ["#ppe", "needed", "now", "!"]

    def test_url_and_mention(self):
        assert tokenize("see https://t.co/abc @WHO") == ["see", URL_TOKEN, "@who"]

    def test_internal_hyphen(self):
        assert tokenize("medical-equipment") == ["medical-equipment"]

    def test_internal_apostrophe(self):
        assert tokenize("don't panic") == ["don't", "panic"]

    def test_leading_trailing_punct_peeled(self):
        assert tokenize('"masks,"') == ['"', "masks", ",", '"']

    def test_www_url(self):
        assert tokenize("visit www.example.com today") == ["visit", URL_TOKEN, "today"]

    @given(st.text(max_size=200))
    def test_idempotent_on_own_output(self, text):
        tokens = tokenize(text)
        assert tokenize(" ".join(tokens)) == tokens

    @given(st.text(alphabet=st.characters(blacklist_categories=["Cs"]), max_size=200))
    def test_alnum_conservation(self, text):
        from collections import Counter
        import re

        # URL spans are replaced wholesale, so strip them from the reference
        stripped = re.sub(r"https?://\S+|www\.\S+", " ", text)
        tokens = tokenize(stripped)
        # final-sigma lowercasing depends on token context; fold it away
        def fold(s):
            return s.lower().replace("ς", "σ")

        want = Counter(c for c in fold(stripped) if c.isalnum())
        got = Counter(c for t in tokens if t != URL_TOKEN for c in fold(t) if c.isalnum())
        assert got == want


class TestCorpusRoundTrip:
    def test_write_then_read(self, tmp_path):
        sents = [
            TokenSentence("t1", ["we", "need", "masks"], 0),
            TokenSentence("t1", ["send", "help", "!"], 1),
            TokenSentence("t2", ["#ppe", "now"], 0),
        ]
        path = tmp_path / "corpus.tsv"
        with open(path, "w", encoding="utf-8") as fh:
            assert write_corpus(sents, fh) == 3
        assert list(read_corpus(path)) == sents

    def test_sentences_of_tweet(self):
        from needstack.corpus import TweetRecord

        tweet = TweetRecord(id="9", text="We need masks. Send help!")
        sents = list(sentences_of_tweet(tweet))
        assert [s.tokens for s in sents] == [["we", "need", "masks", "."], ["send", "help", "!"]]
        assert [s.index_in_tweet for s in sents] == [0, 1]

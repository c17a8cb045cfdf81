import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import tfidf_dense
from skillscope.textprep import (
    EmptyVocabularyError,
    clean_text,
    fit_tfidf,
    model_from_json,
    model_to_json,
    stopwords,
    to_dense,
    tokenize,
    transform,
)


class TestCleanText:
    def test_each_removal_rule(self):
        assert clean_text("See https://ex.com 🚀 <b>fix</b> crash") == "See fix crash"

    def test_empty(self):
        assert clean_text("") == ""

    def test_plain_text_is_fixpoint(self):
        assert clean_text("plain words only") == "plain words only"

    def test_www_urls_and_html(self):
        assert clean_text("go to www.example.org/x?a=1 now") == "go to now"
        assert clean_text('<a href="https://x.y">link</a> text') == "link text"

    def test_whitespace_collapsed(self):
        assert clean_text("a\n\n b\t\tc ") == "a b c"

    noisy = st.text(
        alphabet=st.one_of(
            st.characters(min_codepoint=32, max_codepoint=126),
            st.sampled_from("🚀😀⭐‍️<>/\n\t"),
        ),
        max_size=80,
    )

    @given(noisy)
    def test_idempotent(self, raw):
        once = clean_text(raw)
        assert clean_text(once) == once


class TestTokenize:
    def test_camel_split_and_stopword_drop(self):
        got = tokenize("NullPointerException in executeQuery")
        assert got == ["null", "pointer", "exception", "execute", "query"]

    def test_short_tokens_dropped(self):
        assert tokenize("a I x") == []

    def test_digits_split_and_length_rule(self):
        assert tokenize("DB2") == ["db"]

    def test_stopword_list_is_fifty_words(self):
        assert len(stopwords()) == 50
        assert "in" in stopwords()


class TestTfidf:
    def test_idf_token_in_every_doc(self):
        model = fit_tfidf([["bug"], ["bug"]])
        assert model.idf[model.vocabulary["bug"]] == pytest.approx(1.0, abs=1e-12)

    def test_idf_token_in_one_of_two(self):
        model = fit_tfidf([["crash"], ["bug"]])
        # ln(3/2) + 1, evaluated independently
        assert model.idf[model.vocabulary["crash"]] == pytest.approx(
            math.log(1.5) + 1.0, abs=1e-9
        )
        assert model.idf[model.vocabulary["crash"]] == pytest.approx(1.4054651081081644, abs=1e-9)

    def test_empty_corpus_errors(self):
        with pytest.raises(EmptyVocabularyError):
            fit_tfidf([])
        with pytest.raises(EmptyVocabularyError):
            fit_tfidf([[], []])

    def test_vocabulary_sorted_and_contiguous(self):
        model = fit_tfidf([["zeta", "alpha"], ["mid"]])
        assert list(model.vocabulary) == ["alpha", "mid", "zeta"]
        assert sorted(model.vocabulary.values()) == [0, 1, 2]

    def test_single_known_token_is_unit(self):
        model = fit_tfidf([["bug", "crash"], ["bug"]])
        vec = transform(model, ["crash"])
        assert vec == {model.vocabulary["crash"]: pytest.approx(1.0, abs=1e-12)}

    def test_unknown_tokens_zero_vector(self):
        model = fit_tfidf([["bug"]])
        assert transform(model, ["unseen", "words"]) == {}

    def test_weights_pinned_by_oracle(self):
        corpus = [["bug", "bug", "crash"], ["bug"]]
        doc = ["bug", "bug", "crash"]
        vocab, expected = tfidf_dense(corpus, doc)
        assert vocab == ["bug", "crash"]
        # frozen from the oracle: weights (2*1.0, 1*(ln(3/2)+1)) normalized
        assert expected[0] == pytest.approx(0.8181802073667197, abs=1e-12)
        assert expected[1] == pytest.approx(0.5749618667993135, abs=1e-12)
        model = fit_tfidf(corpus)
        got = to_dense(transform(model, doc), model.size)
        np.testing.assert_allclose(got, expected, atol=1e-9)

    def test_norm_is_one(self):
        model = fit_tfidf([["a", "b", "c"], ["a"], ["b", "d"]])
        vec = transform(model, ["a", "c", "d", "d"])
        assert math.sqrt(sum(w * w for w in vec.values())) == pytest.approx(1.0, abs=1e-9)

    def test_transform_repeatable(self):
        model = fit_tfidf([["x", "y"], ["y"]])
        assert transform(model, ["x", "y", "y"]) == transform(model, ["x", "y", "y"])

    def test_roundtrip_serialization(self):
        model = fit_tfidf([["bug", "crash"], ["bug"]])
        clone = model_from_json(model_to_json(model))
        assert clone.vocabulary == model.vocabulary
        np.testing.assert_array_equal(clone.idf, model.idf)
        assert clone.corpus_size == model.corpus_size
        assert model_to_json(clone) == model_to_json(model)

    token = st.text(alphabet="abcdefgh", min_size=1, max_size=5)

    @given(st.lists(st.lists(token, max_size=8), min_size=1, max_size=10), st.data())
    def test_matches_oracle_on_random_corpora(self, corpus, data):
        if all(not doc for doc in corpus):
            return
        doc = data.draw(st.sampled_from(corpus))
        model = fit_tfidf(corpus)
        got = to_dense(transform(model, doc), model.size)
        vocab, expected = tfidf_dense(corpus, doc)
        assert list(model.vocabulary) == vocab
        np.testing.assert_allclose(got, np.asarray(expected), atol=1e-9)

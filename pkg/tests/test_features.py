"""Tokenization, TF-IDF fitting/transforming, vocabulary serialization."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from uttlabel.features import (
    SparseVector,
    default_stopwords,
    fit_tfidf,
    load_vocabulary,
    normalize_tokens,
    save_vocabulary,
    transform_tfidf,
    vectors_to_csr,
)


class TestNormalizeTokens:
    def test_lowercase_and_split(self):
        assert normalize_tokens("Cat DOG", stopwords=frozenset()) == ["cat", "dog"]

    def test_boundary_punctuation_stripped(self):
        tokens = normalize_tokens('"Hello!" (yes)', stopwords=frozenset())
        assert tokens == ["hello", "yes"]

    def test_interior_punctuation_kept(self):
        assert normalize_tokens("don't stop", stopwords=frozenset()) == ["don't", "stop"]

    def test_placeholders_dropped_before_stripping(self):
        tokens = normalize_tokens("[PAD] [SEP] word", stopwords=frozenset())
        assert tokens == ["word"]

    def test_pure_punctuation_dropped(self):
        assert normalize_tokens("... ?! --", stopwords=frozenset()) == []

    def test_stopwords_dropped_after_stripping(self):
        # "The." strips to "the" and only then matches the stopword list
        assert normalize_tokens("The. cat") == ["cat"]

    def test_default_stopwords_loaded(self):
        stops = default_stopwords()
        assert "the" in stops and "and" in stops
        assert "cat" not in stops

    def test_unicode_letters_survive(self):
        assert normalize_tokens("café señor", stopwords=frozenset()) == ["café", "señor"]

    @given(st.text(max_size=80))
    @settings(max_examples=200)
    def test_tokens_nonempty_lowercase_no_boundary_punct(self, text):
        for tok in normalize_tokens(text):
            assert tok
            assert tok == tok.lower()
            assert tok[0].isalnum() and tok[-1].isalnum()


class TestFitTfidf:
    def test_hand_example(self):
        # two docs: both contain "cat", only the first contains "sat"
        docs = [["cat", "sat"], ["cat"]]
        vocab = fit_tfidf(docs, max_vocab=10)
        idf = dict(zip(vocab.terms, vocab.idf))
        assert idf["cat"] == pytest.approx(1.0, abs=1e-12)
        assert idf["sat"] == pytest.approx(math.log(1.5) + 1.0, abs=1e-12)
        vec = transform_tfidf(vocab, ["cat", "sat"])
        dense = [0.0, 0.0]
        for idx, weight in vec.entries.items():
            dense[idx] = weight
        by_term = {term: dense[vocab.term_index[term]] for term in ("cat", "sat")}
        assert by_term["cat"] == pytest.approx(0.57974, abs=1e-5)
        assert by_term["sat"] == pytest.approx(0.81481, abs=1e-5)

    def test_truncation_by_df_then_lex(self):
        docs = [["a", "b", "c"], ["a", "b"], ["a", "z"]]
        vocab = fit_tfidf(docs, max_vocab=2)
        assert vocab.terms == ("a", "b")
        # lexicographic tie-break within equal document frequency
        tie_docs = [["beta", "alpha"]]
        tie_vocab = fit_tfidf(tie_docs, max_vocab=1)
        assert tie_vocab.terms == ("alpha",)

    def test_truncation_prefix_property(self):
        docs = [["a", "b", "c", "d"], ["a", "b", "c"], ["a", "b"], ["a"]]
        full = fit_tfidf(docs, max_vocab=100)
        small = fit_tfidf(docs, max_vocab=2)
        assert small.terms == full.terms[:2]

    def test_counts_within_doc_do_not_raise_df(self):
        docs = [["a", "a", "a"], ["b"]]
        vocab = fit_tfidf(docs, max_vocab=10)
        idf = dict(zip(vocab.terms, vocab.idf))
        assert idf["a"] == pytest.approx(idf["b"], abs=1e-12)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            fit_tfidf([], max_vocab=5)
        with pytest.raises(ValueError):
            fit_tfidf([[], []], max_vocab=5)

    @given(
        docs=st.lists(
            st.lists(st.sampled_from("abcdef"), min_size=1, max_size=8),
            min_size=1,
            max_size=12,
        )
    )
    @settings(max_examples=100)
    def test_matches_oracle(self, docs):
        vocab = fit_tfidf(docs, max_vocab=50)
        for doc in docs:
            got = transform_tfidf(vocab, doc)
            want = oracles.tfidf_vector(doc, docs, vocab.terms)
            dense = {vocab.terms[i]: w for i, w in got.entries.items()}
            assert set(dense) == set(want)
            for term, weight in want.items():
                assert dense[term] == pytest.approx(weight, abs=1e-9)


class TestTransform:
    def test_unknown_terms_ignored(self):
        vocab = fit_tfidf([["a"], ["a", "b"]], max_vocab=10)
        vec = transform_tfidf(vocab, ["zzz", "a"])
        assert len(vec.entries) == 1

    def test_all_unknown_gives_zero_vector(self):
        vocab = fit_tfidf([["a"]], max_vocab=10)
        vec = transform_tfidf(vocab, ["zzz"])
        assert vec.entries == {}
        assert vec.norm() == 0.0

    def test_unit_norm(self):
        vocab = fit_tfidf([["a", "b"], ["a", "c"]], max_vocab=10)
        vec = transform_tfidf(vocab, ["a", "b", "c", "b"])
        assert vec.norm() == pytest.approx(1.0, abs=1e-12)

    def test_vectors_to_csr_layout(self):
        vocab = fit_tfidf([["a", "b"], ["b", "c"]], max_vocab=10)
        vecs = [transform_tfidf(vocab, ["a"]), transform_tfidf(vocab, ["b", "c"])]
        X = vectors_to_csr(vecs, len(vocab))
        assert X.shape == (2, 3)
        assert X.dtype.kind == "f"
        row0 = X.getrow(0).toarray().ravel()
        assert row0[vocab.term_index["a"]] == pytest.approx(1.0)


class TestVocabularySerialization:
    def test_round_trip(self, tmp_path):
        docs = [["alpha", "beta"], ["alpha"], ["gamma", "beta", "alpha"]]
        vocab = fit_tfidf(docs, max_vocab=2)
        path = tmp_path / "vocab.tsv"
        save_vocabulary(vocab, path)
        again = load_vocabulary(path)
        assert again.terms == vocab.terms
        assert again.max_size == vocab.max_size
        for a, b in zip(again.idf, vocab.idf):
            assert a == b  # repr round-trip is exact
        doc = ["alpha", "beta", "beta"]
        assert transform_tfidf(again, doc).entries == transform_tfidf(vocab, doc).entries

    def test_header_format(self, tmp_path):
        vocab = fit_tfidf([["x"]], max_vocab=7)
        path = tmp_path / "vocab.tsv"
        save_vocabulary(vocab, path)
        first = path.read_text().splitlines()[0]
        assert first == "# n=1 max_vocab=7"

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "vocab.tsv"
        path.write_text("term\t1.0\n")
        with pytest.raises(ValueError):
            load_vocabulary(path)

import numpy as np
import pytest

from tomcat.corpus import (
    CorpusError,
    RawCorpus,
    Vocabulary,
    build_vocabulary,
    count_documents,
    idf_weights,
    load_documents,
    tfidf,
    tfidf_transform,
)


class TestBuildVocabulary:
    def test_tie_break_lexicographic(self):
        # a and b both occur twice, c once: frequency desc, then token asc
        docs = [["a", "a", "b"], ["b", "c"]]
        vocab = build_vocabulary(docs, min_count=1, max_vocab=10)
        assert vocab.tokens == ["a", "b", "c"]

    def test_min_count_filters(self):
        docs = [["a", "a", "b"], ["b", "c"]]
        vocab = build_vocabulary(docs, min_count=2, max_vocab=10)
        assert vocab.tokens == ["a", "b"]

    def test_empty_vocabulary_error(self):
        with pytest.raises(CorpusError):
            build_vocabulary([["x"]], min_count=2, max_vocab=10)

    def test_max_vocab_truncates_most_frequent(self):
        docs = [["a"] * 5 + ["b"] * 3 + ["c"] * 2 + ["d"]]
        vocab = build_vocabulary(docs, min_count=1, max_vocab=2)
        assert vocab.tokens == ["a", "b"]

    def test_single_surviving_token_rejected(self):
        # Vocabulary requires at least two tokens
        with pytest.raises(ValueError):
            build_vocabulary([["a", "a", "b"]], min_count=2, max_vocab=10)


class TestVocabulary:
    def test_round_trip(self, tmp_path):
        vocab = Vocabulary(["alpha", "beta", "gamma"])
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded.tokens == vocab.tokens
        assert all(loaded.id_of(t) == vocab.id_of(t) for t in vocab.tokens)

    def test_duplicate_tokens_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary(["a", "a"])


class TestTfidf:
    def test_hand_example_idf_cancels(self):
        # ids: a=0 b=1 c=2 d=3; every word has df=2, so idf=log(4/3) is a
        # common factor and cancels in the row normalization.
        corpus = RawCorpus(
            docs=[{0: 2, 1: 1}, {1: 1, 2: 1}, {2: 1, 3: 1}, {3: 2, 0: 1}],
            num_words=4,
        )
        mat = tfidf(corpus)
        assert mat.dropped_docs == []
        np.testing.assert_allclose(mat.rows[0], [2 / 3, 1 / 3, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(mat.rows[1], [0.0, 0.5, 0.5, 0.0], atol=1e-12)
        np.testing.assert_allclose(mat.rows[3], [1 / 3, 0.0, 0.0, 2 / 3], atol=1e-12)

    def test_word_in_every_doc_drops_pure_row(self):
        # 'a' (id 0) appears in all 3 docs: idf = log(3/4) < 0, clamped to 0.
        # Doc 0 consists only of 'a', so its weight sum is 0 and it is dropped.
        corpus = RawCorpus(
            docs=[{0: 1}, {0: 2, 1: 1}, {0: 1, 2: 1}],
            num_words=3,
        )
        mat = tfidf(corpus)
        assert mat.dropped_docs == [0]
        assert mat.kept_docs == [1, 2]
        np.testing.assert_allclose(mat.rows[0], [0.0, 1.0, 0.0], atol=1e-12)

    def test_one_hot_row(self):
        corpus = RawCorpus(docs=[{0: 3}, {1: 1}, {2: 2}], num_words=3)
        mat = tfidf(corpus)
        np.testing.assert_allclose(mat.rows[0], [1.0, 0.0, 0.0], atol=1e-12)

    def test_all_rows_dropped_error(self):
        corpus = RawCorpus(docs=[{0: 1}, {0: 2}], num_words=2)
        with pytest.raises(CorpusError):
            tfidf(corpus)

    def test_requires_two_documents(self):
        with pytest.raises(CorpusError):
            tfidf(RawCorpus(docs=[{0: 1}], num_words=2))

    def test_row_simplex_property(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            n = int(rng.integers(2, 30))
            v = int(rng.integers(2, 40))
            docs = []
            for _ in range(n):
                k = int(rng.integers(1, v + 1))
                ids = rng.choice(v, size=k, replace=False)
                docs.append({int(i): int(rng.integers(1, 9)) for i in ids})
            try:
                mat = tfidf(RawCorpus(docs=docs, num_words=v))
            except CorpusError:
                continue
            assert np.all(mat.rows >= 0)
            np.testing.assert_allclose(mat.rows.sum(axis=1), 1.0, atol=1e-9)

    def test_idf_monotone_in_document_frequency(self):
        # for fixed term frequency, larger df never increases the smoothed weight
        n = 50
        df = np.arange(1, n + 1)
        w = idf_weights(df, n)
        assert np.all(np.diff(w) <= 1e-15)
        assert np.all(w >= 0)
        # unclamped value for df = n would be log(n / (n + 1)) < 0
        assert w[-1] == 0.0

    def test_transform_uses_training_idf(self):
        corpus = RawCorpus(
            docs=[{0: 2, 1: 1}, {1: 1, 2: 1}, {2: 1, 3: 1}, {3: 2, 0: 1}],
            num_words=4,
        )
        mat = tfidf(corpus)
        rows, valid = tfidf_transform(corpus.docs, 4, mat.doc_freq, mat.n_docs)
        assert valid.all()
        np.testing.assert_allclose(rows, mat.rows, atol=1e-12)

    def test_transform_flags_zero_weight_docs(self):
        corpus = RawCorpus(
            docs=[{0: 2, 1: 1}, {1: 1, 2: 1}, {2: 1, 3: 1}, {3: 2, 0: 1}],
            num_words=4,
        )
        mat = tfidf(corpus)
        rows, valid = tfidf_transform([{}, {0: 1}], 4, mat.doc_freq, mat.n_docs)
        assert valid.tolist() == [False, True]
        np.testing.assert_allclose(rows[0], 0.0)


class TestLoadDocuments:
    def test_lowercase_and_blank_line_drop(self, tmp_path):
        path = tmp_path / "docs.txt"
        path.write_text("A b\n\nc", encoding="utf-8")
        docs, labels = load_documents(path)
        assert docs == [["a", "b"], ["c"]]
        assert labels is None

    def test_labels_aligned(self, tmp_path):
        docs_path = tmp_path / "docs.txt"
        docs_path.write_text("a b\nc d\n", encoding="utf-8")
        labels_path = tmp_path / "labels.txt"
        labels_path.write_text("0\n1\n", encoding="utf-8")
        docs, labels = load_documents(docs_path, labels_path)
        assert labels == [0, 1]

    def test_label_count_mismatch(self, tmp_path):
        docs_path = tmp_path / "docs.txt"
        docs_path.write_text("a b\nc d\n", encoding="utf-8")
        labels_path = tmp_path / "labels.txt"
        labels_path.write_text("0\n", encoding="utf-8")
        with pytest.raises(CorpusError):
            load_documents(docs_path, labels_path)

    def test_blank_doc_drops_its_label(self, tmp_path):
        docs_path = tmp_path / "docs.txt"
        docs_path.write_text("a b\n\nc\n", encoding="utf-8")
        labels_path = tmp_path / "labels.txt"
        labels_path.write_text("0\n1\n2\n", encoding="utf-8")
        docs, labels = load_documents(docs_path, labels_path)
        assert docs == [["a", "b"], ["c"]]
        assert labels == [0, 2]

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_documents(tmp_path / "nope.txt")


class TestCountDocuments:
    def test_oov_tokens_dropped(self):
        vocab = Vocabulary(["a", "b"])
        corpus = count_documents([["a", "a", "zzz"], ["b"]], vocab)
        assert corpus.docs == [{0: 2}, {1: 1}]
        assert corpus.num_words == 2

    def test_labels_carried(self):
        vocab = Vocabulary(["a", "b"])
        corpus = count_documents([["a"], ["b"]], vocab, labels=[1, 0], num_classes=2)
        assert corpus.labels == [1, 0]
        assert corpus.num_classes == 2

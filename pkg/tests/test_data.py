import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dctlm.data import (BatchStream, batch_stream, build_corpus, load_corpus,
                        split_boundaries)
from corpus import enwik8_style


def test_aba_hand_trace(tmp_path):
    path = tmp_path / "aba"
    path.write_bytes(b"aba")
    corpus = load_corpus(path, (2, 0.5, 0.5))
    assert corpus.vocab == {ord("a"): 0, ord("b"): 1}
    assert corpus.split_bytes("train") == b"ab"
    assert corpus.split_bytes("valid") == b"a"
    assert corpus.split_bytes("test") == b""
    assert corpus.ids("train").tolist() == [0, 1]


def test_single_byte_file(tmp_path):
    path = tmp_path / "one"
    path.write_bytes(b"x")
    corpus = load_corpus(path)
    assert corpus.vocab_size == 1
    assert np.log2(corpus.vocab_size) == 0.0


def test_unknown_bytes_get_trailing_id():
    corpus = build_corpus(b"aaaaaaaabbz", (8, 2, 1))
    assert corpus.vocab == {ord("a"): 0}
    assert corpus.unk == 1 and corpus.vocab_size == 2
    assert corpus.ids("valid").tolist() == [1, 1]
    assert corpus.vocab_signature() == [ord("a"), -1]


def test_vocab_ascending_byte_order():
    corpus = build_corpus(b"zyxzyxabc" * 10)
    assert list(corpus.vocab) == sorted(corpus.vocab)
    assert list(corpus.vocab.values()) == list(range(len(corpus.vocab)))


def test_empty_and_missing(tmp_path):
    with pytest.raises(ValueError):
        build_corpus(b"")
    (tmp_path / "empty").write_bytes(b"")
    with pytest.raises(ValueError):
        load_corpus(tmp_path / "empty")
    with pytest.raises(OSError):
        load_corpus(tmp_path / "absent")
    with pytest.raises(ValueError):
        split_boundaries(10, (1, 1))


def test_limit_and_data_dir(tmp_path, monkeypatch):
    (tmp_path / "text").write_bytes(b"abcdefghij" * 10)
    monkeypatch.setenv("DCTLM_DATA_DIR", str(tmp_path))
    corpus = load_corpus("text", limit=20)
    assert len(corpus.data) == 20


def test_export_vocab(tmp_path):
    corpus = build_corpus(b"hello world" * 3)
    corpus.export_vocab(tmp_path / "vocab.tsv")
    rows = [line.split("\t") for line in (tmp_path / "vocab.tsv").read_text().splitlines()]
    assert [int(r[1]) for r in rows] == list(range(len(rows)))
    assert [int(r[0]) for r in rows] == sorted(corpus.vocab)


@given(st.integers(1, 10_000), st.floats(0.1, 100), st.floats(0, 10), st.floats(0, 10))
@settings(max_examples=200, deadline=None)
def test_split_boundaries_cover_everything(n, a, b, c):
    lo, hi = split_boundaries(n, (a, b, c))
    assert 0 <= lo <= hi <= n


# -- batching ---------------------------------------------------------------------------

def test_abcdefgh_batches():
    corpus = build_corpus(b"abcdefgh", (1, 0, 0))
    stream = batch_stream(corpus, "train", 2, 3)
    decode = {v: chr(k) for k, v in corpus.vocab.items()}
    x, y = next(iter(stream))
    as_text = lambda a: [[decode[int(v)] for v in row] for row in a]  # noqa: E731
    assert as_text(stream.lanes) == [list("abcd"), list("efgh")]
    assert as_text(x) == [["a", "b", "c"], ["e", "f", "g"]]
    assert as_text(y) == [["b", "c", "d"], ["f", "g", "h"]]
    assert len(stream) == 1


def test_whole_split_as_one_segment():
    ids = np.arange(10)
    stream = BatchStream(ids, 1, 9)
    x, y = next(iter(stream))
    assert x.tolist() == [list(range(9))]
    assert y.tolist() == [list(range(1, 10))]


def test_too_short_split():
    with pytest.raises(ValueError, match="too short"):
        BatchStream(np.arange(7), 2, 3)
    with pytest.raises(ValueError):
        BatchStream(np.arange(7), 0, 3)


@given(st.integers(2, 400), st.integers(1, 6), st.integers(1, 12))
@settings(max_examples=150, deadline=None)
def test_batches_are_aligned_contiguous_and_deterministic(n, B, T):
    ids = np.arange(n)
    if n < B * (T + 1):
        with pytest.raises(ValueError):
            BatchStream(ids, B, T)
        return
    stream = BatchStream(ids, B, T)
    first = list(stream)
    second = list(stream)
    assert all(np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
               for a, b in zip(first, second))
    lane = n // B
    covered = set()
    for s, (x, y) in enumerate(first):
        assert x.shape == y.shape == (B, T)
        np.testing.assert_array_equal(y, x + 1)  # targets are the next symbol
        for b in range(B):
            assert x[b, 0] == b * lane + s * T
        covered.update(x.ravel().tolist())
    # every symbol of every lane except the tail shorter than one segment is read
    assert len(covered) == B * len(first) * T
    assert (lane - 1) - len(first) * T < T


def test_next_cycles_and_resumes():
    stream = BatchStream(np.arange(50), 2, 4)
    seen = [stream.next() for _ in range(len(stream) + 2)]
    assert seen[0][2] and seen[len(stream)][2]
    assert not any(s[2] for s in seen[1:len(stream)])
    snapshot = stream.state()
    other = BatchStream(np.arange(50), 2, 4)
    other.restore(snapshot)
    a, b = stream.next(), other.next()
    assert np.array_equal(a[0], b[0]) and a[2] == b[2]


def test_fallback_corpus_is_deterministic_text():
    a = enwik8_style(200_000)
    assert a == enwik8_style(200_000)
    assert len(a) == 200_000
    corpus = build_corpus(a)
    assert 60 <= corpus.vocab_size <= 256

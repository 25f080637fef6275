import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pairsgd.data import (DataError, Dataset, Example, ParseError, binarize_labels, kfold_indices,
                          load_builtin, load_libsvm, normalize_features, parse_libsvm,
                          serialize_libsvm, split, standard_pipeline)


def test_parse_single_line():
    ds = parse_libsvm("+1 1:0.5 3:2")
    assert ds.n == 1 and ds.d >= 3
    e = ds.example(0)
    assert e.indices == (0, 2) and e.values == (0.5, 2.0) and e.label == 1.0


def test_parse_two_lines():
    ds = parse_libsvm("1 2:1\n-1 1:1")
    assert ds.n == 2 and ds.d == 2
    assert ds.y.tolist() == [1.0, -1.0]


def test_parse_rejects_nonincreasing_indices():
    with pytest.raises(ParseError) as exc:
        parse_libsvm("1 1:1\n1 3:1 2:1")
    assert exc.value.lineno == 2


@pytest.mark.parametrize("text", ["1 a:1", "1 1:x", "1 0:1", "x 1:1", "1 1", "1 1:nan"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_libsvm(text)


def test_parse_comments_blank_lines_crlf():
    ds = parse_libsvm("# header\r\n\r\n2 1:1 # trailing\r\n3 2:4\r\n")
    assert ds.n == 2 and ds.y.tolist() == [2.0, 3.0]


def test_empty_input_is_an_error():
    with pytest.raises(DataError):
        parse_libsvm("# nothing\n\n")


def test_load_libsvm_file(tmp_path):
    p = tmp_path / "toy.txt"
    p.write_bytes(b"1 1:1 2:2\r\n-1 2:3\r\n")
    ds = load_libsvm(p)
    assert ds.X.tolist() == [[1.0, 2.0], [0.0, 3.0]]


rows = st.lists(
    st.tuples(st.sampled_from([-1.0, 1.0, 2.0, 0.5]),
              st.dictionaries(st.integers(0, 6),
                              st.floats(-1e6, 1e6, allow_nan=False).filter(lambda v: v != 0),
                              max_size=5)),
    min_size=1, max_size=8)


@given(rows)
def test_serialize_parse_roundtrip(data):
    ex = [Example(tuple(sorted(f)), tuple(f[k] for k in sorted(f)), lab) for lab, f in data]
    ds = Dataset.from_examples(ex, d=7)
    back = parse_libsvm(serialize_libsvm(ds))
    assert np.array_equal(back.y, ds.y)
    assert np.array_equal(back.X, ds.X[:, :back.d])
    assert not ds.X[:, back.d:].any()


def test_dataset_is_immutable_and_copies_input():
    X = np.ones((2, 2))
    ds = Dataset(X, [1, -1])
    X[0, 0] = 5
    assert ds.X[0, 0] == 1
    with pytest.raises(ValueError):
        ds.X[0, 0] = 3


def test_example_invariants():
    with pytest.raises(DataError):
        Example((2, 1), (1.0, 1.0), 1)
    with pytest.raises(DataError):
        Example((0,), (float("inf"),), 1)


def test_binarize_ten_classes():
    ds = Dataset(np.zeros((10, 1)), np.arange(1, 11))
    assert binarize_labels(ds).y.tolist() == [1] * 5 + [-1] * 5


def test_binarize_pm1_unchanged():
    ds = Dataset(np.zeros((3, 1)), [1, -1, 1])
    assert binarize_labels(ds).y.tolist() == [1, -1, 1]


def test_binarize_zero_one():
    ds = Dataset(np.zeros((3, 1)), [0, 1, 0])
    assert binarize_labels(ds).y.tolist() == [1, -1, 1]


def test_binarize_odd_class_count_middle_positive():
    ds = Dataset(np.zeros((3, 1)), [3, 1, 2])
    out = binarize_labels(ds)
    assert out.y.tolist() == [-1, 1, 1]
    assert "first 2 of 3" in out.meta["binarization"]


def test_binarize_single_class_errors():
    with pytest.raises(DataError):
        binarize_labels(Dataset(np.zeros((3, 1)), [1, 1, 1]))


def test_normalize_examples():
    ds = normalize_features(Dataset(np.array([[3.0, 4.0], [0.3, 0.4]]), [1, -1]))
    assert np.allclose(ds.X, [[0.6, 0.8], [0.3, 0.4]])
    assert np.array_equal(normalize_features(ds).X, ds.X)


@given(st.integers(0, 10**6))
def test_pipeline_invariants(seed):
    rng = np.random.default_rng(seed)
    ds = Dataset(rng.normal(scale=5, size=(20, 4)), rng.integers(0, 4, size=20))
    if len(np.unique(ds.y)) < 2:
        return
    out = standard_pipeline(ds)
    assert set(out.y.tolist()) <= {-1, 1}
    assert np.all(np.linalg.norm(out.X, axis=1) <= 1 + 1e-12)


def test_split_sizes_and_determinism():
    ds = Dataset(np.arange(10.0)[:, None], [1, -1] * 5)
    tr, te = split(ds, 0.8, 3)
    assert (tr.n, te.n) == (8, 2)
    tr2, te2 = split(ds, 0.8, 3)
    assert np.array_equal(tr.X, tr2.X) and np.array_equal(te.X, te2.X)
    assert sorted(np.concatenate([tr.X[:, 0], te.X[:, 0]]).tolist()) == list(range(10))


def test_split_warns_when_class_missing():
    ds = Dataset(np.arange(5.0)[:, None], [1, 1, 1, 1, -1])
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        for seed in range(20):
            tr, te = split(ds, 0.8, seed)
    assert any("missing a class" in str(x.message) for x in w)
    assert te.meta.get("stratification_warning") or tr.meta.get("stratification_warning")


def test_split_errors():
    with pytest.raises(ValueError):
        split(Dataset(np.zeros((4, 1)), [1, -1, 1, -1]), 1.0, 0)
    with pytest.raises(DataError):
        split(Dataset(np.zeros((1, 1)), [1]), 0.5, 0)


def test_kfold_sizes():
    assert [len(f) for f in kfold_indices(10, 5, 0)] == [2] * 5
    assert [len(f) for f in kfold_indices(11, 5, 0)] == [3, 2, 2, 2, 2]


@given(st.integers(2, 200), st.integers(2, 10), st.integers(0, 1000))
def test_kfold_partition(n, k, seed):
    if k > n:
        with pytest.raises(ValueError):
            kfold_indices(n, k, seed)
        return
    folds = kfold_indices(n, k, seed)
    allidx = np.concatenate(folds)
    assert sorted(allidx.tolist()) == list(range(n))
    assert {len(f) for f in folds} <= {n // k, -(-n // k)}
    assert all(np.array_equal(a, b) for a, b in zip(folds, kfold_indices(n, k, seed)))


def test_builtin_datasets():
    dia = standard_pipeline(load_builtin("diabetes"))
    ger = standard_pipeline(load_builtin("german"))
    assert (dia.n, dia.d) == (768, 8) and (ger.n, ger.d) == (1000, 24)
    assert (dia.y == 1).sum() in (268, 500) and (ger.y == 1).sum() in (300, 700)
    with pytest.raises(DataError):
        load_builtin("iris")

import numpy as np
import pytest

from mire.data import (BINARY, CONTINUOUS, DataError, NumericalError,
                       ObservationalDataset, covariance, load_csv, standardize,
                       write_csv)


def make_ds(n=10, p=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    T = (rng.random(n) < 0.5).astype(int)
    T[0], T[1] = 0, 1
    return ObservationalDataset(X=X, T=T, Y=rng.standard_normal(n))


def test_dataset_validation():
    with pytest.raises(DataError):
        ObservationalDataset(X=np.ones((1, 2)), T=np.array([1]), Y=np.array([0.0]))
    with pytest.raises(DataError, match="non-binary"):
        ObservationalDataset(X=np.ones((3, 1)), T=np.array([0, 1, 2]), Y=np.zeros(3))
    with pytest.raises(DataError, match="both 0 and 1"):
        ObservationalDataset(X=np.ones((3, 1)), T=np.array([1, 1, 1]), Y=np.zeros(3))
    with pytest.raises(DataError, match="non-finite"):
        ObservationalDataset(X=np.array([[1.0], [np.nan]]), T=np.array([0, 1]),
                             Y=np.zeros(2))
    with pytest.raises(DataError):
        ObservationalDataset(X=np.ones((2, 1)), T=np.array([0, 1]), Y=np.zeros(2),
                             y1_true=np.zeros(2))  # y0 missing


def test_column_kind_inference():
    X = np.array([[0.0, 1.5], [1.0, -0.5], [0.0, 2.5], [1.0, 0.5]])
    ds = ObservationalDataset(X=X, T=np.array([0, 1, 0, 1]), Y=np.zeros(4))
    assert ds.column_kinds == (BINARY, CONTINUOUS)


def test_load_csv_basic(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("x1,x2,t,y\n1,2,0,3.5\n2,1,1,4.5\n0,0,0,1\n1,1,1,2\n")
    ds = load_csv(f, {"t": "t", "y": "y"})
    assert ds.n == 4 and ds.p == 2
    assert ds.column_names == ("x1", "x2")
    np.testing.assert_array_equal(ds.T, [0, 1, 0, 1])


def test_load_csv_errors(tmp_path):
    f = tmp_path / "bad_t.csv"
    f.write_text("x1,t,y\n1,0,1\n2,2,1\n")
    with pytest.raises(DataError, match="non-binary treatment"):
        load_csv(f, {"t": "t", "y": "y"})

    g = tmp_path / "bad_cell.csv"
    g.write_text("x1,t,y\n1,0,1\nfoo,1,1\n")
    with pytest.raises(DataError, match="non-numeric"):
        load_csv(g, {"t": "t", "y": "y"})

    h = tmp_path / "ragged.csv"
    h.write_text("x1,t,y\n1,0,1\n2,1\n")
    with pytest.raises(DataError, match="row 3"):
        load_csv(h, {"t": "t", "y": "y"})

    with pytest.raises(DataError, match="cannot open"):
        load_csv(tmp_path / "missing.csv", {"t": "t", "y": "y"})


def test_csv_roundtrip(tmp_path):
    ds = make_ds(n=12, p=4, seed=3)
    path = tmp_path / "out.csv"
    write_csv(ds, path)
    back = load_csv(path, {"t": "t", "y": "y"})
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.T, ds.T)
    np.testing.assert_array_equal(back.Y, ds.Y)


def test_standardize_basic():
    X = np.array([[1.0], [2.0], [3.0]])
    ds = ObservationalDataset(X=X, T=np.array([0, 1, 0]), Y=np.zeros(3))
    out, rec = standardize(ds)
    np.testing.assert_allclose(out.X[:, 0], [-1, 0, 1])
    assert rec.mean[0] == 2.0 and rec.scale[0] == 1.0


def test_standardize_idempotent():
    ds = make_ds(n=30, p=3, seed=1)
    once, _ = standardize(ds)
    twice, _ = standardize(once)
    np.testing.assert_allclose(twice.X, once.X, atol=1e-10)


def test_standardize_binary_untouched():
    X = np.column_stack([np.array([0.0, 1, 1, 0]), np.array([1.0, 2, 3, 4])])
    ds = ObservationalDataset(X=X, T=np.array([0, 1, 0, 1]), Y=np.zeros(4))
    out, _ = standardize(ds)
    np.testing.assert_array_equal(out.X[:, 0], X[:, 0])


def test_standardize_zero_variance():
    X = np.column_stack([np.full(4, 2.5), np.arange(4.0)])
    ds = ObservationalDataset(X=X, T=np.array([0, 1, 0, 1]), Y=np.zeros(4),
                              column_names=("const", "x2"))
    with pytest.raises(DataError, match="const"):
        standardize(ds)


def test_covariance_diagonal():
    X = np.array([[1.0, 0], [-1, 0], [0, 2], [0, -2]])
    ds = ObservationalDataset(X=X, T=np.array([0, 1, 0, 1]), Y=np.zeros(4))
    cov = covariance(ds, ridge=0.0)
    assert abs(cov.sigma[0, 1]) < 1e-14


def test_covariance_singular_and_ridge():
    X = np.column_stack([np.arange(5.0), np.arange(5.0)])  # duplicated column
    ds = ObservationalDataset(X=X, T=np.array([0, 1, 0, 1, 0]), Y=np.zeros(5))
    with pytest.raises(NumericalError):
        covariance(ds, ridge=0.0)
    cov = covariance(ds, ridge=1e-6)
    assert np.isfinite(cov.solve(np.ones(2))).all()


def test_covariance_permutation_invariant():
    ds = make_ds(n=25, p=3, seed=2)
    perm = np.random.default_rng(0).permutation(25)
    shuffled = ObservationalDataset(X=ds.X[perm], T=ds.T[perm], Y=ds.Y[perm])
    np.testing.assert_allclose(covariance(shuffled).sigma, covariance(ds).sigma,
                               atol=1e-12)

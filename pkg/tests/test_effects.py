import numpy as np
import pytest

from mire import bench, pipeline
from mire.data import ObservationalDataset
from mire.effects import ate, att, ite, pehe, rmse, sd
from mire.matching import MatchResult, match, reduce


def result_from(y1_hat, y0_hat, direction="both"):
    n = len(y1_hat)
    return MatchResult(pairs={}, distances={}, y1_hat=np.asarray(y1_hat, float),
                       y0_hat=np.asarray(y0_hat, float), with_replacement=True,
                       num_neighbors=1, direction=direction)


def test_ite_zero_when_equal():
    r = result_from([1.0, 2.0], [1.0, 2.0])
    np.testing.assert_array_equal(ite(r), [0.0, 0.0])


def test_ite_values():
    r = result_from([3.0, 5.0], [1.0, 1.0])
    np.testing.assert_array_equal(ite(r), [2.0, 4.0])


def test_ate_is_mean_of_ite():
    r = result_from([3.0, 5.0], [1.0, 1.0])
    est = ate(r)
    assert est.value == 3.0
    assert est.value == ite(r).mean()


def test_att_treated_only():
    y1 = np.array([2.0, 2.0, 5.0, 9.0])
    y0 = np.array([1.0, 1.0, 1.0, 9.0])
    ds = ObservationalDataset(X=np.arange(8.0).reshape(4, 2),
                              T=np.array([1, 1, 1, 0]), Y=np.zeros(4))
    est = att(result_from(y1, y0), ds)
    assert est.value == pytest.approx(2.0)  # mean of (1, 1, 4)
    assert est.n_used == 3


def test_att_requires_both_for_ate():
    r = result_from([1.0, 2.0], [0.0, 0.0], direction="treated")
    with pytest.raises(ValueError):
        ate(r)


def test_perfect_twin_fixture_recovers_tau():
    # every treated unit has an identical-covariate control; additive effect 2.5
    rng = np.random.default_rng(0)
    Xt = rng.standard_normal((15, 3))
    X = np.vstack([Xt, Xt])
    T = np.r_[np.ones(15), np.zeros(15)].astype(int)
    y_base = Xt @ np.array([1.0, -0.5, 0.2])
    tau = 2.5
    Y = np.r_[y_base + tau, y_base]
    ds = ObservationalDataset(X=X, T=T, Y=Y)
    result = match(reduce(ds, np.eye(3)), ds)
    np.testing.assert_allclose(ite(result), tau, atol=1e-12)
    assert ate(result).value == pytest.approx(tau)


def test_pehe_trivials():
    truth1 = np.array([1.0, 2.0, 3.0])
    truth0 = np.zeros(3)
    assert pehe(truth1 - truth0, truth1, truth0) == 0.0
    assert pehe(truth1 - truth0 + 1.0, truth1, truth0) == pytest.approx(1.0)
    assert pehe(truth1 - truth0 + np.array([1.0, -1.0, 2.0]), truth1, truth0) \
        == pytest.approx(2.0)


def test_pehe_permutation_invariant():
    rng = np.random.default_rng(1)
    est = rng.standard_normal(20)
    y1, y0 = rng.standard_normal(20), rng.standard_normal(20)
    perm = rng.permutation(20)
    assert pehe(est, y1, y0) == pytest.approx(pehe(est[perm], y1[perm], y0[perm]))


def test_rmse():
    assert rmse(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
    assert rmse(np.array([3.0, 4.0]), np.zeros(2)) == pytest.approx(np.sqrt(25 / 2))
    with pytest.raises(ValueError):
        rmse(np.zeros(2), np.zeros(3))


def test_sd():
    assert sd(np.array([1.0, 2.0, 3.0])) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sd(np.array([1.0]))


def test_null_model_ate_within_noise():
    ds = bench.standin_null(2000, 10, seed=7)
    run = pipeline.run_method(ds, "mire")
    est = ate(run.result)
    assert abs(est.value) < 3 * est.sd / np.sqrt(est.n_used)

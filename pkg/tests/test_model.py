import numpy as np
import pytest
from oracles import chi2_quantile
from scipy.special import gammainc

from obliquebart import serialize
from obliquebart.data import RawTable, standardize
from obliquebart.model import (
    FitSpec,
    PosteriorSamples,
    build_config,
    calibrate_lambda,
    calibrate_tau,
    chain_rng,
    fit,
    posterior_mean_sigma,
    predict,
    theta_prior,
)
from obliquebart.sampler import Task
from obliquebart.tree import DecisionTree, Ensemble, EnsembleConfig


def small_table(n=80, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-3, 5, (n, 2))
    y = 10 + 3 * (x[:, 0] + x[:, 1] > 1) + 0.3 * rng.standard_normal(n)
    return RawTable(["a", "b"], x, outcome_name="y", y=y)


def test_calibrate_tau_examples():
    assert calibrate_tau(0.0, 4.0) == 1.0
    assert calibrate_tau(-1.0, 1.0) == 0.5
    with pytest.raises(ValueError):
        calibrate_tau(2.0, 2.0)


def test_classification_tau():
    table = RawTable(["a"], np.array([[0.0], [1.0], [2.0]]), outcome_name="y", y=np.array([0, 1, 1.0]))
    cfg = build_config(standardize(table, "classification"), FitSpec(task="classification", M=10))
    assert cfg.tau == 1.5


def test_calibrate_lambda_examples():
    lam = calibrate_lambda(1.0, 3.0, 0.9)
    assert lam == pytest.approx(chi2_quantile(0.1, 3.0) / 3, abs=1e-8)
    assert lam == pytest.approx(0.1948, abs=1e-4)
    assert calibrate_lambda(1.0, 5.0, 0.5) == pytest.approx(chi2_quantile(0.5, 5.0) / 5, abs=1e-8)
    assert calibrate_lambda(2.5, 3.0) == pytest.approx(2.5 * lam, rel=1e-12)
    # P(sigma2 < s2) = P(chi2_nu > nu * lam / s2) = q
    s2, nu = 1.7, 3.0
    lam = calibrate_lambda(s2, nu)
    assert 1 - gammainc(nu / 2, nu * lam / s2 / 2) == pytest.approx(0.9, abs=1e-10)


def test_theta_prior():
    assert theta_prior(200, 4) == (200.0, 600.0)
    a, b = theta_prior(50, 2)
    assert a / (a + b) == 0.5


def test_fitspec_validation_and_fast():
    with pytest.raises(ValueError):
        FitSpec(kept=0)
    with pytest.raises(ValueError):
        FitSpec(burn=-1)
    with pytest.raises(ValueError):
        FitSpec(chains=0)
    fast = FitSpec.fast(seed=3)
    assert (fast.M, fast.burn, fast.kept, fast.seed) == (50, 500, 500, 3)


def test_chain_rng_streams_distinct_and_stable():
    a = chain_rng(5, 0).random(3)
    assert np.array_equal(a, chain_rng(5, 0).random(3))
    assert not np.array_equal(a, chain_rng(5, 1).random(3))


def test_fit_counts_and_reproducibility(tmp_path):
    data = standardize(small_table())
    spec = FitSpec(M=5, burn=10, kept=7, chains=2, seed=11)
    s1, s2 = fit(data, spec), fit(data, spec)
    assert len(s1.draws) == 14 and len(s1.diagnostics) == 2
    p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
    serialize.save_model(s1, p1)
    serialize.save_model(s2, p2)
    assert p1.read_bytes() == p2.read_bytes()
    one = fit(data, FitSpec(M=3, burn=0, kept=1))
    assert len(one.draws) == 1


def test_model_file_round_trip(tmp_path):
    table = small_table()
    data = standardize(table)
    samples = fit(data, FitSpec(M=4, burn=5, kept=5, seed=2))
    path = tmp_path / "m.txt"
    serialize.save_model(samples, path)
    back = serialize.load_model(path)
    assert np.array_equal(predict(back, data).mean, predict(samples, data).mean)
    assert back.standardizer.to_dict() == samples.standardizer.to_dict()


def test_predict_invariants():
    table = small_table()
    data = standardize(table)
    samples = fit(data, FitSpec(M=5, burn=20, kept=15, seed=4))
    pred = predict(samples, data)
    assert np.all(pred.lower <= pred.mean + 1e-12) and np.all(pred.mean <= pred.upper + 1e-12)
    perm = np.random.default_rng(0).permutation(data.n)
    shuffled = predict(samples, data.x_cont[perm], data.x_cat[perm])
    assert np.allclose(shuffled.mean[np.argsort(perm)], pred.mean, rtol=0, atol=1e-12)
    rows = np.random.default_rng(1).choice(data.n, 10, replace=False)
    for i in rows:
        direct = np.mean([sum(t.predict(data.x_cont[i : i + 1])[0] for t in e.trees) for e in samples.draws])
        assert pred.mean[i] == pytest.approx(samples.y_center + samples.y_scale * direct, abs=1e-10)
    assert posterior_mean_sigma(samples) > 0


def test_identical_draws_zero_width_and_destandardize():
    cfg = EnsembleConfig(M=2, p_cont=1)
    ens = Ensemble([DecisionTree(mu=0.0), DecisionTree(mu=0.0)], 1.0, 0.5, cfg)
    samples = PosteriorSamples([ens, ens.copy()], cfg, Task.REGRESSION, y_center=7.0, y_scale=3.0)
    pred = predict(samples, np.zeros((4, 1)))
    assert np.all(pred.mean == 7.0) and np.all(pred.upper - pred.lower == 0)


def test_classification_zero_f_ties_to_zero():
    cfg = EnsembleConfig(M=1, p_cont=1, tau=1.5)
    ens = Ensemble([DecisionTree(mu=0.0)], 1.0, 0.5, cfg)
    pred = predict(PosteriorSamples([ens], cfg, Task.CLASSIFICATION), np.zeros((3, 1)))
    assert np.all(pred.prob == 0.5) and np.all(pred.label == 0)


def test_predict_schema_mismatch():
    data = standardize(small_table())
    samples = fit(data, FitSpec(M=2, burn=0, kept=2))
    with pytest.raises(ValueError):
        predict(samples, np.zeros((3, 3)))


def test_categorical_fit_and_unseen_level():
    rng = np.random.default_rng(5)
    n = 120
    cat = rng.choice(["r", "g", "b"], n).astype(object)
    x = rng.uniform(0, 1, (n, 1))
    y = np.where(cat == "r", 2.0, -1.0) + 0.1 * rng.standard_normal(n)
    table = RawTable(["x"], x, ["colour"], cat.reshape(-1, 1), "y", y)
    data = standardize(table)
    samples = fit(data, FitSpec(M=10, burn=100, kept=50, seed=1))
    assert samples.config.n_levels == (3,)
    pred = predict(samples, data)
    assert np.corrcoef(pred.mean, y)[0, 1] > 0.9
    new = data.standardizer.transform(RawTable(["x"], [[0.5]], ["colour"], [["purple"]]))
    assert new.x_cat[0, 0] == -1
    assert np.isfinite(predict(samples, new).mean).all()


def test_fit_rejects_constant_outcome():
    table = RawTable(["a"], np.array([[0.0], [1.0]]), outcome_name="y", y=np.array([3.0, 3.0]))
    with pytest.raises(ValueError):
        fit(standardize(table), FitSpec(M=2, burn=0, kept=1))

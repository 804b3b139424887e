import math

import numpy as np
import pytest
from scipy import stats

from identifiability.errors import InvalidArgumentError
from identifiability.mathcore import RandomStream
from identifiability.mcmc import (
    Chain, ChainConfig, adaptive_metropolis, log_posterior, posterior_prediction,
)
from identifiability.model import build_model, sample_observation
from identifiability.oracle import LinearGaussianSpec, lg_posterior


def std_normal(x):
    return -0.5 * float(x @ x)


@pytest.fixture(scope="module")
def linear_chain():
    model, prior = build_model("linear_gaussian")
    y = sample_observation(model, [1.0, 2.0, 3.0], RandomStream(0, 1))
    chain = adaptive_metropolis(log_posterior(model, prior, y), [0.0, 0.0, 0.0],
                                ChainConfig(n_steps=100_000), prior.names)
    post = lg_posterior(LinearGaussianSpec.from_model(model, prior), y)
    return model, chain, post


def test_standard_normal_moments():
    chain = adaptive_metropolis(std_normal, [0.0], ChainConfig(n_steps=100_000, seed=1))
    assert abs(chain.mean()[0]) <= 0.05
    assert 0.9 <= chain.covariance()[0, 0] <= 1.1
    assert 0.0 < chain.acceptance_rate < 1.0


def test_linear_posterior_mean(linear_chain):
    _, chain, post = linear_chain
    sd = np.sqrt(np.diag(post.covariance))
    assert np.all(np.abs(chain.mean() - post.mean) <= 3 * sd)


def test_linear_posterior_correlations(linear_chain):
    _, chain, _ = linear_chain
    corr = chain.correlation()
    assert corr[0, 2] < -0.5
    assert abs(corr[1, 0]) < 0.2 and abs(corr[1, 2]) < 0.2


def test_bimodal_occupancy():
    w = 0.3
    mix = [(w, -2.0), (1 - w, 2.0)]

    def target(x):
        return math.log(sum(p * stats.norm.pdf(x[0], mu, 1.0) for p, mu in mix))

    chain = adaptive_metropolis(target, [2.0], ChainConfig(n_steps=200_000, seed=2))
    occupancy = np.mean(chain.retained[:, 0] < 0)
    exact = w * stats.norm.cdf(2.0) + (1 - w) * stats.norm.cdf(-2.0)
    assert abs(occupancy - exact) <= 0.03


def test_invalid_start():
    with pytest.raises(InvalidArgumentError):
        adaptive_metropolis(lambda x: -math.inf, [0.0], ChainConfig(n_steps=10))


def test_non_finite_proposals_rejected():
    def half_line(x):
        return -0.5 * x[0] ** 2 if x[0] > 0 else math.nan

    chain = adaptive_metropolis(half_line, [1.0], ChainConfig(n_steps=5000, seed=4))
    assert np.all(chain.samples > 0)


def test_deterministic_and_bookkept():
    cfg = ChainConfig(n_steps=3000, seed=7)
    a = adaptive_metropolis(std_normal, [0.5, -0.5], cfg)
    b = adaptive_metropolis(std_normal, [0.5, -0.5], cfg)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert a.samples.shape == (3000, 2) and a.burn_in == 600
    moves = np.count_nonzero(np.any(np.diff(np.vstack([[0.5, -0.5], a.samples]), axis=0), axis=1))
    assert a.acceptance_rate == moves / 3000


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        ChainConfig(n_steps=100, burn_in=100)
    with pytest.raises(InvalidArgumentError):
        ChainConfig(adaptation_start=5)
    with pytest.raises(InvalidArgumentError):
        ChainConfig(epsilon=0.0)


def test_csv_round_trip(tmp_path):
    chain = adaptive_metropolis(std_normal, [0.0, 0.0], ChainConfig(n_steps=200), ("a", "b"))
    path = tmp_path / "chain.csv"
    chain.to_csv(path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert data.dtype.names == ("a", "b", "log_target")
    np.testing.assert_array_equal(np.column_stack([data["a"], data["b"]]), chain.retained)
    np.testing.assert_array_equal(data["log_target"], chain.log_target[chain.burn_in:])


def test_posterior_prediction_band(linear_chain):
    model, chain, _ = linear_chain
    pred = posterior_prediction(model, chain)
    assert pred.n_samples <= 2000
    assert np.all(pred.lower <= pred.mean) and np.all(pred.mean <= pred.upper)

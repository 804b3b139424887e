import numpy as np
import pytest
from scipy import stats

from identifiability.errors import InvalidArgumentError, NumericalDomainError
from identifiability.model import build_model
from identifiability.oracle import (
    LinearGaussianSpec, build_vandermonde, gaussian_entropy, lg_information_gain_exact, lg_joint,
    lg_pairwise_exact, lg_posterior,
)


@pytest.fixture(scope="module")
def lg_spec():
    model, prior = build_model("linear_gaussian")
    return LinearGaussianSpec.from_model(model, prior)


def test_vandermonde_columns():
    V = build_vandermonde([2.0, -1.0], 3)
    np.testing.assert_array_equal(V, [[2.0, 4.0, 8.0], [-1.0, 1.0, -1.0]])


def test_gaussian_entropy_matches_scipy():
    cov = np.array([[1.5, 0.2], [0.2, 0.7]])
    assert gaussian_entropy(cov) == pytest.approx(
        stats.multivariate_normal(np.zeros(2), cov).entropy(), rel=1e-13)


def test_scalar_gain_closed_form():
    # one parameter, one observation: I = 0.5 * log(1 + s^2 / sigma^2)
    spec = LinearGaussianSpec([[1.0]], [0.0], [[1.0]], [[0.1]])
    assert lg_information_gain_exact(spec, 0) == pytest.approx(0.5 * np.log(11.0), rel=1e-13)


def test_gain_matches_column_formula(lg_spec):
    # independent unit priors: conditioning on the others leaves 0.5 log(1 + a_i'a_i / 0.1)
    for i in range(3):
        a = lg_spec.A[:, i]
        assert lg_information_gain_exact(lg_spec, i) == pytest.approx(
            0.5 * np.log1p(a @ a / 0.1), rel=1e-10)


def test_linear_gaussian_orderings(lg_spec):
    gains = [lg_information_gain_exact(lg_spec, i) for i in range(3)]
    assert gains[0] > gains[1] > gains[2]
    dep = {p: lg_pairwise_exact(lg_spec, *p) for p in [(0, 1), (0, 2), (1, 2)]}
    assert dep[(0, 2)] > max(dep[(0, 1)], dep[(1, 2)])
    # odd and even powers are orthogonal on a symmetric grid
    assert dep[(0, 1)] == pytest.approx(0.0, abs=1e-10)
    assert dep[(1, 2)] == pytest.approx(0.0, abs=1e-10)


def test_pairwise_matches_posterior_correlation(lg_spec):
    # partial correlation from the posterior precision
    post = lg_posterior(lg_spec, np.zeros(lg_spec.n)).covariance
    precision = np.linalg.inv(post)
    rho = -precision[0, 2] / np.sqrt(precision[0, 0] * precision[2, 2])
    assert lg_pairwise_exact(lg_spec, 0, 2) == pytest.approx(-0.5 * np.log(1 - rho ** 2), rel=1e-9)


def test_pairwise_symmetric(lg_spec):
    assert lg_pairwise_exact(lg_spec, 0, 2) == lg_pairwise_exact(lg_spec, 2, 0)


def test_posterior_against_scalar_conjugate():
    spec = LinearGaussianSpec([[2.0]], [1.0], [[1.0]], [[0.5]])
    post = lg_posterior(spec, [3.0])
    prec = 1.0 + 4.0 / 0.5
    assert post.covariance[0, 0] == pytest.approx(1 / prec)
    assert post.mean[0] == pytest.approx((1.0 + 2.0 * 3.0 / 0.5) / prec)


def test_joint_block_structure(lg_spec):
    joint = lg_joint(lg_spec)
    np.testing.assert_allclose(joint.covariance[:3, :3], np.eye(3))
    np.testing.assert_allclose(joint.covariance[3:, 3:], lg_spec.evidence_cov)


def test_spec_validation():
    with pytest.raises(InvalidArgumentError):
        LinearGaussianSpec([[1.0, 2.0]], [0.0], [[1.0]], [[1.0]])
    with pytest.raises(NumericalDomainError):
        LinearGaussianSpec([[1.0]], [0.0], [[-1.0]], [[1.0]])
    spec = LinearGaussianSpec([[1.0, 0.0]], [0.0, 0.0], np.eye(2), [[1.0]])
    with pytest.raises(InvalidArgumentError):
        lg_pairwise_exact(spec, 0, 0)
    with pytest.raises(InvalidArgumentError):
        lg_information_gain_exact(spec, 5)

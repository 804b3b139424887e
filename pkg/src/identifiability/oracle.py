"""Closed-form reference quantities for the linear-Gaussian model y = A theta + xi.

Every entropy is taken from one assembled joint covariance over (theta, y)
by block extraction, so all oracle values share a single source of truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericalDomainError
from .mathcore import LOG_2PI, GaussianDensity, cholesky


def build_vandermonde(d_points, m: int) -> np.ndarray:
    """Feature matrix with entry (i, j) = d_i ** (j + 1)."""
    if m < 1:
        raise InvalidArgumentError(f"m must be >= 1, got {m}")
    d = np.atleast_1d(np.asarray(d_points, dtype=float))
    return d[:, None] ** np.arange(1, m + 1)[None, :]


def gaussian_entropy(covariance) -> float:
    """Differential entropy (nats) of N(., covariance)."""
    L = cholesky(covariance)
    n = L.shape[0]
    return 0.5 * n * (LOG_2PI + 1.0) + float(np.sum(np.log(np.diag(L))))


@dataclass(frozen=True)
class LinearGaussianSpec:
    A: np.ndarray
    prior_mean: np.ndarray
    prior_cov: np.ndarray
    noise_cov: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n, m = A.shape
        mu = np.atleast_1d(np.asarray(self.prior_mean, dtype=float))
        S = np.atleast_2d(np.asarray(self.prior_cov, dtype=float))
        G = np.atleast_2d(np.asarray(self.noise_cov, dtype=float))
        if mu.shape != (m,) or S.shape != (m, m) or G.shape != (n, n):
            raise InvalidArgumentError("inconsistent shapes in LinearGaussianSpec")
        cholesky(S)
        try:
            cholesky(A @ S @ A.T + G)
        except NumericalDomainError as exc:
            raise NumericalDomainError("evidence covariance A S A^T + Gamma is not SPD") from exc
        for name, value in (("A", A), ("prior_mean", mu), ("prior_cov", S), ("noise_cov", G)):
            object.__setattr__(self, name, value)

    @classmethod
    def from_model(cls, model, prior) -> "LinearGaussianSpec":
        feature = getattr(model.forward, "feature_matrix", None)
        if feature is None:
            raise InvalidArgumentError("model has no linear feature matrix")
        return cls(feature(model.d), prior.means, np.diag(prior.variances), model.noise_cov)

    @property
    def m(self) -> int:
        return self.A.shape[1]

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def evidence_cov(self) -> np.ndarray:
        return self.A @ self.prior_cov @ self.A.T + self.noise_cov


def lg_joint(spec: LinearGaussianSpec) -> GaussianDensity:
    """Joint density of (theta, y), parameters first."""
    S, A = spec.prior_cov, spec.A
    cross = S @ A.T
    cov = np.block([[S, cross], [cross.T, spec.evidence_cov]])
    cov = 0.5 * (cov + cov.T)
    return GaussianDensity(np.concatenate([spec.prior_mean, A @ spec.prior_mean]), cov)


def lg_posterior(spec: LinearGaussianSpec, y) -> GaussianDensity:
    """p(theta | y) by Gaussian conditioning."""
    y = np.asarray(y, dtype=float)
    S, A = spec.prior_cov, spec.A
    gain = np.linalg.solve(spec.evidence_cov, A @ S).T  # S A^T Sigma_Y^{-1}
    mean = spec.prior_mean + gain @ (y - A @ spec.prior_mean)
    cov = S - gain @ A @ S
    return GaussianDensity(mean, 0.5 * (cov + cov.T))


def _block_entropy(joint_cov: np.ndarray, idx) -> float:
    idx = np.asarray(sorted(idx), dtype=int)
    if idx.size == 0:
        return 0.0
    return gaussian_entropy(joint_cov[np.ix_(idx, idx)])


def lg_information_gain_exact(spec: LinearGaussianSpec, i: int) -> float:
    """I(theta_i; Y | theta_~i) = H(th) + H(th_~i, Y) - H(th_~i) - H(th, Y)."""
    m, n = spec.m, spec.n
    if not 0 <= i < m:
        raise InvalidArgumentError(f"parameter index {i} out of range for m={m}")
    cov = lg_joint(spec).covariance
    params = set(range(m))
    rest = params - {i}
    ys = set(range(m, m + n))
    value = (_block_entropy(cov, params) + _block_entropy(cov, rest | ys)
             - _block_entropy(cov, rest) - _block_entropy(cov, params | ys))
    return max(value, 0.0) if value > -1e-12 else value


def lg_pairwise_exact(spec: LinearGaussianSpec, i: int, j: int) -> float:
    """I(theta_i; theta_j | Y, theta_~ij) from the four joint-block entropies."""
    m, n = spec.m, spec.n
    if i == j or not (0 <= i < m and 0 <= j < m):
        raise InvalidArgumentError(f"need two distinct parameter indices in [0, {m}), got {i}, {j}")
    cov = lg_joint(spec).covariance
    rest = set(range(m)) - {i, j}
    ys = set(range(m, m + n))
    value = (_block_entropy(cov, {i} | rest | ys) + _block_entropy(cov, {j} | rest | ys)
             - _block_entropy(cov, rest | ys) - _block_entropy(cov, {i, j} | rest | ys))
    return max(value, 0.0) if value > -1e-12 else value

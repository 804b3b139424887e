"""Numerical primitives: Gaussian densities, Gauss-Hermite rules, log-domain sums,
and the seeded random-stream contract shared by every estimator."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_triangular

from .errors import InvalidArgumentError, NumericalDomainError

LOG_2PI = float(np.log(2.0 * np.pi))
MAX_ORDER = 200


def cholesky(cov) -> np.ndarray:
    """Lower Cholesky factor; raises ``NumericalDomainError`` if not SPD."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape[0] != cov.shape[1]:
        raise NumericalDomainError(f"covariance must be square, got {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=1e-10, atol=0.0):
        raise NumericalDomainError("covariance is not symmetric")
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalDomainError("covariance is not positive definite") from exc
    if not np.all(np.diag(L) > 0):
        raise NumericalDomainError("covariance is not positive definite")
    return L


@dataclass(frozen=True)
class GaussianDensity:
    mean: np.ndarray
    covariance: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise InvalidArgumentError(
                f"covariance shape {cov.shape} does not match mean of size {mean.size}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", cholesky(cov))

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def cholesky(self) -> np.ndarray:
        return self._chol

    def log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self._chol))))

    def logpdf(self, x) -> float:
        return gaussian_logpdf(x, self)


def gaussian_logpdf(x, density: GaussianDensity) -> float:
    """log N(x; mean, covariance) via the Cholesky factor."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != density.mean.shape:
        raise InvalidArgumentError(f"x has shape {x.shape}, expected {density.mean.shape}")
    z = solve_triangular(density.cholesky, x - density.mean, lower=True)
    return float(-0.5 * (density.dim * LOG_2PI + density.log_det() + z @ z))


def log_sum_exp_weighted(log_terms, log_weights) -> float:
    """log sum_k exp(log_terms[k] + log_weights[k]) with max shifting."""
    a = np.asarray(log_terms, dtype=float) + np.asarray(log_weights, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise InvalidArgumentError("log_sum_exp_weighted needs equal-length non-empty vectors")
    if np.shape(log_terms) != np.shape(log_weights):
        raise InvalidArgumentError("log_terms and log_weights differ in length")
    return float(logsumexp_rows(a[None, :])[0])


def logsumexp_rows(a: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp of a 2-D array; rows of all -inf give -inf."""
    m = np.max(a, axis=1)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(under="ignore"):
        s = np.sum(np.exp(a - safe[:, None]), axis=1)
    with np.errstate(divide="ignore"):
        return safe + np.log(s)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for expectations under N(0, I)."""

    nodes: np.ndarray  # (n_points,) or (n_points, dim)
    weights: np.ndarray  # (n_points,), sums to one
    order: int

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)

    def expect(self, f) -> float:
        return float(np.sum(self.weights * f(self.nodes)))

    def tensor(self, dim: int = 2) -> "QuadratureRule":
        """Full tensor-product rule in ``dim`` dimensions (order**dim points)."""
        grids = np.meshgrid(*([self.nodes] * dim), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=1)
        wgrids = np.meshgrid(*([self.weights] * dim), indexing="ij")
        weights = np.prod(np.stack([w.ravel() for w in wgrids], axis=1), axis=1)
        return QuadratureRule(nodes, weights, self.order)


@lru_cache(maxsize=None)
def _golub_welsch(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order == 1:
        return np.zeros(1), np.ones(1)
    # Jacobi matrix of the probabilists' Hermite polynomials: zero diagonal,
    # off-diagonal sqrt(k), k = 1..order-1
    off = np.sqrt(np.arange(1, order, dtype=float))
    nodes = eigh_tridiagonal(np.zeros(order), off, eigvals_only=True)
    nodes = 0.5 * (nodes - nodes[::-1])
    # Eigenvector components lose relative accuracy for tail weights, so take
    # the weights from the Christoffel function 1 / sum_k p_k(x)^2 instead.
    p_prev = np.zeros(order)
    p = np.ones(order)
    acc = np.ones(order)
    for k in range(1, order):
        p_prev, p = p, (nodes * p - np.sqrt(k - 1.0) * p_prev) / np.sqrt(k)
        acc += p * p
    weights = 1.0 / acc
    weights = 0.5 * (weights + weights[::-1])
    weights /= weights.sum()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_hermite_rule(order: int) -> QuadratureRule:
    """Gauss-Hermite rule for E[f(X)], X ~ N(0, 1).

    Exact for polynomials of degree up to ``2 * order - 1``. Nodes map to
    N(mu, sigma^2) as ``mu + sigma * node``.
    """
    if isinstance(order, bool) or not isinstance(order, (int, np.integer)):
        raise InvalidArgumentError(f"order must be an integer, got {order!r}")
    if not 1 <= order <= MAX_ORDER:
        raise InvalidArgumentError(f"order must lie in [1, {MAX_ORDER}], got {order}")
    nodes, weights = _golub_welsch(int(order))
    return QuadratureRule(nodes, weights, int(order))


@dataclass
class RandomStream:
    """Reproducible normal/uniform draws keyed by ``(seed, stream_id)``.

    Distinct stream ids give statistically independent sequences. A stream is
    stateful and must not be shared between concurrent tasks.
    """

    seed: int
    stream_id: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 0 or v >= 2**64:
                raise InvalidArgumentError(f"{name} must be an unsigned 64-bit integer, got {v!r}")
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        self._rng = np.random.Generator(np.random.PCG64(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._rng

    def normal(self, size=None) -> np.ndarray:
        return self._rng.standard_normal(size)

    def uniform(self, size=None) -> np.ndarray:
        return self._rng.random(size)

"""Statistical model y = F(theta, d) + xi, xi ~ N(0, Gamma), with independent
Gaussian priors on theta."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidArgumentError, ModelEvaluationError, NumericalDomainError
from .mathcore import LOG_2PI, RandomStream, cholesky


class ForwardModel:
    """Deterministic map from parameters (and fixed inputs ``d``) to predictions.

    Subclasses implement :meth:`evaluate`; :meth:`evaluate_batch` may be
    overridden with a vectorized version.
    """

    param_names: tuple[str, ...] = ()

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    def n_outputs(self, d) -> int:
        raise NotImplementedError

    def evaluate(self, theta: np.ndarray, d) -> np.ndarray:
        raise NotImplementedError

    def evaluate_batch(self, thetas: np.ndarray, d) -> np.ndarray:
        thetas = np.atleast_2d(thetas)
        out = np.empty((thetas.shape[0], self.n_outputs(d)))
        for k, theta in enumerate(thetas):
            out[k] = self.evaluate(theta, d)
        return out


class LinearForward(ForwardModel):
    """F(theta) = A @ theta for a fixed feature matrix; ``d`` is ignored."""

    def __init__(self, matrix, param_names: Sequence[str] | None = None):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        m = self.matrix.shape[1]
        self.param_names = tuple(param_names or (f"theta{i + 1}" for i in range(m)))
        if len(self.param_names) != m:
            raise InvalidArgumentError("param_names length does not match matrix columns")

    def feature_matrix(self, d) -> np.ndarray:
        return self.matrix

    def n_outputs(self, d) -> int:
        return self.matrix.shape[0]

    def evaluate(self, theta, d):
        return self.matrix @ np.asarray(theta, dtype=float)

    def evaluate_batch(self, thetas, d):
        return np.atleast_2d(thetas) @ self.matrix.T


class VandermondeForward(ForwardModel):
    """F(theta, d) = V(d) @ theta with columns d, d^2, ..., d^m."""

    def __init__(self, m: int, param_names: Sequence[str] | None = None):
        if m < 1:
            raise InvalidArgumentError("m must be >= 1")
        self.m = m
        self.param_names = tuple(param_names or (f"theta{i + 1}" for i in range(m)))
        self._cache: tuple | None = None

    def feature_matrix(self, d) -> np.ndarray:
        from .oracle import build_vandermonde

        d = np.asarray(d, dtype=float)
        if self._cache is None or not np.array_equal(self._cache[0], d):
            self._cache = (d.copy(), build_vandermonde(d, self.m))
        return self._cache[1]

    def n_outputs(self, d) -> int:
        return np.asarray(d).size

    def evaluate(self, theta, d):
        return self.feature_matrix(d) @ np.asarray(theta, dtype=float)

    def evaluate_batch(self, thetas, d):
        return np.atleast_2d(thetas) @ self.feature_matrix(d).T


class FunctionForward(ForwardModel):
    """Wrap a plain callable ``f(theta, d) -> array``."""

    def __init__(self, func: Callable, param_names: Sequence[str], n_outputs: int,
                 batch_func: Callable | None = None):
        self.func = func
        self.batch_func = batch_func
        self.param_names = tuple(param_names)
        self._n = int(n_outputs)

    def n_outputs(self, d) -> int:
        return self._n

    def evaluate(self, theta, d):
        return np.atleast_1d(np.asarray(self.func(np.asarray(theta, dtype=float), d), dtype=float))

    def evaluate_batch(self, thetas, d):
        if self.batch_func is not None:
            return np.asarray(self.batch_func(np.atleast_2d(thetas), d), dtype=float)
        return super().evaluate_batch(thetas, d)


@dataclass(frozen=True)
class PriorSpec:
    """Independent Gaussian priors, one per parameter."""

    names: tuple[str, ...]
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        means = np.atleast_1d(np.asarray(self.means, dtype=float))
        variances = np.atleast_1d(np.asarray(self.variances, dtype=float))
        names = tuple(self.names)
        if not (len(names) == means.size == variances.size):
            raise InvalidArgumentError("names, means and variances must have equal length")
        if not np.all(variances > 0):
            raise InvalidArgumentError("prior variances must be positive")
        if len(set(names)) != len(names):
            raise InvalidArgumentError("prior parameter names must be unique")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)

    @classmethod
    def standard_normal(cls, m: int, names: Sequence[str] | None = None) -> "PriorSpec":
        return cls(tuple(names or (f"theta{i + 1}" for i in range(m))), np.zeros(m), np.ones(m))

    @property
    def dim(self) -> int:
        return self.means.size

    @property
    def stds(self) -> np.ndarray:
        return np.sqrt(self.variances)

    def logpdf_component(self, i: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return -0.5 * (LOG_2PI + np.log(self.variances[i]) + (x - self.means[i]) ** 2 / self.variances[i])

    def logpdf(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        return float(np.sum(-0.5 * (LOG_2PI + np.log(self.variances)
                                    + (theta - self.means) ** 2 / self.variances)))


@dataclass(frozen=True)
class StatisticalModel:
    """Forward model, fixed design inputs ``d`` and additive noise covariance."""

    forward: ForwardModel
    d: object
    noise_cov: np.ndarray
    name: str = ""
    _chol: np.ndarray = field(init=False, repr=False, compare=False)
    _diag: np.ndarray | None = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.noise_cov, dtype=float))
        n = self.forward.n_outputs(self.d)
        if cov.shape != (n, n):
            raise InvalidArgumentError(f"noise covariance shape {cov.shape} != ({n}, {n})")
        L = cholesky(cov)
        object.__setattr__(self, "noise_cov", cov)
        object.__setattr__(self, "_chol", L)
        is_diag = np.count_nonzero(cov - np.diag(np.diag(cov))) == 0
        object.__setattr__(self, "_diag", np.diag(L).copy() if is_diag else None)

    @property
    def n_params(self) -> int:
        return self.forward.n_params

    @property
    def n_outputs(self) -> int:
        return self.noise_cov.shape[0]

    @property
    def param_names(self) -> tuple[str, ...]:
        return self.forward.param_names

    @property
    def noise_log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self._chol))))

    def predict(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise InvalidArgumentError(f"theta has shape {theta.shape}, expected ({self.n_params},)")
        try:
            out = np.asarray(self.forward.evaluate(theta, self.d), dtype=float)
        except ModelEvaluationError as exc:
            if exc.theta is None:
                exc.theta = theta
            raise
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            raise ModelEvaluationError(f"forward model failed: {exc}", theta=theta) from exc
        return out

    def predict_batch(self, thetas) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        try:
            out = self.forward.evaluate_batch(thetas, self.d)
        except ModelEvaluationError:
            raise
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            raise ModelEvaluationError(f"forward model failed: {exc}") from exc
        return np.asarray(out, dtype=float)

    def whiten(self, residuals: np.ndarray) -> np.ndarray:
        """L^{-1} r for each row r, with Gamma = L L^T."""
        if self._diag is not None:
            return residuals / self._diag
        return solve_triangular(self._chol, residuals.T, lower=True).T

    def loglik_from_predictions(self, y: np.ndarray, preds: np.ndarray) -> np.ndarray:
        """log N(y; pred, Gamma) for each row of ``preds`` (broadcast against ``y``)."""
        z = self.whiten(np.asarray(y, dtype=float) - preds)
        return -0.5 * (self.n_outputs * LOG_2PI + self.noise_log_det + np.sum(z * z, axis=-1))

    def linear_gram(self):
        """(L^{-1} A, A^T Gamma^{-1} A) for linear forward models, else None."""
        feature = getattr(self.forward, "feature_matrix", None)
        if feature is None:
            return None
        WA = self.whiten(feature(self.d).T).T
        return WA, WA.T @ WA


def likelihood_logpdf(model: StatisticalModel, theta, y) -> float:
    """log N(y; F(theta, d), Gamma)."""
    y = np.asarray(y, dtype=float)
    if y.shape != (model.n_outputs,):
        raise InvalidArgumentError(f"y has shape {y.shape}, expected ({model.n_outputs},)")
    pred = model.predict(theta)
    return float(model.loglik_from_predictions(y, pred[None, :])[0])


def sample_observation(model: StatisticalModel, theta, stream: RandomStream) -> np.ndarray:
    """F(theta, d) + xi with xi ~ N(0, Gamma) drawn from ``stream``."""
    return model.predict(theta) + model._chol @ stream.normal(model.n_outputs)


def sample_prior(prior: PriorSpec, stream: RandomStream) -> np.ndarray:
    return prior.means + prior.stds * stream.normal(prior.dim)


# --------------------------------------------------------------------------
# registry

ModelBuilder = Callable[[dict], tuple[StatisticalModel, PriorSpec]]
MODEL_REGISTRY: dict[str, ModelBuilder] = {}


def register_model(name: str):
    def deco(builder: ModelBuilder) -> ModelBuilder:
        MODEL_REGISTRY[name] = builder
        return builder
    return deco


def build_model(name: str, settings: dict | None = None) -> tuple[StatisticalModel, PriorSpec]:
    # import for the registration side effects
    from . import kinetics  # noqa: F401

    try:
        builder = MODEL_REGISTRY[name]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown model {name!r}; available: {sorted(MODEL_REGISTRY)}"
        ) from None
    return builder(dict(settings or {}))


@register_model("linear_gaussian")
def _build_linear_gaussian(settings: dict) -> tuple[StatisticalModel, PriorSpec]:
    m = int(settings.get("m", 3))
    n = int(settings.get("n", 100))
    lo, hi = settings.get("interval", (-1.0, 1.0))
    noise_var = float(settings.get("noise_variance", 0.1))
    if not noise_var > 0:
        raise NumericalDomainError("noise variance must be positive")
    d = np.linspace(lo, hi, n)
    forward = VandermondeForward(m)
    model = StatisticalModel(forward, d, noise_var * np.eye(n), name="linear_gaussian")
    return model, PriorSpec.standard_normal(m, forward.param_names)


@register_model("linear")
def _build_linear(settings: dict) -> tuple[StatisticalModel, PriorSpec]:
    """Explicit feature matrix, one row per output."""
    matrix = np.atleast_2d(np.asarray(settings["matrix"], dtype=float))
    noise_var = float(settings.get("noise_variance", 0.1))
    if not noise_var > 0:
        raise NumericalDomainError("noise variance must be positive")
    forward = LinearForward(matrix)
    model = StatisticalModel(forward, None, noise_var * np.eye(matrix.shape[0]), name="linear")
    return model, PriorSpec.standard_normal(matrix.shape[1], forward.param_names)

"""Adaptive Metropolis sampling of parameter posteriors."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgumentError, ModelEvaluationError
from .mathcore import RandomStream
from .model import PriorSpec, StatisticalModel

MAX_PREDICTION_SAMPLES = 2000


@dataclass(frozen=True)
class ChainConfig:
    n_steps: int = 100_000
    burn_in: int | None = None  # default: 20% of n_steps
    adaptation_start: int = 1000
    initial_cov: np.ndarray | None = None  # default: 0.01 * I
    epsilon: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.n_steps < 1:
            raise InvalidArgumentError("n_steps must be positive")
        if self.burn_in is not None and not 0 <= self.burn_in < self.n_steps:
            raise InvalidArgumentError("burn_in must lie in [0, n_steps)")
        if self.adaptation_start < 10:
            raise InvalidArgumentError("adaptation_start must be >= 10")
        if not self.epsilon > 0:
            raise InvalidArgumentError("epsilon must be positive")

    @property
    def burn(self) -> int:
        return self.n_steps // 5 if self.burn_in is None else self.burn_in


@dataclass
class Chain:
    samples: np.ndarray  # (n_steps, m), the initial point excluded
    log_target: np.ndarray  # (n_steps,)
    acceptance_rate: float
    burn_in: int
    param_names: tuple[str, ...] = ()

    @property
    def retained(self) -> np.ndarray:
        return self.samples[self.burn_in:]

    def mean(self) -> np.ndarray:
        return self.retained.mean(axis=0)

    def covariance(self) -> np.ndarray:
        return np.atleast_2d(np.cov(self.retained, rowvar=False))

    def correlation(self) -> np.ndarray:
        return np.atleast_2d(np.corrcoef(self.retained, rowvar=False))

    def to_csv(self, path) -> None:
        names = self.param_names or tuple(f"theta{i + 1}" for i in range(self.samples.shape[1]))
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([*names, "log_target"])
            for row, lp in zip(self.retained, self.log_target[self.burn_in:]):
                w.writerow([f"{v:.17g}" for v in (*row, lp)])


def adaptive_metropolis(log_target: Callable[[np.ndarray], float], init,
                        config: ChainConfig = ChainConfig(),
                        param_names: Sequence[str] = ()) -> Chain:
    """Random-walk Metropolis whose proposal covariance tracks the chain history.

    After ``adaptation_start`` steps the proposal covariance is
    ``2.4**2 / m * (C_t + epsilon * I)``, where ``C_t`` is the empirical
    covariance of all states so far, updated recursively.
    """
    x = np.atleast_1d(np.asarray(init, dtype=float)).copy()
    m = x.size
    lp = float(log_target(x))
    if not math.isfinite(lp):
        raise InvalidArgumentError(f"log target is not finite at the initial point {x}")
    C0 = 0.01 * np.eye(m) if config.initial_cov is None else np.atleast_2d(config.initial_cov)
    if C0.shape != (m, m):
        raise InvalidArgumentError(f"initial_cov must be {m}x{m}")
    L = np.linalg.cholesky(C0)
    sd = 2.4 ** 2 / m
    eye_eps = config.epsilon * np.eye(m)

    stream = RandomStream(config.seed, 0)
    rng = stream.generator
    n = config.n_steps
    samples = np.empty((n, m))
    trace = np.empty(n)
    accepted = 0
    # running moments over the history x_0 .. x_t
    mean = x.copy()
    m2 = np.zeros((m, m))
    count = 1
    for t in range(n):
        proposal = x + L @ rng.standard_normal(m)
        log_u = math.log(rng.random())
        try:
            lp_new = float(log_target(proposal))
        except ModelEvaluationError:
            lp_new = -math.inf
        if math.isfinite(lp_new) and log_u < lp_new - lp:
            x, lp = proposal, lp_new
            accepted += 1
        samples[t] = x
        trace[t] = lp

        count += 1
        delta = x - mean
        mean += delta / count
        m2 += np.outer(delta, x - mean)
        if t + 1 >= config.adaptation_start:
            try:
                L = np.linalg.cholesky(sd * (m2 / (count - 1) + eye_eps))
            except np.linalg.LinAlgError:
                pass  # keep the last valid factor
    return Chain(samples, trace, accepted / n, config.burn, tuple(param_names))


def log_posterior(model: StatisticalModel, prior: PriorSpec, y) -> Callable[[np.ndarray], float]:
    """Unnormalized log posterior; failed forward evaluations give -inf."""
    y = np.asarray(y, dtype=float)

    def target(theta):
        try:
            pred = model.predict(theta)
        except ModelEvaluationError:
            return -math.inf
        return float(model.loglik_from_predictions(y, pred[None, :])[0]) + prior.logpdf(theta)

    return target


@dataclass(frozen=True)
class PosteriorPrediction:
    mean: np.ndarray
    lower: np.ndarray  # 2.5th percentile
    upper: np.ndarray  # 97.5th percentile
    n_samples: int


def posterior_prediction(model: StatisticalModel, chain: Chain,
                         max_samples: int = MAX_PREDICTION_SAMPLES) -> PosteriorPrediction:
    """Push retained chain samples (thinned) through the noise-free forward model."""
    kept = chain.retained
    stride = max(1, math.ceil(len(kept) / max_samples))
    thetas = kept[::stride]
    preds = model.predict_batch(thetas)
    lo, hi = np.percentile(preds, [2.5, 97.5], axis=0)
    return PosteriorPrediction(preds.mean(axis=0), lo, hi, len(thetas))

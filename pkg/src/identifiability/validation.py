"""Estimator studies against the closed-form linear-Gaussian reference."""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .errors import UnsupportedModelError
from .estimators import EstimatorConfig, information_gains, pairwise_dependences
from .model import PriorSpec, StatisticalModel
from .oracle import LinearGaussianSpec, lg_information_gain_exact, lg_pairwise_exact


def oracle_spec(model: StatisticalModel, prior: PriorSpec) -> LinearGaussianSpec:
    if getattr(model.forward, "feature_matrix", None) is None:
        raise UnsupportedModelError(
            f"model {model.name or type(model.forward).__name__!r} has no closed-form reference"
        )
    return LinearGaussianSpec.from_model(model, prior)


def replicate_seed(seed: int, replicate: int) -> int:
    """Independent 64-bit seed for replicate ``replicate`` of a study seeded by ``seed``."""
    return int(np.random.SeedSequence([seed, replicate]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SweepPoint:
    parameter: str
    n_outer: int
    n_inner: int
    replicates: int
    exact: float
    mean_estimate: float
    bias: float  # |replicate mean - exact|
    mean_abs_error: float
    std_dev: float  # across replicates, ddof=1; 0 when replicates == 1
    degenerate: bool  # a single replicate carries no spread information


def _sweep(model, prior, base: EstimatorConfig, settings, replicates):
    spec = oracle_spec(model, prior)
    m = prior.dim
    exact = np.array([lg_information_gain_exact(spec, i) for i in range(m)])
    points = []
    for n_outer, n_inner in settings:
        est = np.array([
            [r.value for r in information_gains(
                model, prior, range(m),
                replace(base, n_outer=n_outer, n_inner=n_inner, seed=replicate_seed(base.seed, r)),
            )]
            for r in range(replicates)
        ])
        std = est.std(axis=0, ddof=1) if replicates > 1 else np.zeros(m)
        for i in range(m):
            points.append(SweepPoint(
                prior.names[i], n_outer, n_inner, replicates, float(exact[i]),
                float(est[:, i].mean()), float(abs(est[:, i].mean() - exact[i])),
                float(np.abs(est[:, i] - exact[i]).mean()), float(std[i]), replicates == 1,
            ))
    return points


def variance_sweep(model, prior, base: EstimatorConfig, n_outer_values, n_inner: int = 50,
                   replicates: int = 20) -> list[SweepPoint]:
    """Spread of repeated estimates as the outer sample count grows."""
    return _sweep(model, prior, base, [(int(n), n_inner) for n in n_outer_values], replicates)


def bias_sweep(model, prior, base: EstimatorConfig, n_inner_values, n_outer: int = 10_000,
               replicates: int = 20) -> list[SweepPoint]:
    """Replicate-averaged error as the inner quadrature order grows."""
    return _sweep(model, prior, base, [(n_outer, int(n)) for n in n_inner_values], replicates)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


@dataclass(frozen=True)
class OracleComparison:
    quantity: str  # "gain" or "dependence"
    i: int
    j: int | None
    exact: float
    estimate: float
    std_error: float

    @property
    def abs_error(self) -> float:
        return abs(self.estimate - self.exact)


def oracle_check(model, prior, config: EstimatorConfig) -> list[OracleComparison]:
    """Estimated gains and dependences next to their closed-form values."""
    spec = oracle_spec(model, prior)
    m = prior.dim
    rows = []
    for i, r in enumerate(information_gains(model, prior, range(m), config)):
        rows.append(OracleComparison("gain", i, None, lg_information_gain_exact(spec, i),
                                     r.value, r.std_error))
    pairs = list(combinations(range(m), 2))
    if pairs:
        for (i, j), r in zip(pairs, pairwise_dependences(model, prior, pairs, config)):
            rows.append(OracleComparison("dependence", i, j, lg_pairwise_exact(spec, i, j),
                                         r.value, r.std_error))
    return rows

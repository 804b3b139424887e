"""First-order Sobol indices by pick-freeze sampling with the Jansen estimator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModelError, InvalidArgumentError
from .mathcore import RandomStream
from .model import ForwardModel, PriorSpec, StatisticalModel

DEFAULT_SAMPLES = 2 ** 14


@dataclass(frozen=True)
class SobolResult:
    param_names: tuple[str, ...]
    indices: np.ndarray  # (m,) averaged over outputs with non-zero variance
    std_errors: np.ndarray  # (m,) jackknife
    n_samples: int
    per_output: np.ndarray  # (m, n_outputs); NaN where an output has no variance


def _evaluator(model):
    if isinstance(model, StatisticalModel):
        return model.predict_batch
    if isinstance(model, ForwardModel):
        return lambda thetas: model.evaluate_batch(thetas, None)
    if callable(model):
        return lambda thetas: np.asarray(model(thetas), dtype=float)
    raise InvalidArgumentError(f"cannot evaluate model of type {type(model).__name__}")


def _jansen(fA, fB, fAB):
    """Indices (n_out,) and leave-one-out indices (N, n_out) for one parameter."""
    N = fA.shape[0]
    both = np.concatenate([fA, fB])
    total = both.var(axis=0, ddof=1)
    D2 = (fB - fAB) ** 2
    Vi = total - 0.5 * D2.mean(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        S = Vi / total
        # jackknife: drop the k-th (A, B, A_B) triple
        s1 = both.sum(axis=0)
        s2 = (both ** 2).sum(axis=0)
        s1_k = s1 - fA - fB
        s2_k = s2 - fA ** 2 - fB ** 2
        n_k = 2 * N - 2
        var_k = (s2_k - s1_k ** 2 / n_k) / (n_k - 1)
        d2_k = (D2.sum(axis=0) - D2) / (N - 1)
        S_k = (var_k - 0.5 * d2_k) / var_k
    return S, S_k


def first_order_indices(model, prior: PriorSpec, n_samples: int = DEFAULT_SAMPLES,
                        seed: int = 0) -> SobolResult:
    """Main-effect index per parameter of the noise-free model, averaged over outputs."""
    if n_samples < 3:
        raise InvalidArgumentError("n_samples must be >= 3")
    f = _evaluator(model)
    m = prior.dim
    z = RandomStream(seed, 0).normal((n_samples, 2 * m))
    A = prior.means + prior.stds * z[:, :m]
    B = prior.means + prior.stds * z[:, m:]
    fA = np.atleast_2d(f(A).T).T
    fB = np.atleast_2d(f(B).T).T
    total = np.concatenate([fA, fB]).var(axis=0, ddof=1)
    live = total > 0
    if not np.any(live):
        raise DegenerateModelError("model output has zero variance for every output")
    per_output = np.full((m, fA.shape[1]), np.nan)
    indices = np.empty(m)
    errors = np.empty(m)
    for i in range(m):
        AB = A.copy()
        AB[:, i] = B[:, i]
        fAB = np.atleast_2d(f(AB).T).T
        S, S_k = _jansen(fA[:, live], fB[:, live], fAB[:, live])
        per_output[i, live] = S
        indices[i] = S.mean()
        jack = S_k.mean(axis=1)
        errors[i] = np.sqrt((n_samples - 1) / n_samples * np.sum((jack - jack.mean()) ** 2))
    return SobolResult(tuple(prior.names), indices, errors, n_samples, per_output)


def linear_sobol_exact(feature_matrix, prior_variances) -> np.ndarray:
    """Output-averaged main-effect indices of y = A theta with independent priors.

    Rows of ``A`` with zero variance are left out of the average.
    """
    A = np.atleast_2d(np.asarray(feature_matrix, dtype=float))
    contrib = A ** 2 * np.asarray(prior_variances, dtype=float)[None, :]
    total = contrib.sum(axis=1)
    live = total > 0
    return (contrib[live] / total[live, None]).mean(axis=0)

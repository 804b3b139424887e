"""Nested Monte-Carlo estimators of per-parameter information gain and pairwise
posterior dependence.

Outer samples ``(theta^k, y^k)`` are joint prior-predictive draws, each taken
from its own :class:`RandomStream` with ``stream_id = k``. Conditional
evidences are inner Gauss-Hermite sums, optionally under a Gaussian
importance proposal centred on the outer sample. Results depend only on the
seed, never on how outer samples are split between workers.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError, ModelEvaluationError
from .mathcore import LOG_2PI, QuadratureRule, RandomStream, gauss_hermite_rule, logsumexp_rows
from .model import PriorSpec, StatisticalModel

log = logging.getLogger(__name__)

LOG_FLOOR = -1e8
# target number of (outer sample x inner node) rows evaluated per batch
_ROWS_PER_CHUNK = 100_000
PROPOSALS = ("laplace", "prior")
# finite-difference step for the proposal Jacobian, in prior standard deviations
_FD_STEP = 1e-4


@dataclass(frozen=True)
class EstimatorConfig:
    n_outer: int = 10_000
    n_inner: int = 50
    proposal_scale: float = 1.0
    seed: int = 0
    proposal: str = "laplace"  # "laplace" or "prior"
    use_importance_sampling: bool = True
    n_inner_pair: int | None = None  # per-dimension order of the 2-D rule; defaults to n_inner
    workers: int = 1

    def __post_init__(self):
        if self.n_outer < 2:
            raise InvalidArgumentError("n_outer must be >= 2")
        if self.n_inner < 1 or (self.n_inner_pair is not None and self.n_inner_pair < 1):
            raise InvalidArgumentError("n_inner must be >= 1")
        if not self.proposal_scale > 0:
            raise InvalidArgumentError("proposal_scale must be positive")
        if self.workers < 1:
            raise InvalidArgumentError("workers must be >= 1")
        if self.proposal not in PROPOSALS:
            raise InvalidArgumentError(
                f"proposal must be one of {PROPOSALS}, got {self.proposal!r}")

    @property
    def pair_order(self) -> int:
        return self.n_inner if self.n_inner_pair is None else self.n_inner_pair


@dataclass(frozen=True)
class EstimateResult:
    value: float  # nats
    std_error: float  # nats
    n_outer_used: int
    n_clamped: int = 0

    @classmethod
    def from_terms(cls, terms: np.ndarray, n_clamped: int = 0) -> "EstimateResult":
        terms = np.asarray(terms, dtype=float)
        se = float(np.std(terms, ddof=1) / np.sqrt(terms.size))
        return cls(float(np.mean(terms)), se, int(terms.size), int(n_clamped))


@dataclass
class IdentifiabilityReport:
    param_names: tuple[str, ...]
    gains: list  # EstimateResult | None per parameter
    dependence: list  # m x m nested list, diagonal None
    config: EstimatorConfig
    gain_seconds: list = field(default_factory=list)
    dependence_seconds: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)  # entry label -> message

    def dependence_values(self) -> np.ndarray:
        m = len(self.param_names)
        out = np.full((m, m), np.nan)
        for i in range(m):
            for j in range(m):
                r = self.dependence[i][j]
                if r is not None:
                    out[i, j] = r.value
        return out


# --------------------------------------------------------------------------
# outer draws


@dataclass
class _OuterBatch:
    indices: np.ndarray
    theta: np.ndarray  # (K, m)
    y: np.ndarray  # (K, n)
    loglik: np.ndarray  # (K,) log p(y^k | theta^k)
    preds: np.ndarray  # (K, n) F(theta^k)


def _draw_outer(model: StatisticalModel, prior: PriorSpec, seed: int, indices) -> _OuterBatch:
    m, n = prior.dim, model.n_outputs
    streams = [RandomStream(seed, int(k)) for k in indices]
    z_theta = np.array([s.normal(m) for s in streams]).reshape(len(streams), m)
    theta = prior.means + prior.stds * z_theta
    try:
        preds = model.predict_batch(theta)
    except ModelEvaluationError as exc:
        raise _locate_failure(model, theta, indices, exc) from exc
    z_noise = np.array([s.normal(n) for s in streams]).reshape(len(streams), n)
    y = preds + z_noise @ model._chol.T
    loglik = model.loglik_from_predictions(y, preds)
    return _OuterBatch(np.asarray(indices), theta, y, loglik, preds)


def _locate_failure(model, thetas, indices, exc):
    for k, theta in zip(indices, thetas):
        try:
            model.predict(theta)
        except ModelEvaluationError as inner:
            inner.sample_index = int(k)
            return inner
    exc.sample_index = int(indices[0]) if len(indices) else None
    return exc


# --------------------------------------------------------------------------
# conditional evidence


def _gauss_newton_info(model, prior, theta, preds=None):
    """J^T Gamma^-1 J at each row of ``theta``, shape (K, m, m) or (m, m) for linear models.

    Nonlinear models use forward differences. Rows whose perturbed evaluation
    fails get zero information, which falls back to a prior-width proposal.
    """
    gram = model.linear_gram()
    if gram is not None:
        return gram[1]
    K, m = theta.shape
    if preds is None:
        preds = model.predict_batch(theta)
    steps = _FD_STEP * prior.stds
    shifted = theta[:, None, :] + np.diag(steps)[None, :, :]
    try:
        fp = model.predict_batch(shifted.reshape(K * m, m)).reshape(K, m, -1)
        ok = np.ones(K, dtype=bool)
    except ModelEvaluationError:
        fp = np.zeros((K, m, preds.shape[1]))
        ok = np.zeros(K, dtype=bool)
        for k in range(K):
            try:
                fp[k] = model.predict_batch(shifted[k])
                ok[k] = True
            except ModelEvaluationError:
                pass
    jac = (fp - preds[:, None, :]) / steps[None, :, None]  # (K, m, n)
    wj = model.whiten(jac.reshape(K * m, -1)).reshape(K, m, -1)
    info = np.einsum("kin,kjn->kij", wj, wj)
    info[~ok] = 0.0
    return info


def _proposal_factor(prior, free, config, info, K):
    """Lower Cholesky factors (K, f, f) of the importance proposal covariance."""
    sd = prior.stds[free]
    if config.proposal == "prior" or info is None:
        return np.broadcast_to(np.diag(config.proposal_scale * sd), (K, len(free), len(free)))
    block = np.broadcast_to(info, (K,) + np.shape(info)[-2:])[:, free][:, :, free]
    precision = block + np.diag(1.0 / prior.variances[free])
    return config.proposal_scale * np.linalg.cholesky(np.linalg.inv(precision))


def _inner_points(prior, theta, free, rule, config, info=None):
    """Node coordinates (K, P, f) and log importance weights (K, P).

    With importance sampling the nodes sit under N(theta^k_free, S), where S is
    ``proposal_scale^2`` times either the prior variances or, for the Laplace
    proposal, the Gauss-Newton conditional posterior covariance at theta^k.
    """
    f = len(free)
    K = theta.shape[0]
    nodes = rule.nodes.reshape(-1, f)
    mu = prior.means[free]
    if not config.use_importance_sampling:
        pts = mu + prior.stds[free] * nodes
        return np.broadcast_to(pts, (K,) + pts.shape), np.zeros((K, nodes.shape[0]))
    L = _proposal_factor(prior, free, config, info, K)
    pts = theta[:, None, free] + np.einsum("kab,pb->kpa", L, nodes)
    log_det = np.sum(np.log(np.diagonal(L, axis1=1, axis2=2)), axis=1)
    log_q = np.sum(-0.5 * (LOG_2PI + nodes ** 2), axis=1)[None, :] - log_det[:, None]
    var = prior.variances[free]
    log_p = np.sum(-0.5 * (LOG_2PI + np.log(var) + (pts - mu) ** 2 / var), axis=2)
    return pts, log_p - log_q


def _inner_loglik(model, y, theta, free, pts, gram, indices):
    K, P, _ = pts.shape
    full = np.repeat(theta[:, None, :], P, axis=1)
    full[:, :, free] = pts
    if gram is not None:
        WA, G = gram
        wy = model.whiten(y)
        b = wy @ WA  # (K, m)
        quad = np.einsum("kpi,ij,kpj->kp", full, G, full)
        lin = np.einsum("kpi,ki->kp", full, b)
        sq = np.sum(wy * wy, axis=1)[:, None] - 2.0 * lin + quad
        return -0.5 * (model.n_outputs * LOG_2PI + model.noise_log_det + sq)
    flat = full.reshape(K * P, -1)
    try:
        preds = model.predict_batch(flat)
    except ModelEvaluationError as exc:
        err = _locate_failure(model, flat, np.repeat(indices, P), exc)
        raise err from exc
    preds = preds.reshape(K, P, -1)
    return model.loglik_from_predictions(y[:, None, :], preds)


def _log_evidence_batch(model, prior, y, theta, free, rule, config, gram=None, indices=None,
                        info=None):
    """log p_hat(y^k | theta_fixed^k) for each row; returns (values, n_clamped).

    ``info`` is the Gauss-Newton information for the Laplace proposal and is
    computed here when needed and not supplied.
    """
    if indices is None:
        indices = np.arange(theta.shape[0])
    if info is None and config.use_importance_sampling and config.proposal == "laplace":
        info = _gauss_newton_info(model, prior, theta)
    pts, log_w = _inner_points(prior, theta, free, rule, config, info)
    ll = _inner_loglik(model, y, theta, free, pts, gram, indices)
    with np.errstate(invalid="ignore"):
        values = logsumexp_rows(ll + log_w + rule.log_weights[None, :])
    bad = ~np.isfinite(values) | (values < LOG_FLOOR)
    values[bad] = LOG_FLOOR
    return values, int(np.count_nonzero(bad))


def _check_free(m, free):
    free = [int(i) for i in free]
    if len(free) not in (1, 2) or len(set(free)) != len(free):
        raise InvalidArgumentError(f"free must hold one or two distinct indices, got {free}")
    if any(not 0 <= i < m for i in free):
        raise InvalidArgumentError(f"free index out of range for m={m}: {free}")
    return free


def _rule_for(free, config):
    if len(free) == 1:
        return gauss_hermite_rule(config.n_inner)
    return gauss_hermite_rule(config.pair_order).tensor(2)


def conditional_evidence_log(model: StatisticalModel, prior: PriorSpec, y_k, fixed: dict,
                             free: Sequence[int], rule: QuadratureRule | None = None,
                             proposal_center=None, config: EstimatorConfig | None = None) -> float:
    """log p_hat(y_k | theta_fixed, d), integrating the ``free`` parameters.

    ``fixed`` maps every non-free parameter index to its value. With
    importance sampling the nodes sit under a Gaussian centred on ``center``
    (see :func:`_inner_points` for its covariance) and carry weights
    prior / proposal; otherwise they sit under the prior.
    ``rule`` is a 1-D rule; for two free parameters its tensor square is used.
    """
    config = config or EstimatorConfig()
    m = prior.dim
    free = _check_free(m, free)
    if set(fixed) | set(free) != set(range(m)) or set(fixed) & set(free):
        raise InvalidArgumentError("fixed and free must partition the parameter indices")
    if rule is None:
        rule = _rule_for(free, config)
    elif len(free) == 2 and np.ndim(rule.nodes) == 1:
        rule = rule.tensor(2)
    theta = np.empty(m)
    for idx, v in fixed.items():
        theta[int(idx)] = v
    if proposal_center is None:
        proposal_center = prior.means[free]
    theta[free] = np.asarray(proposal_center, dtype=float).reshape(len(free))
    y = np.asarray(y_k, dtype=float).reshape(1, -1)
    values, _ = _log_evidence_batch(model, prior, y, theta[None, :], free, rule, config,
                                    gram=model.linear_gram())
    return float(values[0])


# --------------------------------------------------------------------------
# estimators


def _chunks(n_outer, rows_per_sample):
    size = max(1, _ROWS_PER_CHUNK // max(1, rows_per_sample))
    return [np.arange(a, min(a + size, n_outer)) for a in range(0, n_outer, size)]


def _proposal_info(model, prior, config, batch):
    if config.use_importance_sampling and config.proposal == "laplace":
        try:
            return _gauss_newton_info(model, prior, batch.theta, batch.preds)
        except ModelEvaluationError as exc:
            raise _locate_failure(model, batch.theta, batch.indices, exc) from exc
    return None


def _gain_chunk(args):
    model, prior, config, indices, targets = args
    batch = _draw_outer(model, prior, config.seed, indices)
    gram = model.linear_gram()
    info = _proposal_info(model, prior, config, batch)
    rule = gauss_hermite_rule(config.n_inner)
    out = []
    for i in targets:
        ev, nc = _log_evidence_batch(model, prior, batch.y, batch.theta, [i], rule, config,
                                     gram, batch.indices, info)
        out.append((batch.loglik - ev, nc))
    return out


def _pair_chunk(args):
    model, prior, config, indices, pairs = args
    batch = _draw_outer(model, prior, config.seed, indices)
    gram = model.linear_gram()
    rule1 = gauss_hermite_rule(config.n_inner)
    rule2 = gauss_hermite_rule(config.pair_order).tensor(2)
    info = _proposal_info(model, prior, config, batch)
    cache = {}

    def evidence(free, rule):
        key = tuple(free)
        if key not in cache:
            cache[key] = _log_evidence_batch(model, prior, batch.y, batch.theta, list(free), rule,
                                             config, gram, batch.indices, info)
        return cache[key]

    out = []
    for i, j in pairs:
        e_ij, c0 = evidence((i, j), rule2)
        e_given_i, c1 = evidence((j,), rule1)  # theta_i fixed, integrate theta_j
        e_given_j, c2 = evidence((i,), rule1)
        out.append((batch.loglik + e_ij - e_given_i - e_given_j, c0 + c1 + c2))
    return out


def _run_chunks(fn, payloads, workers):
    if workers <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, payloads))


def _collect(results, n_entries):
    out = []
    for e in range(n_entries):
        terms = np.concatenate([chunk[e][0] for chunk in results])
        clamped = sum(chunk[e][1] for chunk in results)
        out.append(EstimateResult.from_terms(terms, clamped))
    return out


def information_gains(model, prior, targets, config: EstimatorConfig) -> list[EstimateResult]:
    """Information gain for several parameters sharing the same outer draws."""
    m = prior.dim
    if model.n_params != m:
        raise InvalidArgumentError("model and prior disagree on the parameter count")
    targets = [int(i) for i in targets]
    for i in targets:
        if not 0 <= i < m:
            raise InvalidArgumentError(f"parameter index {i} out of range for m={m}")
    per_sample = config.n_inner * (model.n_outputs if model.linear_gram() is None else m)
    payloads = [(model, prior, config, idx, targets) for idx in _chunks(config.n_outer, per_sample)]
    return _collect(_run_chunks(_gain_chunk, payloads, config.workers), len(targets))


def information_gain(model: StatisticalModel, prior: PriorSpec, i: int,
                     config: EstimatorConfig) -> EstimateResult:
    """Expected information gain I(theta_i; Y | theta_~i) in nats."""
    return information_gains(model, prior, [i], config)[0]


def pairwise_dependences(model, prior, pairs, config: EstimatorConfig) -> list[EstimateResult]:
    m = prior.dim
    if model.n_params != m:
        raise InvalidArgumentError("model and prior disagree on the parameter count")
    pairs = [(int(i), int(j)) for i, j in pairs]
    for i, j in pairs:
        if i == j or not (0 <= i < m and 0 <= j < m):
            raise InvalidArgumentError(f"invalid parameter pair ({i}, {j}) for m={m}")
    width = model.n_outputs if model.linear_gram() is None else m
    per_sample = (config.pair_order ** 2 + 2 * config.n_inner) * width
    payloads = [(model, prior, config, idx, pairs) for idx in _chunks(config.n_outer, per_sample)]
    return _collect(_run_chunks(_pair_chunk, payloads, config.workers), len(pairs))


def pairwise_dependence(model: StatisticalModel, prior: PriorSpec, i: int, j: int,
                        config: EstimatorConfig) -> EstimateResult:
    """Posterior dependence I(theta_i; theta_j | Y, theta_~ij) in nats."""
    return pairwise_dependences(model, prior, [(i, j)], config)[0]


def full_report(model: StatisticalModel, prior: PriorSpec,
                config: EstimatorConfig) -> IdentifiabilityReport:
    """All gains and all unordered pairwise dependences; failures are recorded per entry."""
    m = prior.dim
    names = tuple(prior.names)
    gains: list = [None] * m
    dep: list = [[None] * m for _ in range(m)]
    report = IdentifiabilityReport(names, gains, dep, config, [0.0] * m, {}, {})
    for i in range(m):
        t0 = time.perf_counter()
        try:
            gains[i] = information_gain(model, prior, i, config)
        except Exception as exc:  # noqa: BLE001 - recorded, remaining entries still run
            report.errors[f"gain[{names[i]}]"] = str(exc)
            log.warning("information gain for %s failed: %s", names[i], exc)
        report.gain_seconds[i] = time.perf_counter() - t0
    for i in range(m):
        for j in range(i + 1, m):
            t0 = time.perf_counter()
            try:
                r = pairwise_dependence(model, prior, i, j, config)
                dep[i][j] = dep[j][i] = r
            except Exception as exc:  # noqa: BLE001
                report.errors[f"dependence[{names[i]},{names[j]}]"] = str(exc)
                log.warning("dependence (%s, %s) failed: %s", names[i], names[j], exc)
            report.dependence_seconds[(i, j)] = time.perf_counter() - t0
    return report

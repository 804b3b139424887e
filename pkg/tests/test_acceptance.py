"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; the lines are printed in the terminal
summary (see conftest.py) and when this file is run as a script.
"""

import math
import time

import numpy as np
import pytest

from identifiability.cli import COMMANDS, main
from identifiability.estimators import EstimatorConfig, information_gains, pairwise_dependences
from identifiability.kinetics import CombustionForward, KineticsInput
from identifiability.mathcore import RandomStream, gauss_hermite_rule
from identifiability.mcmc import ChainConfig, adaptive_metropolis, log_posterior
from identifiability.model import LinearForward, PriorSpec, StatisticalModel, build_model, \
    sample_observation
from identifiability.oracle import LinearGaussianSpec, lg_information_gain_exact, \
    lg_pairwise_exact, lg_posterior
from identifiability.sobol import first_order_indices, linear_sobol_exact
from identifiability.validation import bias_sweep, loglog_slope, variance_sweep

RESULTS: dict[int, str] = {}
PAIRS = [(0, 1), (0, 2), (1, 2)]
# exact values closer than this are a tie (the odd/even pairs are both zero up to rounding)
TIE = 1e-9


def record(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    RESULTS[number] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def lg():
    model, prior = build_model("linear_gaussian")
    return model, prior, LinearGaussianSpec.from_model(model, prior)


def gaussian_moment(k):
    return 0.0 if k % 2 else float(math.prod(range(k - 1, 0, -2)))


def test_criterion_01_quadrature_exactness():
    t0 = time.perf_counter()
    worst = 0.0
    for order in range(1, 51):
        rule = gauss_hermite_rule(order)
        for k in range(2 * order):
            want = gaussian_moment(k)
            got = float(np.sum(rule.weights * rule.nodes ** k))
            # odd moments vanish; measure them against the neighbouring even moment
            err = abs(got - want) / (want if want else max(1.0, gaussian_moment(k - 1)))
            worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 1.0
    assert record(1, ok, f"max relative moment error {worst:.2e}, {elapsed:.2f} s")


def test_criterion_02_oracle_match(lg):
    model, prior, spec = lg
    t0 = time.perf_counter()
    res = information_gains(model, prior, range(3), EstimatorConfig(n_outer=10_000, n_inner=50))
    elapsed = time.perf_counter() - t0
    parts, ok = [], elapsed < 120
    for i, r in enumerate(res):
        exact = lg_information_gain_exact(spec, i)
        tol = max(3 * r.std_error, 0.02 * exact)
        ok &= abs(r.value - exact) <= tol
        parts.append(f"theta{i + 1} {r.value:.4f}±{r.std_error:.4f} vs {exact:.4f}")
    assert record(2, ok, "; ".join(parts) + f"; {elapsed:.1f} s")


def test_criterion_03_variance_law(lg):
    model, prior, _ = lg
    n_outer = [100, 1000, 10_000]
    points = variance_sweep(model, prior, EstimatorConfig(), n_outer, n_inner=50, replicates=20)
    slopes = []
    for name in prior.names:
        sd = [p.std_dev for p in points if p.parameter == name]
        slopes.append(loglog_slope(n_outer, sd))
    ok = all(-0.75 <= s <= -0.25 for s in slopes)
    assert record(3, ok, "slopes " + ", ".join(f"{s:.3f}" for s in slopes))


def test_criterion_04_bias_law(lg):
    model, prior, _ = lg
    n_inner = [2, 5, 10, 50]
    points = bias_sweep(model, prior, EstimatorConfig(), n_inner, n_outer=10_000, replicates=20)
    ok, parts = True, []
    for name in prior.names:
        bias = [p.bias for p in points if p.parameter == name]
        ok &= all(a > b for a, b in zip(bias, bias[1:]))
        parts.append(f"{name} " + " > ".join(f"{b:.2e}" for b in bias))
    assert record(4, ok, "; ".join(parts))


def ordering_agrees(est, se, exact):
    for a in range(len(exact)):
        for b in range(a + 1, len(exact)):
            diff = exact[a] - exact[b]
            if abs(diff) <= TIE:
                if abs(est[a] - est[b]) > 3 * math.hypot(se[a], se[b]) + TIE:
                    return False
            elif np.sign(est[a] - est[b]) != np.sign(diff):
                return False
    return True


def test_criterion_05_pairwise_trend(lg):
    model, prior, spec = lg
    res = pairwise_dependences(model, prior, PAIRS, EstimatorConfig(n_outer=10_000, n_inner=50))
    est = [r.value for r in res]
    se = [r.std_error for r in res]
    exact = [lg_pairwise_exact(spec, i, j) for i, j in PAIRS]
    ok = ordering_agrees(est, se, exact) and est[1] > max(est[0], est[2])
    detail = "; ".join(f"({i + 1},{j + 1}) {e:.4g} vs {x:.4g}"
                       for (i, j), e, x in zip(PAIRS, est, exact))
    assert record(5, ok, detail)


def test_criterion_06_sobol(lg):
    model, prior, _ = lg
    r = first_order_indices(model, prior)
    exact = linear_sobol_exact(model.forward.feature_matrix(model.d), prior.variances)
    ok = r.indices[0] > r.indices[1] > r.indices[2] and np.all(np.abs(r.indices - exact) <= 0.02)
    detail = ", ".join(f"S{i + 1} {s:.4f} vs {x:.4f}" for i, (s, x) in enumerate(zip(r.indices,
                                                                                      exact)))
    assert record(6, ok, detail)


def test_criterion_07_posterior(lg):
    model, prior, spec = lg
    y = sample_observation(model, [1.0, 2.0, 3.0], RandomStream(0, 1))
    chain = adaptive_metropolis(log_posterior(model, prior, y), np.zeros(3),
                                ChainConfig(n_steps=100_000), prior.names)
    post = lg_posterior(spec, y)
    sd = np.sqrt(np.diag(post.covariance))
    z = np.abs(chain.mean() - post.mean) / sd
    corr = chain.correlation()
    ok = bool(np.all(z <= 3) and corr[0, 2] < -0.5 and abs(corr[1, 0]) < 0.2
              and abs(corr[1, 2]) < 0.2)
    detail = (f"mean offsets {', '.join(f'{v:.2f}' for v in z)} sd; corr13 {corr[0, 2]:.3f}, "
              f"corr12 {corr[0, 1]:.3f}, corr23 {corr[1, 2]:.3f}")
    assert record(7, ok, detail)


@pytest.mark.slow
def test_criterion_08_combustion():
    t0 = time.perf_counter()
    model, prior = build_model("methane_2step")
    cfg = EstimatorConfig(n_outer=1000, n_inner=5, n_inner_pair=10)
    g = information_gains(model, prior, range(3), cfg)
    d = pairwise_dependences(model, prior, PAIRS, cfg)
    elapsed = time.perf_counter() - t0

    def se(a, b):
        return math.hypot(a.std_error, b.std_error)

    gain_max = g[0].value > g[1].value and g[0].value > g[2].value
    gain_equal = abs(g[1].value - g[2].value) <= 3 * se(g[1], g[2])
    dep_order = all(d[k].value - d[2].value >= 3 * se(d[k], d[2]) for k in (0, 1))
    fwd = CombustionForward([KineticsInput(T, 1.0) for T in (1100.0, 1400.0, 1700.0, 2000.0)])
    swapped = [(fwd.evaluate(np.array([18.0, a, b])).tobytes()
                == fwd.evaluate(np.array([18.0, b, a])).tobytes())
               for a, b in RandomStream(8, 0).normal((5, 2))]
    ok = gain_max and gain_equal and dep_order and all(swapped) and elapsed < 1800
    detail = ("gains " + ", ".join(f"{r.value:.3f}±{r.std_error:.3f}" for r in g)
              + "; dependence " + ", ".join(f"({i + 1},{j + 1}) {r.value:.3f}±{r.std_error:.3f}"
                                             for (i, j), r in zip(PAIRS, d))
              + f"; swap bitwise {all(swapped)}; {elapsed / 60:.1f} min")
    assert record(8, ok, detail)


def random_linear_model(rng):
    m = int(rng.integers(1, 5))
    n = int(rng.integers(1, 7))
    A = rng.normal(size=(n, m)) * 10 ** rng.uniform(-1, 1, size=m)
    noise = 10 ** rng.uniform(-2, 1)
    prior = PriorSpec(tuple(f"t{i}" for i in range(m)), rng.normal(size=m),
                      10 ** rng.uniform(-1, 1, size=m))
    return StatisticalModel(LinearForward(A), None, noise * np.eye(n)), prior


def test_criterion_09_non_negativity():
    rng = np.random.default_rng(2024)
    worst, count = math.inf, 0
    for k in range(50):
        model, prior = random_linear_model(rng)
        cfg = EstimatorConfig(n_outer=500, n_inner=10, seed=k)
        results = information_gains(model, prior, range(prior.dim), cfg)
        pairs = [(i, j) for i in range(prior.dim) for j in range(i + 1, prior.dim)]
        if pairs:
            results += pairwise_dependences(model, prior, pairs, cfg)
        for r in results:
            count += 1
            scale = r.std_error if r.std_error > 0 else 1e-300
            worst = min(worst, r.value / scale)
    ok = worst >= -3
    assert record(9, ok, f"{count} estimates over 50 models, min value/std_error {worst:.2f}")


def test_criterion_10_determinism(tmp_path):
    import json

    cfg = {
        "model": {"name": "linear_gaussian", "settings": {"m": 3, "n": 30}},
        "estimator": {"n_outer": 300, "n_inner": 8, "seed": 3, "workers": 1},
        "sobol": {"n_samples": 512},
        "convergence": {"replicates": 3, "n_outer_values": [20, 40], "n_inner_fixed": 5,
                        "n_inner_values": [2, 5], "n_outer_fixed": 40},
        "posterior": {"n_steps": 3000, "adaptation_start": 300},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    mismatched = []
    for command in sorted(COMMANDS):
        for run in ("a", "b"):
            assert main([command, "--config", str(path), "--out", str(tmp_path / run)]) == 0
    for csv_file in sorted((tmp_path / "a").glob("*.csv")):
        if csv_file.read_bytes() != (tmp_path / "b" / csv_file.name).read_bytes():
            mismatched.append(csv_file.name)
    n_files = len(list((tmp_path / "a").glob("*.csv")))
    ok = not mismatched and n_files >= 8
    assert record(10, ok, f"{n_files} CSV files compared, mismatched: {mismatched or 'none'}")


if __name__ == "__main__":
    import sys

    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    print()
    for number in sorted(RESULTS):
        print(RESULTS[number])
    sys.exit(code)

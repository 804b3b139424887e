"""Command-line front end: ``identifiability <command> --config PATH``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict
from itertools import combinations
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config, parse_config
from .errors import ConfigError, IdentifiabilityError, InvalidArgumentError, UnsupportedModelError
from .estimators import EstimatorConfig, information_gains, pairwise_dependences
from .mathcore import RandomStream
from .mcmc import ChainConfig, adaptive_metropolis, log_posterior, posterior_prediction
from .model import PriorSpec, build_model, sample_observation
from .sobol import first_order_indices
from .validation import bias_sweep, loglog_slope, oracle_check, variance_sweep

log = logging.getLogger("identifiability")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

# reference parameters for synthetic posterior data when the config gives none
REFERENCE_THETA = {"methane_2step": [18.0, 0.0, 0.0]}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# setup


def _setup(cfg: RunConfig):
    try:
        model, prior = build_model(cfg.model.name, cfg.model.settings.model_dump())
    except (InvalidArgumentError, ArithmeticError, KeyError) as exc:
        raise ConfigError(f"model: {exc}") from exc
    if cfg.prior is not None:
        names = tuple(model.param_names)
        if set(cfg.prior) != set(names):
            raise ConfigError(
                f"prior: parameters {sorted(cfg.prior)} do not match model parameters {list(names)}"
            )
        prior = PriorSpec(names, [cfg.prior[n].mean for n in names],
                          [cfg.prior[n].variance for n in names])
    return model, prior


def _estimator(cfg: RunConfig) -> EstimatorConfig:
    e = cfg.estimator
    return EstimatorConfig(n_outer=e.n_outer, n_inner=e.n_inner, proposal=e.proposal,
                           proposal_scale=e.proposal_scale,
                           seed=e.seed, use_importance_sampling=e.use_importance_sampling,
                           n_inner_pair=e.n_inner_pair, workers=e.workers)


# --------------------------------------------------------------------------
# commands


def cmd_identify(cfg: RunConfig, out: Path) -> list[Path]:
    model, prior = _setup(cfg)
    est = _estimator(cfg)
    t0 = time.perf_counter()
    results = information_gains(model, prior, range(prior.dim), est)
    elapsed = time.perf_counter() - t0
    rows = [(name, r.value, r.std_error, r.n_outer_used, est.n_inner, r.n_clamped)
            for name, r in zip(prior.names, results)]
    header = ("parameter", "gain", "std_error", "n_outer", "n_inner", "n_clamped")
    write_csv(out / "gains.csv", header, rows)
    write_json(out / "gains.json", {
        "model": cfg.model.name,
        "gains": [dict(zip(header, r)) for r in rows],
        "seconds": elapsed,
    })
    return [out / "gains.csv", out / "gains.json"]


def cmd_depend(cfg: RunConfig, out: Path) -> list[Path]:
    model, prior = _setup(cfg)
    est = _estimator(cfg)
    pairs = list(combinations(range(prior.dim), 2))
    t0 = time.perf_counter()
    results = pairwise_dependences(model, prior, pairs, est) if pairs else []
    elapsed = time.perf_counter() - t0
    rows = [(i, j, prior.names[i], prior.names[j], r.value, r.std_error, r.n_outer_used,
             est.n_inner, est.pair_order, r.n_clamped)
            for (i, j), r in zip(pairs, results)]
    header = ("i", "j", "parameter_i", "parameter_j", "dependence", "std_error", "n_outer",
              "n_inner", "n_inner_pair", "n_clamped")
    write_csv(out / "dependence.csv", header, rows)
    write_json(out / "dependence.json", {
        "model": cfg.model.name,
        "dependence": [dict(zip(header, r)) for r in rows],
        "seconds": elapsed,
    })
    return [out / "dependence.csv", out / "dependence.json"]


def cmd_sobol(cfg: RunConfig, out: Path) -> list[Path]:
    model, prior = _setup(cfg)
    res = first_order_indices(model, prior, cfg.sobol.n_samples, cfg.estimator.seed)
    rows = [(n, s, e, res.n_samples) for n, s, e in zip(res.param_names, res.indices,
                                                        res.std_errors)]
    write_csv(out / "sobol.csv", ("parameter", "first_order", "std_error", "n_samples"), rows)
    return [out / "sobol.csv"]


_SWEEP_HEADER = ("parameter", "n_outer", "n_inner", "replicates", "exact", "mean_estimate",
                 "bias", "mean_abs_error", "std_dev", "degenerate")


def _sweep_rows(points):
    return [tuple(asdict(p).values()) for p in points]


def cmd_convergence(cfg: RunConfig, out: Path) -> list[Path]:
    model, prior = _setup(cfg)
    est = _estimator(cfg)
    c = cfg.convergence
    var_pts = variance_sweep(model, prior, est, c.n_outer_values, c.n_inner_fixed, c.replicates)
    bias_pts = bias_sweep(model, prior, est, c.n_inner_values, c.n_outer_fixed, c.replicates)
    write_csv(out / "variance_sweep.csv", _SWEEP_HEADER, _sweep_rows(var_pts))
    write_csv(out / "bias_sweep.csv", _SWEEP_HEADER, _sweep_rows(bias_pts))
    if c.replicates > 1 and len(set(c.n_outer_values)) > 1:
        for name in prior.names:
            pts = [p for p in var_pts if p.parameter == name]
            if all(p.std_dev > 0 for p in pts):
                log.info("variance slope for %s: %.3f", name,
                         loglog_slope([p.n_outer for p in pts], [p.std_dev for p in pts]))
    return [out / "variance_sweep.csv", out / "bias_sweep.csv"]


def cmd_oracle_check(cfg: RunConfig, out: Path) -> list[Path]:
    model, prior = _setup(cfg)
    rows = [
        (r.quantity, r.i, "" if r.j is None else r.j, r.exact, r.estimate, r.std_error,
         r.abs_error)
        for r in oracle_check(model, prior, _estimator(cfg))
    ]
    write_csv(out / "oracle_check.csv",
              ("quantity", "i", "j", "exact", "estimate", "std_error", "abs_error"), rows)
    return [out / "oracle_check.csv"]


def cmd_posterior(cfg: RunConfig, out: Path) -> list[Path]:
    model, prior = _setup(cfg)
    p = cfg.posterior
    m = prior.dim
    theta_ref = p.reference_theta
    if theta_ref is None:
        theta_ref = REFERENCE_THETA.get(cfg.model.name, list(np.arange(1.0, m + 1.0)))
    if len(theta_ref) != m:
        raise ConfigError(f"posterior.reference_theta: expected {m} values, got {len(theta_ref)}")
    y = sample_observation(model, np.asarray(theta_ref, float), RandomStream(p.data_seed, 0))
    chain_cfg = ChainConfig(n_steps=p.n_steps, burn_in=p.burn_in,
                            adaptation_start=p.adaptation_start,
                            initial_cov=p.initial_scale ** 2 * np.diag(prior.variances),
                            epsilon=p.epsilon, seed=cfg.estimator.seed)
    chain = adaptive_metropolis(log_posterior(model, prior, y), prior.means, chain_cfg,
                                prior.names)
    chain.to_csv(out / "chain.csv")
    pred = posterior_prediction(model, chain, p.max_prediction_samples)
    rows = [(k, y[k], pred.mean[k], pred.lower[k], pred.upper[k]) for k in range(len(y))]
    write_csv(out / "prediction.csv", ("output", "observed", "mean", "lower_2.5", "upper_97.5"),
              rows)
    write_json(out / "posterior.json", {
        "reference_theta": list(map(float, theta_ref)),
        "acceptance_rate": chain.acceptance_rate,
        "burn_in": chain.burn_in,
        "mean": chain.mean().tolist(),
        "covariance": np.atleast_2d(chain.covariance()).tolist(),
        "prediction_samples": pred.n_samples,
    })
    return [out / "chain.csv", out / "prediction.csv", out / "posterior.json"]


COMMANDS = {
    "identify": cmd_identify,
    "depend": cmd_depend,
    "sobol": cmd_sobol,
    "convergence": cmd_convergence,
    "posterior": cmd_posterior,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="identifiability",
                                     description="Information-theoretic parameter identifiability")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="JSON config file, or the name of a bundled config")
        p.add_argument("--seed", type=int, help="override estimator.seed")
        p.add_argument("--workers", type=int, help="override estimator.workers")
        p.add_argument("--out", help="output directory (overrides output_dir)")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    est = {}
    if args.seed is not None:
        est["seed"] = args.seed
    if args.workers is not None:
        est["workers"] = args.workers
    if est:
        data = cfg.model_dump()
        data["estimator"].update(est)
        cfg = parse_config(data)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        out = Path(args.out or cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = COMMANDS[args.command](cfg, out)
    except (ConfigError, UnsupportedModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IdentifiabilityError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: simulate, regime, cov, scan, verify, pointprocess. Each reads
a JSON experiment config, writes its artifacts into a hash-suffixed run
directory under --out (so a changed config can never overwrite a previous
run), and embeds a provenance block in every output.

Exit codes: 0 success; 1 verdict mismatch; 2 config/schema error;
3 runtime failure (memory budget, overflow); 4 boundary regime;
5 inconclusive cell in strict mode.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .asymptotics import BoundaryRegimeError, NormalizingSequence
from .config import ConfigError, ExperimentConfig, load_config
from .estimators import extract_point_pattern, sample_cov
from .gaussian import MemoryBudgetError
from .model import simulate_sv
from .verify import (
    dichotomy_scan,
    no_common_jump_test,
    poisson_diagnostics,
    predict_verdict,
    run_plan,
)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_SCHEMA = 2
EXIT_RUNTIME = 3
EXIT_BOUNDARY = 4
EXIT_INCONCLUSIVE = 5


def _run_dir(cfg: ExperimentConfig, out_root: str) -> str:
    path = os.path.join(out_root, f"{cfg.name}-{cfg.hash()[:8]}")
    os.makedirs(path, exist_ok=True)
    return path


def _write_provenance(cfg: ExperimentConfig, run_dir: str, extra: dict | None = None) -> None:
    block = {"config_hash": cfg.hash(), "version": __version__, "config": cfg.raw}
    if extra:
        block.update(extra)
    with open(os.path.join(run_dir, "provenance.json"), "w") as fh:
        json.dump(block, fh, indent=2)


def _write_json(run_dir: str, name: str, payload: dict, cfg: ExperimentConfig) -> str:
    payload = {"config_hash": cfg.hash(), "version": __version__, **payload}
    path = os.path.join(run_dir, name)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
    return path


def cmd_simulate(cfg: ExperimentConfig, run_dir: str, args) -> int:
    n = int(cfg.simulate_args.get("n", 1000))
    synthesis = cfg.simulate_args.get("synthesis", "ma")
    path = simulate_sv(cfg.model, n, cfg.seed, synthesis=synthesis)
    path.to_csv(os.path.join(run_dir, "path.csv"))
    path.to_binary(os.path.join(run_dir, "path.bin"))
    _write_json(
        run_dir,
        "summary.json",
        {
            "n": n,
            "synthesis": synthesis,
            "seed": cfg.seed,
            "y_abs_max": float(np.max(np.abs(path.y))),
            "y_mean": float(np.mean(path.y)),
            "sigma_mean": float(np.mean(path.sigma)),
        },
        cfg,
    )
    return EXIT_OK


def cmd_regime(cfg: ExperimentConfig, run_dir: str, args) -> int:
    if cfg.statistic is None:
        raise ConfigError("regime needs a [statistic] section")
    verdict = predict_verdict(cfg.model, cfg.statistic)
    _write_json(run_dir, "regime.json", verdict.to_dict(), cfg)
    print(json.dumps(verdict.to_dict(), indent=2))
    return EXIT_OK


def cmd_cov(cfg: ExperimentConfig, run_dir: str, args) -> int:
    if cfg.statistic is None:
        raise ConfigError("cov needs a [statistic] section")
    n = int(cfg.simulate_args.get("n", 2**14))
    stat = cfg.statistic
    path = simulate_sv(cfg.model, n + stat.lag, cfg.seed)
    report = sample_cov(path, stat.p, stat.lag)
    report.to_csv(os.path.join(run_dir, "sample_cov.csv"))
    _write_json(
        run_dir,
        "sample_cov.json",
        {
            "p": report.p,
            "lags": report.lags.tolist(),
            "gamma_hat": report.gamma_hat.tolist(),
            "gamma_true": report.gamma_true.tolist() if report.gamma_true is not None else None,
            "mean_bar": report.mean_bar,
            "n": report.n,
        },
        cfg,
    )
    return EXIT_OK


def cmd_scan(cfg: ExperimentConfig, run_dir: str, args) -> int:
    sargs = cfg.scan_args
    rows = dichotomy_scan(
        cfg.model,
        p=float(sargs.get("p", 1.0)),
        h_grid=sargs.get("h_grid", [0.6, 0.75, 0.9]),
        statistic=sargs.get("statistic", "autocov"),
        lag=int(sargs.get("lag", 1)),
        replicates=int(sargs.get("replicates", 0)),
        n_grid=tuple(sargs.get("n_grid", (2**12, 2**14, 2**16))),
        master_seed=cfg.seed,
        workers=args.workers,
    )
    with open(os.path.join(run_dir, "scan.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=sorted({k for r in rows for k in r}))
        writer.writeheader()
        writer.writerows(rows)
    _write_json(run_dir, "scan.json", {"rows": rows}, cfg)
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, run_dir: str, args) -> int:
    plan = cfg.build_plan()
    summary = run_plan(plan, workers=args.workers)
    _write_json(run_dir, "mcsummary.json", summary.to_dict(), cfg)
    for n, vals in summary.statistics_by_n.items():
        np.savetxt(
            os.path.join(run_dir, f"replicates_n{n}.csv"),
            vals,
            delimiter=",",
            header="statistic",
            comments="",
        )
    line = (
        f"regime={summary.verdict.regime} fitted={summary.fitted_exponent:.4f} "
        f"predicted={summary.expected_slope:.4f} r2={summary.r_squared:.4f} "
        f"p={summary.distance_p} match={summary.verdict_match}"
    )
    print(line)
    if summary.verdict_match is None:
        return EXIT_INCONCLUSIVE if (args.strict or cfg.strict) else EXIT_OK
    return EXIT_OK if summary.verdict_match else EXIT_MISMATCH


def cmd_pointprocess(cfg: ExperimentConfig, run_dir: str, args) -> int:
    pargs = cfg.pointprocess_args
    n_grid = [int(v) for v in pargs.get("n_grid", (2**12, 2**14, 2**16))]
    reps = int(pargs.get("replicates", 50))
    h = int(pargs.get("h", 2))
    threshold = float(pargs.get("threshold", 1.0))
    factor = int(pargs.get("norm_nsim_factor", 50))
    a_seq = NormalizingSequence(cfg.model, "marginal", mc_factor=factor)
    b_seq = NormalizingSequence(cfg.model, "product", mc_factor=factor)
    patterns_by_n = {}
    for n in n_grid:
        a_n, b_n = a_seq(n), b_seq(n)
        pats = []
        for rep in range(reps):
            seed = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(n, rep))
            path = simulate_sv(cfg.model, n + h, seed)
            pats.append(extract_point_pattern(path, a_n, b_n, h, threshold))
        patterns_by_n[n] = pats
    n_max = n_grid[-1]
    patterns_by_n[n_max][0].to_csv(os.path.join(run_dir, "pattern_example.csv"))
    boxes = [(0.0, 0.5, 0, threshold), (0.5, 1.0, 0, threshold)]
    diag = poisson_diagnostics(patterns_by_n[n_max], boxes)
    jumps = no_common_jump_test(patterns_by_n)
    _write_json(run_dir, "pointprocess.json", {"poisson": diag, "common_jumps": jumps}, cfg)
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "regime": cmd_regime,
    "cov": cmd_cov,
    "scan": cmd_scan,
    "verify": cmd_verify,
    "pointprocess": cmd_pointprocess,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lmsvlab",
        description="heavy-tailed stochastic volatility simulation and verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", default="runs", help="output root directory")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--strict", action="store_true")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.raw["seed"] = args.seed
    run_dir = _run_dir(cfg, args.out)
    _write_provenance(cfg, run_dir)
    try:
        return _COMMANDS[args.command](cfg, run_dir, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except BoundaryRegimeError as exc:
        print(f"boundary regime: {exc}", file=sys.stderr)
        return EXIT_BOUNDARY
    except (MemoryBudgetError, RuntimeError, OverflowError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

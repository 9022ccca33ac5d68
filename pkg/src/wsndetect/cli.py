"""``wsndetect`` command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 numerical
failure.  Failures print a single JSON line to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .asymptotics import SaddlepointError
from .config import ConfigError, ExperimentConfig, load_config, parse_phi_grid
from .consensus import TransmissionLedger, consensus_run
from .detectors import StatisticKind, local_terms
from .estimators import DegenerateDataError
from .experiments import (
    deflection_sweep,
    energy_report,
    network_for_config,
    run_croc_experiment,
    theoretical_croc_table,
    validate_estimator_asymptotics,
    write_table,
)
from .model import Hypothesis, draw_samples
from .network import NetworkGenerationError, generate_geometric_network, write_network

EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 1, 2, 3


def _output_name(experiment: str, statistic: str, seed) -> str:
    return f"{experiment}_{statistic}_{seed}.csv"


def _write(directory: Path, name: str, text: str) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / name
    path.write_text(text)
    print(path)
    return path


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig().validated()
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["base_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        updates["n_trials"] = args.trials
    if getattr(args, "out", None) is not None:
        updates["directory"] = Path(args.out)
    return cfg.with_updates(**updates) if updates else cfg


def _token(kind: StatisticKind) -> str:
    # e.g. glr-known-c; hyphens keep the underscore-separated name parseable
    return StatisticKind(kind).value.lower().replace("_", "-")


# -- subcommands ----------------------------------------------------------------


def cmd_gen_network(args) -> int:
    if args.edges < args.n - 1 or args.edges > args.n * (args.n - 1) // 2:
        raise ConfigError(f"--edges {args.edges} impossible for a connected graph on {args.n} nodes")
    net = generate_geometric_network(args.n, args.edges, args.side, args.seed)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_network(net, out)
    print(out)
    return 0


def cmd_croc(args) -> int:
    cfg = _load(args)
    tables = run_croc_experiment(cfg, threads=args.threads)
    for kind, table in tables.items():
        _write(cfg.directory, _output_name("croc", _token(kind), cfg.base_seed), table.to_csv())
        _write(cfg.directory, _output_name("asymptotic-croc", _token(kind), cfg.base_seed),
               theoretical_croc_table(cfg, kind))
    return 0


def cmd_asymptotic_croc(args) -> int:
    cfg = _load(args)
    for family in cfg.statistics:
        kind = StatisticKind.for_model(family, cfg.cov_known)
        _write(cfg.directory, _output_name("asymptotic-croc", _token(kind), cfg.base_seed),
               theoretical_croc_table(cfg, kind))
    return 0


def cmd_deflection(args) -> int:
    cfg = _load(args)
    rhos = cfg.deflection_rho if args.rho is None else tuple(args.rho)
    phis = parse_phi_grid(args.phis if args.phis is not None else cfg.deflection_phi)
    norm = cfg.deflection_norm if args.norm is None else args.norm
    table = deflection_sweep(rhos, phis, norm, cfg.L)
    table.metadata["seed"] = cfg.base_seed
    _write(cfg.directory, _output_name("deflection", "ratio", cfg.base_seed), table.to_csv())
    return 0


def cmd_consensus_trace(args) -> int:
    """Per-iteration spatial-sum estimate of ``2 sum_k T_k`` at every node, for one H1 trial."""
    cfg = _load(args)
    n_it = cfg.n_it if args.n_it is None else args.n_it
    model = cfg.model()
    net = network_for_config(cfg)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.base_seed, 0, 1]))
    z = draw_samples(model, Hypothesis.H1, cfg.L, rng)
    null = model.null
    terms = 2.0 * local_terms(z, null.theta0, null.variances if null.cov_known else None)
    ledger = TransmissionLedger(net.n_nodes)
    states = consensus_run(net.weights, terms, n_it, ledger) * net.n_nodes
    exact = float(terms.sum())
    header = ["iteration"] + [f"node_{k}" for k in range(net.n_nodes)] + ["max_rel_error"]
    rows = [[t, *row, float(np.max(np.abs(row - exact)) / abs(exact))] for t, row in enumerate(states)]
    meta = {"seed": cfg.base_seed, "network": net.digest(), "n_it": n_it, "exact_sum": exact,
            "broadcasts": ledger.total_broadcasts}
    _write(cfg.directory, _output_name("consensus-trace", "lmp", cfg.base_seed), write_table(header, rows, meta))
    return 0


def cmd_energy(args) -> int:
    report = energy_report(args.n, args.n_it, "lmp", glr_constant=args.glr_constant)
    text = f"# seed=none\n{report.to_text()}"
    if args.output:
        Path(args.output).write_text(text)
        print(args.output)
    else:
        sys.stdout.write(text)
    return 0


def cmd_validate_estimator(args) -> int:
    cfg = _load(args)
    report = validate_estimator_asymptotics(cfg.model(), cfg.L, cfg.n_trials, cfg.base_seed)
    keys = ("L", "n_trials", "seed", "max_rel_diag_error", "max_abs_offdiag_error")
    sys.stdout.write("".join(f"{k}={report[k]!r}\n" for k in keys))
    return 0


# -- parser ---------------------------------------------------------------------


def _config_args(p, seed=True, trials=False):
    p.add_argument("--config", help="key=value experiment config")
    p.add_argument("--out", help="output directory (overrides output.directory)")
    if seed:
        p.add_argument("--seed", type=int, help="Monte Carlo base seed (overrides mc.base_seed)")
    if trials:
        p.add_argument("--trials", type=int, help="trials per hypothesis (overrides mc.n_trials)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsndetect", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for Monte Carlo (output does not depend on it)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-network", help="random geometric sensor network")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--edges", type=int, default=20)
    p.add_argument("--side", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--output", "-o", default="network.txt")
    p.set_defaults(func=cmd_gen_network)

    p = sub.add_parser("croc", help="Monte Carlo CROC curves joined with theory")
    _config_args(p, trials=True)
    p.set_defaults(func=cmd_croc)

    p = sub.add_parser("asymptotic-croc", help="theoretical CROC curves only")
    _config_args(p)
    p.set_defaults(func=cmd_asymptotic_croc)

    p = sub.add_parser("deflection", help="two-sensor deflection ratio sweep")
    _config_args(p)
    p.add_argument("--rho", type=float, nargs="+")
    p.add_argument("--phis", help="start:stop:step in degrees, stop excluded")
    p.add_argument("--norm", type=float)
    p.set_defaults(func=cmd_deflection)

    p = sub.add_parser("consensus-trace", help="per-iteration spatial sum at every node")
    _config_args(p)
    p.add_argument("--n-it", type=int)
    p.set_defaults(func=cmd_consensus_trace)

    p = sub.add_parser("energy", help="broadcast counts of L-MP versus GLR")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--n-it", type=int, default=20)
    p.add_argument("--glr-constant", type=float, default=1.0)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("validate-estimator", help="local MLE covariance versus C/L")
    _config_args(p, trials=True)
    p.set_defaults(func=cmd_validate_estimator)
    return parser


def _fail(code: int, kind: str, exc: BaseException) -> int:
    msg = str(exc).replace("\n", " ")
    print(json.dumps({"error": kind, "code": code, "type": type(exc).__name__, "message": msg}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        return _fail(EXIT_CONFIG, "config", ValueError("--threads must be >= 1"))
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    except OSError as exc:
        return _fail(EXIT_IO, "io", exc)
    except (NetworkGenerationError, DegenerateDataError, SaddlepointError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail(EXIT_NUMERIC, "numeric", exc)
    except ValueError as exc:
        return _fail(EXIT_CONFIG, "config", exc)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands: ``dynamics``, ``quantifiers``, ``violation``, ``dephasing-demo``
and ``convergence``.  Each reads an optional INI configuration file, applies
flag overrides, runs the corresponding experiment and writes one CSV file
into the output directory.

Exit codes: 0 on success, 1 on configuration errors (bad flags, missing or
invalid config file), 2 when a numerical identity fails its configured
tolerance during a run.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ExperimentConfig, Tolerances, load_config
from .experiments import (
    ToleranceError,
    run_convergence,
    run_dephasing_demo,
    run_dynamics,
    run_quantifiers,
    run_violation,
)

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttmemory",
        description="Transfer-tensor analysis of memory in monitored spin-boson dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, default=None, help="INI configuration file")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument(
            "--delta",
            type=float,
            action="append",
            default=None,
            help="time spacing between measurements (repeatable)",
        )
        p.add_argument(
            "--lambda",
            dest="lambdas",
            type=float,
            action="append",
            default=None,
            help="measurement strength in [0, 1] (repeatable)",
        )
        p.add_argument(
            "--branch-mode",
            choices=("average", "all-plus", "per-branch"),
            default=None,
            help="how conditioned quantities are reported over outcome records",
        )
        p.add_argument(
            "--dk-paper-literal",
            action="store_true",
            default=None,
            help="use the 1/(k-2) prefactor for the multi-step quantifier (k >= 3)",
        )
        p.add_argument(
            "--norm",
            choices=("frobenius", "spectral"),
            default=None,
            help="matrix norm used for quantifiers and violations",
        )
        return p

    add_common(sub.add_parser("dynamics", help="monitored spin trajectories"))
    add_common(sub.add_parser("quantifiers", help="transfer-tensor memory quantifiers"))
    add_common(sub.add_parser("violation", help="one-step-composability violation"))
    add_common(sub.add_parser("dephasing-demo", help="analytic dephasing counterexample"))
    add_common(sub.add_parser("convergence", help="oscillator-truncation convergence report"))
    return parser


def _load_effective_config(args) -> ExperimentConfig:
    if args.config is not None:
        if not Path(args.config).is_file():
            raise FileNotFoundError(f"config file not found: {args.config}")
        config = load_config(args.config)
    else:
        config = ExperimentConfig()

    overrides = {}
    if args.delta:
        overrides["deltas"] = tuple(args.delta)
    if args.lambdas:
        overrides["lambdas"] = tuple(args.lambdas)
    if args.branch_mode:
        overrides["branch_mode"] = args.branch_mode
    if args.dk_paper_literal:
        overrides["dk_paper_literal"] = True
    if args.norm:
        overrides["norm"] = args.norm
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    if overrides:
        config = _replace_config(config, overrides)
    return config


def _replace_config(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    kwargs = {
        "omegas": config.omegas,
        "couplings": config.couplings,
        "d_osc": config.d_osc,
        "spin_init": config.spin_init,
        "deltas": config.deltas,
        "num_steps": config.num_steps,
        "substeps": config.substeps,
        "lambdas": config.lambdas,
        "instrument": config.instrument,
        "norm": config.norm,
        "dk_paper_literal": config.dk_paper_literal,
        "branch_mode": config.branch_mode,
        "violation_full_grid": config.violation_full_grid,
        "tolerances": config.tolerances,
        "out_dir": config.out_dir,
    }
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


def _print_dephasing_text(table) -> None:
    header = f"{'case':<24}{'c1':>12}{'c2':>12}{'E21 CPTP':>10}{'min eig':>14}{'||T20||':>12}"
    print(header)
    print("-" * len(header))
    for row in table.rows:
        case, c1r, c1i, c2r, c2i, cptp, mineig, t20 = row
        c1 = complex(c1r, c1i)
        c2 = complex(c2r, c2i)
        print(
            f"{case:<24}{c1.real:>12.6g}{c2.real:>12.6g}"
            f"{'yes' if cptp else 'no':>10}{mineig:>14.3e}{t20:>12.6g}"
        )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage; fold into the config-error code
        return 1 if exc.code not in (0, None) else 0

    try:
        config = _load_effective_config(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_dir = Path(config.out_dir)
    try:
        if args.command == "dynamics":
            table = run_dynamics(config)
            path = table.write_csv(out_dir / "dynamics.csv")
        elif args.command == "quantifiers":
            table = run_quantifiers(config)
            path = table.write_csv(out_dir / "quantifiers.csv")
        elif args.command == "violation":
            delta = config.deltas[0] if args.delta else None
            table = run_violation(config, delta=delta)
            path = table.write_csv(out_dir / "violation.csv")
        elif args.command == "dephasing-demo":
            table = run_dephasing_demo(config if args.config else None)
            _print_dephasing_text(table)
            path = table.write_csv(out_dir / "dephasing_demo.csv")
        elif args.command == "convergence":
            table = run_convergence(config)
            path = table.write_csv(out_dir / "convergence.csv")
        else:  # pragma: no cover - argparse enforces the choices
            print(f"error: unknown command {args.command}", file=sys.stderr)
            return 1
    except ToleranceError as exc:
        print(f"numerical tolerance failure: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    print(f"wrote {path} ({len(table.rows)} rows, fingerprint {table.fingerprint or 'n/a'})")
    return 0


if __name__ == "__main__":
    sys.exit(main())

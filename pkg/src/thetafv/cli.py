"""Command-line batch runner.

    thetafv run --config run.json --out-dir out/
    thetafv sweep --config run.json --param controller.cfl --values 0.5,0.975,1.75 --out-dir sweep/
    thetafv profile --config run.json --out initial.csv [--reference]

The exit status of ``run`` encodes the outcome (see ``EXIT_CODES``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .config import ConfigError, RunConfig, load_config, with_override
from .driver import RunResult, run_solver
from .io import write_profile_csv
from .problems.base import NoReferenceError
from .stepping import Outcome

log = logging.getLogger("thetafv")

EXIT_CODES = {
    Outcome.CONVERGED: 0,
    Outcome.COMPLETED: 0,
    Outcome.STAGNATED: 2,
    Outcome.DIVERGED: 3,
    Outcome.BUDGET_EXHAUSTED: 4,
}
# usage, configuration and output-path errors
EXIT_CONFIG_ERROR = 1
EXIT_IO_ERROR = EXIT_CONFIG_ERROR

SUMMARY_COLUMNS = ("value", "outcome", "iterations", "final_residual", "l2_error")


def l2_error(config: RunConfig, result: RunResult) -> float | None:
    """RMS deviation from the analytic reference, or ``None`` if there is none."""
    problem = config.build_problem()
    if not problem.comparable_reference:
        return None
    grid = config.build_grid()
    t = result.state.time if problem.time_dependent else None
    try:
        ref = problem.analytic_reference(grid, t)
    except NoReferenceError:
        return None
    return float(np.sqrt(np.mean((result.q - ref) ** 2)))


def execute(config: RunConfig, out_dir: Path | None = None) -> RunResult:
    """Run one configuration and write its History and final profile."""
    out = Path(out_dir) if out_dir is not None else config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    problem = config.build_problem()
    grid = config.build_grid()
    result = run_solver(problem, grid, config.scheme, config.controller, config.options)
    result.history.write_csv(out / config.output["history"])
    write_profile_csv(out / config.output["profile"], grid, result.q, problem.variable_names)
    return result


def _report(result: RunResult) -> dict[str, Any]:
    return {
        "outcome": result.outcome.value,
        "iterations": result.iterations,
        "final_residual": result.final_residual,
        "wall_time": round(result.wall_time, 3),
    }


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG_ERROR
    try:
        result = execute(config, args.out_dir)
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_IO_ERROR
    print(json.dumps(_report(result)))
    return EXIT_CODES[result.outcome]


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def split_values(items: Sequence[str]) -> list[str]:
    """Accept ``0.5,1,2`` as well as ``0.5 1 2`` (or a mix)."""
    return [v.strip() for item in items for v in item.split(",") if v.strip()]


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _slug(value: Any) -> str:
    return "".join(c if c.isalnum() or c in ".-_" else "_" for c in str(value))


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        configs = [(v, with_override(base, args.param, _parse_value(v))) for v in split_values(args.values)]
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG_ERROR

    out = Path(args.out_dir) if args.out_dir else Path(base.get("output.dir", "."))
    name = args.param.rsplit(".", 1)[-1]
    rows = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for raw, config in configs:
            result = execute(config, out / f"{name}={_slug(raw)}")
            err = l2_error(config, result)
            rows.append((raw, result.outcome.value, result.iterations, result.final_residual, err))
            log.info("%s=%s: %s after %d iterations", args.param, raw, result.outcome.value, result.iterations)
        with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SUMMARY_COLUMNS)
            for row in rows:
                writer.writerow([_format_cell(v) for v in row])
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_IO_ERROR
    for raw, outcome, iterations, residual, err in rows:
        extra = "" if err is None or math.isnan(err) else f"  l2={err:.3e}"
        print(f"{args.param}={raw}: {outcome} ({iterations} iterations, residual {residual:.3e}){extra}")
    return 0


def cmd_profile(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG_ERROR
    problem = config.build_problem()
    grid = config.build_grid()
    if args.reference:
        try:
            q = problem.analytic_reference(grid, args.time)
        except NoReferenceError as exc:
            log.error("%s", exc)
            return EXIT_CONFIG_ERROR
    else:
        q = problem.initial_state(grid)
    try:
        write_profile_csv(args.out, grid, q, problem.variable_names)
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_IO_ERROR
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thetafv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configuration")
    p_run.add_argument("--config", required=True, help="JSON run configuration")
    p_run.add_argument("--out-dir", help="output directory (default: output.dir from the config)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run one configuration per parameter value")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", required=True, help="dotted key to vary, e.g. controller.cfl")
    p_sweep.add_argument("--values", required=True, nargs="+", help="comma- or space-separated values, parsed as JSON when possible")
    p_sweep.add_argument("--out-dir")
    p_sweep.set_defaults(func=cmd_sweep)

    p_prof = sub.add_parser("profile", help="export the initial or reference profile")
    p_prof.add_argument("--config", required=True)
    p_prof.add_argument("--out", required=True)
    p_prof.add_argument("--reference", action="store_true", help="export the analytic reference instead")
    p_prof.add_argument("--time", type=float, default=None, help="reference time (time-dependent problems)")
    p_prof.set_defaults(func=cmd_profile)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

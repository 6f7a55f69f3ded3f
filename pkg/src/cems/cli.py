"""Command line front end.

Subcommands: ``validate``, ``solve``, ``compare``, ``settle``, ``bench``,
``export-lp``.  Exit codes: 0 success, 1 invalid input (config, flags or
schedule), 2 solver failure, 3 I/O failure.

Report files are written atomically (temp file, then rename) and are
byte-identical across repeated runs on the same inputs; wall-clock timings
go to a separate ``timings.json`` / ``bench_timings.csv`` so they never
perturb the deterministic outputs.
"""
from __future__ import annotations

import argparse
import io
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .domain import (
    CommunityConfig,
    ConfigError,
    InvalidConfigError,
    ValidationReport,
    load_community_config,
    validate_config,
)
from .milp import ModelBuildError, build_home_model, build_system_centric_model, write_lp
from .scenarios import (
    InfeasibleHomeError,
    bench_scaling,
    bench_timings_to_csv,
    bench_to_csv,
    bench_to_dict,
    compare,
    comparison_homes_to_csv,
    comparison_slots_to_csv,
    comparison_to_csv,
    comparison_to_dict,
    run_scenario,
)
from .solve import (
    FeasibilityReport,
    SolverError,
    SolverOptions,
    schedule_from_dict,
    schedule_to_dict,
)
from .trading import settlement_to_csv, settlement_to_dict, settle_day

_SCENARIOS = ("system", "prosumer", "none")
_PMID_CASES = ("case1", "case2", "case3")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # invalid flags are an input problem: report them under exit code 1
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cems", description="Day-ahead community energy scheduling")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="community config file")
        p.add_argument("--format", choices=("json", "csv-bundle"), default="json",
                       help="config file format (default json)")
        return p

    def solver_flags(p: argparse.ArgumentParser):
        p.add_argument("--gap", type=float, default=None, help="relative MIP gap")
        p.add_argument("--time-limit", type=float, default=None, help="solver time limit, seconds")
        p.add_argument("--jobs", type=int, default=1, help="parallel per-home solves")

    def override_flags(p: argparse.ArgumentParser):
        p.add_argument("--alpha", type=float, default=None, help="override sell price factor")
        p.add_argument("--pmid", choices=_PMID_CASES, default=None, help="override mid price policy")
        p.add_argument("--bigm", default=None, help="override big-M policy: derived or fixed:<value>")

    p = add("validate", "check a config and report every problem")
    p.set_defaults(func=_cmd_validate)

    p = add("solve", "schedule one scenario and write schedule/settlement/feasibility reports")
    p.add_argument("--scenario", choices=_SCENARIOS, default="system")
    override_flags(p)
    solver_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_solve)

    p = add("compare", "run all three scenarios and tabulate them")
    override_flags(p)
    solver_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_compare)

    p = add("settle", "re-settle an existing schedule at the mid-market rate")
    p.add_argument("--schedule", required=True, help="schedule.json written by solve")
    override_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_settle)

    p = add("bench", "scaling benchmark over synthetic communities")
    p.add_argument("--sizes", default="10,50,100", help="comma-separated home counts")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--gap", type=float, default=1e-3, help="relative MIP gap")
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_bench)

    p = add("export-lp", "write a model in LP text format for an external solver")
    p.add_argument("--scenario", choices=("system", "prosumer"), default="system")
    p.add_argument("--home", default=None, help="home id (required with --scenario prosumer)")
    override_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_export_lp)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if getattr(args, "func", None) is None:
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvalidConfigError as exc:
        _print_report(exc.report)
        return 1
    except ConfigError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except ModelBuildError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except (SolverError, InfeasibleHomeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3


def console_main() -> None:  # pragma: no cover
    sys.exit(main())


# ---------------------------------------------------------------------------
# helpers


def _read_bytes(path: str) -> bytes:
    return Path(path).read_bytes()


def _load_config(args) -> CommunityConfig:
    config = load_community_config(_read_bytes(args.config), args.format)
    return _apply_overrides(config, args)


def _apply_overrides(config: CommunityConfig, args) -> CommunityConfig:
    changes = {}
    if getattr(args, "alpha", None) is not None:
        changes["alpha"] = args.alpha
    if getattr(args, "pmid", None) is not None:
        changes["mid_price_policy"] = args.pmid
    if getattr(args, "bigm", None) is not None:
        changes["big_m_policy"] = args.bigm
    if not changes:
        return config
    config = replace(config, **changes)
    report = validate_config(config)
    if report.errors:
        raise InvalidConfigError(report)
    return config


def _options(args) -> SolverOptions:
    kwargs = {}
    if getattr(args, "gap", None) is not None:
        kwargs["relative_mip_gap"] = args.gap
    if getattr(args, "time_limit", None) is not None:
        kwargs["time_limit"] = args.time_limit
    return SolverOptions(**kwargs)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def _write_json(path: Path, doc) -> None:
    _write_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, writer_fn, report) -> None:
    buf = io.StringIO()
    writer_fn(report, buf)
    _write_atomic(path, buf.getvalue())


def _feasibility_to_dict(report: FeasibilityReport) -> dict:
    def rows(items):
        return [
            {"family": v.family, "home": v.home, "slot": v.slot, "magnitude": v.magnitude}
            for v in items
        ]

    return {
        "violations": rows(report.violations),
        "warnings": rows(report.warnings),
        "max_violation": report.max_violation,
        "cost_recomputed": report.cost_recomputed,
        "cost_matches_solver": report.cost_matches_solver,
    }


def _print_report(report: ValidationReport) -> None:
    for path, message in report.errors:
        print(f"error: {path}: {message}", file=sys.stderr)
    for path, message in report.warnings:
        print(f"warning: {path}: {message}", file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_validate(args) -> int:
    config = load_community_config(_read_bytes(args.config), args.format)
    report = validate_config(config)
    _print_report(report)
    print(
        f"ok: {len(config.homes)} homes, {config.horizon_slots} slots, "
        f"{len(report.warnings)} warning(s)"
    )
    return 0


def _cmd_solve(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    result = run_scenario(args.scenario, config, _options(args), jobs=args.jobs)
    _write_json(out / "schedule.json", schedule_to_dict(result.schedule))
    _write_json(out / "settlement.json", settlement_to_dict(result.settlement))
    _write_csv(out / "settlement.csv", settlement_to_csv, result.settlement)
    _write_json(out / "feasibility.json", _feasibility_to_dict(result.feasibility))
    _write_json(
        out / "timings.json",
        {"build_time_s": result.build_time, "solve_time_s": result.solve_time},
    )
    print(
        f"{result.kind}: community cost {result.community_cost:.4f} cents, "
        f"status {result.solver_status}, {len(result.feasibility.violations)} violation(s)"
    )
    return 0


def _cmd_compare(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    options = _options(args)
    results = [run_scenario(kind, config, options, jobs=args.jobs) for kind in _SCENARIOS]
    report = compare(results)
    _write_json(out / "comparison.json", comparison_to_dict(report))
    _write_csv(out / "comparison.csv", comparison_to_csv, report)
    _write_csv(out / "comparison_homes.csv", comparison_homes_to_csv, report)
    _write_csv(out / "comparison_slots.csv", comparison_slots_to_csv, report)
    _write_json(
        out / "timings.json",
        {r.kind: {"build_time_s": r.build_time, "solve_time_s": r.solve_time} for r in results},
    )
    for kind in report.scenarios:
        print(f"{kind}: community cost {report.community_cost[kind]:.4f} cents")
    return 0


def _cmd_settle(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    try:
        doc = json.loads(_read_bytes(args.schedule))
        schedule = schedule_from_dict(doc, config)
    except (json.JSONDecodeError, ValueError) as exc:
        raise _UsageError(f"schedule {args.schedule}: {exc}") from None
    report = settle_day(schedule, config)
    _write_json(out / "settlement.json", settlement_to_dict(report))
    _write_csv(out / "settlement.csv", settlement_to_csv, report)
    print(f"settled: community cost {report.community_daily_cost:.4f} cents")
    return 0


def _cmd_bench(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise _UsageError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    if not sizes:
        raise _UsageError("--sizes is empty")
    options = SolverOptions(relative_mip_gap=args.gap, time_limit=args.time_limit)
    report = bench_scaling(sizes, args.seed, config, options)
    _write_csv(out / "bench.csv", bench_to_csv, report)
    _write_json(out / "bench.json", bench_to_dict(report))
    _write_csv(out / "bench_timings.csv", bench_timings_to_csv, report)
    for row in report.rows:
        print(
            f"n={row.n_homes}: status {row.status}, "
            f"{row.n_variables} vars, {row.n_binaries} binaries, "
            f"solve {row.solve_time:.2f}s"
        )
    return 0


def _cmd_export_lp(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    if args.scenario == "system":
        model = build_system_centric_model(config)
        name = "model.lp"
    else:
        if args.home is None:
            raise _UsageError("--scenario prosumer needs --home <id>")
        try:
            config.home(args.home)
        except KeyError:
            raise _UsageError(f"no home with id {args.home!r}") from None
        model = build_home_model(config, args.home)
        name = f"home_{args.home}.lp"
    buf = io.StringIO()
    write_lp(model, buf)
    _write_atomic(out / name, buf.getvalue())
    print(f"wrote {out / name}: {model.n_variables} variables, {model.n_constraints} constraints")
    return 0

"""Command-line front end: boundary calibration, data analysis, simulation.

Four subcommands share one configuration style: an optional flat
``key = value`` file (``#`` comments) whose values are overridden by
command-line flags.  Unknown keys are rejected.  Every run writes its
fully resolved configuration next to the output file (``<out>.meta.txt``)
so any result can be reproduced from its sidecar alone.

Exit status: 0 on success, 2 for configuration errors (bad keys, bad
values, malformed input files), 1 for runtime failures (calibration
breakdown, unwritable output).  Floats are written with ``repr`` so
parsing the CSV back recovers them bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .boundary import (
    SHAPES,
    CalibrationError,
    CriticalFunction,
    GridError,
    calibrate_levels,
)
from .core import (
    HypothesisFamily,
    SampleSchedule,
    StatisticPaths,
    parse_float_list,
    parse_int_list,
    parse_kv_text,
)
from .harness import (
    PROCEDURES,
    ScenarioSpec,
    SimulationSummary,
    run_scenario_parallel,
)
from .paulson import (
    PaulsonConfig,
    paulson_via_stepdown,
    run_paulson_direct,
    simulate_observations,
)
from .procedures import ProcedureVariant, run_multistage
from .trial import RngStream, ScenarioParams

WORKERS_ENV = "STEPDOWN_WORKERS"

_CONFIG_KEYS = {
    "boundary": {"schedule", "rho", "shape", "grid", "out"},
    "analyze": {"statistics", "boundary", "alpha", "variant", "family", "out"},
    "simulate": {
        "scenarios",
        "procedures",
        "schedule",
        "alpha",
        "shape",
        "reps",
        "seed",
        "grid",
        "workers",
        "continuity_correction",
        "out",
    },
    "paulson": {
        "thresholds",
        "delta",
        "critical_value",
        "theta",
        "reps",
        "seed",
        "horizon",
        "method",
        "out",
    },
}


def fmt(value: object) -> str:
    """Render a CSV field: floats via repr (round-trip exact)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _resolve(args: argparse.Namespace, subcommand: str) -> dict[str, str]:
    """Merge config-file values and flags; flags win; unknown keys rejected."""
    known = _CONFIG_KEYS[subcommand]
    resolved: dict[str, str] = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                entries = parse_kv_text(fh.read())
        except OSError as exc:
            raise ValueError(f"cannot read config file {args.config}: {exc}") from exc
        for key, value in entries.items():
            if key not in known:
                raise ValueError(
                    f"unknown config key {key!r} for subcommand {subcommand!r}"
                )
            resolved[key] = value
    for key in known:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = str(flag_value)
    return resolved


def _require(resolved: dict[str, str], key: str) -> str:
    if key not in resolved or resolved[key] == "":
        raise ValueError(f"missing required key {key!r}")
    return resolved[key]


def _parse_positive_int(resolved: dict[str, str], key: str, default: int | None = None) -> int:
    if key not in resolved:
        if default is None:
            raise ValueError(f"missing required key {key!r}")
        return default
    try:
        value = int(resolved[key])
    except ValueError:
        raise ValueError(f"key {key!r} must be an integer, got {resolved[key]!r}") from None
    if value < 1:
        raise ValueError(f"key {key!r} must be positive, got {value}")
    return value


def _parse_nonneg_int(resolved: dict[str, str], key: str, default: int) -> int:
    if key not in resolved:
        return default
    try:
        value = int(resolved[key])
    except ValueError:
        raise ValueError(f"key {key!r} must be an integer, got {resolved[key]!r}") from None
    if value < 0:
        raise ValueError(f"key {key!r} must be nonnegative, got {value}")
    return value


def _parse_float(resolved: dict[str, str], key: str, default: float | None = None) -> float:
    if key not in resolved:
        if default is None:
            raise ValueError(f"missing required key {key!r}")
        return default
    try:
        return float(resolved[key])
    except ValueError:
        raise ValueError(f"key {key!r} must be numeric, got {resolved[key]!r}") from None


def _parse_bool(resolved: dict[str, str], key: str, default: bool) -> bool:
    if key not in resolved:
        return default
    text = resolved[key].strip().lower()
    if text in ("true", "1", "yes", "on"):
        return True
    if text in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"key {key!r} must be a boolean, got {resolved[key]!r}")


def _write_rows(path: str, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _write_sidecar(out_path: str, subcommand: str, resolved: dict[str, str]) -> None:
    lines = [f"subcommand = {subcommand}"]
    lines.extend(f"{key} = {resolved[key]}" for key in sorted(resolved))
    with open(out_path + ".meta.txt", "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_scenarios(text: str) -> list[ScenarioParams]:
    """Parse scenario tokens like ``(0,0,.5) (0,.5,.75,.75)``.

    Each token carries mu1, mu2, p, and optionally the Gaussian
    correlation.
    """
    tokens = [tok for tok in text.replace("(", " (").split() if tok]
    params: list[ScenarioParams] = []
    for token in tokens:
        inner = token.strip()
        if not (inner.startswith("(") and inner.endswith(")")):
            raise ValueError(f"scenario token {token!r} must look like (mu1,mu2,p[,rho12])")
        fields = parse_float_list(inner[1:-1])
        if len(fields) == 3:
            params.append(ScenarioParams(*fields))
        elif len(fields) == 4:
            params.append(ScenarioParams(fields[0], fields[1], fields[2], fields[3]))
        else:
            raise ValueError(
                f"scenario token {token!r} needs 3 or 4 numbers, got {len(fields)}"
            )
    if not params:
        raise ValueError("no scenarios given")
    return params


def default_table_config() -> str:
    """Path-like handle to the bundled full-study configuration."""
    return str(resources.files("stepdown").joinpath("configs/table1.cfg"))


def _cmd_boundary(args: argparse.Namespace) -> int:
    resolved = _resolve(args, "boundary")
    schedule = SampleSchedule(parse_int_list(_require(resolved, "schedule")))
    levels = parse_float_list(_require(resolved, "rho"))
    shape = resolved.get("shape", "flat")
    if shape not in SHAPES:
        raise ValueError(f"key 'shape' must be one of {SHAPES}, got {shape!r}")
    grid = _parse_positive_int(resolved, "grid", 512)
    out = _require(resolved, "out")

    critical = calibrate_levels(schedule, levels, shape, grid_points=grid)
    rows = []
    for rho in levels:
        bound = critical.boundary(rho)
        for n, value in zip(schedule.analyses, bound):
            rows.append((n, float(rho), float(value), shape))
    _write_rows(out, ("n", "rho", "critical_value", "shape"), rows)
    resolved.setdefault("shape", shape)
    resolved.setdefault("grid", str(grid))
    _write_sidecar(out, "boundary", resolved)
    return 0


def _read_statistics_csv(path: str) -> tuple[StatisticPaths, tuple[str, ...]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["hypothesis", "n", "statistic"]:
                raise ValueError(
                    f"statistics file {path} must start with header 'hypothesis,n,statistic'"
                )
            rows = [row for row in reader if row]
    except OSError as exc:
        raise ValueError(f"cannot read statistics file {path}: {exc}") from exc

    order: list[str] = []
    cells: dict[tuple[str, int], float] = {}
    ns: set[int] = set()
    for row in rows:
        if len(row) != 3:
            raise ValueError(f"statistics row {row!r} must have 3 fields")
        label = row[0].strip()
        try:
            n = int(row[1])
            value = float(row[2])
        except ValueError:
            raise ValueError(f"bad statistics row {row!r}") from None
        if label not in order:
            order.append(label)
        if (label, n) in cells:
            raise ValueError(f"duplicate statistic for hypothesis {label!r} at n={n}")
        cells[(label, n)] = value
        ns.add(n)
    if not order:
        raise ValueError(f"statistics file {path} contains no data rows")
    analyses = tuple(sorted(ns))
    values = np.empty((len(order), len(analyses)))
    for i, label in enumerate(order):
        for j, n in enumerate(analyses):
            if (label, n) not in cells:
                raise ValueError(
                    f"statistics file {path} is missing hypothesis {label!r} at n={n}"
                )
            values[i, j] = cells[(label, n)]
    return StatisticPaths(analyses=analyses, values=values), tuple(order)


def _read_boundary_csv(path: str, analyses: tuple[int, ...]) -> CriticalFunction:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != [
                "n",
                "rho",
                "critical_value",
                "shape",
            ]:
                raise ValueError(
                    f"boundary file {path} must start with header 'n,rho,critical_value,shape'"
                )
            rows = [row for row in reader if row]
    except OSError as exc:
        raise ValueError(f"cannot read boundary file {path}: {exc}") from exc

    table: dict[float, dict[int, float]] = {}
    shapes = set()
    for row in rows:
        if len(row) != 4:
            raise ValueError(f"boundary row {row!r} must have 4 fields")
        try:
            n = int(row[0])
            rho = float(row[1])
            value = float(row[2])
        except ValueError:
            raise ValueError(f"bad boundary row {row!r}") from None
        table.setdefault(rho, {})[n] = value
        shapes.add(row[3].strip())
    if not table:
        raise ValueError(f"boundary file {path} contains no data rows")
    full: dict[float, tuple[float, ...]] = {}
    for rho, per_n in table.items():
        missing = [n for n in analyses if n not in per_n]
        if missing:
            raise ValueError(
                f"boundary file {path} lacks critical values at n={missing} for level {rho}"
            )
        full[rho] = tuple(per_n[n] for n in analyses)
    shape = shapes.pop() if len(shapes) == 1 else "custom"
    return CriticalFunction.from_table(analyses, full, shape=shape)


def _cmd_analyze(args: argparse.Namespace) -> int:
    resolved = _resolve(args, "analyze")
    paths, labels = _read_statistics_csv(_require(resolved, "statistics"))
    critical = _read_boundary_csv(_require(resolved, "boundary"), paths.analyses)
    alpha = _parse_float(resolved, "alpha", 0.05)
    variant_tag = resolved.get("variant", "holm")
    if variant_tag not in ("holm", "mult", "closed"):
        raise ValueError(
            f"key 'variant' must be one of ('holm', 'mult', 'closed'), got {variant_tag!r}"
        )
    if "family" in resolved:
        try:
            with open(resolved["family"], "r", encoding="utf-8") as fh:
                family = HypothesisFamily.from_text(fh.read())
        except OSError as exc:
            raise ValueError(f"cannot read family file {resolved['family']}: {exc}") from exc
        if family.k != paths.k:
            raise ValueError(
                f"family has {family.k} hypotheses but statistics cover {paths.k}"
            )
    else:
        family = HypothesisFamily.simple(paths.k, labels)

    schedule = SampleSchedule(paths.analyses)
    needed = {
        "holm": [alpha / m for m in range(1, family.k + 1)],
        "mult": [alpha / family.k],
        "closed": [alpha],
    }[variant_tag]
    for level in needed:
        try:
            critical.boundary(level)
        except KeyError:
            raise ValueError(
                f"boundary file lacks critical values for level {level!r}; "
                f"calibrate it with rho = {level!r}"
            ) from None

    result = run_multistage(
        paths, family, schedule, critical, alpha, ProcedureVariant(variant_tag)
    )
    out = _require(resolved, "out")
    rows = [
        (
            labels[i],
            result.decisions[i],
            result.decision_stage[i],
            result.endpoint_final_n[i],
        )
        for i in range(paths.k)
    ]
    _write_rows(out, ("hypothesis", "decision", "stage", "final_n"), rows)
    resolved.setdefault("alpha", fmt(alpha))
    resolved.setdefault("variant", variant_tag)
    _write_sidecar(out, "analyze", resolved)
    return 0


def _summary_row(summary: SimulationSummary) -> tuple[object, ...]:
    fwe = summary.fwe
    fwe_se = summary.fwe_se
    return (
        summary.spec.label,
        summary.spec.procedure,
        summary.em,
        summary.em_se,
        summary.p_reject(0),
        summary.p_reject_se(0),
        summary.p_reject(1),
        summary.p_reject_se(1),
        summary.p_reject(2),
        summary.p_reject_se(2),
        "NA" if fwe is None else fwe,
        "NA" if fwe_se is None else fwe_se,
        summary.replicates,
        summary.spec.master_seed,
    )


def _cmd_simulate(args: argparse.Namespace) -> int:
    resolved = _resolve(args, "simulate")
    scenarios = parse_scenarios(_require(resolved, "scenarios"))
    procedures_text = resolved.get("procedures", "MultH")
    procedures = tuple(tok.strip() for tok in procedures_text.split(",") if tok.strip())
    for proc in procedures:
        if proc not in PROCEDURES:
            raise ValueError(f"unknown procedure {proc!r}; expected one of {PROCEDURES}")
    schedule = SampleSchedule(parse_int_list(resolved.get("schedule", "26,29,35")))
    alpha = _parse_float(resolved, "alpha", 0.05)
    shape = resolved.get("shape", "flat")
    if shape not in SHAPES:
        raise ValueError(f"key 'shape' must be one of {SHAPES}, got {shape!r}")
    reps = _parse_positive_int(resolved, "reps", 50_000)
    seed = _parse_nonneg_int(resolved, "seed", 1)
    grid = _parse_positive_int(resolved, "grid", 512)
    cc = _parse_bool(resolved, "continuity_correction", False)
    if "workers" in resolved:
        workers = _parse_positive_int(resolved, "workers")
    else:
        workers = _parse_positive_int({WORKERS_ENV: os.environ.get(WORKERS_ENV, "1")}, WORKERS_ENV)
    out = _require(resolved, "out")

    rows = []
    for params in scenarios:
        for proc in procedures:
            spec = ScenarioSpec(
                params=params,
                schedule=schedule,
                procedure=proc,
                alpha=alpha,
                replicates=reps,
                master_seed=seed,
                shape=shape,
                continuity_correction=cc,
                grid_points=grid,
            )
            summary = run_scenario_parallel(spec, workers=workers)
            rows.append(_summary_row(summary))
    _write_rows(
        out,
        (
            "scenario",
            "procedure",
            "EM",
            "se_EM",
            "prej1",
            "se1",
            "prej2",
            "se2",
            "prej3",
            "se3",
            "fwe",
            "se_fwe",
            "replicates",
            "seed",
        ),
        rows,
    )
    for key, value in (
        ("procedures", ",".join(procedures)),
        ("schedule", ",".join(str(n) for n in schedule.analyses)),
        ("alpha", fmt(alpha)),
        ("shape", shape),
        ("reps", str(reps)),
        ("seed", str(seed)),
        ("grid", str(grid)),
        ("continuity_correction", fmt(cc)),
        ("workers", str(workers)),
    ):
        resolved.setdefault(key, value)
    _write_sidecar(out, "simulate", resolved)
    return 0


def _cmd_paulson(args: argparse.Namespace) -> int:
    resolved = _resolve(args, "paulson")
    config = PaulsonConfig(
        thresholds=parse_float_list(_require(resolved, "thresholds")),
        delta=_parse_float(resolved, "delta"),
        critical_value=_parse_float(resolved, "critical_value"),
        horizon=_parse_positive_int(resolved, "horizon", 100_000),
    )
    theta = _parse_float(resolved, "theta")
    reps = _parse_positive_int(resolved, "reps", 10_000)
    seed = _parse_nonneg_int(resolved, "seed", 1)
    method = resolved.get("method", "direct")
    if method not in ("direct", "stepdown"):
        raise ValueError(f"key 'method' must be 'direct' or 'stepdown', got {method!r}")
    out = _require(resolved, "out")
    run = run_paulson_direct if method == "direct" else paulson_via_stepdown

    decisions = np.zeros(config.k, dtype=int)
    stop_total = 0
    rows: list[tuple[object, ...]] = []
    for r in range(reps):
        gen = RngStream(seed, r).generator()
        result = run(simulate_observations(theta, config.horizon, gen), config)
        rows.append((result.decision, result.stop_n, result.fallback_used))
        decisions[result.decision] += 1
        stop_total += result.stop_n
    freqs = ";".join(repr(int(decisions[i]) / reps) for i in range(config.k))
    rows.append(("summary", stop_total / reps, freqs))
    _write_rows(out, ("decision", "stop_n", "fallback_used"), rows)
    for key, value in (
        ("horizon", str(config.horizon)),
        ("reps", str(reps)),
        ("seed", str(seed)),
        ("method", method),
    ):
        resolved.setdefault(key, value)
    _write_sidecar(out, "paulson", resolved)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stepdown",
        description=(
            "Multistage step-down multiple testing: boundary calibration, "
            "data analysis, trial simulation, sequential classification."
        ),
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_boundary = sub.add_parser(
        "boundary", help="calibrate group-sequential critical values to CSV"
    )
    p_boundary.add_argument("--config", help="flat key = value config file")
    p_boundary.add_argument("--schedule", help="analysis sizes, e.g. 26,29,35")
    p_boundary.add_argument("--rho", help="crossing probabilities, e.g. 0.05 or 0.05,0.025")
    p_boundary.add_argument("--shape", choices=SHAPES, default=None, help="boundary shape")
    p_boundary.add_argument("--grid", type=int, default=None, help="integration grid points")
    p_boundary.add_argument("--out", help="output CSV path")
    p_boundary.set_defaults(handler=_cmd_boundary)

    p_analyze = sub.add_parser(
        "analyze", help="run the multistage procedure on staged statistics"
    )
    p_analyze.add_argument("--config", help="flat key = value config file")
    p_analyze.add_argument("--statistics", help="CSV of hypothesis,n,statistic")
    p_analyze.add_argument("--boundary", help="CSV from the boundary subcommand")
    p_analyze.add_argument("--alpha", type=float, default=None, help="familywise level")
    p_analyze.add_argument(
        "--variant", choices=("holm", "mult", "closed"), default=None, help="stage-level rule"
    )
    p_analyze.add_argument("--family", help="family description file (key = value lines)")
    p_analyze.add_argument("--out", help="output CSV path")
    p_analyze.set_defaults(handler=_cmd_analyze)

    p_sim = sub.add_parser("simulate", help="Monte Carlo evaluation of the procedures")
    p_sim.add_argument("--config", help="flat key = value config file")
    p_sim.add_argument("--scenarios", help="tokens like (0,0,.5) (0,.5,.75,.75)")
    p_sim.add_argument("--procedure", dest="procedures", help="comma list from H,Mult,MultH")
    p_sim.add_argument("--schedule", help="analysis sizes, e.g. 26,29,35")
    p_sim.add_argument("--alpha", type=float, default=None, help="familywise level")
    p_sim.add_argument("--shape", choices=SHAPES, default=None, help="boundary shape")
    p_sim.add_argument("--reps", type=int, default=None, help="replicates per cell")
    p_sim.add_argument("--seed", type=int, default=None, help="master seed")
    p_sim.add_argument("--grid", type=int, default=None, help="integration grid points")
    p_sim.add_argument(
        "--continuity-correction",
        dest="continuity_correction",
        choices=("true", "false"),
        default=None,
        help="half-count correction on the binary endpoint",
    )
    p_sim.add_argument(
        "--workers", type=int, default=None, help=f"worker processes (default ${WORKERS_ENV} or 1)"
    )
    p_sim.add_argument("--out", help="output CSV path")
    p_sim.set_defaults(handler=_cmd_simulate)

    p_paulson = sub.add_parser(
        "paulson", help="sequential classification of a normal mean"
    )
    p_paulson.add_argument("--config", help="flat key = value config file")
    p_paulson.add_argument("--thresholds", help="interval cutpoints, e.g. 0,1,2")
    p_paulson.add_argument("--delta", type=float, default=None, help="target widening")
    p_paulson.add_argument(
        "--critical-value", dest="critical_value", type=float, default=None,
        help="evidence threshold per one-sided test",
    )
    p_paulson.add_argument("--theta", type=float, default=None, help="true mean")
    p_paulson.add_argument("--reps", type=int, default=None, help="simulated paths")
    p_paulson.add_argument("--seed", type=int, default=None, help="master seed")
    p_paulson.add_argument("--horizon", type=int, default=None, help="max observations per path")
    p_paulson.add_argument(
        "--method", choices=("direct", "stepdown"), default=None, help="implementation route"
    )
    p_paulson.add_argument("--out", help="output CSV path")
    p_paulson.set_defaults(handler=_cmd_paulson)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ValueError as exc:
        print(f"stepdown {args.subcommand}: {exc}", file=sys.stderr)
        return 2
    except (OSError, CalibrationError, GridError) as exc:
        print(f"stepdown {args.subcommand}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Monte Carlo evaluation of the testing procedures on the trial model.

A scenario pins down the true parameters, the procedure, the schedule,
the replicate count, and the master seed.  Summaries carry raw integer
accumulators (measurement totals, rejection counts, familywise error
counts) rather than derived ratios, so partial runs over disjoint
replicate ranges merge exactly: splitting the replicates across workers
or machines and merging the pieces reproduces the serial result bit for
bit.  Each replicate's draws depend only on (master seed, replicate
index), never on execution order.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass

import numpy as np
from scipy import stats as scipy_stats

from .boundary import CriticalFunction, calibrate_levels
from .core import HypothesisFamily, SampleSchedule
from .procedures import CLOSED, HOLM, MULT, ProcedureVariant, holm_fixed, run_multistage
from .trial import RngStream, ScenarioParams, generate_paths

__all__ = [
    "PROCEDURES",
    "ScenarioSpec",
    "SimulationSummary",
    "empty_summary",
    "run_scenario",
    "run_scenario_parallel",
    "merge",
]

PROCEDURES = ("H", "Mult", "MultH", "MultH-closed")

_VARIANTS: dict[str, ProcedureVariant] = {
    "Mult": MULT,
    "MultH": HOLM,
    "MultH-closed": CLOSED,
}


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation cell: parameters, procedure, schedule, seed.

    ``H`` is the fixed-sample reference: every endpoint runs to the
    largest analysis and a step-down test is applied to the final
    p-values (exact Gaussian tails for the mean endpoints, the exact
    binomial tail for the binary endpoint).  The ``Mult``, ``MultH`` and
    ``MultH-closed`` procedures are the multistage variants with fixed,
    step-down, and plain-alpha stage levels respectively.
    """

    params: ScenarioParams
    schedule: SampleSchedule
    procedure: str = "MultH"
    alpha: float = 0.05
    replicates: int = 50_000
    master_seed: int = 1
    shape: str = "flat"
    continuity_correction: bool = False
    grid_points: int = 512
    family: HypothesisFamily | None = None

    def __post_init__(self) -> None:
        if self.procedure not in PROCEDURES:
            raise ValueError(
                f"unknown procedure {self.procedure!r}; expected one of {PROCEDURES}"
            )
        if not isinstance(self.replicates, (int, np.integer)) or self.replicates < 1:
            raise ValueError(f"replicates must be a positive integer, got {self.replicates!r}")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        family = self.family if self.family is not None else HypothesisFamily.simple(3)
        if family.k != 3:
            raise ValueError("the trial model tests exactly three hypotheses")
        if self.procedure == "MultH-closed" and not family.closed_monotone:
            raise ValueError(
                "MultH-closed requires a family flagged closed_monotone"
            )
        object.__setattr__(self, "family", family)

    @property
    def label(self) -> str:
        return self.params.label()

    def needed_levels(self) -> tuple[float, ...]:
        """Boundary levels the procedure will look up, tightest first."""
        if self.procedure == "H":
            return ()
        if self.procedure == "Mult":
            return (self.alpha / 3.0,)
        if self.procedure == "MultH-closed":
            return (self.alpha,)
        return (self.alpha / 3.0, self.alpha / 2.0, self.alpha)


@dataclass(frozen=True)
class SimulationSummary:
    """Raw counts from a (possibly partial) scenario run.

    ``rep_ranges`` lists the half-open replicate index ranges covered.
    All statistics derive from the integer accumulators, so merging two
    summaries over disjoint ranges is exact.
    """

    spec: ScenarioSpec
    rep_ranges: tuple[tuple[int, int], ...]
    replicates: int
    sum_measurements: int
    sumsq_measurements: int
    reject_counts: tuple[int, int, int]
    fwe_count: int

    @property
    def em(self) -> float:
        """Mean total measurements per replicate."""
        if self.replicates == 0:
            return math.nan
        return self.sum_measurements / self.replicates

    @property
    def em_se(self) -> float:
        r = self.replicates
        if r < 2:
            return math.nan
        var = (self.sumsq_measurements - self.sum_measurements**2 / r) / (r - 1)
        return math.sqrt(max(var, 0.0) / r)

    def p_reject(self, i: int) -> float:
        if self.replicates == 0:
            return math.nan
        return self.reject_counts[i] / self.replicates

    def p_reject_se(self, i: int) -> float:
        return _binomial_se(self.reject_counts[i], self.replicates)

    @property
    def any_true_null(self) -> bool:
        return any(self.spec.params.truth)

    @property
    def fwe(self) -> float | None:
        """Probability of rejecting a true hypothesis, None if all are false."""
        if not self.any_true_null:
            return None
        if self.replicates == 0:
            return math.nan
        return self.fwe_count / self.replicates

    @property
    def fwe_se(self) -> float | None:
        if not self.any_true_null:
            return None
        return _binomial_se(self.fwe_count, self.replicates)


def _binomial_se(count: int, n: int) -> float:
    if n == 0:
        return math.nan
    phat = count / n
    return math.sqrt(phat * (1.0 - phat) / n)


def empty_summary(spec: ScenarioSpec) -> SimulationSummary:
    """The merge identity for a scenario."""
    return SimulationSummary(
        spec=spec,
        rep_ranges=(),
        replicates=0,
        sum_measurements=0,
        sumsq_measurements=0,
        reject_counts=(0, 0, 0),
        fwe_count=0,
    )


def _normalize_ranges(ranges: tuple[tuple[int, int], ...]) -> tuple[tuple[int, int], ...]:
    nonempty = sorted((lo, hi) for lo, hi in ranges if hi > lo)
    merged: list[tuple[int, int]] = []
    for lo, hi in nonempty:
        if merged and lo < merged[-1][1]:
            raise ValueError(f"replicate ranges overlap near index {lo}")
        if merged and lo == merged[-1][1]:
            merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return tuple(merged)


def merge(a: SimulationSummary, b: SimulationSummary) -> SimulationSummary:
    """Combine two partial runs of the same scenario.

    The two summaries must come from identical specs and cover disjoint
    replicate ranges.  Merging is exact and associative because only
    integer counts are combined.
    """
    if a.spec != b.spec:
        raise ValueError("cannot merge summaries from different scenario specs")
    ranges = _normalize_ranges(a.rep_ranges + b.rep_ranges)
    return SimulationSummary(
        spec=a.spec,
        rep_ranges=ranges,
        replicates=a.replicates + b.replicates,
        sum_measurements=a.sum_measurements + b.sum_measurements,
        sumsq_measurements=a.sumsq_measurements + b.sumsq_measurements,
        reject_counts=tuple(x + y for x, y in zip(a.reject_counts, b.reject_counts)),
        fwe_count=a.fwe_count + b.fwe_count,
    )


def build_critical(spec: ScenarioSpec) -> CriticalFunction | None:
    """Calibrate the boundary levels the scenario's procedure needs."""
    levels = spec.needed_levels()
    if not levels:
        return None
    return calibrate_levels(
        spec.schedule, levels, spec.shape, grid_points=spec.grid_points
    )


def run_scenario(
    spec: ScenarioSpec,
    rep_range: tuple[int, int] | None = None,
    critical: CriticalFunction | None = None,
) -> SimulationSummary:
    """Simulate (part of) a scenario and return its summary.

    Args:
        spec: The scenario cell to simulate.
        rep_range: Half-open range of replicate indices to run; defaults
            to the full range (0, spec.replicates).  Draws for replicate
            r depend only on (spec.master_seed, r).
        critical: Pre-calibrated critical values (saves recalibration
            when splitting a scenario across workers).

    Returns:
        A SimulationSummary covering exactly rep_range.
    """
    lo, hi = rep_range if rep_range is not None else (0, spec.replicates)
    if not (0 <= lo <= hi <= spec.replicates):
        raise ValueError(
            f"rep_range {(lo, hi)} must lie within (0, {spec.replicates})"
        )
    if critical is None:
        critical = build_critical(spec)

    truth = np.asarray(spec.params.truth)
    sup = spec.schedule.sup
    k = 3

    sum_n = 0
    sumsq_n = 0
    reject_counts = [0, 0, 0]
    fwe_count = 0

    if spec.procedure == "H":
        # Fixed-sample reference: exact one-sided binomial tail for the
        # binary endpoint, Gaussian tails for the mean endpoints.
        tail = scipy_stats.binom.sf(np.arange(sup + 1) - 1, sup, 0.5)
        total = k * sup
        total_sq = total * total
        for r in range(lo, hi):
            paths = generate_paths(
                spec.params,
                spec.schedule,
                RngStream(spec.master_seed, r),
                continuity_correction=spec.continuity_correction,
            )
            t1, t2 = paths.values[0, -1], paths.values[1, -1]
            s3 = int(round(paths.sums[2, -1]))
            p = (
                0.5 * math.erfc(t1 / math.sqrt(2.0)),
                0.5 * math.erfc(t2 / math.sqrt(2.0)),
                float(tail[s3]),
            )
            rejected = holm_fixed(p, spec.alpha)
            sum_n += total
            sumsq_n += total_sq
            for i in range(k):
                if rejected[i]:
                    reject_counts[i] += 1
            if bool(np.any(rejected & truth)):
                fwe_count += 1
    else:
        variant = _VARIANTS[spec.procedure]
        family = spec.family
        assert critical is not None
        for r in range(lo, hi):
            paths = generate_paths(
                spec.params,
                spec.schedule,
                RngStream(spec.master_seed, r),
                continuity_correction=spec.continuity_correction,
            )
            result = run_multistage(
                paths, family, spec.schedule, critical, spec.alpha, variant
            )
            total = result.total_measurements
            sum_n += total
            sumsq_n += total * total
            hit_true = False
            for i in range(k):
                if result.rejected[i]:
                    reject_counts[i] += 1
                    if truth[i]:
                        hit_true = True
            if hit_true:
                fwe_count += 1

    return SimulationSummary(
        spec=spec,
        rep_ranges=_normalize_ranges(((lo, hi),)),
        replicates=hi - lo,
        sum_measurements=sum_n,
        sumsq_measurements=sumsq_n,
        reject_counts=tuple(reject_counts),
        fwe_count=fwe_count,
    )


def _worker_run(args: tuple[ScenarioSpec, tuple[int, int], CriticalFunction | None]) -> SimulationSummary:
    spec, rep_range, critical = args
    return run_scenario(spec, rep_range, critical)


def split_ranges(total: int, pieces: int) -> list[tuple[int, int]]:
    """Split range(total) into contiguous near-even nonempty pieces."""
    pieces = max(1, min(pieces, total))
    base, extra = divmod(total, pieces)
    ranges = []
    lo = 0
    for i in range(pieces):
        hi = lo + base + (1 if i < extra else 0)
        ranges.append((lo, hi))
        lo = hi
    return ranges


def run_scenario_parallel(spec: ScenarioSpec, workers: int = 1) -> SimulationSummary:
    """Run a scenario across worker processes and merge the pieces.

    The result is bit-identical for any worker count: replicate draws
    are keyed by index and the merged accumulators are integers.
    """
    if workers < 1:
        raise ValueError("workers must be at least 1")
    critical = build_critical(spec)
    if workers == 1 or spec.replicates == 1:
        return run_scenario(spec, critical=critical)
    ranges = split_ranges(spec.replicates, workers)
    jobs = [(spec, rng, critical) for rng in ranges]
    with multiprocessing.Pool(processes=len(ranges)) as pool:
        parts = pool.map(_worker_run, jobs)
    summary = parts[0]
    for part in parts[1:]:
        summary = merge(summary, part)
    return summary

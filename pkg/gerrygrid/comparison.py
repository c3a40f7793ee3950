from __future__ import annotations

import logging
import math
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .evaluator import Evaluator
from .grid_graph import DualGraph
from .logging_utils import ProgressReporter
from .optimizers import OptimizerConfig, resolve_algorithm

LOGGER = logging.getLogger(__name__)

# Algorithms expected to lead at the largest budget, per dot count.
EXPECTED_LEADERS: dict[int, frozenset[str]] = {
    6: frozenset({"sa", "rrils"}),
    10: frozenset({"rsa"}),
}


@dataclass(frozen=True)
class CurvePoint:
    algorithm: str
    k_max: int
    mean_best: float
    stderr: float


@dataclass(frozen=True)
class SoftCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class _TrialCurve:
    algorithm: str
    trial: int
    values: tuple[float, ...]


def compare(
    algorithms: Sequence[str],
    e: Evaluator,
    g: DualGraph,
    num: int,
    trials: int,
    k_max_grid: Sequence[int],
    seed: int,
    cfg: OptimizerConfig | None = None,
    threads: int = 1,
) -> list[CurvePoint]:
    """Mean best-so-far score per algorithm at every budget in `k_max_grid`.

    Each trial runs once at the largest budget and is read off at the smaller
    ones, so every curve is non-decreasing in k_max. Trial i of every
    algorithm draws from the same spawned seed.
    """
    if trials < 1:
        raise InvalidArgumentError(f"trials must be at least 1, got {trials}")
    if not k_max_grid or min(k_max_grid) < 1:
        raise InvalidArgumentError("k_max grid must be non-empty and positive")
    if not algorithms:
        raise InvalidArgumentError("no algorithms to compare")
    for name in algorithms:
        resolve_algorithm(name)

    grid = sorted(set(k_max_grid))
    base = cfg or OptimizerConfig()
    run_cfg = replace(base, k_max=grid[-1], seed=seed)
    children = np.random.SeedSequence(seed).spawn(trials)
    curves: dict[str, list[tuple[float, ...] | None]] = {name: [None] * trials for name in algorithms}
    progress = ProgressReporter(LOGGER, "trials", total=trials * len(algorithms))

    def run_one(name: str, trial: int) -> _TrialCurve:
        result = resolve_algorithm(name)(e, g, num, run_cfg, np.random.default_rng(children[trial]))
        return _TrialCurve(name, trial, tuple(result.best_within(k) for k in grid))

    def consume(done: Iterable[Future[_TrialCurve]]) -> None:
        for future in done:
            curve = future.result()
            curves[curve.algorithm][curve.trial] = curve.values
            progress.advance()

    with ThreadPoolExecutor(max_workers=threads) as executor:
        pending: set[Future[_TrialCurve]] = set()
        for name in algorithms:
            for trial in range(trials):
                pending.add(executor.submit(run_one, name, trial))
                if len(pending) >= threads * 4:
                    done, pending = wait(pending, return_when=FIRST_COMPLETED)
                    consume(done)
        while pending:
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            consume(done)
    progress.finish()

    points: list[CurvePoint] = []
    for name in algorithms:
        table = np.array(curves[name], dtype=np.float64)
        for column, k_max in enumerate(grid):
            values = table[:, column]
            stderr = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
            points.append(CurvePoint(name, k_max, float(values.mean()), stderr))
    return points


def curve_for(points: Iterable[CurvePoint], algorithm: str) -> list[CurvePoint]:
    return sorted((p for p in points if p.algorithm == algorithm), key=lambda p: p.k_max)


def soft_checks(points: Sequence[CurvePoint], num: int, known_max: float | None = None) -> list[SoftCheck]:
    """Qualitative comparisons reported without failing the run."""
    checks: list[SoftCheck] = []
    algorithms = sorted({p.algorithm for p in points})

    for name in algorithms:
        means = [p.mean_best for p in curve_for(points, name)]
        monotone = all(a <= b + 1e-12 for a, b in zip(means, means[1:]))
        checks.append(SoftCheck(f"{name} non-decreasing", monotone, f"means={means}"))
        if known_max is not None:
            bounded = all(m <= known_max + 1e-9 for m in means)
            checks.append(SoftCheck(f"{name} bounded by known max", bounded, f"max={known_max}"))

    top = max(p.k_max for p in points)
    final = {p.algorithm: p for p in points if p.k_max == top}
    baseline = final.get("random")
    if baseline is not None:
        for name, point in sorted(final.items()):
            if name == "random":
                continue
            ok = point.mean_best >= baseline.mean_best - 2 * point.stderr
            checks.append(
                SoftCheck(
                    f"{name} not worse than random at k_max={top}",
                    ok,
                    f"{point.mean_best:.4f} vs {baseline.mean_best:.4f}",
                )
            )

    expected = EXPECTED_LEADERS.get(num)
    if expected and final:
        leader = max(sorted(final), key=lambda name: final[name].mean_best)
        contenders = expected & final.keys()
        if contenders:
            checks.append(
                SoftCheck(
                    f"leader at num={num}",
                    leader in expected,
                    f"leader {leader}, expected one of {sorted(expected)}",
                )
            )

    for check in checks:
        if not check.passed:
            LOGGER.warning("Soft check failed: %s (%s)", check.name, check.detail)
    return checks

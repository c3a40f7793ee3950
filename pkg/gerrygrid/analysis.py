from __future__ import annotations

import logging
from collections import Counter, defaultdict
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass
from fractions import Fraction
from itertools import islice
from typing import Iterable, Iterator, Sequence

import numpy as np

from .enumeration import (
    PlanSet,
    VoterDistribution,
    canonicalize_many,
    distribution_count,
    grid_side,
    iter_distribution_bits,
    square_symmetries,
)
from .errors import InvalidArgumentError, NotFoundError, UndefinedMetricError
from .grid_graph import DualGraph
from .logging_utils import ProgressReporter
from .metrics import RepStats, RepTable, cluster_counts

LOGGER = logging.getLogger(__name__)

SWEEP_MODES = ("full", "dedup")
DEFAULT_BATCH_SIZE = 2048


@dataclass(frozen=True)
class SweepRecord:
    """Per-distribution result of the exhaustive sweep."""

    bits: int
    k: int
    num: int
    clus: Fraction
    clusp: Fraction | None
    rep: RepStats
    orbit_size: int = 1

    @property
    def distribution(self) -> VoterDistribution:
        return VoterDistribution(self.bits, self.k)


@dataclass(frozen=True)
class SlopeRow:
    num: int
    slope: float
    intercept: float
    count: int


@dataclass
class _Batch:
    index: int
    records: list[SweepRecord]


def sweep(
    g: DualGraph,
    plans: PlanSet,
    mode: str = "full",
    num_filter: int | None = None,
    *,
    threads: int = 1,
    batch_size: int = DEFAULT_BATCH_SIZE,
    start: int = 0,
) -> Iterator[SweepRecord]:
    """Stream one record per distribution in increasing bit order.

    `full` visits every bit vector (of popcount `num_filter` when given);
    `dedup` keeps only the smallest member of each square-symmetry orbit and
    carries the orbit size. `start` skips every vector below it. Batches run on
    a thread pool but come back in order, so output does not depend on
    `threads`.
    """
    if mode not in SWEEP_MODES:
        raise InvalidArgumentError(f"sweep mode must be one of {SWEEP_MODES}, got {mode!r}")
    if plans.k != g.k:
        raise InvalidArgumentError(f"plans cover {plans.k} blocks, graph has {g.k}")
    if not g.edges:
        raise UndefinedMetricError("Clus is undefined on a graph without edges")
    if batch_size < 1:
        raise InvalidArgumentError(f"batch_size must be positive, got {batch_size}")
    side = grid_side(g.k) if mode == "dedup" else 0

    table = RepTable(plans)
    vectors = iter_distribution_bits(g.k, num_filter, start=start)
    progress = ProgressReporter(LOGGER, f"sweep {mode}", total=distribution_count(g.k, num_filter))

    def work(index: int, chunk: list[int]) -> _Batch:
        records = _sweep_batch(g, table, np.array(chunk, dtype=np.uint64), side)
        progress.advance(len(chunk))
        return _Batch(index, records)

    with ThreadPoolExecutor(max_workers=threads) as executor:
        pending: set[Future[_Batch]] = set()
        ready: dict[int, list[SweepRecord]] = {}
        next_index = 0
        submitted = 0
        while True:
            chunk = list(islice(vectors, batch_size))
            if chunk:
                pending.add(executor.submit(work, submitted, chunk))
                submitted += 1
            if pending and (not chunk or len(pending) >= threads * 4):
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for future in done:
                    batch = future.result()
                    ready[batch.index] = batch.records
                while next_index in ready:
                    yield from ready.pop(next_index)
                    next_index += 1
            if not chunk and not pending:
                break
        while next_index in ready:
            yield from ready.pop(next_index)
            next_index += 1
    progress.finish()


def _sweep_batch(g: DualGraph, table: RepTable, values: np.ndarray, side: int) -> list[SweepRecord]:
    orbit_sizes = np.ones(values.size, dtype=np.int64)
    if side:
        keep = canonicalize_many(values, side) == values
        values = values[keep]
        orbit_sizes = _orbit_sizes(values, side)
    if values.size == 0:
        return []

    histograms = table.half_histograms(values)
    alike, dot_dot, outgoing = cluster_counts(g, values)
    edge_count = len(g.edges)
    records: list[SweepRecord] = []
    for row, bits in enumerate(values.tolist()):
        out = int(outgoing[row])
        records.append(
            SweepRecord(
                bits=int(bits),
                k=g.k,
                num=int(bits).bit_count(),
                clus=Fraction(int(alike[row]), edge_count),
                clusp=Fraction(int(dot_dot[row]), out) if out else None,
                rep=RepStats.from_half_histogram(histograms[row]),
                orbit_size=int(orbit_sizes[row]),
            )
        )
    return records


def _orbit_sizes(values: np.ndarray, side: int) -> np.ndarray:
    """8 divided by the number of symmetries fixing each vector."""
    one = np.uint64(1)
    fixed = np.zeros(values.size, dtype=np.int64)
    for perm in square_symmetries(side):
        image = np.zeros_like(values)
        for block, target in enumerate(perm):
            image |= ((values >> np.uint64(block)) & one) << np.uint64(target)
        fixed += image == values
    return 8 // fixed


def ols_slope(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares line through `points`; slope 0 when every x is equal."""
    if not points:
        raise InvalidArgumentError("regression needs at least one point")
    data = np.asarray(points, dtype=np.float64)
    x = data[:, 0]
    y = data[:, 1]
    if np.all(x == x[0]):
        return 0.0, float(y.mean())
    x_mean = x.mean()
    y_mean = y.mean()
    dx = x - x_mean
    slope = float(np.dot(dx, y - y_mean) / np.dot(dx, dx))
    return slope, float(y_mean - slope * x_mean)


class RegressionAccumulator:
    """Exact streaming regression of E(Rep) on ClusP, one line per dot count.

    Points are grouped by their exact ClusP value with integer half-seat sums,
    so millions of records collapse to a few hundred keys. Accumulators over
    disjoint record streams merge by addition.
    """

    def __init__(self, weighted: bool = False) -> None:
        self.weighted = weighted
        # num -> clusp -> [weight, Σ weight·(half-seat total over plans)]
        self._groups: dict[int, dict[Fraction, list[int]]] = defaultdict(dict)
        self._plans: int | None = None

    def add(self, record: SweepRecord) -> None:
        if record.clusp is None:
            return
        total = record.rep.total_plans
        if self._plans is None:
            self._plans = total
        elif self._plans != total:
            raise InvalidArgumentError("records come from plan sets of different sizes")
        weight = record.orbit_size if self.weighted else 1
        half_sum = int(record.rep.expectation * 2 * total)
        slot = self._groups[record.num].setdefault(record.clusp, [0, 0])
        slot[0] += weight
        slot[1] += weight * half_sum

    def extend(self, records: Iterable[SweepRecord]) -> "RegressionAccumulator":
        for record in records:
            self.add(record)
        return self

    def merge(self, other: "RegressionAccumulator") -> "RegressionAccumulator":
        if other._plans is not None:
            if self._plans is not None and self._plans != other._plans:
                raise InvalidArgumentError("cannot merge accumulators over different plan sets")
            self._plans = other._plans
        for num, groups in other._groups.items():
            mine = self._groups[num]
            for clusp, (weight, half_sum) in groups.items():
                slot = mine.setdefault(clusp, [0, 0])
                slot[0] += weight
                slot[1] += half_sum
        return self

    def nums(self) -> list[int]:
        return sorted(self._groups)

    def row(self, num: int) -> SlopeRow:
        groups = self._groups.get(num)
        if not groups or self._plans is None:
            raise NotFoundError(f"no regression points for num={num}")
        scale = 2 * self._plans
        n = sum(weight for weight, _ in groups.values())
        sx = sum(weight * x for x, (weight, _) in groups.items())
        sxx = sum(weight * x * x for x, (weight, _) in groups.items())
        sy = Fraction(sum(half for _, half in groups.values()), scale)
        sxy = sum(x * half for x, (_, half) in groups.items()) / scale
        denominator = n * sxx - sx * sx
        if denominator == 0:
            return SlopeRow(num, 0.0, float(sy / n), n)
        slope = (n * sxy - sx * sy) / denominator
        intercept = (sy - slope * sx) / n
        return SlopeRow(num, float(slope), float(intercept), n)


def slope_table(records: Iterable[SweepRecord], weighted: bool = False) -> list[SlopeRow]:
    """One regression row per dot count in [1, k-1] present in `records`."""
    accumulator = RegressionAccumulator(weighted=weighted)
    k = 0
    for record in records:
        k = record.k
        accumulator.add(record)
    return [accumulator.row(num) for num in accumulator.nums() if 1 <= num <= k - 1]


class ExtremesTracker:
    """Running best and worst E(Rep) records per dot count, keeping every tie."""

    def __init__(self) -> None:
        self._best: dict[int, list[SweepRecord]] = {}
        self._worst: dict[int, list[SweepRecord]] = {}

    def add(self, record: SweepRecord) -> None:
        value = record.rep.expectation
        best = self._best.setdefault(record.num, [])
        if not best or value > best[0].rep.expectation:
            best[:] = [record]
        elif value == best[0].rep.expectation:
            best.append(record)
        worst = self._worst.setdefault(record.num, [])
        if not worst or value < worst[0].rep.expectation:
            worst[:] = [record]
        elif value == worst[0].rep.expectation:
            worst.append(record)

    def nums(self) -> list[int]:
        return sorted(self._best)

    def get(self, num: int) -> tuple[list[SweepRecord], list[SweepRecord]]:
        if num not in self._best:
            raise NotFoundError(f"no sweep records with num={num}")
        by_bits = lambda r: r.bits  # noqa: E731
        return sorted(self._best[num], key=by_bits), sorted(self._worst[num], key=by_bits)


def extremes_all(records: Iterable[SweepRecord], num: int) -> tuple[list[SweepRecord], list[SweepRecord]]:
    """Every record tied for the highest and for the lowest E(Rep), smallest bits first."""
    tracker = ExtremesTracker()
    for record in records:
        if record.num == num:
            tracker.add(record)
    return tracker.get(num)


def extremes(records: Iterable[SweepRecord], num: int) -> tuple[SweepRecord, SweepRecord]:
    best, worst = extremes_all(records, num)
    return best[0], worst[0]


def scatter_points(records: Iterable[SweepRecord]) -> list[tuple[int, float, float]]:
    """(num, clusp, E) triples for plotting; records without ClusP are dropped."""
    return [
        (record.num, float(record.clusp), float(record.rep.expectation))
        for record in records
        if record.clusp is not None
    ]


def orbit_weighted_counts(records: Iterable[SweepRecord]) -> Counter[int]:
    counts: Counter[int] = Counter()
    for record in records:
        counts[record.num] += record.orbit_size
    return counts


def sign_pattern(rows: Iterable[SlopeRow], tolerance: float = 1e-9) -> dict[int, int]:
    pattern: dict[int, int] = {}
    for row in rows:
        if row.slope > tolerance:
            pattern[row.num] = 1
        elif row.slope < -tolerance:
            pattern[row.num] = -1
        else:
            pattern[row.num] = 0
    return pattern


def mirror_report(rows: Iterable[SlopeRow], k: int) -> list[tuple[int, float, float | None]]:
    """Pairs each slope with that of num' = k - num; informational only."""
    by_num = {row.num: row.slope for row in rows}
    report = []
    for num in sorted(by_num):
        if num > k - num:
            break
        report.append((num, by_num[num], by_num.get(k - num)))
    return report


def render_distribution(bits: int, rows: int, cols: int) -> str:
    if rows < 1 or cols < 1 or bits >> (rows * cols):
        raise InvalidArgumentError(f"bits do not fit a {rows}x{cols} grid")
    lines = []
    for row in range(rows):
        lines.append("".join("*" if (bits >> (row * cols + col)) & 1 else "." for col in range(cols)))
    return "\n".join(lines)

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .districting import DistrictingPlan, DistrictMask
from .enumeration import PlanSet, VoterDistribution
from .errors import InvalidArgumentError, UndefinedMetricError
from .grid_graph import DualGraph

LOGGER = logging.getLogger(__name__)

# Sub-batch of distributions per vectorised pass; bounds the (batch × plans) temporaries.
_ROWS_PER_PASS = 256


def num_of(dist: VoterDistribution) -> int:
    return dist.num


def clus(g: DualGraph, dist: VoterDistribution) -> Fraction:
    """Share of undirected edges whose endpoints vote alike."""
    _check_length(g, dist)
    if not g.edges:
        raise UndefinedMetricError("Clus is undefined on a graph without edges")
    bits = dist.bits
    same = sum(1 for a, b in g.edges if ((bits >> a) ^ (bits >> b)) & 1 == 0)
    return Fraction(same, len(g.edges))


def clusp(g: DualGraph, dist: VoterDistribution) -> Fraction:
    """Share of directed dot-originating edges that end at a dot; dot-dot edges count twice."""
    _check_length(g, dist)
    bits = dist.bits
    if not bits:
        raise UndefinedMetricError("ClusP is undefined when no block holds a dot")
    outgoing = 0
    dot_to_dot = 0
    for block in range(g.k):
        if not (bits >> block) & 1:
            continue
        outgoing += len(g.adjacency[block])
        dot_to_dot += (g.neighbor_masks[block] & bits).bit_count()
    if outgoing == 0:
        raise UndefinedMetricError("ClusP is undefined when no edge starts at a dot block")
    return Fraction(dot_to_dot, outgoing)


def district_half_seats(dots: int, size: int) -> int:
    """Plurality outcome of one district in half-seat units: 0, 1 (tie) or 2."""
    doubled = 2 * dots
    if doubled > size:
        return 2
    if doubled == size:
        return 1
    return 0


def district_rep(dist: VoterDistribution, district: DistrictMask) -> Fraction:
    size = district.size
    if size == 0:
        raise InvalidArgumentError("district mask is empty")
    return Fraction(district_half_seats((dist.bits & district.bits).bit_count(), size), 2)


def total_rep(dist: VoterDistribution, plan: DistrictingPlan) -> Fraction:
    """Seats won under `plan`, summed over its districts."""
    if plan.k != dist.k:
        raise InvalidArgumentError(f"plan covers {plan.k} blocks, distribution covers {dist.k}")
    bits = dist.bits
    half = 0
    for mask in plan.mask_bits:
        half += district_half_seats((bits & mask).bit_count(), mask.bit_count())
    return Fraction(half, 2)


def proportional_seats(num: int, k: int, n_districts: int) -> Fraction:
    if k < 1 or not 0 <= num <= k:
        raise InvalidArgumentError(f"num must lie in [0, {k}]")
    return Fraction(n_districts * num, k)


def happiness(g: DualGraph, dist: VoterDistribution) -> list[Fraction]:
    """Per-block share of neighbours that vote alike (1 for isolated blocks)."""
    _check_length(g, dist)
    bits = dist.bits
    full = g.full_mask
    out: list[Fraction] = []
    for block in range(g.k):
        nbrs = g.neighbor_masks[block]
        total = nbrs.bit_count()
        if total == 0:
            out.append(Fraction(1))
            continue
        alike = bits if (bits >> block) & 1 else full & ~bits
        out.append(Fraction((nbrs & alike).bit_count(), total))
    return out


def unhappy_blocks(g: DualGraph, dist: VoterDistribution, theta: float) -> list[int]:
    """Blocks whose like-neighbour share is strictly below `theta`, in index order."""
    threshold = Fraction(theta).limit_denominator(10**9)
    return [block for block, share in enumerate(happiness(g, dist)) if share < threshold]


@dataclass(frozen=True)
class RepStats:
    """Distribution of seats won over a plan set, each plan weighted equally."""

    histogram: dict[Fraction, int]
    expectation: Fraction
    variance: Fraction
    min: Fraction
    max: Fraction
    total_plans: int

    @staticmethod
    def from_half_histogram(counts: Sequence[int]) -> "RepStats":
        """Build from plan counts indexed by half-seats (index 2·s holds seat count s)."""
        total = int(sum(counts))
        if total == 0:
            raise InvalidArgumentError("cannot summarise an empty plan set")
        first = sum(int(v) * int(c) for v, c in enumerate(counts))
        second = sum(int(v) * int(v) * int(c) for v, c in enumerate(counts))
        occupied = [v for v, c in enumerate(counts) if c]
        mean_half = Fraction(first, total)
        return RepStats(
            histogram={Fraction(v, 2): int(c) for v, c in enumerate(counts) if c},
            expectation=mean_half / 2,
            variance=(Fraction(second, total) - mean_half * mean_half) / 4,
            min=Fraction(occupied[0], 2),
            max=Fraction(occupied[-1], 2),
            total_plans=total,
        )

    @property
    def sample_variance(self) -> Fraction:
        if self.total_plans < 2:
            return Fraction(0)
        return self.variance * self.total_plans / (self.total_plans - 1)

    def pdf(self) -> dict[Fraction, Fraction]:
        return {seats: Fraction(count, self.total_plans) for seats, count in sorted(self.histogram.items())}

    def half_histogram(self, n_districts: int) -> list[int]:
        counts = [0] * (2 * n_districts + 1)
        for seats, count in self.histogram.items():
            counts[int(seats * 2)] = count
        return counts


class RepTable:
    """Precomputed district masks of a plan set for vectorised seat counting."""

    def __init__(self, plans: PlanSet) -> None:
        if len(plans) == 0:
            raise InvalidArgumentError("plan set is empty")
        self.k = plans.k
        self.n_districts = plans.n_districts
        self.district_size = plans.plans[0].district_size
        self.plan_count = len(plans)
        self._masks = np.array([plan.mask_bits for plan in plans], dtype=np.uint64)

    def half_seats(self, values: np.ndarray) -> np.ndarray:
        """(len(values), plans) array of half-seat totals."""
        values = np.asarray(values, dtype=np.uint64).reshape(-1)
        out = np.empty((values.size, self.plan_count), dtype=np.int16)
        for start in range(0, values.size, _ROWS_PER_PASS):
            chunk = values[start:start + _ROWS_PER_PASS, None]
            total = np.zeros((chunk.shape[0], self.plan_count), dtype=np.int16)
            for d in range(self.n_districts):
                doubled = 2 * np.bitwise_count(chunk & self._masks[None, :, d]).astype(np.int16)
                total += (2 * (doubled > self.district_size) + (doubled == self.district_size)).astype(np.int16)
            out[start:start + chunk.shape[0]] = total
        return out

    def half_histograms(self, values: np.ndarray) -> np.ndarray:
        """(len(values), 2·n_districts + 1) plan counts per half-seat total."""
        seats = self.half_seats(values)
        bins = 2 * self.n_districts + 1
        hist = np.empty((seats.shape[0], bins), dtype=np.int64)
        for v in range(bins):
            hist[:, v] = np.count_nonzero(seats == v, axis=1)
        return hist

    def stats(self, dist: VoterDistribution) -> RepStats:
        if dist.k != self.k:
            raise InvalidArgumentError(f"distribution covers {dist.k} blocks, plans cover {self.k}")
        return RepStats.from_half_histogram(self.half_histograms(np.array([dist.bits]))[0])

    def stats_many(self, values: np.ndarray) -> list[RepStats]:
        return [RepStats.from_half_histogram(row) for row in self.half_histograms(values)]

    def expectation(self, bits: int) -> float:
        seats = self.half_seats(np.array([bits]))[0]
        return float(seats.sum(dtype=np.int64)) / (2 * self.plan_count)

    def mean_over(self, bits: int, plan_indices: np.ndarray) -> float:
        """Mean seats over the given plan indices (repeats allowed)."""
        seats = self.half_seats(np.array([bits]))[0]
        return float(seats[plan_indices].sum(dtype=np.int64)) / (2 * len(plan_indices))


def rep_stats(dist: VoterDistribution, plans: PlanSet) -> RepStats:
    if len(plans) == 0:
        raise InvalidArgumentError("plan set is empty")
    return RepTable(plans).stats(dist)


def cluster_counts(g: DualGraph, values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised Clus/ClusP ingredients for a batch of bit vectors.

    Returns (alike undirected edges, directed dot→dot edges, directed edges
    leaving a dot) per vector.
    """
    values = np.asarray(values, dtype=np.uint64).reshape(-1)
    one = np.uint64(1)
    alike = np.zeros(values.size, dtype=np.int64)
    dot_dot = np.zeros(values.size, dtype=np.int64)
    for a, b in g.edges:
        va = (values >> np.uint64(a)) & one
        vb = (values >> np.uint64(b)) & one
        alike += va == vb
        dot_dot += 2 * (va & vb).astype(np.int64)
    degrees = np.array([len(nbrs) for nbrs in g.adjacency], dtype=np.int64)
    outgoing = np.zeros(values.size, dtype=np.int64)
    for block in range(g.k):
        outgoing += degrees[block] * ((values >> np.uint64(block)) & one).astype(np.int64)
    return alike, dot_dot, outgoing


def _check_length(g: DualGraph, dist: VoterDistribution) -> None:
    if dist.k != g.k:
        raise InvalidArgumentError(f"distribution covers {dist.k} blocks, graph has {g.k}")

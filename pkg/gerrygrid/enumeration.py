from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterator, Sequence

import numpy as np

from .districting import DistrictingPlan, apply_permutation, complement_reaches_border
from .errors import InvalidArgumentError, UnsupportedError
from .grid_graph import DualGraph, grid_graph, reachable

LOGGER = logging.getLogger(__name__)

MAX_GRID_SIDE = 6


@dataclass(frozen=True)
class VoterDistribution:
    """Binary labelling of k blocks; bit i is 1 when block i leans to the party of interest."""

    bits: int
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidArgumentError("a voter distribution needs at least one block")
        if not 0 <= self.bits < (1 << self.k):
            raise InvalidArgumentError(f"bits {self.bits:#x} do not fit in {self.k} blocks")

    @property
    def num(self) -> int:
        return self.bits.bit_count()

    def complement(self) -> "VoterDistribution":
        return VoterDistribution(((1 << self.k) - 1) ^ self.bits, self.k)

    def value(self, block: int) -> int:
        return (self.bits >> block) & 1

    def to_hex(self) -> str:
        return format(self.bits, f"0{(self.k + 3) // 4}x")

    @staticmethod
    def from_blocks(blocks: Sequence[int], k: int) -> "VoterDistribution":
        bits = 0
        for b in blocks:
            bits |= 1 << b
        return VoterDistribution(bits, k)

    @staticmethod
    def from_grid(text: str) -> "VoterDistribution":
        """Parse rows of '.'/'*' (or '0'/'1'); row 0 first, row-major bit order."""
        rows = [line.strip().replace(" ", "") for line in text.strip().splitlines() if line.strip()]
        cells = "".join(rows)
        if not cells or any(ch not in ".*01" for ch in cells):
            raise InvalidArgumentError("grid text may only contain '.', '*', '0' or '1'")
        bits = 0
        for index, ch in enumerate(cells):
            if ch in "*1":
                bits |= 1 << index
        return VoterDistribution(bits, len(cells))


@dataclass(frozen=True)
class PlanSet:
    """The legal plans of one graph (all n×n grid plans when n is set)."""

    n: int | None
    plans: tuple[DistrictingPlan, ...]

    def __len__(self) -> int:
        return len(self.plans)

    def __iter__(self) -> Iterator[DistrictingPlan]:
        return iter(self.plans)

    @property
    def k(self) -> int:
        return self.plans[0].k if self.plans else 0

    @property
    def n_districts(self) -> int:
        return self.plans[0].n_districts if self.plans else 0


def enumerate_plans(n: int) -> PlanSet:
    """All partitions of the n×n grid into n contiguous districts of n blocks."""
    if not 1 <= n <= MAX_GRID_SIDE:
        raise UnsupportedError(f"plan enumeration supports 1 <= n <= {MAX_GRID_SIDE}, got {n}")
    if n == MAX_GRID_SIDE:
        LOGGER.warning("Enumerating %sx%s plans; expect a long run.", n, n)
    plans = enumerate_graph_plans(grid_graph(n, n), n)
    return PlanSet(n=n, plans=plans)


def enumerate_graph_plans(g: DualGraph, n_districts: int) -> tuple[DistrictingPlan, ...]:
    """Every legal plan of `g` into `n_districts` equal districts, sorted by assignment.

    Backtracks on the lowest unassigned block, growing the district that owns
    it to full size before moving on, so labels come out canonical and each
    partition is produced once.
    """
    if n_districts < 1 or g.k % n_districts:
        raise InvalidArgumentError(f"{g.k} blocks cannot be split into {n_districts} equal districts")
    size = g.k // n_districts

    found: list[DistrictingPlan] = []
    districts: list[int] = []

    def place(unassigned: int) -> None:
        if not unassigned:
            if all(complement_reaches_border(g, d) for d in districts):
                found.append(_plan_from_masks(g.k, districts))
            return
        root = unassigned & -unassigned
        for district in _connected_sets(g, root, unassigned, size):
            rest = unassigned & ~district
            if not _components_divisible(g, rest, size):
                continue
            districts.append(district)
            place(rest)
            districts.pop()

    place(g.full_mask)
    found.sort(key=lambda plan: plan.assignment)
    LOGGER.info("Enumerated %s plans of %s blocks into %s districts", len(found), g.k, n_districts)
    return tuple(found)


def _connected_sets(g: DualGraph, root: int, allowed: int, size: int) -> Iterator[int]:
    """Connected subsets of `allowed` that contain `root`, each exactly once."""
    root_nbrs = g.neighbor_masks[root.bit_length() - 1] & allowed

    def grow(current: int, untried: int, seen: int, count: int) -> Iterator[int]:
        if count == size:
            yield current
            return
        while untried:
            low = untried & -untried
            untried ^= low
            fresh = g.neighbor_masks[low.bit_length() - 1] & allowed & ~seen
            yield from grow(current | low, untried | fresh, seen | fresh, count + 1)

    yield from grow(root, root_nbrs, root | root_nbrs, 1)


def _components_divisible(g: DualGraph, region: int, size: int) -> bool:
    remaining = region
    while remaining:
        component = reachable(g, remaining & -remaining, region)
        if component.bit_count() % size:
            return False
        remaining &= ~component
    return True


def _plan_from_masks(k: int, masks: Sequence[int]) -> DistrictingPlan:
    assignment = [0] * k
    for label, mask in enumerate(masks):
        rest = mask
        while rest:
            low = rest & -rest
            assignment[low.bit_length() - 1] = label
            rest ^= low
    return DistrictingPlan(tuple(assignment))


def enumerate_distributions(k: int, num: int | None = None) -> Iterator[VoterDistribution]:
    return (VoterDistribution(bits, k) for bits in iter_distribution_bits(k, num))


def iter_distribution_bits(k: int, num: int | None = None, start: int = 0) -> Iterator[int]:
    """Bit vectors over k blocks in increasing numeric order, optionally of fixed popcount.

    `start` skips every vector below it (used to resume a sweep).
    """
    if k < 1:
        raise InvalidArgumentError(f"k must be positive, got {k}")
    if num is not None and not 0 <= num <= k:
        raise InvalidArgumentError(f"num must lie in [0, {k}], got {num}")
    if num is None:
        return iter(range(max(start, 0), 1 << k))
    return _walk_popcount(k, num, start)


def _walk_popcount(k: int, num: int, start: int) -> Iterator[int]:
    limit = 1 << k
    if num == 0:
        if start <= 0:
            yield 0
        return

    bits = (1 << num) - 1
    if start > bits:
        bits = _first_with_popcount_at_least(start, num, k)
        if bits is None:
            return
    while bits < limit:
        yield bits
        # Gosper's hack: next larger integer with the same popcount
        low = bits & -bits
        ripple = bits + low
        bits = (((ripple ^ bits) >> 2) // low) | ripple


def _first_with_popcount_at_least(start: int, num: int, k: int) -> int | None:
    """Smallest integer >= start with exactly `num` set bits and below 2**k."""
    candidate = start
    while candidate < (1 << k):
        ones = candidate.bit_count()
        if ones == num:
            return candidate
        if ones > num:
            # clear low set bits by carrying past the lowest one
            low = candidate & -candidate
            candidate += low
            continue
        # too few ones: fill the lowest zero bits
        fill = candidate
        needed = num - ones
        position = 0
        while needed:
            if not (fill >> position) & 1:
                fill |= 1 << position
                needed -= 1
            position += 1
        return fill if fill < (1 << k) else None
    return None


def distribution_count(k: int, num: int | None = None) -> int:
    return (1 << k) if num is None else comb(k, num)


def random_distribution(k: int, num: int, rng: np.random.Generator) -> VoterDistribution:
    """Uniform draw among the C(k, num) distributions with `num` dots."""
    if not 0 <= num <= k:
        raise InvalidArgumentError(f"num must lie in [0, {k}], got {num}")
    chosen = rng.choice(k, size=num, replace=False)
    bits = 0
    for b in chosen:
        bits |= 1 << int(b)
    return VoterDistribution(bits, k)


@lru_cache(maxsize=None)
def square_symmetries(n: int) -> tuple[tuple[int, ...], ...]:
    """The 8 block permutations of the square's symmetry group; identity first."""
    if n < 1:
        raise InvalidArgumentError(f"grid side must be positive, got {n}")
    last = n - 1
    maps = (
        lambda r, c: (r, c),
        lambda r, c: (c, last - r),
        lambda r, c: (last - r, last - c),
        lambda r, c: (last - c, r),
        lambda r, c: (r, last - c),
        lambda r, c: (last - r, c),
        lambda r, c: (c, r),
        lambda r, c: (last - c, last - r),
    )
    perms = []
    for transform in maps:
        perm = []
        for block in range(n * n):
            row, col = divmod(block, n)
            new_row, new_col = transform(row, col)
            perm.append(new_row * n + new_col)
        perms.append(tuple(perm))
    return tuple(perms)


def grid_side(k: int) -> int:
    n = int(round(k ** 0.5))
    if n * n != k:
        raise InvalidArgumentError(f"{k} blocks do not form a square grid")
    return n


def permute_bits(bits: int, perm: Sequence[int]) -> int:
    image = 0
    rest = bits
    while rest:
        low = rest & -rest
        image |= 1 << perm[low.bit_length() - 1]
        rest ^= low
    return image


def symmetry_images(dist: VoterDistribution, n: int | None = None) -> list[int]:
    side = grid_side(dist.k) if n is None else n
    if side * side != dist.k:
        raise InvalidArgumentError(f"{dist.k} blocks do not form a {side}x{side} grid")
    return [permute_bits(dist.bits, perm) for perm in square_symmetries(side)]


def canonicalize(dist: VoterDistribution, n: int) -> VoterDistribution:
    """Numerically smallest image of `dist` under the 8 square symmetries."""
    return VoterDistribution(min(symmetry_images(dist, n)), dist.k)


def orbit_size(dist: VoterDistribution, n: int) -> int:
    return len(set(symmetry_images(dist, n)))


def canonicalize_many(values: np.ndarray, n: int) -> np.ndarray:
    """Vectorised canonicalize over an array of bit vectors (uint64)."""
    values = np.asarray(values, dtype=np.uint64)
    best = values.copy()
    one = np.uint64(1)
    for perm in square_symmetries(n)[1:]:
        image = np.zeros_like(values)
        for block, target in enumerate(perm):
            image |= ((values >> np.uint64(block)) & one) << np.uint64(target)
        np.minimum(best, image, out=best)
    return best


def burnside_count(n: int) -> int:
    """Number of symmetry orbits of n×n binary grids: mean of 2**cycles over the group."""
    total = 0
    for perm in square_symmetries(n):
        total += 1 << _cycle_count(perm)
    return total // 8


def _cycle_count(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    cycles = 0
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycles += 1
        node = start
        while not seen[node]:
            seen[node] = True
            node = perm[node]
    return cycles


def count_canonical_forms(n: int, chunk: int = 1 << 20) -> int:
    """Brute-force orbit count: vectors that are their own canonical form."""
    total = 1 << (n * n)
    count = 0
    for offset in range(0, total, chunk):
        values = np.arange(offset, min(offset + chunk, total), dtype=np.uint64)
        count += int(np.count_nonzero(canonicalize_many(values, n) == values))
    return count


def plan_images(plan: DistrictingPlan, n: int) -> list[DistrictingPlan]:
    return [apply_permutation(plan, perm) for perm in square_symmetries(n)]


def is_symmetry_closed(plans: PlanSet) -> bool:
    if plans.n is None:
        raise InvalidArgumentError("symmetry closure is defined for square grids only")
    members = set(plans.plans)
    return all(image in members for plan in plans for image in plan_images(plan, plans.n))

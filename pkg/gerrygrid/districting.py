from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .errors import InvalidArgumentError
from .grid_graph import BlockId, DualGraph, GridShape, mask_of, reachable


@dataclass(frozen=True)
class DistrictMask:
    """k-bit vector marking the blocks of one district."""

    bits: int

    @property
    def size(self) -> int:
        return self.bits.bit_count()


def canonical_labels(assignment: Iterable[int]) -> tuple[int, ...]:
    """Relabel districts in order of first appearance along block index."""
    mapping: dict[int, int] = {}
    out: list[int] = []
    for label in assignment:
        if label not in mapping:
            mapping[label] = len(mapping)
        out.append(mapping[label])
    return tuple(out)


@dataclass(frozen=True)
class DistrictingPlan:
    """Block -> district assignment, stored with canonical labels.

    Two plans compare equal exactly when they describe the same set partition.
    """

    assignment: tuple[int, ...]
    n_districts: int = field(init=False)
    district_size: int = field(init=False)

    def __post_init__(self) -> None:
        labels = canonical_labels(self.assignment)
        object.__setattr__(self, "assignment", labels)
        n_districts = len(set(labels))
        object.__setattr__(self, "n_districts", n_districts)
        object.__setattr__(self, "district_size", len(labels) // n_districts if n_districts else 0)

    @staticmethod
    def from_assignment(assignment: Sequence[int]) -> "DistrictingPlan":
        return DistrictingPlan(tuple(assignment))

    @staticmethod
    def from_string(text: str) -> "DistrictingPlan":
        """Parse a digit string (one district id per block, row-major)."""
        if not text or not text.isdigit():
            raise InvalidArgumentError(f"plan string must be non-empty digits, got {text!r}")
        return DistrictingPlan(tuple(int(ch) for ch in text))

    @property
    def k(self) -> int:
        return len(self.assignment)

    def to_string(self) -> str:
        if self.n_districts > 10:
            raise InvalidArgumentError("digit rendering supports at most 10 districts")
        return "".join(str(label) for label in self.assignment)

    def districts(self) -> list[set[BlockId]]:
        groups: list[set[BlockId]] = [set() for _ in range(self.n_districts)]
        for block, label in enumerate(self.assignment):
            groups[label].add(block)
        return groups

    @cached_property
    def mask_bits(self) -> tuple[int, ...]:
        bits = [0] * self.n_districts
        for block, label in enumerate(self.assignment):
            bits[label] |= 1 << block
        return tuple(bits)

    def masks(self) -> tuple[DistrictMask, ...]:
        return tuple(DistrictMask(bits) for bits in self.mask_bits)


def is_contiguous(g: DualGraph, blocks: Iterable[BlockId]) -> bool:
    """True iff the subgraph induced on `blocks` is connected."""
    block_set = set(blocks)
    if not block_set:
        raise InvalidArgumentError("contiguity is undefined for an empty block set")
    for b in block_set:
        if not 0 <= b < g.k:
            raise InvalidArgumentError(f"block {b} lies outside [0, {g.k})")
    return mask_is_contiguous(g, mask_of(block_set))


def mask_is_contiguous(g: DualGraph, mask: int) -> bool:
    if not mask:
        return False
    low = mask & -mask
    return reachable(g, low, mask) == mask


def complement_reaches_border(g: DualGraph, district: int) -> bool:
    """Every component of the graph minus `district` contains a border block."""
    rest = g.full_mask & ~district
    remaining = rest
    while remaining:
        component = reachable(g, remaining & -remaining, rest)
        if not component & g.border_mask:
            return False
        remaining &= ~component
    return True


def is_legal(g: DualGraph, plan: DistrictingPlan) -> bool:
    """Population, contiguity and enclosure conditions of a legal plan."""
    if plan.k != g.k or plan.n_districts == 0:
        return False

    sizes = Counter(plan.assignment)
    m = plan.district_size
    if m * plan.n_districts != g.k or any(count != m for count in sizes.values()):
        return False

    for bits in plan.mask_bits:
        if not mask_is_contiguous(g, bits):
            return False
        if not complement_reaches_border(g, bits):
            return False
    return True


def apply_permutation(plan: DistrictingPlan, perm: Sequence[int]) -> DistrictingPlan:
    """Image of `plan` when block b moves to block perm[b]."""
    if len(perm) != plan.k:
        raise InvalidArgumentError(f"permutation covers {len(perm)} blocks, plan has {plan.k}")
    image = [0] * plan.k
    for block, label in enumerate(plan.assignment):
        image[perm[block]] = label
    return DistrictingPlan(tuple(image))


def render_plan(plan: DistrictingPlan, shape: GridShape) -> str:
    if plan.k != shape.rows * shape.cols:
        raise InvalidArgumentError(f"plan has {plan.k} blocks, grid has {shape.rows * shape.cols}")
    text = plan.to_string()
    return "\n".join(text[row * shape.cols:(row + 1) * shape.cols] for row in range(shape.rows))

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx

from .errors import InvalidArgumentError

LOGGER = logging.getLogger(__name__)

BlockId = int


@dataclass(frozen=True)
class GridShape:
    rows: int
    cols: int

    def block_id(self, row: int, col: int) -> BlockId:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise InvalidArgumentError(f"cell ({row}, {col}) lies outside a {self.rows}x{self.cols} grid")
        return row * self.cols + col

    def coords(self, block: BlockId) -> tuple[int, int]:
        if not 0 <= block < self.rows * self.cols:
            raise InvalidArgumentError(f"block {block} lies outside a {self.rows}x{self.cols} grid")
        return divmod(block, self.cols)

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols


@dataclass(frozen=True)
class DualGraph:
    """Blocks, undirected adjacency and border flags of a dual graph.

    Blocks are dense integers in [0, k). Grid graphs number them in row-major
    order (index = row * cols + col); every bitmask in the package relies on
    that ordering.
    """

    k: int
    edges: tuple[tuple[BlockId, BlockId], ...]
    border: tuple[bool, ...]
    shape: GridShape | None = None
    adjacency: tuple[tuple[BlockId, ...], ...] = field(init=False, repr=False, compare=False)
    neighbor_masks: tuple[int, ...] = field(init=False, repr=False, compare=False)
    border_mask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidArgumentError("a dual graph needs at least one block")
        if len(self.border) != self.k:
            raise InvalidArgumentError(f"border flags cover {len(self.border)} blocks, expected {self.k}")

        adjacency: list[list[BlockId]] = [[] for _ in range(self.k)]
        seen: set[tuple[BlockId, BlockId]] = set()
        for a, b in self.edges:
            if not (0 <= a < self.k and 0 <= b < self.k):
                raise InvalidArgumentError(f"edge ({a}, {b}) references a block outside [0, {self.k})")
            if a == b:
                raise InvalidArgumentError(f"self-loop on block {a}")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise InvalidArgumentError(f"duplicate edge {key}")
            seen.add(key)
            adjacency[a].append(b)
            adjacency[b].append(a)

        object.__setattr__(self, "adjacency", tuple(tuple(sorted(nbrs)) for nbrs in adjacency))
        object.__setattr__(
            self,
            "neighbor_masks",
            tuple(sum(1 << nb for nb in nbrs) for nbrs in adjacency),
        )
        object.__setattr__(self, "border_mask", sum(1 << b for b, flag in enumerate(self.border) if flag))

        if not is_connected(self):
            raise InvalidArgumentError("dual graph is not connected")

    @property
    def full_mask(self) -> int:
        return (1 << self.k) - 1

    @staticmethod
    def from_edges(k: int, edges: Iterable[tuple[int, int]], border: Iterable[int]) -> "DualGraph":
        """Build a general dual graph from an edge list and the border block ids."""
        border_ids = set(border)
        for b in border_ids:
            if not 0 <= b < k:
                raise InvalidArgumentError(f"border block {b} lies outside [0, {k})")
        normalized = tuple(sorted((min(a, b), max(a, b)) for a, b in edges))
        return DualGraph(k=k, edges=normalized, border=tuple(b in border_ids for b in range(k)))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.k))
        graph.add_edges_from(self.edges)
        for block in range(self.k):
            graph.nodes[block]["border"] = self.border[block]
        return graph


def grid_graph(rows: int, cols: int) -> DualGraph:
    """Square-grid dual graph with rook (4-neighbour) adjacency."""
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"grid dimensions must be positive, got {rows}x{cols}")

    edges: list[tuple[int, int]] = []
    for row in range(rows):
        for col in range(cols):
            block = row * cols + col
            if col + 1 < cols:
                edges.append((block, block + 1))
            if row + 1 < rows:
                edges.append((block, block + cols))

    border = tuple(
        row in (0, rows - 1) or col in (0, cols - 1)
        for row in range(rows)
        for col in range(cols)
    )
    return DualGraph(k=rows * cols, edges=tuple(sorted(edges)), border=border, shape=GridShape(rows, cols))


def neighbors(g: DualGraph, b: BlockId) -> set[BlockId]:
    _check_block(g, b)
    return set(g.adjacency[b])


def degree(g: DualGraph, b: BlockId) -> int:
    _check_block(g, b)
    return len(g.adjacency[b])


def is_connected(g: DualGraph) -> bool:
    return nx.is_connected(g.to_networkx())


def reachable(g: DualGraph, start: int, within: int) -> int:
    """Bitmask of blocks reachable from the blocks in `start` without leaving `within`."""
    frontier = start & within
    seen = frontier
    while frontier:
        grown = 0
        rest = frontier
        while rest:
            low = rest & -rest
            grown |= g.neighbor_masks[low.bit_length() - 1]
            rest ^= low
        frontier = grown & within & ~seen
        seen |= frontier
    return seen


def eight_block_graph() -> DualGraph:
    """The eight-block worked example, blocks A..H numbered 0..7.

    E (4) and F (5) are the only blocks not on the outer face.
    """
    names = "ABCDEFGH"
    pairs = ["AB", "BG", "GH", "HD", "DC", "CA", "AE", "EF", "FG", "GE", "EC", "FD"]
    edges = [(names.index(a), names.index(b)) for a, b in pairs]
    border = [names.index(c) for c in "ABCDGH"]
    return DualGraph.from_edges(8, edges, border)


def mask_of(blocks: Sequence[BlockId] | set[BlockId]) -> int:
    mask = 0
    for b in blocks:
        mask |= 1 << b
    return mask


def blocks_of(mask: int) -> list[BlockId]:
    out: list[BlockId] = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _check_block(g: DualGraph, b: BlockId) -> None:
    if not 0 <= b < g.k:
        raise InvalidArgumentError(f"block {b} lies outside [0, {g.k})")

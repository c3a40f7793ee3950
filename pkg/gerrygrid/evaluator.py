from __future__ import annotations

import logging
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Protocol

import numpy as np
from tenacity import retry, retry_if_exception_type, stop_after_attempt

from .districting import (
    DistrictingPlan,
    complement_reaches_border,
    is_legal,
    mask_is_contiguous,
)
from .enumeration import PlanSet, VoterDistribution, _components_divisible
from .errors import InitializationError, InvalidArgumentError
from .grid_graph import DualGraph
from .logging_utils import ProgressReporter
from .metrics import RepTable

LOGGER = logging.getLogger(__name__)

DEFAULT_BURN_IN = 1000
DEFAULT_THINNING = 10
DEFAULT_INIT_ATTEMPTS = 200


class Backend(Protocol):
    name: str
    k: int

    def evaluate(self, dist: VoterDistribution) -> float: ...


class ExactBackend:
    """Mean seats over every plan of the set."""

    name = "exact"

    def __init__(self, plans: PlanSet) -> None:
        self._table = RepTable(plans)
        self.k = self._table.k

    def evaluate(self, dist: VoterDistribution) -> float:
        return self._table.expectation(dist.bits)


class SampledBackend:
    """Mean seats over `sample_size` plans drawn uniformly with replacement.

    With `full_pass` every plan is visited exactly once in a seeded order, so
    the estimate equals the exact value.
    """

    name = "sampled"

    def __init__(self, plans: PlanSet, sample_size: int, seed: int, full_pass: bool = False) -> None:
        if sample_size < 1:
            raise InvalidArgumentError(f"sample_size must be positive, got {sample_size}")
        self._table = RepTable(plans)
        self.k = self._table.k
        rng = np.random.default_rng(seed)
        if full_pass:
            self._indices = rng.permutation(len(plans))
        else:
            self._indices = rng.integers(0, len(plans), size=sample_size)
        self.sample_size = int(self._indices.size)

    def evaluate(self, dist: VoterDistribution) -> float:
        return self._table.mean_over(dist.bits, self._indices)


@dataclass
class ChainState:
    """Current plan of a boundary-swap Markov chain over legal plans."""

    graph: DualGraph
    assignment: list[int]
    n_districts: int
    rng: np.random.Generator
    step: int = 0
    accepted: int = 0
    debug: bool = False

    @property
    def plan(self) -> DistrictingPlan:
        return DistrictingPlan(tuple(self.assignment))

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.step if self.step else 0.0


class ChainBackend:
    """Mean seats over thinned post-burn-in states of one seeded chain.

    The chain is run once, on first use, and the same sampled plans serve every
    later evaluation.
    """

    name = "chain"

    def __init__(
        self,
        graph: DualGraph,
        n_districts: int,
        steps: int,
        seed: int,
        burn_in: int = DEFAULT_BURN_IN,
        thinning: int = DEFAULT_THINNING,
        debug: bool = False,
    ) -> None:
        if steps < 1 or burn_in < 0 or thinning < 1:
            raise InvalidArgumentError("chain needs steps >= 1, burn_in >= 0 and thinning >= 1")
        self.graph = graph
        self.k = graph.k
        self.n_districts = n_districts
        self.steps = steps
        self.burn_in = burn_in
        self.thinning = thinning
        self.seed = seed
        self.debug = debug
        self.acceptance_rate: float | None = None
        self._lock = threading.Lock()
        self._table: RepTable | None = None
        self._indices: np.ndarray | None = None

    def _ensure_sample(self) -> tuple[RepTable, np.ndarray]:
        with self._lock:
            if self._table is None or self._indices is None:
                state = new_chain(self.graph, self.n_districts, self.seed, debug=self.debug)
                samples = sample_chain(state, self.steps, self.burn_in, self.thinning)
                self.acceptance_rate = state.acceptance_rate
                unique = sorted(set(samples), key=lambda plan: plan.assignment)
                position = {plan: index for index, plan in enumerate(unique)}
                self._table = RepTable(PlanSet(n=None, plans=tuple(unique)))
                self._indices = np.array([position[plan] for plan in samples], dtype=np.int64)
                LOGGER.info(
                    "Chain sampled %s states (%s distinct plans, acceptance %.3f)",
                    len(samples),
                    len(unique),
                    state.acceptance_rate,
                )
            return self._table, self._indices

    def evaluate(self, dist: VoterDistribution) -> float:
        table, indices = self._ensure_sample()
        return table.mean_over(dist.bits, indices)


@dataclass
class Evaluator:
    """Pluggable estimator of expected seats for a voter distribution."""

    backend: Backend
    calls: int = field(default=0, init=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    @property
    def name(self) -> str:
        return self.backend.name

    def __call__(self, dist: VoterDistribution) -> float:
        return evaluate(self, dist)


def evaluate(e: Evaluator, dist: VoterDistribution) -> float:
    if dist.k != e.backend.k:
        raise InvalidArgumentError(f"distribution covers {dist.k} blocks, evaluator expects {e.backend.k}")
    with e._lock:
        e.calls += 1
    return e.backend.evaluate(dist)


def build_evaluator(
    kind: str,
    *,
    plans: PlanSet | None = None,
    graph: DualGraph | None = None,
    n_districts: int | None = None,
    sample_size: int = 1000,
    full_pass: bool = False,
    steps: int = 10_000,
    burn_in: int = DEFAULT_BURN_IN,
    thinning: int = DEFAULT_THINNING,
    seed: int = 0,
    debug: bool = False,
) -> Evaluator:
    if kind == "exact":
        if plans is None:
            raise InvalidArgumentError("exact evaluation needs a plan set")
        return Evaluator(ExactBackend(plans))
    if kind == "sampled":
        if plans is None:
            raise InvalidArgumentError("sampled evaluation needs a plan set")
        return Evaluator(SampledBackend(plans, sample_size, seed, full_pass=full_pass))
    if kind == "chain":
        if graph is None or n_districts is None:
            raise InvalidArgumentError("chain evaluation needs a graph and a district count")
        return Evaluator(ChainBackend(graph, n_districts, steps, seed, burn_in, thinning, debug))
    raise InvalidArgumentError(f"unknown evaluator {kind!r}; expected exact, sampled or chain")


class _GrowthFailed(Exception):
    """A random district growth dead-ended; retried."""


def new_chain(
    g: DualGraph,
    n_districts: int,
    seed: int,
    *,
    attempts: int = DEFAULT_INIT_ATTEMPTS,
    debug: bool = False,
) -> ChainState:
    rng = np.random.default_rng(seed)
    assignment = initial_assignment(g, n_districts, rng, attempts=attempts)
    return ChainState(graph=g, assignment=assignment, n_districts=n_districts, rng=rng, debug=debug)


def initial_assignment(
    g: DualGraph,
    n_districts: int,
    rng: np.random.Generator,
    attempts: int = DEFAULT_INIT_ATTEMPTS,
) -> list[int]:
    """A legal starting plan: snake stripes on grids, random growth otherwise."""
    if n_districts < 1 or g.k % n_districts:
        raise InitializationError(f"{g.k} blocks cannot be split into {n_districts} equal districts")

    if g.shape is not None:
        snake = _snake_assignment(g, n_districts)
        if is_legal(g, DistrictingPlan(tuple(snake))):
            return snake
        LOGGER.debug("Snake stripes are not legal here; falling back to random growth.")

    @retry(
        reraise=True,
        stop=stop_after_attempt(attempts),
        retry=retry_if_exception_type(_GrowthFailed),
    )
    def _attempt() -> list[int]:
        return _grow_random_assignment(g, n_districts, rng)

    try:
        return _attempt()
    except _GrowthFailed as exc:
        raise InitializationError(
            f"no legal plan found after {attempts} random growth attempts"
        ) from exc


def _snake_assignment(g: DualGraph, n_districts: int) -> list[int]:
    assert g.shape is not None
    rows, cols = g.shape.rows, g.shape.cols
    size = g.k // n_districts
    order: list[int] = []
    for row in range(rows):
        cells = range(cols) if row % 2 == 0 else range(cols - 1, -1, -1)
        order.extend(row * cols + col for col in cells)
    assignment = [0] * g.k
    for position, block in enumerate(order):
        assignment[block] = position // size
    return assignment


def _grow_random_assignment(g: DualGraph, n_districts: int, rng: np.random.Generator) -> list[int]:
    size = g.k // n_districts
    unassigned = g.full_mask
    masks: list[int] = []
    while unassigned:
        district = unassigned & -unassigned
        while district.bit_count() < size:
            frontier = 0
            rest = district
            while rest:
                low = rest & -rest
                frontier |= g.neighbor_masks[low.bit_length() - 1]
                rest ^= low
            frontier &= unassigned & ~district
            if not frontier:
                raise _GrowthFailed()
            candidates = _bits(frontier)
            district |= 1 << candidates[int(rng.integers(len(candidates)))]
        unassigned &= ~district
        if not _components_divisible(g, unassigned, size):
            raise _GrowthFailed()
        masks.append(district)

    assignment = [0] * g.k
    for label, mask in enumerate(masks):
        for block in _bits(mask):
            assignment[block] = label
    if not is_legal(g, DistrictingPlan(tuple(assignment))):
        raise _GrowthFailed()
    return assignment


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _swap_candidates(g: DualGraph, assignment: list[int]) -> dict[tuple[int, int], list[int]]:
    """Blocks of district A touching district B, keyed (A, B)."""
    touching: dict[tuple[int, int], set[int]] = {}
    for block, label in enumerate(assignment):
        for nb in g.adjacency[block]:
            other = assignment[nb]
            if other != label:
                touching.setdefault((label, other), set()).add(block)
    return {key: sorted(blocks) for key, blocks in touching.items()}


def _pair_weights(touching: Mapping[tuple[int, int], list[int]]) -> list[tuple[tuple[int, int], int]]:
    weights = []
    for (a, b), blocks in sorted(touching.items()):
        if a < b:
            weights.append(((a, b), len(blocks) * len(touching.get((b, a), ()))))
    return weights


def chain_step(s: ChainState) -> ChainState:
    """One balanced boundary exchange, Metropolis–Hastings corrected.

    Picks a district pair with probability proportional to the number of
    (u, v) candidate swaps it offers, swaps u and v, and keeps the result
    only when it is legal and passes min(1, N_old / N_new), N being the total
    candidate count. Rejection leaves the state unchanged.
    """
    s.step += 1
    g = s.graph
    touching = _swap_candidates(g, s.assignment)
    weights = _pair_weights(touching)
    total = sum(weight for _, weight in weights)
    if total == 0:
        return s

    target = int(s.rng.integers(total))
    for (a, b), weight in weights:
        if target < weight:
            break
        target -= weight
    side_a = touching[(a, b)]
    side_b = touching[(b, a)]
    u = side_a[int(s.rng.integers(len(side_a)))]
    v = side_b[int(s.rng.integers(len(side_b)))]

    s.assignment[u], s.assignment[v] = b, a
    mask_a = 0
    mask_b = 0
    for block, label in enumerate(s.assignment):
        if label == a:
            mask_a |= 1 << block
        elif label == b:
            mask_b |= 1 << block

    legal = (
        mask_is_contiguous(g, mask_a)
        and mask_is_contiguous(g, mask_b)
        and complement_reaches_border(g, mask_a)
        and complement_reaches_border(g, mask_b)
    )
    if legal:
        new_total = sum(weight for _, weight in _pair_weights(_swap_candidates(g, s.assignment)))
        if new_total <= total or s.rng.random() < total / new_total:
            s.accepted += 1
            if s.debug:
                assert is_legal(g, s.plan), "chain reached an illegal plan"
            return s

    s.assignment[u], s.assignment[v] = a, b
    return s


def run_chain(state: ChainState, steps: int) -> Iterator[ChainState]:
    for _ in range(steps):
        yield chain_step(state)


def sample_chain(state: ChainState, steps: int, burn_in: int, thinning: int) -> list[DistrictingPlan]:
    """Plans visited every `thinning` steps after `burn_in` steps."""
    progress = ProgressReporter(LOGGER, "chain steps", total=burn_in + steps)
    for _ in run_chain(state, burn_in):
        progress.advance()
    samples: list[DistrictingPlan] = []
    for index, current in enumerate(run_chain(state, steps), start=1):
        progress.advance()
        if index % thinning == 0:
            samples.append(current.plan)
    progress.finish()
    if not samples:
        samples.append(state.plan)
    return samples


def empirical_plan_frequencies(
    g: DualGraph,
    n_districts: int,
    steps: int,
    seed: int,
    burn_in: int = 0,
) -> Counter[DistrictingPlan]:
    state = new_chain(g, n_districts, seed)
    counts: Counter[DistrictingPlan] = Counter()
    for _ in run_chain(state, burn_in):
        pass
    for current in run_chain(state, steps):
        counts[current.plan] += 1
    return counts


def total_variation(p: Mapping[object, float], q: Mapping[object, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(key, 0.0) - q.get(key, 0.0)) for key in keys)

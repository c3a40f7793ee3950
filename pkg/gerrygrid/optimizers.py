from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .enumeration import VoterDistribution, random_distribution
from .errors import InvalidArgumentError, UsageError
from .evaluator import Evaluator, evaluate
from .grid_graph import DualGraph
from .metrics import unhappy_blocks

LOGGER = logging.getLogger(__name__)

# Loop iterations allowed per unit of evaluation budget; revisits are free, so a
# walk stuck on memoised states needs another way out.
ITERATIONS_PER_EVALUATION = 50
_MIN_TEMPERATURE = 1e-300


@dataclass(frozen=True)
class OptimizerConfig:
    theta: float = 0.4
    t0: float = 1.0
    alpha: float = 0.95
    theta_r: float = 0.05
    n_swap: int = 4
    k_max: int = 1000
    seed: int = 0
    cool_every_step: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidArgumentError(f"theta must lie in [0, 1], got {self.theta}")
        if not self.t0 > 0.0:
            raise InvalidArgumentError(f"t0 must be positive, got {self.t0}")
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidArgumentError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.theta_r <= 1.0:
            raise InvalidArgumentError(f"theta_r must lie in [0, 1], got {self.theta_r}")
        if self.n_swap < 2:
            raise InvalidArgumentError(f"n_swap must be at least 2, got {self.n_swap}")
        if self.k_max < 1:
            raise InvalidArgumentError(f"k_max must be at least 1, got {self.k_max}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class TrialResult:
    best_distribution: VoterDistribution
    best_score: float
    best_so_far: tuple[float, ...]

    @property
    def evaluations(self) -> int:
        return len(self.best_so_far)

    def best_within(self, budget: int) -> float:
        """Best score seen after at most `budget` evaluations."""
        if budget < 1:
            raise InvalidArgumentError(f"budget must be at least 1, got {budget}")
        return self.best_so_far[min(budget, len(self.best_so_far)) - 1]


class TrialRecord:
    """Memoised evaluation log of one trial with a hard evaluation budget.

    Revisiting a distribution returns its cached score without spending budget.
    The argmax keeps the earliest-visited distribution on ties.
    """

    def __init__(self, evaluator: Evaluator, budget: int, memoize: bool = True) -> None:
        self._evaluator = evaluator
        self._budget = budget
        self._memoize = memoize
        self._scores: dict[int, float] = {}
        self._curve: list[float] = []
        self._best: VoterDistribution | None = None
        self._best_score = -math.inf

    @property
    def exhausted(self) -> bool:
        return len(self._curve) >= self._budget

    @property
    def evaluations(self) -> int:
        return len(self._curve)

    def score(self, dist: VoterDistribution) -> float | None:
        """Score of `dist`, or None once the budget is spent and `dist` is new."""
        if self._memoize and dist.bits in self._scores:
            return self._scores[dist.bits]
        if self.exhausted:
            return None
        value = evaluate(self._evaluator, dist)
        self._scores[dist.bits] = value
        if value > self._best_score:
            self._best = dist
            self._best_score = value
        self._curve.append(self._best_score)
        return value

    def result(self) -> TrialResult:
        if self._best is None:
            raise InvalidArgumentError("no distribution was evaluated")
        return TrialResult(self._best, self._best_score, tuple(self._curve))


def evolve(g: DualGraph, dist: VoterDistribution, theta: float, rng: np.random.Generator) -> VoterDistribution:
    """Shuffle the votes of the unhappy blocks among themselves."""
    return _shuffle_blocks(dist, unhappy_blocks(g, dist, theta), rng)


def step_random(dist: VoterDistribution, n_swap: int, rng: np.random.Generator) -> VoterDistribution:
    """Shuffle the votes of `n_swap` distinct blocks chosen uniformly."""
    if not 2 <= n_swap <= dist.k:
        raise InvalidArgumentError(f"n_swap must lie in [2, {dist.k}], got {n_swap}")
    chosen = sorted(int(b) for b in rng.choice(dist.k, size=n_swap, replace=False))
    return _shuffle_blocks(dist, chosen, rng)


def _shuffle_blocks(dist: VoterDistribution, blocks: list[int], rng: np.random.Generator) -> VoterDistribution:
    if len(blocks) < 2:
        return dist
    values = [dist.value(b) for b in blocks]
    order = rng.permutation(len(values))
    bits = dist.bits
    for block, source in zip(blocks, order):
        if values[source]:
            bits |= 1 << block
        else:
            bits &= ~(1 << block)
    return VoterDistribution(bits, dist.k)


def prob_accept(delta_score: float, t: float) -> float:
    """Metropolis acceptance weight e^(delta/t); values above 1 mean certain acceptance."""
    if not t > 0:
        raise InvalidArgumentError(f"temperature must be positive, got {t}")
    try:
        return math.exp(delta_score / t)
    except OverflowError:
        return math.inf


def rrils(
    e: Evaluator,
    g: DualGraph,
    num: int,
    cfg: OptimizerConfig,
    rng: np.random.Generator | None = None,
) -> TrialResult:
    """Randomly restarted iterated local search over cellular-automaton moves.

    Each restart evolves a fresh random distribution until no block is unhappy
    or one shuffle leaves the distribution unchanged.
    """
    rng = cfg.rng() if rng is None else rng
    record = TrialRecord(e, cfg.k_max)
    iterations = 0
    cap = cfg.k_max * ITERATIONS_PER_EVALUATION

    while not record.exhausted and iterations < cap:
        current = random_distribution(g.k, num, rng)
        iterations += 1
        if record.score(current) is None:
            break
        while not record.exhausted and iterations < cap:
            unhappy = unhappy_blocks(g, current, cfg.theta)
            if not unhappy:
                break
            evolved = _shuffle_blocks(current, unhappy, rng)
            iterations += 1
            if evolved == current:
                break
            current = evolved
            record.score(current)

    LOGGER.debug("rrils: %s evaluations in %s iterations", record.evaluations, iterations)
    return record.result()


def _anneal(
    e: Evaluator,
    g: DualGraph,
    num: int,
    cfg: OptimizerConfig,
    rng: np.random.Generator,
    propose: Callable[[VoterDistribution], VoterDistribution],
    theta_r: float,
    label: str,
) -> TrialResult:
    record = TrialRecord(e, cfg.k_max)
    temperature = cfg.t0
    current = random_distribution(g.k, num, rng)
    score = record.score(current)
    assert score is not None
    iterations = 0
    cap = cfg.k_max * ITERATIONS_PER_EVALUATION

    while not record.exhausted and iterations < cap:
        iterations += 1
        proposal = propose(current)
        proposed_score = record.score(proposal)
        if proposed_score is None:
            break
        if rng.random() < prob_accept(proposed_score - score, temperature):
            current, score = proposal, proposed_score
            if not cfg.cool_every_step:
                temperature = max(temperature * cfg.alpha, _MIN_TEMPERATURE)
        elif theta_r > 0 and rng.random() < theta_r:
            restart = random_distribution(g.k, num, rng)
            restart_score = record.score(restart)
            if restart_score is None:
                break
            current, score = restart, restart_score
        if cfg.cool_every_step:
            temperature = max(temperature * cfg.alpha, _MIN_TEMPERATURE)

    LOGGER.debug(
        "%s: %s evaluations in %s iterations, final temperature %.3g",
        label,
        record.evaluations,
        iterations,
        temperature,
    )
    return record.result()


def simulated_anneal(
    e: Evaluator,
    g: DualGraph,
    num: int,
    cfg: OptimizerConfig,
    rng: np.random.Generator | None = None,
) -> TrialResult:
    """Annealing over evolve proposals with random restarts at rate theta_r."""
    rng = cfg.rng() if rng is None else rng
    return _anneal(
        e,
        g,
        num,
        cfg,
        rng,
        lambda dist: evolve(g, dist, cfg.theta, rng),
        cfg.theta_r,
        "sa",
    )


def rsa(
    e: Evaluator,
    g: DualGraph,
    num: int,
    cfg: OptimizerConfig,
    rng: np.random.Generator | None = None,
) -> TrialResult:
    """Annealing over random n_swap shuffles, without restarts."""
    rng = cfg.rng() if rng is None else rng
    if not 2 <= cfg.n_swap <= g.k:
        raise InvalidArgumentError(f"n_swap must lie in [2, {g.k}], got {cfg.n_swap}")
    return _anneal(
        e,
        g,
        num,
        cfg,
        rng,
        lambda dist: step_random(dist, cfg.n_swap, rng),
        0.0,
        "rsa",
    )


def random_benchmark(
    e: Evaluator,
    g: DualGraph,
    num: int,
    k_max: int,
    rng: np.random.Generator,
) -> TrialResult:
    """Best of `k_max` independent uniform draws with `num` dots."""
    if not 0 <= num <= g.k:
        raise InvalidArgumentError(f"num must lie in [0, {g.k}], got {num}")
    if k_max < 1:
        raise InvalidArgumentError(f"k_max must be at least 1, got {k_max}")
    record = TrialRecord(e, k_max, memoize=False)
    while not record.exhausted:
        record.score(random_distribution(g.k, num, rng))
    return record.result()


Algorithm = Callable[[Evaluator, DualGraph, int, OptimizerConfig, np.random.Generator], TrialResult]

ALGORITHMS: dict[str, Algorithm] = {
    "rrils": rrils,
    "sa": simulated_anneal,
    "rsa": rsa,
    "random": lambda e, g, num, cfg, rng: random_benchmark(e, g, num, cfg.k_max, rng),
}


def resolve_algorithm(name: str) -> Algorithm:
    try:
        return ALGORITHMS[name]
    except KeyError:
        raise UsageError(
            f"unknown algorithm {name!r}; choose from {', '.join(sorted(ALGORITHMS))}"
        ) from None


def run_trial(
    name: str,
    e: Evaluator,
    g: DualGraph,
    num: int,
    cfg: OptimizerConfig,
    rng: np.random.Generator | None = None,
) -> TrialResult:
    algorithm = resolve_algorithm(name)
    return algorithm(e, g, num, cfg, cfg.rng() if rng is None else rng)

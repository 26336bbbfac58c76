# coalition_utils/oracles.py
"""Slow, direct reference computations used to cross-check the engine in tests."""

import logging
from dataclasses import dataclass
from itertools import combinations, product
from typing import Dict, Optional, Set, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from coalition_utils.kelly import KellySystem, partitions_from_profile, player_utility
from coalition_utils.partitions import Coalition, Partition, all_coalitions, check_cap, enumerate_partitions
from coalition_utils.queue_stability import Configuration
from coalition_utils.verdicts import BlockingWitness, BlockKind, exceeds
from coalition_utils.wardrop import QueueSystem, solve_we

logger = logging.getLogger(__name__)


class OracleDidNotConverge(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_agents: int = 6
    grid_points: int = 2001
    max_iters: int = 10_000
    tolerance: float = 1e-7
    damping: float = 0.3

    def __post_init__(self):
        if min(self.max_agents, self.grid_points, self.max_iters) < 1 or self.tolerance <= 0:
            raise ValueError(f"Oracle budget entries must be positive: {self}")


@dataclass(frozen=True)
class BestResponseResult:
    coalition_utilities: Tuple[float, ...]
    aggregate_actions: Tuple[float, ...]
    adamant_utility: Optional[float]
    iterations: int


def pessimal_rate_exhaustive(sys: QueueSystem, q: Coalition, budget: OracleBudget = OracleBudget()) -> float:
    check_cap(sys.n, budget.max_agents, "Exhaustive pessimal rate")
    q = frozenset(q)
    return min(solve_we(sys, p).rate_of(q) for p in enumerate_partitions(sys.n) if q in p)


def gbpa_exhaustive_witness(
    sys: QueueSystem, cfg: Configuration, budget: OracleBudget = OracleBudget()
) -> Optional[BlockingWitness]:
    check_cap(sys.n, budget.max_agents, "Exhaustive GB-PA search")
    agents = frozenset(range(1, sys.n + 1))
    for q in all_coalitions(sys.n):
        if q == agents or q in cfg.partition:
            continue
        anticipated = pessimal_rate_exhaustive(sys, q, budget)
        prevailing = sum(cfg.payoff[i - 1] for i in q)
        if exceeds(anticipated, prevailing):
            return BlockingWitness(q, BlockKind.GENERAL, anticipated, prevailing)
    return None


def _best_response(factor, rivals, gamma, grid):
    def utility(x):
        return factor * x / (factor * x + rivals) - gamma * x

    values = factor * grid / (factor * grid + rivals) - gamma * grid
    idx = int(np.argmax(values))
    lo = grid[max(idx - 1, 0)]
    hi = grid[min(idx + 1, len(grid) - 1)]
    refined = minimize_scalar(lambda x: -utility(x), bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
    best = float(refined.x)
    return best if utility(best) >= values[idx] else float(grid[idx])


def best_response_rsg(sys: KellySystem, p: Partition, budget: OracleBudget = OracleBudget()) -> BestResponseResult:
    """Damped synchronous best responses on one bid per coalition (plus the adamant player)."""
    check_cap(sys.n, budget.max_agents, "Best-response oracle")
    factors = [max(sys.influence[i - 1] for i in c) for c in p.coalitions]
    if sys.has_adamant:
        factors.append(sys.adamant_influence)
    k = len(factors)
    f = np.array(factors)
    if k == 1:
        # a lone bidder wins everything with a vanishing bid
        return BestResponseResult((1.0,), (0.0,), None, 0)

    grid = np.linspace(0.0, sys.action_bound, budget.grid_points)
    bids = np.full(k, sys.action_bound / (4.0 * k))
    for iteration in range(1, budget.max_iters + 1):
        weighted = f * bids
        total = weighted.sum()
        responses = np.array([
            _best_response(f[m], total - weighted[m], sys.gamma, grid) for m in range(k)
        ])
        gap = float(np.max(np.abs(responses - bids)))
        bids = (1.0 - budget.damping) * bids + budget.damping * responses
        if gap < budget.tolerance:
            break
    else:
        raise OracleDidNotConverge(f"Best responses for {p} still moving by {gap:.3e} after {budget.max_iters} rounds")

    weighted = f * bids
    total = weighted.sum()
    utilities = weighted / total - sys.gamma * bids
    coalition_part = tuple(float(u) for u in utilities[: len(p)])
    adamant = float(utilities[-1]) if sys.has_adamant else None
    return BestResponseResult(coalition_part, tuple(float(b) for b in bids[: len(p)]), adamant, iteration)


def _proposals(n, i):
    others = [j for j in range(1, n + 1) if j != i]
    return [frozenset((i,) + extra) for size in range(n) for extra in combinations(others, size)]


def exhaustive_ne_partitions(sys: KellySystem, max_agents: int = 4) -> Set[Partition]:
    """Partitions produced by some pure Nash equilibrium of the proposal game."""
    n = sys.n
    check_cap(n, max_agents, "Exhaustive NE search")
    choices = [_proposals(n, i) for i in range(1, n + 1)]
    utilities: Dict[tuple, Tuple[float, ...]] = {}

    def payoff(profile):
        if profile not in utilities:
            utilities[profile] = player_utility(sys, profile)
        return utilities[profile]

    found: Set[Partition] = set()
    for profile in product(*choices):
        current = payoff(profile)
        stable = True
        for i in range(n):
            for alt in choices[i]:
                if alt == profile[i]:
                    continue
                deviated = profile[:i] + (alt,) + profile[i + 1:]
                if exceeds(payoff(deviated)[i], current[i]):
                    stable = False
                    break
            if not stable:
                break
        if stable:
            found.update(partitions_from_profile(profile))
    logger.debug("%d NE-partitions for %s", len(found), sys)
    return found

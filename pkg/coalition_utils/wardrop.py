# coalition_utils/wardrop.py
"""Wardrop split of a market across coalitions of Erlang-B loss servers."""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Dict, FrozenSet, List, Set, Tuple

import numpy as np
from scipy.optimize import brentq

from coalition_utils.erlang import blocking_probability, log_blocking_probability, log_inverse_load
from coalition_utils.partitions import Coalition, Partition, enumerate_partitions

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-10
PSI_TIE_TOLERANCE = 1e-12
_RTOL = 4 * np.finfo(float).eps
_XTOL = 1e-15


@dataclass(frozen=True)
class QueueSystem:
    servers: Tuple[int, ...]
    lambda_total: float
    mu: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "servers", tuple(int(s) for s in self.servers))
        if not self.servers:
            raise ValueError("A queue system needs at least one provider")
        if any(s < 1 for s in self.servers):
            raise ValueError(f"Every provider needs at least one server, got {self.servers}")
        if not self.lambda_total > 0 or not self.mu > 0:
            raise ValueError(
                f"Arrival rate and service rate must be positive, got "
                f"lambda={self.lambda_total}, mu={self.mu}"
            )

    @property
    def n(self) -> int:
        return len(self.servers)

    @property
    def total_servers(self) -> int:
        return sum(self.servers)

    @property
    def agents(self) -> FrozenSet[int]:
        return frozenset(range(1, self.n + 1))

    def servers_of(self, c: Coalition) -> int:
        return sum(self.servers[i - 1] for i in c)

    def with_lambda(self, lambda_total: float) -> "QueueSystem":
        return QueueSystem(self.servers, lambda_total, self.mu)


@dataclass(frozen=True)
class WardropSplit:
    partition: Partition
    rates: Tuple[float, ...]
    common_blocking: float

    def rate_of(self, c: Coalition) -> float:
        return self.rates[self.partition.index_of(c)]

    def as_dict(self) -> Dict[Coalition, float]:
        return dict(zip(self.partition.coalitions, self.rates))


@lru_cache(maxsize=200_000)
def we_rates(server_totals: Tuple[int, ...], lambda_total: float, mu: float) -> Tuple[Tuple[float, ...], float]:
    """
    Arrival rates equalising the Erlang-B blocking of every server group.

    The search runs on log B and log loads so that light traffic, where B*
    underflows a double, is solved as accurately as heavy traffic.

    Args:
        server_totals: servers held by each competing group
        lambda_total: total arrival rate to split
        mu: service rate of one server

    Returns:
        tuple: (per-group rates, common blocking probability)
    """
    load = lambda_total / mu
    if len(server_totals) == 1:
        return (lambda_total,), blocking_probability(server_totals[0], load)
    log_load = math.log(load)

    def log_loads(log_b):
        return [log_inverse_load(m, log_b) for m in server_totals]

    def excess(log_b: float) -> float:
        logs = log_loads(log_b)
        top = max(logs)
        return top + math.log(sum(math.exp(v - top) for v in logs)) - log_load

    # the largest group alone at the full load blocks at least B*, and at the
    # smallest per-group blocking of an even split every group carries no more
    # than load / k
    hi = log_blocking_probability(max(server_totals), load)
    lo = min(log_blocking_probability(m, load / len(server_totals)) for m in server_totals)
    if excess(lo) >= 0:
        # equal groups land exactly on the lower end
        log_b = lo
    elif excess(hi) <= 0:
        log_b = hi
    else:
        log_b = brentq(excess, lo, hi, xtol=_XTOL, rtol=_RTOL, maxiter=500)
    rates = tuple(math.exp(v) * mu for v in log_loads(log_b))
    b_star = math.exp(log_b)

    residual = abs(sum(rates) - lambda_total)
    if residual > SUM_TOLERANCE * lambda_total:
        logger.warning(
            "Wardrop split for %s at lambda=%g misses the total by %.3e",
            server_totals, lambda_total, residual,
        )
    return rates, b_star


def solve_we(sys: QueueSystem, p: Partition) -> WardropSplit:
    if p.n != sys.n:
        raise ValueError(f"Partition {p} does not cover the {sys.n} providers")
    totals = tuple(sys.servers_of(c) for c in p.coalitions)
    rates, b_star = we_rates(totals, float(sys.lambda_total), float(sys.mu))
    return WardropSplit(partition=p, rates=rates, common_blocking=b_star)


def pessimal_rate(sys: QueueSystem, q: Coalition, exhaustive: bool = False) -> float:
    """Smallest rate ``q`` can be held to by any arrangement of the outsiders.

    Outsiders merged into one opponent take the largest share they can, so the
    two-coalition partition attains the minimum. ``exhaustive=True`` scans every
    arrangement instead.
    """
    q = frozenset(q)
    if q == sys.agents:
        return float(sys.lambda_total)
    if exhaustive:
        rest = sorted(sys.agents - q)
        best = math.inf
        for sub in enumerate_partitions(len(rest)):
            outsiders = [[rest[i - 1] for i in c] for c in sub.coalitions]
            p = Partition.from_coalitions(sys.n, outsiders + [sorted(q)])
            best = min(best, solve_we(sys, p).rate_of(q))
        return best
    k = sys.servers_of(q)
    rates, _ = we_rates((k, sys.total_servers - k), float(sys.lambda_total), float(sys.mu))
    return rates[0]


def psi(sys: QueueSystem, k: int) -> float:
    """Per-server rate of a k-server coalition facing the remaining servers as one rival."""
    total = sys.total_servers
    if not 0 < k < total:
        raise ValueError(f"k must lie strictly between 0 and {total}, got {k}")
    rates, _ = we_rates((k, total - k), float(sys.lambda_total), float(sys.mu))
    return rates[0] / k


def realizable_sizes(sys: QueueSystem) -> List[int]:
    """Larger-side server counts reachable by some duopoly."""
    total = sys.total_servers
    sizes: Set[int] = set()
    for size in range(1, sys.n):
        for members in combinations(range(sys.n), size):
            k = sum(sys.servers[i] for i in members)
            if 2 * k >= total:
                sizes.add(k)
    return sorted(sizes)


def k_star(sys: QueueSystem) -> Set[int]:
    sizes = realizable_sizes(sys)
    if not sizes:
        return set()
    values = {k: psi(sys, k) for k in sizes}
    best = max(values.values())
    return {k for k, v in values.items() if v >= best - PSI_TIE_TOLERANCE * best}


def c_star_set(sys: QueueSystem) -> Set[Coalition]:
    targets = k_star(sys)
    found = {
        frozenset(i + 1 for i in members)
        for size in range(1, sys.n)
        for members in combinations(range(sys.n), size)
        if sum(sys.servers[i] for i in members) in targets
    }
    if not found:
        raise ValueError(f"No strict coalition of {sys.servers} realises k* = {sorted(targets)}")
    return found

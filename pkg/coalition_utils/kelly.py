# coalition_utils/kelly.py
"""Coalition formation in a Kelly-mechanism resource sharing game.

Every coalition bids through its most influential member, so a partition
reduces to a contest between one bidder per coalition (plus an optional
adamant bidder that never cooperates). The contest has a closed-form Nash
equilibrium; coalition utilities are then shared among members with the
Shapley value of their sub-coalition worths.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import FrozenSet, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from coalition_utils.partitions import (
    Coalition,
    Partition,
    all_coalitions,
    check_cap,
    coarser_than,
    enumerate_partitions,
)
from coalition_utils.shapley import shapley_shares
from coalition_utils.verdicts import STABLE, BlockingWitness, BlockKind, StabilityVerdict, exceeds

logger = logging.getLogger(__name__)

MAX_SCAN_AGENTS = 8

SQRT2_MINUS_1 = math.sqrt(2.0) - 1.0
INV_SQRT2 = 1.0 / math.sqrt(2.0)

StrategyProfile = Tuple[FrozenSet[int], ...]


@dataclass(frozen=True)
class KellySystem:
    influence: Tuple[float, ...]
    gamma: float = 1.0
    adamant_eta: Optional[float] = None
    action_bound: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "influence", tuple(float(v) for v in self.influence))
        if not self.influence:
            raise ValueError("A Kelly system needs at least one player")
        if any(v <= 0 for v in self.influence):
            raise ValueError(f"Influence factors must be positive, got {self.influence}")
        if not self.gamma > 0:
            raise ValueError(f"Cost factor gamma must be positive, got {self.gamma}")
        if self.adamant_eta is not None:
            if self.adamant_eta < 0:
                raise ValueError(f"Adamant factor must be nonnegative, got {self.adamant_eta}")
            if not self.is_symmetric():
                raise ValueError("An adamant player is only supported alongside identical players")
        bound = self.action_bound
        if bound is None:
            bound = 2.0 * self.n / self.gamma
            object.__setattr__(self, "action_bound", bound)
        if not bound > self.n / self.gamma:
            raise ValueError(f"Action bound {bound} must exceed n/gamma = {self.n / self.gamma}")

    @property
    def n(self) -> int:
        return len(self.influence)

    @property
    def has_adamant(self) -> bool:
        return self.adamant_eta is not None and self.adamant_eta > 0

    @property
    def adamant_influence(self) -> float:
        return self.adamant_eta * self.influence[0] if self.has_adamant else 0.0

    def is_symmetric(self) -> bool:
        return all(math.isclose(v, self.influence[0], rel_tol=1e-12) for v in self.influence)

    def canonical(self) -> "KellySystem":
        return KellySystem(tuple(sorted(self.influence, reverse=True)), self.gamma, self.adamant_eta, self.action_bound)

    def scaled(self, c: float) -> "KellySystem":
        return KellySystem(tuple(c * v for v in self.influence), self.gamma, self.adamant_eta, self.action_bound)


@dataclass(frozen=True)
class RSGOutcome:
    partition: Partition
    coalition_utilities: Tuple[float, ...]
    aggregate_actions: Tuple[float, ...]
    significant_count: int
    s_value: float
    adamant_utility: Optional[float] = None
    adamant_action: Optional[float] = None

    def utility_of(self, c: Coalition) -> float:
        return self.coalition_utilities[self.partition.index_of(c)]

    @property
    def total_utility(self) -> float:
        return sum(self.coalition_utilities)

    @property
    def adamant_significant(self) -> bool:
        return bool(self.adamant_utility and self.adamant_utility > 0)


def contest_equilibrium(factors: Sequence[float], gamma: float) -> Tuple[List[float], List[float], int, float]:
    """
    Unique Nash equilibrium of a Kelly contest between single bidders.

    Args:
        factors: influence factor of each bidder
        gamma: per-unit bid cost

    Returns:
        tuple: (utilities, bids, number of bidders with positive utility, s)
    """
    order = sorted(range(len(factors)), key=lambda i: -factors[i])
    w = [1.0 / factors[i] for i in order]
    significant = 1
    running = w[0]
    for m in range(2, len(w) + 1):
        running += w[m - 1]
        # ties on the boundary count as insignificant
        if running - (m - 1) * w[m - 1] > 0:
            significant = m
        else:
            break
    s = sum(w[:significant])
    utilities = [0.0] * len(factors)
    actions = [0.0] * len(factors)
    lead = significant - 1
    for rank, i in enumerate(order):
        margin = s - lead * w[rank]
        if rank < significant and margin > 0:
            utilities[i] = (margin / s) ** 2
            actions[i] = lead * margin / (gamma * factors[i] * s * s)
    return utilities, actions, significant, s


def active_factor(sys: KellySystem, c: Coalition) -> float:
    return max(sys.influence[i - 1] for i in c)


def active_player(sys: KellySystem, c: Coalition) -> int:
    best = active_factor(sys, c)
    return min(i for i in c if sys.influence[i - 1] == best)


@lru_cache(maxsize=100_000)
def rsg_ne(sys: KellySystem, p: Partition) -> RSGOutcome:
    if p.n != sys.n:
        raise ValueError(f"Partition {p} does not cover the {sys.n} players")
    factors = [active_factor(sys, c) for c in p.coalitions]
    if sys.has_adamant:
        factors.append(sys.adamant_influence)
    utilities, actions, _, s = contest_equilibrium(factors, sys.gamma)
    k = len(p)
    adamant_u = utilities[k] if sys.has_adamant else None
    adamant_a = actions[k] if sys.has_adamant else None
    return RSGOutcome(
        partition=p,
        coalition_utilities=tuple(utilities[:k]),
        aggregate_actions=tuple(actions[:k]),
        significant_count=sum(1 for u in utilities[:k] if u > 0),
        s_value=s,
        adamant_utility=adamant_u,
        adamant_action=adamant_a,
    )


def worst_case_arrangement(p: Partition, c: Coalition) -> Partition:
    """``c`` on its own, the rest of its coalition as singletons, others untouched."""
    parent = p.coalition_of(min(c))
    if not c <= parent:
        raise ValueError(f"{sorted(c)} does not sit inside one coalition of {p}")
    rest = [b for b in p.coalitions if b != parent]
    return Partition.from_coalitions(p.n, rest + [c] + [[i] for i in parent - c])


def subcoalition_worth(sys: KellySystem, p: Partition, c: Coalition) -> float:
    c = frozenset(c)
    return rsg_ne(sys, worst_case_arrangement(p, c)).utility_of(c)


@lru_cache(maxsize=100_000)
def shapley_within(sys: KellySystem, p: Partition) -> Tuple[float, ...]:
    shares = [0.0] * sys.n
    for c in p.coalitions:
        for i, value in shapley_shares(c, lambda sub: subcoalition_worth(sys, p, sub)).items():
            shares[i - 1] = value
    return tuple(shares)


def natural_profile(p: Partition) -> StrategyProfile:
    return tuple(p.coalition_of(i) for i in range(1, p.n + 1))


def validate_profile(x: Sequence) -> StrategyProfile:
    x = tuple(frozenset(choice) for choice in x)
    n = len(x)
    for i, choice in enumerate(x, start=1):
        if i not in choice:
            raise ValueError(f"Player {i} must include itself in its proposal {sorted(choice)}")
        if not choice <= frozenset(range(1, n + 1)):
            raise ValueError(f"Proposal {sorted(choice)} names players outside 1..{n}")
    return x


def _mutual(x, c):
    return all(c <= x[i - 1] for i in c)


def partitions_from_profile(x: Sequence) -> List[Partition]:
    """Coarsest partitions whose coalitions all have mutual consent under ``x``."""
    x = validate_profile(x)
    valid = [p for p in enumerate_partitions(len(x)) if all(_mutual(x, c) for c in p.coalitions)]
    return [p for p in valid if not any(coarser_than(q, p) for q in valid)]


def player_utility(sys: KellySystem, x: Sequence) -> Tuple[float, ...]:
    outcomes = [shapley_within(sys, p) for p in partitions_from_profile(x)]
    return tuple(min(shares[i] for shares in outcomes) for i in range(sys.n))


def u_stable(sys: KellySystem, p: Partition) -> StabilityVerdict:
    """No player gains by leaving its coalition to stand alone."""
    shares = shapley_within(sys, p)
    for c in p.coalitions:
        if len(c) < 2:
            continue
        for i in sorted(c):
            alone = rsg_ne(sys, p.split(c, frozenset({i}))).utility_of(frozenset({i}))
            if exceeds(alone, shares[i - 1]):
                return StabilityVerdict(BlockingWitness(frozenset({i}), BlockKind.UNILATERAL, alone, shares[i - 1]))
    return STABLE


def c_stable(sys: KellySystem, p: Partition) -> StabilityVerdict:
    """U-stable and not blocked by any coalition valued at its pessimal Shapley shares."""
    check_cap(sys.n, MAX_SCAN_AGENTS, "C-stability")
    verdict = u_stable(sys, p)
    if not verdict.stable:
        return verdict
    shares = shapley_within(sys, p)
    for s in all_coalitions(sys.n):
        if s in p:
            continue
        alone_rest = Partition.from_coalitions(sys.n, [s] + [[i] for i in range(1, sys.n + 1) if i not in s])
        pessimal = shapley_within(sys, alone_rest)
        if all(exceeds(pessimal[j - 1], shares[j - 1]) for j in s):
            anticipated = sum(pessimal[j - 1] for j in s)
            prevailing = sum(shares[j - 1] for j in s)
            return StabilityVerdict(BlockingWitness(s, BlockKind.COALITIONAL, anticipated, prevailing))
    return STABLE


def stable_partition_scan(sys: KellySystem) -> List[Tuple[Partition, StabilityVerdict]]:
    check_cap(sys.n, MAX_SCAN_AGENTS, "Stable partition scan")
    return [(p, u_stable(sys, p)) for p in enumerate_partitions(sys.n)]


class SocialOptimum(NamedTuple):
    label: str
    partition: Partition
    value: float


def _halves(n):
    cut = (n + 1) // 2
    return Partition.from_coalitions(n, [range(1, cut + 1), range(cut + 1, n + 1)])


def so_partition(sys: KellySystem) -> SocialOptimum:
    """Partition maximising the players' total utility.

    Identical players use the closed-form thresholds in the adamant factor;
    anything else is searched exhaustively.
    """
    n = sys.n
    if sys.is_symmetric():
        eta = sys.adamant_eta or 0.0
        grand = Partition.grand(n)
        if not sys.has_adamant or n == 1:
            return SocialOptimum(partition_class(sys, grand), grand, rsg_ne(sys, grand).total_utility)
        if eta >= INV_SQRT2 or eta <= SQRT2_MINUS_1:
            return SocialOptimum("GC", grand, 1.0 / (1.0 + eta) ** 2)
        two = _halves(n)
        if eta <= 0.5:
            return SocialOptimum("P2o", two, 0.5)
        return SocialOptimum("P2", two, 2.0 / (1.0 + 2.0 * eta) ** 2)

    check_cap(n, MAX_SCAN_AGENTS, "Social optimum search")
    best = max(enumerate_partitions(n), key=lambda p: rsg_ne(sys, p).total_utility)
    return SocialOptimum(partition_class(sys, best), best, rsg_ne(sys, best).total_utility)


def worst_ne_utility(sys: KellySystem) -> float:
    """Total utility when everyone stands alone, the worst NE-partition."""
    if sys.has_adamant:
        return rsg_ne(sys, Partition.singletons(sys.n)).total_utility
    w = sorted(1.0 / v for v in sys.influence)
    _, _, significant, _ = contest_equilibrium([1.0 / v for v in w], sys.gamma)
    w_bar = sum(w[:significant])
    return sum(((w_bar - (significant - 1) * wj) / w_bar) ** 2 for wj in w[:significant])


def poa(sys: KellySystem) -> float:
    if not sys.is_symmetric():
        # without an adamant player the grand coalition collects the whole utility of 1
        return 1.0 / worst_ne_utility(sys)
    return so_partition(sys).value / worst_ne_utility(sys)


def _sorted_influence(sys):
    if sys.has_adamant:
        raise ValueError("Asymmetry measures are defined without an adamant player")
    return sorted(sys.influence, reverse=True)


def _rho(lam):
    """rho[j] for j = 1..n+1 (index 0 unused), with rho[n+1] = 1."""
    return [0.0] + [lam[0] / (lam[0] + v) for v in lam] + [1.0]


def _a2_terms(lam):
    rho = _rho(lam)
    n = len(lam)
    terms = []
    for j in range(2, n + 1):
        c_j = 1 if j == 2 else j
        terms.append((j, rho[j + 1] ** 2 - rho[j] ** 2, c_j * (1.0 - rho[j]) ** 2))
    return terms


def moa(sys: KellySystem) -> float:
    lam = _sorted_influence(sys)
    ratios = [gain / cost if cost > 0 else math.inf for _, gain, cost in _a2_terms(lam)]
    return min(ratios, default=math.inf)


def _gaps_cover(w, skip=()):
    # w is 1-indexed through a leading placeholder
    n = len(w) - 1
    gaps = [w[j + 1] - w[j] for j in range(2, n) if j not in skip]
    return all(w[1] <= g * (1 + 1e-12) for g in gaps)


class AbsoluteStability(NamedTuple):
    stable: bool
    assumption: str


def absolute_stability_check(sys: KellySystem) -> AbsoluteStability:
    """Sufficient gap-and-asymmetry conditions for every partition to be U-stable."""
    lam = _sorted_influence(sys)
    n = len(lam)
    w = [0.0] + [1.0 / v for v in lam]
    if _gaps_cover(w):
        return AbsoluteStability(all(gain >= cost for _, gain, cost in _a2_terms(lam)), "A.1/A.2")
    if n >= 4 and math.isclose(w[3], w[4], rel_tol=1e-12) and _gaps_cover(w, skip=(3,)):
        return AbsoluteStability(_a2_prime(lam), "A.1'/A.2'")
    return AbsoluteStability(False, "none")


def _a2_prime(lam):
    rho = _rho(lam)
    l1, l3 = lam[0], lam[2]
    pair = ((2 * l1 - l3) / (2 * l1 + l3)) ** 2
    if pair < rho[2] ** 2 + (1 - rho[2]) ** 2:
        return False
    if rho[4] ** 2 - pair < 3 * (l3 / (2 * l1 + l3)) ** 2:
        return False
    if (rho[5] ** 2 - rho[4] ** 2) + (rho[4] ** 2 - pair) / 3 < 4 * (1 - rho[3]) ** 2:
        return False
    return all(gain >= cost for j, gain, cost in _a2_terms(lam) if j > 4)


def a2_failure_index(sys: KellySystem) -> Optional[int]:
    lam = _sorted_influence(sys)
    return next((j for j, gain, cost in _a2_terms(lam) if gain < cost), None)


def a2_failure_partition(sys: KellySystem) -> Optional[Partition]:
    """The partition with the j strongest players together, j the first index where A.2 fails."""
    j = a2_failure_index(sys)
    if j is None:
        return None
    ranked = [int(i) + 1 for i in np.argsort([-v for v in sys.influence], kind="stable")]
    blocks = [ranked[:j]]
    if j < sys.n:
        blocks.append(ranked[j:])
    return Partition.from_coalitions(sys.n, blocks)


def weak_partition(sys: KellySystem, p: Partition) -> bool:
    """Some player always gains by leaving: the largest coalition outgrows (k+1)^2/k^2."""
    if not sys.is_symmetric():
        raise ValueError("Weak partitions are defined for identical players")
    k = len(p)
    largest = max(len(c) for c in p.coalitions)
    return largest > (k + 1) ** 2 / k ** 2


def spectral_shares(sys: KellySystem, p: Partition) -> Tuple[float, ...]:
    """Fraction of the shared resource each player ends up with."""
    outcome = rsg_ne(sys, p)
    weights = [active_factor(sys, c) * a for c, a in zip(p.coalitions, outcome.aggregate_actions)]
    denominator = sum(weights)
    if sys.has_adamant:
        denominator += sys.adamant_influence * (outcome.adamant_action or 0.0)
    if denominator > 0:
        fractions = [v / denominator for v in weights]
    else:
        # a lone significant bidder takes everything with a vanishing bid
        fractions = [1.0 if u > 0 else 0.0 for u in outcome.coalition_utilities]
    shapley = shapley_within(sys, p)
    shares = [0.0] * sys.n
    for c, fraction in zip(p.coalitions, fractions):
        total = sum(shapley[i - 1] for i in c)
        for i in c:
            shares[i - 1] = fraction * shapley[i - 1] / total if total > 0 else 0.0
    return tuple(shares)


def partition_class(sys: KellySystem, p: Partition) -> str:
    """Short label such as GC, ALC, SS, TTC or P3, suffixed with ``o`` when the
    adamant player is absent or earns nothing."""
    sizes = sorted((len(c) for c in p.coalitions), reverse=True)
    if len(sizes) == 1:
        base = "GC"
    elif sizes[0] == 1:
        base = "ALC"
    elif sizes[1] == 1:
        base = "SS"
    elif sizes[:2] == [2, 2] and (len(sizes) == 2 or sizes[2] == 1):
        base = "TTC"
    else:
        base = f"P{len(sizes)}"
    outcome = rsg_ne(sys, p)
    return base if outcome.adamant_significant else base + "o"


def a_player_shapley(beta: float, with_a: int, others: int) -> Tuple[float, float]:
    """Closed-form Shapley shares in a coalition of one strong player (factor beta
    times the rest) and ``with_a`` identical partners, facing ``others`` coalitions
    of identical players. Returns (strong share, partner share)."""
    k, kb = others, with_a
    own = ((1 - k + k * beta) / (1 + k * beta)) ** 2
    if kb == 0:
        return own, 0.0
    total = 0.0
    for l in range(kb):
        r = kb - l + k
        total += r * (1 - beta) * ((r - 2) - beta * r) / (1 + r * beta) ** 2
    strong = (total + own) / (kb + 1)
    return strong, (own - strong) / kb


def identical_collaboration_window(sys: KellySystem, p: Partition) -> bool:
    """Whether the weakest significant coalition's factor lies in the narrow window
    that allows the identical top players of ``p`` to stay together."""
    outcome = rsg_ne(sys, p)
    lam = max(sys.influence)
    active = sorted(
        (active_factor(sys, c) for c, u in zip(p.coalitions, outcome.coalition_utilities) if u > 0),
        reverse=True,
    )
    k = len(active)
    if k < 3:
        raise ValueError(f"The window needs at least three significant coalitions, got {k}")
    head = sum(lam / v for v in active[:-1])
    ratio = lam / active[-1]
    return head / (k - 2) > ratio > (head + 1) / (k - 1)

# coalition_utils/queue_stability.py
"""Payoffs and blocking rules for the congestion game of server pools.

A configuration is a partition plus per-agent payoffs whose per-coalition sums
equal the Wardrop rates. Three rules decide whether a coalition can block it:

* GB-PA: any coalition may form and values itself at its pessimal rate.
* RB-PA: only mergers of whole coalitions or splits of one coalition may form.
* RB-IA: as RB-PA, but a splitting group must first expect its per-server
  pessimal rate to beat its current per-server share of the parent coalition.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from coalition_utils.lp_exact import max_slack_point
from coalition_utils.partitions import (
    Coalition,
    Partition,
    all_coalitions,
    check_cap,
    enumerate_two_partitions,
    merger_parts,
    mergers_of,
    parent_coalition,
    splits_of,
    strict_subsets,
)
from coalition_utils.shapley import MAX_SHAPLEY_MEMBERS, shapley_shares
from coalition_utils.verdicts import STABLE, BlockingWitness, BlockKind, StabilityVerdict, exceeds
from coalition_utils.wardrop import QueueSystem, pessimal_rate, solve_we

logger = logging.getLogger(__name__)

CONSISTENCY_TOLERANCE = 1e-9

Payoff = Tuple[float, ...]


class Rule(str, Enum):
    GBPA = "gbpa"
    RBPA = "rbpa"
    RBIA = "rbia"


class PayoffRule(str, Enum):
    PROPORTIONAL = "proportional"
    SHAPLEY = "shapley"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class Configuration:
    partition: Partition
    payoff: Payoff

    def share_of(self, q: Coalition) -> float:
        return sum(self.payoff[i - 1] for i in q)

    def to_dict(self) -> dict:
        return {"partition": str(self.partition), "payoffs": list(self.payoff)}


def make_configuration(sys: QueueSystem, p: Partition, payoff: Sequence[float]) -> Configuration:
    """Pair ``p`` with ``payoff`` after checking it splits every Wardrop rate exactly."""
    payoff = tuple(float(v) for v in payoff)
    if len(payoff) != sys.n:
        raise ValueError(f"Payoff has {len(payoff)} entries for {sys.n} providers")
    if any(v < -CONSISTENCY_TOLERANCE for v in payoff):
        raise ValueError(f"Payoffs must be nonnegative, got {payoff}")
    split = solve_we(sys, p)
    for c, rate in zip(p.coalitions, split.rates):
        total = sum(payoff[i - 1] for i in c)
        if abs(total - rate) > CONSISTENCY_TOLERANCE * max(1.0, rate):
            raise ValueError(
                f"Payoffs of {sorted(c)} sum to {total}, but its Wardrop rate is {rate}"
            )
    return Configuration(p, payoff)


def proportional_payoff(sys: QueueSystem, p: Partition) -> Payoff:
    split = solve_we(sys, p)
    shares = [0.0] * sys.n
    for c, rate in zip(p.coalitions, split.rates):
        servers = sys.servers_of(c)
        for i in c:
            shares[i - 1] = sys.servers[i - 1] / servers * rate
    return tuple(shares)


def subcoalition_rate(sys: QueueSystem, p: Partition, c: Coalition) -> float:
    """Rate of ``c`` when it leaves its coalition and the rest of it stays together."""
    parent = p.coalition_of(min(c))
    if not c <= parent:
        raise ValueError(f"{sorted(c)} does not sit inside one coalition of {p}")
    if c == parent:
        return solve_we(sys, p).rate_of(c)
    return solve_we(sys, p.split(parent, c)).rate_of(c)


def shapley_payoff_queue(sys: QueueSystem, p: Partition) -> Payoff:
    shares = [0.0] * sys.n
    for c in p.coalitions:
        check_cap(len(c), MAX_SHAPLEY_MEMBERS, "Queue Shapley sharing")
        for i, value in shapley_shares(c, lambda sub: subcoalition_rate(sys, p, sub)).items():
            shares[i - 1] = value
    return tuple(shares)


def payoff_for(sys: QueueSystem, p: Partition, rule: PayoffRule, explicit: Sequence[float] = None) -> Configuration:
    if rule == PayoffRule.PROPORTIONAL:
        return Configuration(p, proportional_payoff(sys, p))
    if rule == PayoffRule.SHAPLEY:
        return Configuration(p, shapley_payoff_queue(sys, p))
    if explicit is None:
        raise ValueError("An explicit payoff rule needs a payoff vector")
    return make_configuration(sys, p, explicit)


def sample_consistent_payoff(sys: QueueSystem, p: Partition, rng: np.random.Generator) -> Configuration:
    """Uniformly random payoff on each coalition's simplex."""
    split = solve_we(sys, p)
    shares = [0.0] * sys.n
    for c, rate in zip(p.coalitions, split.rates):
        members = sorted(c)
        weights = rng.dirichlet(np.ones(len(members)))
        for i, w in zip(members, weights):
            shares[i - 1] = float(w) * rate
    return Configuration(p, tuple(shares))


def _general_candidates(sys, p):
    n = sys.n
    agents = sys.agents
    ordered: List[Coalition] = []
    ordered += [agents - {j} for j in range(1, n + 1)]
    ordered += [frozenset({j}) for j in range(1, n + 1)]
    ordered += mergers_of(Partition.singletons(n))
    ordered += all_coalitions(n)
    seen: Set[Coalition] = set()
    found = []
    for q in ordered:
        if q in seen or q == agents or q in p:
            continue
        seen.add(q)
        found.append(q)
    return found


def gbpa_blocks(sys: QueueSystem, cfg: Configuration) -> List[BlockingWitness]:
    witnesses = []
    for q in _general_candidates(sys, cfg.partition):
        anticipated = pessimal_rate(sys, q)
        prevailing = cfg.share_of(q)
        if exceeds(anticipated, prevailing):
            witnesses.append(BlockingWitness(q, BlockKind.GENERAL, anticipated, prevailing))
    return witnesses


def gbpa_check(sys: QueueSystem, cfg: Configuration) -> StabilityVerdict:
    for q in _general_candidates(sys, cfg.partition):
        anticipated = pessimal_rate(sys, q)
        prevailing = cfg.share_of(q)
        if exceeds(anticipated, prevailing):
            return StabilityVerdict(BlockingWitness(q, BlockKind.GENERAL, anticipated, prevailing))
    return STABLE


def rbpa_blocks(sys: QueueSystem, cfg: Configuration) -> List[BlockingWitness]:
    p = cfg.partition
    witnesses = []
    for q in mergers_of(p):
        # the grand coalition anticipates exactly what its members already hold
        if q == sys.agents:
            continue
        anticipated = pessimal_rate(sys, q)
        prevailing = cfg.share_of(q)
        if exceeds(anticipated, prevailing):
            witnesses.append(BlockingWitness(q, BlockKind.MERGER, anticipated, prevailing))
    for q in splits_of(p):
        anticipated = pessimal_rate(sys, q)
        prevailing = cfg.share_of(q)
        if exceeds(anticipated, prevailing):
            witnesses.append(BlockingWitness(q, BlockKind.SPLIT, anticipated, prevailing))
    return witnesses


def rbpa_check(sys: QueueSystem, cfg: Configuration) -> StabilityVerdict:
    witnesses = rbpa_blocks(sys, cfg)
    return StabilityVerdict(witnesses[0]) if witnesses else STABLE


def _merger_passes(sys, p, q):
    if q == sys.agents:
        return None
    split = solve_we(sys, p)
    worth = sum(split.rate_of(c) for c in merger_parts(p, q))
    anticipated = pessimal_rate(sys, q)
    if exceeds(anticipated, worth):
        return anticipated, worth
    return None


def _split_feasible(sys, p, q):
    """First-stage test: per-server pessimal rate beats the parent's per-server rate."""
    parent = parent_coalition(p, q)
    parent_rate = solve_we(sys, p).rate_of(parent)
    anticipated = pessimal_rate(sys, q)
    return exceeds(anticipated, sys.servers_of(q) / sys.servers_of(parent) * parent_rate)


def rbia_blocks(sys: QueueSystem, cfg: Configuration) -> List[BlockingWitness]:
    p = cfg.partition
    witnesses = []
    for q in mergers_of(p):
        passed = _merger_passes(sys, p, q)
        if passed is None:
            continue
        anticipated, worth = passed
        prevailing = cfg.share_of(q)
        # the merger's members hold exactly the worth of the merged coalitions
        assert exceeds(anticipated, prevailing), "merger passed the first stage only"
        witnesses.append(BlockingWitness(q, BlockKind.MERGER, anticipated, prevailing))
    for q in splits_of(p):
        if not _split_feasible(sys, p, q):
            continue
        parent = parent_coalition(p, q)
        realised = solve_we(sys, p.split(parent, q)).rate_of(q)
        prevailing = cfg.share_of(q)
        if exceeds(realised, prevailing):
            witnesses.append(BlockingWitness(q, BlockKind.SPLIT, realised, prevailing))
    return witnesses


def rbia_check(sys: QueueSystem, cfg: Configuration) -> StabilityVerdict:
    witnesses = rbia_blocks(sys, cfg)
    return StabilityVerdict(witnesses[0]) if witnesses else STABLE


def blocking_witnesses(sys: QueueSystem, cfg: Configuration, rule: Rule) -> List[BlockingWitness]:
    if rule == Rule.GBPA:
        return gbpa_blocks(sys, cfg)
    if rule == Rule.RBPA:
        return rbpa_blocks(sys, cfg)
    return rbia_blocks(sys, cfg)


def check(sys: QueueSystem, cfg: Configuration, rule: Rule) -> StabilityVerdict:
    if rule == Rule.GBPA:
        return gbpa_check(sys, cfg)
    if rule == Rule.RBPA:
        return rbpa_check(sys, cfg)
    return rbia_check(sys, cfg)


def rbia_stable_partition(sys: QueueSystem, p: Partition) -> bool:
    """True when no consistent payoff on ``p`` can be blocked under RB-IA.

    Mergers do not depend on payoffs. A split passing the first stage can always
    be completed by a payoff that starves its members, so the partition is
    stable for every payoff exactly when no split passes that stage.
    """
    if any(_merger_passes(sys, p, q) for q in mergers_of(p)):
        return False
    return not any(_split_feasible(sys, p, q) for q in splits_of(p))


def stable_duopolies(sys: QueueSystem) -> List[Partition]:
    return [p for p in enumerate_two_partitions(sys.n) if rbia_stable_partition(sys, p)]


def dominant_agent(sys: QueueSystem) -> int:
    return int(np.argmax(sys.servers)) + 1


def gc_stabilizing_payoffs(sys: QueueSystem) -> Optional[Payoff]:
    """RB-IA-stable payoff for the grand coalition, or None when none exists.

    The largest provider must hold at least as many servers as all others
    together; it then receives the best pessimal rate it could secure in any
    strict coalition and the others share the rest equally.
    """
    if sys.n == 1:
        return (float(sys.lambda_total),)
    lead = dominant_agent(sys)
    if 2 * sys.servers[lead - 1] < sys.total_servers:
        return None
    lead_share = max(pessimal_rate(sys, c) for c in all_coalitions(sys.n, include_grand=False) if lead in c)
    rest = (sys.lambda_total - lead_share) / (sys.n - 1)
    return tuple(lead_share if i == lead else rest for i in range(1, sys.n + 1))


def rbpa_stable_payoff_exists(sys: QueueSystem, p: Partition) -> Tuple[bool, Optional[Payoff]]:
    """Decide whether some consistent payoff survives every split under RB-PA.

    Each coalition is handled on its own: its members need a payoff covering the
    pessimal rate of every strict sub-group while summing to the coalition's
    Wardrop rate. Feasibility is decided in exact rational arithmetic on the
    floating inputs; the witness maximises the smallest slack.
    """
    split = solve_we(sys, p)
    shares = [0.0] * sys.n
    for c, rate in zip(p.coalitions, split.rates):
        check_cap(len(c), MAX_SHAPLEY_MEMBERS, "RB-PA payoff feasibility")
        members = sorted(c)
        position = {agent: idx for idx, agent in enumerate(members)}
        rows = [
            ([position[i] for i in q], Fraction(pessimal_rate(sys, q)))
            for q in strict_subsets(c)
        ]
        point = max_slack_point(len(members), rows, Fraction(rate))
        if point is None:
            logger.debug("No RB-PA stable payoff for coalition %s of %s", members, p)
            return False, None
        for agent, value in zip(members, point):
            shares[agent - 1] = float(value)
    return True, tuple(shares)


def unilateral_stable_payoff(sys: QueueSystem, p: Partition) -> Payoff:
    """Each member gets its pessimal singleton rate plus an equal cut of the surplus."""
    split = solve_we(sys, p)
    shares = [0.0] * sys.n
    for c, rate in zip(p.coalitions, split.rates):
        floors = {i: pessimal_rate(sys, frozenset({i})) for i in c}
        bonus = (rate - sum(floors.values())) / len(c)
        for i in c:
            shares[i - 1] = floors[i] + bonus
    return tuple(shares)


def light_traffic_stable_set(sys: QueueSystem) -> List[Partition]:
    """Duopolies whose larger side has no strict sub-group holding a server majority."""
    total = sys.total_servers
    found = []
    for p in enumerate_two_partitions(sys.n):
        big = max(p.coalitions, key=sys.servers_of)
        if not any(2 * sys.servers_of(s) > total for s in strict_subsets(big)):
            found.append(p)
    return found


def heavy_traffic_stable_set(sys: QueueSystem) -> List[Partition]:
    return enumerate_two_partitions(sys.n)


def verify_heavy_traffic(sys: QueueSystem, lambda_total: float) -> Dict[Partition, bool]:
    loaded = sys.with_lambda(lambda_total)
    return {p: rbia_stable_partition(loaded, p) for p in heavy_traffic_stable_set(sys)}


def agent_one_side_servers(sys: QueueSystem, p: Partition) -> int:
    return sys.servers_of(p.coalition_of(1))

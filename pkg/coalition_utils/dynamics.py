# coalition_utils/dynamics.py
"""Random blocking dynamics for the congestion game.

Starting from a configuration, a blocking coalition is picked uniformly at
random, formed, and payoffs are updated. The walk stops when nothing blocks
or when the step budget runs out.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from coalition_utils.partitions import (
    Partition,
    all_coalitions,
    bell_number,
    check_cap,
    merger_parts,
    parent_coalition,
    strict_subsets,
)
from coalition_utils.queue_stability import Configuration, Rule, blocking_witnesses
from coalition_utils.rng import SplitMix64
from coalition_utils.verdicts import BlockingWitness, BlockKind, exceeds
from coalition_utils.wardrop import QueueSystem, c_star_set, pessimal_rate, solve_we

logger = logging.getLogger(__name__)

MAX_A1_AGENTS = 8


@dataclass(frozen=True)
class DynamicsConfig:
    rule: Rule = Rule.RBIA
    seed: int = 0
    max_steps: int = 1000
    payoff_update: str = "surplus-equal"

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be at least 1, got {self.max_steps}")
        if self.payoff_update != "surplus-equal":
            raise ValueError(f"Unknown payoff update '{self.payoff_update}'")


@dataclass(frozen=True)
class TraceStep:
    configuration: Configuration
    witness: BlockingWitness


@dataclass
class Trace:
    seed: int
    rule: Rule
    steps: List[TraceStep] = field(default_factory=list)
    terminal: Optional[Configuration] = None
    absorbed: bool = False

    def to_jsonl(self) -> str:
        lines = []
        for idx, st in enumerate(self.steps):
            lines.append(json.dumps({
                "step": idx,
                "partition": str(st.configuration.partition),
                "witness": st.witness.to_dict(),
                "payoffs": list(st.configuration.payoff),
            }))
        lines.append(json.dumps({
            "step": len(self.steps),
            "partition": str(self.terminal.partition),
            "witness": None,
            "payoffs": list(self.terminal.payoff),
            "absorbed": self.absorbed,
        }))
        return "\n".join(lines) + "\n"


def _next_partition(p, w):
    q = w.coalition
    if w.kind == BlockKind.MERGER:
        return p.merge(merger_parts(p, q))
    if w.kind == BlockKind.SPLIT:
        return p.split(parent_coalition(p, q), q)
    return p.carve(q)


def update_payoffs(sys: QueueSystem, cfg: Configuration, new_p: Partition, q) -> Configuration:
    """Blocking members share their surplus equally; everyone else rescales to the new worths."""
    split = solve_we(sys, new_p)
    old = cfg.payoff
    new = list(old)
    for c, rate in zip(new_p.coalitions, split.rates):
        if c == q:
            surplus = rate - cfg.share_of(q)
            for i in c:
                new[i - 1] = old[i - 1] + surplus / len(c)
            continue
        prior = sum(old[i - 1] for i in c)
        for i in c:
            new[i - 1] = old[i - 1] * rate / prior if prior > 0 else rate / len(c)
    return Configuration(new_p, tuple(new))


def step(
    sys: QueueSystem, cfg: Configuration, rule: Rule, rng: SplitMix64
) -> Optional[Tuple[Configuration, BlockingWitness]]:
    witnesses = blocking_witnesses(sys, cfg, rule)
    if not witnesses:
        return None
    chosen = witnesses[rng.randbelow(len(witnesses))]
    new_p = _next_partition(cfg.partition, chosen)
    new_cfg = update_payoffs(sys, cfg, new_p, chosen.coalition)
    for i in chosen.coalition:
        assert new_cfg.payoff[i - 1] > cfg.payoff[i - 1], f"agent {i} did not gain by blocking"
    return new_cfg, chosen


def run(sys: QueueSystem, initial: Configuration, dc: DynamicsConfig) -> Trace:
    rng = SplitMix64(dc.seed)
    trace = Trace(seed=dc.seed, rule=dc.rule)
    current = initial
    for _ in range(dc.max_steps):
        moved = step(sys, current, dc.rule, rng)
        if moved is None:
            trace.terminal = current
            trace.absorbed = True
            return trace
        new_cfg, witness = moved
        trace.steps.append(TraceStep(current, witness))
        current = new_cfg
    trace.terminal = current
    # the last move may itself have landed on a stable configuration
    trace.absorbed = not blocking_witnesses(sys, current, dc.rule)
    if not trace.absorbed:
        logger.info("Seed %d did not absorb within %d steps under %s", dc.seed, dc.max_steps, dc.rule.value)
    return trace


def default_max_steps(n: int) -> int:
    return 10 * bell_number(n)


def check_assumption_a1(sys: QueueSystem) -> bool:
    """Per-server pessimal rates grow along every chain of coalitions avoiding the best duopoly sides."""
    check_cap(sys.n, MAX_A1_AGENTS, "Assumption A.1 check")
    if sys.n == 1:
        return True
    best = c_star_set(sys)
    for c in all_coalitions(sys.n):
        if any(b <= c for b in best):
            continue
        outer = pessimal_rate(sys, c) / sys.servers_of(c)
        for s in strict_subsets(c):
            inner = pessimal_rate(sys, s) / sys.servers_of(s)
            if not exceeds(outer, inner):
                logger.debug("A.1 fails: %s does not beat its subset %s", sorted(c), sorted(s))
                return False
    return True

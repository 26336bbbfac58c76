# coalition_utils/verdicts.py
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from coalition_utils.partitions import Coalition, format_coalition


class BlockKind(str, Enum):
    MERGER = "merger"
    SPLIT = "split"
    GENERAL = "general"
    UNILATERAL = "unilateral"
    COALITIONAL = "coalitional"


@dataclass(frozen=True)
class BlockingWitness:
    coalition: Coalition
    kind: BlockKind
    anticipated_rate: float
    prevailing_worth: float

    def __post_init__(self):
        if not self.anticipated_rate > self.prevailing_worth:
            raise ValueError(
                f"Witness {format_coalition(self.coalition)} does not block: "
                f"{self.anticipated_rate} <= {self.prevailing_worth}"
            )

    def to_dict(self) -> dict:
        return {
            "coalition": format_coalition(self.coalition),
            "kind": self.kind.value,
            "anticipated": self.anticipated_rate,
            "prevailing": self.prevailing_worth,
        }


@dataclass(frozen=True)
class StabilityVerdict:
    witness: Optional[BlockingWitness] = None

    @property
    def stable(self) -> bool:
        return self.witness is None

    def __bool__(self) -> bool:
        return self.stable

    def to_dict(self) -> dict:
        return {
            "verdict": "stable" if self.stable else "unstable",
            "witness": self.witness.to_dict() if self.witness else None,
        }


STABLE = StabilityVerdict()


def exceeds(value: float, reference: float, rel_tol: float = 1e-9) -> bool:
    """Strict comparison that ignores differences at solver precision."""
    return value > reference + rel_tol * max(abs(value), abs(reference)) + 1e-15

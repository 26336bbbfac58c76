# coalition_utils/partitions.py
"""Coalitions, partitions and the combinatorics shared by both games.

Agents are numbered 1..n. A coalition is a frozenset of agent indices and a
partition keeps its coalitions as sorted tuples ordered by smallest member,
so two equal partitions always render to the same text.
"""

import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import FrozenSet, Iterable, Iterator, List, Sequence, Tuple

Coalition = FrozenSet[int]

MAX_ENUMERATION_AGENTS = 12

_TOKEN_RE = re.compile(r"\s*(\{|\}|,|\d+|\S)")


class SizeCapError(ValueError):
    """Raised when an exhaustive computation would exceed its size cap."""


class PartitionFormatError(ValueError):
    """Raised when partition text such as ``{{1,2},{3}}`` cannot be parsed."""


def coalition(members: Iterable[int]) -> Coalition:
    c = frozenset(int(i) for i in members)
    if not c:
        raise ValueError("A coalition must have at least one member")
    return c


def coalition_key(c: Coalition) -> Tuple[int, Tuple[int, ...]]:
    """Canonical sort key: smaller coalitions first, then lexicographic members."""
    return len(c), tuple(sorted(c))


def format_coalition(c: Coalition) -> str:
    return "{" + ",".join(str(i) for i in sorted(c)) + "}"


@dataclass(frozen=True)
class Partition:
    n: int
    blocks: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Agent count must be positive, got {self.n}")
        canonical = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else 0))
        seen = [i for b in canonical for i in b]
        if any(len(b) == 0 for b in canonical):
            raise ValueError("Partition contains an empty coalition")
        if sorted(seen) != list(range(1, self.n + 1)):
            raise ValueError(
                f"Coalitions {canonical} are not a disjoint cover of agents 1..{self.n}"
            )
        object.__setattr__(self, "blocks", canonical)

    @classmethod
    def from_coalitions(cls, n: int, coalitions: Iterable[Iterable[int]]) -> "Partition":
        return cls(n, tuple(tuple(c) for c in coalitions))

    @classmethod
    def grand(cls, n: int) -> "Partition":
        return cls(n, (tuple(range(1, n + 1)),))

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(n, tuple((i,) for i in range(1, n + 1)))

    @classmethod
    def parse(cls, text: str, n: int = None) -> "Partition":
        """Parse ``{{1,2},{3}}``. ``n`` defaults to the largest index seen."""
        blocks = _parse_blocks(text)
        if n is None:
            n = max((i for b in blocks for i in b), default=0)
        try:
            return cls.from_coalitions(n, blocks)
        except ValueError as exc:
            raise PartitionFormatError(f"Invalid partition '{text}': {exc}") from exc

    @property
    def coalitions(self) -> Tuple[Coalition, ...]:
        return tuple(frozenset(b) for b in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self) -> Iterator[Coalition]:
        return iter(self.coalitions)

    def __contains__(self, c) -> bool:
        return tuple(sorted(c)) in self.blocks

    def __str__(self) -> str:
        return "{" + ",".join(format_coalition(frozenset(b)) for b in self.blocks) + "}"

    def coalition_of(self, agent: int) -> Coalition:
        for b in self.blocks:
            if agent in b:
                return frozenset(b)
        raise ValueError(f"Agent {agent} is not in 1..{self.n}")

    def index_of(self, c: Coalition) -> int:
        key = tuple(sorted(c))
        for idx, b in enumerate(self.blocks):
            if b == key:
                return idx
        raise ValueError(f"{format_coalition(c)} is not a coalition of {self}")

    def is_grand(self) -> bool:
        return len(self.blocks) == 1

    def is_singletons(self) -> bool:
        return len(self.blocks) == self.n

    def split(self, c: Coalition, q: Coalition) -> "Partition":
        """Replace ``c`` by ``q`` and ``c - q``."""
        if not q < c:
            raise ValueError(f"{format_coalition(q)} is not a strict subset of {format_coalition(c)}")
        rest = [b for b in self.coalitions if b != c]
        return Partition.from_coalitions(self.n, rest + [q, c - q])

    def merge(self, parts: Sequence[Coalition]) -> "Partition":
        fused = frozenset().union(*parts)
        rest = [b for b in self.coalitions if b not in parts]
        return Partition.from_coalitions(self.n, rest + [fused])

    def carve(self, q: Coalition) -> "Partition":
        """Form ``q`` out of whatever coalitions its members currently sit in."""
        rest = [b - q for b in self.coalitions if b - q]
        return Partition.from_coalitions(self.n, rest + [q])


def _parse_blocks(text):
    tokens = []
    pos = 0
    stripped = text.strip()
    while pos < len(stripped):
        match = _TOKEN_RE.match(stripped, pos)
        if not match:
            break
        tokens.append(match.group(1))
        pos = match.end()

    def fail(token):
        raise PartitionFormatError(f"Unexpected token '{token}' in partition '{text}'")

    if not tokens or tokens[0] != "{":
        fail(tokens[0] if tokens else "")
    blocks: List[List[int]] = []
    i = 1
    while i < len(tokens):
        if tokens[i] != "{":
            fail(tokens[i])
        i += 1
        block = []
        while i < len(tokens) and tokens[i] != "}":
            if not tokens[i].isdigit():
                fail(tokens[i])
            block.append(int(tokens[i]))
            i += 1
            if i < len(tokens) and tokens[i] == ",":
                i += 1
        if i >= len(tokens):
            fail("end of text")
        blocks.append(block)
        i += 1
        if i < len(tokens) and tokens[i] == ",":
            i += 1
            continue
        if i < len(tokens) and tokens[i] == "}":
            if i != len(tokens) - 1:
                fail(tokens[i + 1])
            return blocks
        fail(tokens[i] if i < len(tokens) else "end of text")
    fail("end of text")


@lru_cache(maxsize=None)
def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for value in row:
            nxt.append(nxt[-1] + value)
        row = nxt
    return row[0]


def check_cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise SizeCapError(f"{what} supports at most {cap} agents, got {n}")


def enumerate_partitions(n: int, max_n: int = MAX_ENUMERATION_AGENTS) -> Iterator[Partition]:
    """Yield every partition of 1..n once, in restricted-growth-string order."""
    check_cap(n, max_n, "Partition enumeration")
    if n < 1:
        raise ValueError(f"Agent count must be positive, got {n}")

    labels = [0] * n

    def walk(pos: int, used: int):
        if pos == n:
            blocks = [[] for _ in range(used)]
            for agent, label in enumerate(labels, start=1):
                blocks[label].append(agent)
            yield Partition.from_coalitions(n, blocks)
            return
        for label in range(used + 1):
            labels[pos] = label
            yield from walk(pos + 1, max(used, label + 1))

    labels[0] = 0
    yield from walk(1, 1)


def enumerate_two_partitions(n: int) -> List[Partition]:
    if n < 2:
        raise ValueError(f"Duopolies need at least 2 agents, got {n}")
    rest = list(range(2, n + 1))
    found = []
    # agent 1 anchors the first coalition so each duopoly appears once
    for size in range(0, n - 1):
        for extra in combinations(rest, size):
            first = (1,) + extra
            second = tuple(i for i in rest if i not in extra)
            found.append(Partition(n, (first, second)))
    return sorted(found, key=lambda p: p.blocks)


def all_coalitions(n: int, include_grand: bool = True) -> List[Coalition]:
    agents = range(1, n + 1)
    top = n if include_grand else n - 1
    return [frozenset(c) for size in range(1, top + 1) for c in combinations(agents, size)]


def strict_subsets(c: Coalition) -> List[Coalition]:
    members = sorted(c)
    return [frozenset(s) for size in range(1, len(members)) for s in combinations(members, size)]


def mergers_of(p: Partition) -> List[Coalition]:
    found = []
    coalitions = p.coalitions
    for size in range(2, len(coalitions) + 1):
        for group in combinations(coalitions, size):
            found.append(frozenset().union(*group))
    return found


def merger_parts(p: Partition, q: Coalition) -> List[Coalition]:
    """Coalitions of ``p`` whose union is ``q``; empty when ``q`` is not a merger."""
    parts = [c for c in p.coalitions if c <= q]
    if len(parts) < 2 or frozenset().union(*parts) != q:
        return []
    return parts


def splits_of(p: Partition) -> List[Coalition]:
    found = []
    for c in p.coalitions:
        found.extend(strict_subsets(c))
    return found


def parent_coalition(p: Partition, q: Coalition) -> Coalition:
    """The coalition of ``p`` that strictly contains ``q``, if ``q`` is a split."""
    for c in p.coalitions:
        if q < c:
            return c
    return frozenset()


def coarser_than(p1: Partition, p2: Partition) -> bool:
    if p1.n != p2.n:
        raise ValueError(f"Partitions over {p1.n} and {p2.n} agents cannot be compared")
    if p1 == p2:
        return False
    return all(any(c <= d for d in p1.coalitions) for c in p2.coalitions)

# coalition_utils/shapley.py
from itertools import combinations
from typing import Callable, Dict

from scipy.special import comb

from coalition_utils.partitions import Coalition, check_cap

MAX_SHAPLEY_MEMBERS = 12


def shapley_shares(members: Coalition, worth: Callable[[Coalition], float]) -> Dict[int, float]:
    """
    Shapley value of each member of one coalition.

    Args:
        members: the coalition whose worth is being shared
        worth: worth of any sub-coalition; called once per subset, the empty
            set is taken to be worth 0

    Returns:
        dict: agent -> share, summing to worth(members)
    """
    members = frozenset(members)
    size = len(members)
    check_cap(size, MAX_SHAPLEY_MEMBERS, "Shapley sharing")
    if size == 1:
        (only,) = members
        return {only: worth(members)}

    values = {frozenset(): 0.0}
    ordered = sorted(members)
    for s in range(1, size + 1):
        for sub in combinations(ordered, s):
            values[frozenset(sub)] = worth(frozenset(sub))

    # weight of a subset of size s not containing i: 1 / (size * C(size-1, s))
    weights = [1.0 / (size * comb(size - 1, s, exact=True)) for s in range(size)]
    shares = {}
    for i in ordered:
        others = [j for j in ordered if j != i]
        total = 0.0
        for s in range(size):
            for sub in combinations(others, s):
                base = frozenset(sub)
                total += weights[s] * (values[base | {i}] - values[base])
        shares[i] = total
    return shares

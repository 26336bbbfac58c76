# coalition_utils/lp_exact.py
"""Two-phase simplex over rationals for small feasibility questions.

Solves  min c.x  s.t.  A x = b,  x >= 0  exactly with ``fractions.Fraction``
and Bland's rule, so the answer does not depend on a floating tolerance.
"""

from fractions import Fraction as Frac
from typing import List, Optional, Sequence, Tuple

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class ExactSimplex:
    def __init__(self, A: Sequence[Sequence], b: Sequence, c: Sequence):
        self.m = len(A)
        self.n = len(c)
        self.A: List[List[Frac]] = []
        self.b: List[Frac] = []
        for i, (row, rhs) in enumerate(zip(A, b)):
            row = [Frac(v) for v in row]
            rhs = Frac(rhs)
            if rhs < 0:
                row = [-v for v in row]
                rhs = -rhs
            # one artificial column per row
            self.A.append(row + [Frac(int(k == i)) for k in range(self.m)])
            self.b.append(rhs)
        self.c = [Frac(v) for v in c]
        self.basis = [self.n + i for i in range(self.m)]
        self.z: List[Frac] = []
        self.z0 = Frac(0)

    @property
    def width(self) -> int:
        return self.n + self.m

    def pivot(self, i: int, j: int) -> None:
        piv = self.A[i][j]
        self.A[i] = [v / piv for v in self.A[i]]
        self.b[i] /= piv
        for k in range(len(self.A)):
            f = self.A[k][j]
            if k != i and f != 0:
                self.A[k] = [vk - f * vi for vk, vi in zip(self.A[k], self.A[i])]
                self.b[k] -= f * self.b[i]
        f = self.z[j]
        if f != 0:
            self.z = [vz - f * vi for vz, vi in zip(self.z, self.A[i])]
            self.z0 -= f * self.b[i]
        self.basis[i] = j

    def _price(self, cost: Sequence[Frac]) -> None:
        self.z = list(cost)
        self.z0 = Frac(0)
        for i, bv in enumerate(self.basis):
            cb = cost[bv]
            if cb != 0:
                self.z = [vz - cb * va for vz, va in zip(self.z, self.A[i])]
                self.z0 -= cb * self.b[i]

    def _bland(self, allowed: int) -> str:
        while True:
            entering = next((j for j in range(allowed) if self.z[j] < 0), None)
            if entering is None:
                return OPTIMAL
            rows = [
                (self.b[i] / self.A[i][entering], self.basis[i], i)
                for i in range(len(self.A))
                if self.A[i][entering] > 0
            ]
            if not rows:
                return UNBOUNDED
            _, _, leave = min(rows)
            self.pivot(leave, entering)

    def _drop_artificials(self) -> None:
        i = 0
        while i < len(self.A):
            if self.basis[i] >= self.n:
                j = next((j for j in range(self.n) if self.A[i][j] != 0), None)
                if j is None:
                    # redundant equality
                    del self.A[i], self.b[i], self.basis[i]
                    continue
                self.pivot(i, j)
            i += 1

    def solve(self) -> Tuple[str, Optional[List[Frac]]]:
        # 1. Minimise the sum of artificials
        phase_one = [Frac(0)] * self.n + [Frac(1)] * self.m
        self._price(phase_one)
        self._bland(self.width)
        if -self.z0 != 0:
            return INFEASIBLE, None
        self._drop_artificials()

        # 2. Optimise the real objective over original columns only
        self._price(self.c + [Frac(0)] * self.m)
        status = self._bland(self.n)
        if status == UNBOUNDED:
            return UNBOUNDED, None
        x = [Frac(0)] * self.n
        for i, bv in enumerate(self.basis):
            if bv < self.n:
                x[bv] = self.b[i]
        return OPTIMAL, x


def max_slack_point(
    n_vars: int,
    lower_rows: Sequence[Tuple[Sequence[int], Frac]],
    total: Frac,
) -> Optional[List[Frac]]:
    """
    Point of {sum_{i in S} x_i >= l_S for each row, sum x = total, x >= 0}
    maximising the common slack, or None when the set is empty.

    Args:
        n_vars: number of variables x_0..x_{n-1}
        lower_rows: (indices S, lower bound l_S) pairs
        total: required sum of all variables

    Returns:
        list of Fraction or None
    """
    total = Frac(total)
    rows = list(lower_rows)
    n_surplus = len(rows)
    # columns: x (n_vars), slack t, surplus per row, cap slack u
    t_col = n_vars
    u_col = n_vars + 1 + n_surplus
    width = u_col + 1

    A, b = [], []
    for r, (members, low) in enumerate(rows):
        row = [Frac(0)] * width
        for i in members:
            row[i] = Frac(1)
        row[t_col] = Frac(-1)
        row[n_vars + 1 + r] = Frac(-1)
        A.append(row)
        b.append(Frac(low))

    row = [Frac(0)] * width
    for i in range(n_vars):
        row[i] = Frac(1)
    A.append(row)
    b.append(total)

    row = [Frac(0)] * width
    row[t_col] = Frac(1)
    row[u_col] = Frac(1)
    A.append(row)
    b.append(abs(total))

    c = [Frac(0)] * width
    c[t_col] = Frac(-1)
    status, x = ExactSimplex(A, b, c).solve()
    if status != OPTIMAL:
        return None
    return x[:n_vars]

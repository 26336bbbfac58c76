from fractions import Fraction

from coalition_utils.lp_exact import OPTIMAL, ExactSimplex, max_slack_point


def test_max_slack_is_centered():
    point = max_slack_point(2, [([0], Fraction(1)), ([1], Fraction(1))], Fraction(3))
    assert point == [Fraction(3, 2), Fraction(3, 2)]


def test_empty_polyhedron():
    assert max_slack_point(2, [([0], Fraction(2)), ([1], Fraction(2))], Fraction(3)) is None


def test_tight_polyhedron_still_feasible():
    point = max_slack_point(2, [([0], Fraction(1)), ([1], Fraction(2))], Fraction(3))
    assert point == [Fraction(1), Fraction(2)]


def test_group_rows():
    rows = [([0], Fraction(1)), ([1], Fraction(1)), ([2], Fraction(1)), ([0, 1], Fraction(5, 2))]
    point = max_slack_point(3, rows, Fraction(4))
    assert sum(point) == 4
    assert point[0] + point[1] >= Fraction(5, 2)
    assert all(v >= 1 for v in point)


def test_simplex_minimises():
    # min -x - y subject to x + 2y <= 4, 3x + y <= 6 written with slacks
    A = [[1, 2, 1, 0], [3, 1, 0, 1]]
    status, x = ExactSimplex(A, [4, 6], [-1, -1, 0, 0]).solve()
    assert status == OPTIMAL
    assert x[0] + x[1] == Fraction(14, 5)

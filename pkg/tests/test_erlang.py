import math

import pytest

from coalition_utils.erlang import blocking_probability, inverse_load, log_blocking_probability, log_inverse_load


def test_small_cases():
    assert blocking_probability(0, 3.0) == 1.0
    assert blocking_probability(1, 1.0) == pytest.approx(0.5)
    assert blocking_probability(2, 1.0) == pytest.approx(0.2)
    assert blocking_probability(5, 0.0) == 0.0


def test_textbook_value():
    assert blocking_probability(10, 10.0) == pytest.approx(0.21458, abs=1e-5)


def test_matches_direct_formula():
    m, a = 7, 4.5
    terms = [a ** k / math.factorial(k) for k in range(m + 1)]
    assert blocking_probability(m, a) == pytest.approx(terms[-1] / sum(terms), rel=1e-12)


def test_large_server_count_does_not_overflow():
    b = blocking_probability(2000, 1500.0)
    assert 0.0 <= b < 1e-3


def test_negative_inputs_rejected():
    with pytest.raises(ValueError):
        blocking_probability(-1, 1.0)
    with pytest.raises(ValueError):
        blocking_probability(2, -0.5)


@pytest.mark.parametrize("m, b", [(1, 0.3), (5, 1e-6), (40, 0.02), (3, 1e-120)])
def test_inverse_load_round_trip(m, b):
    a = inverse_load(m, b)
    assert blocking_probability(m, a) == pytest.approx(b, rel=1e-9)


def test_inverse_load_rejects_bad_targets():
    with pytest.raises(ValueError):
        inverse_load(3, 0.0)
    with pytest.raises(ValueError):
        inverse_load(3, 1.0)
    with pytest.raises(ValueError):
        inverse_load(0, 0.5)


@pytest.mark.parametrize("m, a", [(1, 0.7), (7, 4.5), (40, 35.0)])
def test_log_blocking_matches_plain(m, a):
    assert log_blocking_probability(m, a) == pytest.approx(math.log(blocking_probability(m, a)), rel=1e-12)


def test_log_blocking_survives_underflow():
    # B(80, 1e-14) is far below the smallest double
    assert blocking_probability(80, 1e-14) == 0.0
    expected = 80 * math.log(1e-14) - math.lgamma(81)
    assert log_blocking_probability(80, 1e-14) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("m, log_b", [(1, -5.0), (8, -250.0), (80, -2600.0)])
def test_log_inverse_load_round_trip(m, log_b):
    log_a = log_inverse_load(m, log_b)
    assert log_blocking_probability(m, math.exp(log_a)) == pytest.approx(log_b, rel=1e-12)


def test_log_inverse_load_rejects_non_negative_target():
    with pytest.raises(ValueError):
        log_inverse_load(3, 0.0)

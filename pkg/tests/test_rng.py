import pytest

from coalition_utils.rng import SplitMix64


def test_reference_output():
    assert SplitMix64(0).next_u64() == 0xE220A8397B1DCDAF


def test_streams_are_reproducible():
    a, b = SplitMix64(42), SplitMix64(42)
    assert [a.next_u64() for _ in range(10)] == [b.next_u64() for _ in range(10)]


def test_randbelow_range():
    rng = SplitMix64(5)
    draws = [rng.randbelow(3) for _ in range(3000)]
    assert set(draws) == {0, 1, 2}
    assert all(700 < draws.count(v) < 1300 for v in range(3))
    with pytest.raises(ValueError):
        rng.randbelow(0)


def test_random_in_unit_interval():
    rng = SplitMix64(9)
    assert all(0.0 <= rng.random() < 1.0 for _ in range(1000))

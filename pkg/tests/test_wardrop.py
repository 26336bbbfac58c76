import itertools

import pytest

from coalition_utils.erlang import blocking_probability
from coalition_utils.partitions import Partition, enumerate_partitions, enumerate_two_partitions
from coalition_utils.wardrop import (
    QueueSystem,
    c_star_set,
    k_star,
    pessimal_rate,
    psi,
    realizable_sizes,
    solve_we,
)


def test_system_validation():
    with pytest.raises(ValueError):
        QueueSystem((3, 0), 1.0)
    with pytest.raises(ValueError):
        QueueSystem((3, 2), 0.0)
    with pytest.raises(ValueError):
        QueueSystem((), 1.0)


def test_grand_coalition_takes_everything():
    sys_ = QueueSystem((10, 2, 2, 2), 13.0)
    split = solve_we(sys_, Partition.grand(4))
    assert split.rates == (13.0,)
    assert split.common_blocking == pytest.approx(blocking_probability(16, 13.0))


@pytest.mark.parametrize("servers, lam", [((10, 2, 2, 2), 13.0), ((3, 2, 1), 0.5), ((7, 2, 2, 2, 2), 400.0)])
def test_rates_sum_and_blocking_is_common(servers, lam):
    sys_ = QueueSystem(servers, lam)
    for p in enumerate_partitions(sys_.n):
        split = solve_we(sys_, p)
        assert sum(split.rates) == pytest.approx(lam, rel=1e-10)
        for c, rate in zip(p.coalitions, split.rates):
            assert blocking_probability(sys_.servers_of(c), rate) == pytest.approx(split.common_blocking, rel=1e-8)


def test_example_split():
    sys_ = QueueSystem((10, 2, 2, 2), 13.0)
    split = solve_we(sys_, Partition.parse("{{1,2,3},{4}}"))
    big, small = split.rates
    assert big + small == pytest.approx(13.0)
    # 14 servers against 2: the larger side gets more than its server share
    assert big / 14 > small / 2


def test_equal_server_groups_share_equally():
    sys_ = QueueSystem((2, 2, 2), 5.0)
    split = solve_we(sys_, Partition.singletons(3))
    assert split.rates == pytest.approx((5.0 / 3,) * 3)


def test_mu_scales_load():
    fast = solve_we(QueueSystem((4, 2), 6.0, mu=2.0), Partition.singletons(2))
    slow = solve_we(QueueSystem((4, 2), 3.0, mu=1.0), Partition.singletons(2))
    assert [r / 2 for r in fast.rates] == pytest.approx(list(slow.rates))
    assert fast.common_blocking == pytest.approx(slow.common_blocking)


@pytest.mark.parametrize("servers, lam", [((3, 2, 1, 1), 2.0), ((5, 4, 2, 1), 11.0)])
def test_pessimal_rate_matches_exhaustive_scan(servers, lam):
    sys_ = QueueSystem(servers, lam)
    for size in range(1, sys_.n):
        for members in itertools.combinations(range(1, sys_.n + 1), size):
            q = frozenset(members)
            assert pessimal_rate(sys_, q) == pytest.approx(pessimal_rate(sys_, q, exhaustive=True), rel=1e-9)


def test_pessimal_rate_of_everyone_is_total():
    sys_ = QueueSystem((3, 2), 4.0)
    assert pessimal_rate(sys_, frozenset({1, 2})) == 4.0


def test_realizable_sizes():
    assert realizable_sizes(QueueSystem((10, 2, 2, 2), 13.0)) == [10, 12, 14]


@pytest.mark.parametrize("servers, lam, expected", [
    ((10, 2, 2, 2), 13.0, {12}),
    # psi is 0.98194 at 80, 0.98361 at 85 and 0.97602 at 100, so {1,3} wins
    ((80, 20, 5), 100.0, {85}),
])
def test_k_star(servers, lam, expected):
    assert k_star(QueueSystem(servers, lam)) == expected


def test_psi_values_for_three_providers():
    sys_ = QueueSystem((80, 20, 5), 100.0)
    assert realizable_sizes(sys_) == [80, 85, 100]
    assert psi(sys_, 80) == pytest.approx(0.98194, abs=1e-5)
    assert psi(sys_, 85) == pytest.approx(0.98361, abs=1e-5)
    assert psi(sys_, 100) == pytest.approx(0.97602, abs=1e-5)


def test_c_star_set():
    sys_ = QueueSystem((10, 2, 2, 2), 13.0)
    assert c_star_set(sys_) == {frozenset({1, 2}), frozenset({1, 3}), frozenset({1, 4})}


def test_psi_bounds():
    sys_ = QueueSystem((10, 2, 2, 2), 13.0)
    with pytest.raises(ValueError):
        psi(sys_, 0)
    with pytest.raises(ValueError):
        psi(sys_, 16)


def test_heavy_traffic_split_is_close_to_server_share():
    servers = (7, 2, 2, 2, 2)
    total = sum(servers)
    lam = 1e4 * total
    sys_ = QueueSystem(servers, lam)
    for p in enumerate_two_partitions(sys_.n):
        first = p.coalitions[0]
        share = solve_we(sys_, p).rate_of(first) / lam
        assert abs(share - sys_.servers_of(first) / total) <= total / lam


def test_light_traffic_majority_takes_almost_all():
    servers = (7, 2, 2, 2, 2)
    total = sum(servers)
    # the closest duopoly (8 servers against 7) needs a very light load before
    # the majority side holds 99% of it
    lam = 1e-14
    sys_ = QueueSystem(servers, lam)
    for p in enumerate_two_partitions(sys_.n):
        big = max(p.coalitions, key=sys_.servers_of)
        assert 2 * sys_.servers_of(big) > total
        assert solve_we(sys_, p).rate_of(big) / lam >= 0.99


def test_majority_share_grows_as_load_falls():
    sys_ = QueueSystem((7, 2, 2, 2, 2), 1.0)
    p = Partition.parse("{{1},{2,3,4,5}}")
    shares = [solve_we(sys_.with_lambda(lam), p).rate_of(frozenset({2, 3, 4, 5})) / lam for lam in (1.0, 1e-3, 1e-6, 1e-9)]
    assert shares == sorted(shares)


def test_split_survives_underflowing_blocking():
    # B* here is below the smallest double, the rates must still add up
    sys_ = QueueSystem((80, 20, 5), 1e-10)
    split = solve_we(sys_, Partition.singletons(3))
    assert split.common_blocking == 0.0
    assert sum(split.rates) == pytest.approx(1e-10, rel=1e-10)
    assert split.rates[0] > split.rates[1] > split.rates[2] > 0


def test_equal_groups_split_evenly():
    sys_ = QueueSystem((3, 3, 3), 2.0)
    split = solve_we(sys_, Partition.singletons(3))
    assert split.rates == pytest.approx((2.0 / 3,) * 3, rel=1e-12)

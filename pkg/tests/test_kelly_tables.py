import pytest

from coalition_utils.kelly import KellySystem, partition_class, stable_partition_scan, u_stable
from coalition_utils.oracles import exhaustive_ne_partitions
from coalition_utils.partitions import Partition


def _ne_classes(n, eta):
    sys_ = KellySystem((1.0,) * n, adamant_eta=eta)
    return {partition_class(sys_, p) for p in exhaustive_ne_partitions(sys_)}


@pytest.mark.parametrize("eta, expected", [
    (1.0, {"GC", "ALC"}),
    (0.6, {"ALC"}),
    (0.45, {"ALCo"}),
    (0.2, {"GC", "ALCo"}),
])
def test_two_players(eta, expected):
    assert _ne_classes(2, eta) == expected


@pytest.mark.parametrize("eta, expected", [
    (3.0, {"GC", "SS", "ALC"}),
    (2.6, {"SS", "ALC"}),
    (1.0, {"ALC"}),
    (0.69, {"ALC"}),
    (0.6, {"ALCo"}),
    (0.53, {"SS", "ALCo"}),
    (0.45, {"SSo", "ALCo"}),
    (0.3, {"SSo", "ALCo"}),
    (0.1, {"GC", "SSo", "ALCo"}),
])
def test_three_players(eta, expected):
    assert _ne_classes(3, eta) == expected


@pytest.mark.slow
@pytest.mark.parametrize("eta, expected", [
    (3.0, {"TTC", "ALC"}),
    (1.0, {"ALC"}),
    (0.73, {"ALCo"}),
    (0.63, {"ALCo"}),
    (0.53, {"TTC", "ALCo"}),
    (0.45, {"TTCo", "ALCo"}),
    (0.2, {"TTCo", "ALCo"}),
])
def test_four_players(eta, expected):
    assert _ne_classes(4, eta) == expected


@pytest.mark.parametrize("eta", [0.5, 1.0, 3.0])
def test_five_players_stand_alone(eta):
    sys_ = KellySystem((1.0,) * 5, adamant_eta=eta)
    stable = [p for p, verdict in stable_partition_scan(sys_) if verdict.stable]
    assert [partition_class(sys_, p) for p in stable] in (["ALC"], ["ALCo"])


def _delta_system(delta):
    alpha = (0.0, 8.0, 11.5, 15.3, 21.5)
    return KellySystem(tuple(20.0 - a * delta for a in alpha))


@pytest.mark.slow
def test_stable_set_grows_along_delta():
    previous = set()
    for step in range(100, 221, 5):
        sys_ = _delta_system(step / 1000)
        current = {p for p, verdict in stable_partition_scan(sys_) if verdict.stable}
        assert previous <= current, f"delta={step / 1000}"
        previous = current


def _shape_counts(partitions):
    counts = {"ALC": 0, "SS": 0, "TTC": 0, "other": 0}
    for p in partitions:
        sizes = sorted(len(c) for c in p.coalitions)
        pairs = sizes.count(2)
        if sizes[-1] == 1:
            counts["ALC"] += 1
        elif sizes[-1] == 2 and pairs == 1:
            counts["SS"] += 1
        elif sizes[-1] == 2 and pairs == 2:
            counts["TTC"] += 1
        else:
            counts["other"] += 1
    return counts


@pytest.mark.slow
@pytest.mark.parametrize("delta, alc, ss, ttc", [
    (0.1, 1, 0, 0),
    (0.146, 1, 1, 0),
    (0.147, 1, 1, 2),
    (0.18, 1, 2, 2),
    (0.19, 1, 3, 2),
    (0.21, 1, 4, 4),
])
def test_delta_sweep_stable_counts(delta, alc, ss, ttc):
    sys_ = _delta_system(delta)
    stable = [p for p, verdict in stable_partition_scan(sys_) if verdict.stable]
    assert _shape_counts(stable) == {"ALC": alc, "SS": ss, "TTC": ttc, "other": 0}


@pytest.mark.parametrize("text, first", [
    ("{{1,5},{2},{3},{4}}", 0.146),
    ("{{1,4},{2,5},{3}}", 0.147),
    ("{{1,4},{3,5},{2}}", 0.147),
])
def test_first_stable_delta(text, first):
    p = Partition.parse(text)
    found = next(
        step / 1000 for step in range(100, 221)
        if u_stable(_delta_system(step / 1000), p).stable
    )
    assert found == pytest.approx(first, abs=0.002)


@pytest.mark.parametrize("delta, text", [
    (0.18, "{{2,5},{1},{3},{4}}"),
    (0.19, "{{3,5},{1},{2},{4}}"),
    (0.21, "{{4,5},{1},{2},{3}}"),
])
def test_listed_pairings_with_weakest_player_are_stable(delta, text):
    assert u_stable(_delta_system(delta), Partition.parse(text)).stable

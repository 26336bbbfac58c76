import pytest

from coalition_utils.partitions import (
    Partition,
    PartitionFormatError,
    SizeCapError,
    all_coalitions,
    bell_number,
    coarser_than,
    enumerate_partitions,
    enumerate_two_partitions,
    merger_parts,
    mergers_of,
    parent_coalition,
    splits_of,
)


def test_bell_numbers():
    assert [bell_number(n) for n in range(1, 8)] == [1, 2, 5, 15, 52, 203, 877]


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_enumeration_is_complete_and_unique(n):
    found = list(enumerate_partitions(n))
    assert len(found) == bell_number(n)
    assert len(set(found)) == len(found)


def test_enumeration_starts_with_grand_and_ends_with_singletons():
    found = list(enumerate_partitions(4))
    assert found[0] == Partition.grand(4)
    assert found[-1] == Partition.singletons(4)


def test_enumeration_refuses_past_cap():
    with pytest.raises(SizeCapError):
        next(enumerate_partitions(13))


def test_two_partitions():
    duopolies = enumerate_two_partitions(5)
    assert len(duopolies) == 2 ** 4 - 1
    assert all(len(p) == 2 for p in duopolies)


def test_canonical_text():
    p = Partition.from_coalitions(4, [[4, 2], [3], [1]])
    assert str(p) == "{{1},{2,4},{3}}"
    assert Partition.parse(str(p)) == p


def test_parse_accepts_whitespace():
    assert Partition.parse(" { {3, 1} , {2} } ") == Partition.from_coalitions(3, [[1, 3], [2]])


@pytest.mark.parametrize("text, token", [
    ("{{1,2},x}", "x"),
    ("{{1,2},{3}", "end of text"),
    ("[{1}]", "["),
])
def test_parse_names_offending_token(text, token):
    with pytest.raises(PartitionFormatError, match=token.replace("[", r"\[")):
        Partition.parse(text)


def test_parse_rejects_overlap_and_gaps():
    with pytest.raises(PartitionFormatError):
        Partition.parse("{{1,2},{2,3}}")
    with pytest.raises(PartitionFormatError):
        Partition.parse("{{1},{3}}", 3)


def test_split_merge_carve():
    p = Partition.parse("{{1,2,3},{4},{5}}")
    assert p.split(frozenset({1, 2, 3}), frozenset({2})) == Partition.parse("{{1,3},{2},{4},{5}}")
    assert p.merge([frozenset({4}), frozenset({5})]) == Partition.parse("{{1,2,3},{4,5}}")
    assert p.carve(frozenset({3, 4})) == Partition.parse("{{1,2},{3,4},{5}}")


def test_mergers_and_splits():
    p = Partition.parse("{{1,2},{3},{4}}")
    assert len(mergers_of(p)) == 4
    assert merger_parts(p, frozenset({1, 2, 3})) == [frozenset({1, 2}), frozenset({3})]
    assert merger_parts(p, frozenset({1, 3})) == []
    assert splits_of(p) == [frozenset({1}), frozenset({2})]
    assert parent_coalition(p, frozenset({2})) == frozenset({1, 2})


def test_all_coalitions_order():
    coalitions = all_coalitions(3)
    assert coalitions[:3] == [frozenset({1}), frozenset({2}), frozenset({3})]
    assert coalitions[-1] == frozenset({1, 2, 3})
    assert len(all_coalitions(3, include_grand=False)) == 6


def test_coarser_than():
    fine = Partition.singletons(3)
    assert coarser_than(Partition.grand(3), fine)
    assert not coarser_than(fine, Partition.grand(3))
    assert not coarser_than(fine, fine)
    with pytest.raises(ValueError):
        coarser_than(Partition.grand(2), fine)

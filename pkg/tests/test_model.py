import pytest
from hypothesis import given
from hypothesis import strategies as st

from torsynth.errors import TorsynthError
from torsynth.model import (
    FamilyPartition,
    Relay,
    RelayRole,
    build_family_partition,
    group_counts,
    group_weights,
    role_of,
    scale_weight,
)

from conftest import make_consensus, make_relay


class TestRelayInvariants:
    @pytest.mark.parametrize("fingerprint", ["zz", "A" * 39, "a" * 40])
    def test_rejects_bad_fingerprint(self, fingerprint):
        with pytest.raises(TorsynthError, match="fingerprint"):
            Relay(fingerprint=fingerprint, nickname="a", address="1.2.3.4",
                  or_port=9001, weight=1)

    @pytest.mark.parametrize("nickname", ["", "x" * 20, "bad-name"])
    def test_rejects_bad_nickname(self, nickname):
        with pytest.raises(TorsynthError, match="nickname"):
            Relay(fingerprint="A" * 40, nickname=nickname, address="1.2.3.4",
                  or_port=9001, weight=1)

    def test_rejects_negative_weight(self):
        with pytest.raises(TorsynthError, match="weight"):
            make_relay(0, weight=1).with_weight(-1)

    def test_duplicate_fingerprints_rejected(self):
        with pytest.raises(TorsynthError, match="duplicate"):
            make_consensus([make_relay(1), make_relay(1)])


class TestRoleOf:
    @pytest.mark.parametrize(
        "flags,expected",
        [
            ({"Guard", "Fast"}, RelayRole.GUARD_ONLY),
            ({"Guard", "Exit"}, RelayRole.GUARD_AND_EXIT),
            ({"Exit"}, RelayRole.EXIT_ONLY),
            ({"Fast", "Running"}, RelayRole.MIDDLE),
            (set(), RelayRole.MIDDLE),
            # BadExit relays are never picked for the exit position, so
            # they do not count as exits.
            ({"Exit", "BadExit"}, RelayRole.MIDDLE),
            ({"Guard", "Exit", "BadExit"}, RelayRole.GUARD_ONLY),
        ],
    )
    def test_role_mapping(self, flags, expected):
        assert role_of(make_relay(0, flags=flags)) is expected


class TestGroupAggregates:
    def test_all_middle(self):
        c = make_consensus([make_relay(0, weight=3), make_relay(1, weight=4)])
        assert group_weights(c) == (7, 0, 0, 0)
        assert group_counts(c) == (2, 0, 0, 0)

    def test_one_of_each(self):
        c = make_consensus(
            [
                make_relay(0, weight=2),
                make_relay(1, weight=5, flags={"Guard"}),
                make_relay(2, weight=7, flags={"Exit"}),
                make_relay(3, weight=11, flags={"Guard", "Exit"}),
            ]
        )
        assert group_weights(c) == (2, 5, 7, 11)
        assert group_counts(c) == (1, 1, 1, 1)

    def test_all_guard_and_exit(self):
        c = make_consensus(
            [make_relay(i, weight=10, flags={"Guard", "Exit"}) for i in range(5)]
        )
        assert group_weights(c) == (0, 0, 0, 50)

    @given(st.lists(st.tuples(st.integers(0, 1000), st.integers(0, 15)), min_size=1, max_size=40))
    def test_partition_properties(self, layout):
        flag_sets = [set(), {"Guard"}, {"Exit"}, {"Guard", "Exit"}]
        relays = [
            make_relay(i, weight=w, flags=flag_sets[f % 4])
            for i, (w, f) in enumerate(layout)
        ]
        c = make_consensus(relays)
        assert sum(group_counts(c)) == len(c)
        assert sum(group_weights(c)) == c.total_weight
        # invariant under reordering
        assert group_weights(make_consensus(reversed(relays))) == group_weights(c)


class TestScaleWeight:
    @pytest.mark.parametrize(
        "weight,factor,expected",
        [
            (100, 1.0, 100),
            (100, 2.0, 200),
            (3, 0.1, 1),  # nonzero input, positive factor never drops to 0
            (0, 5.0, 0),
            (5, 0.5, 3),  # 2.5 rounds half away from zero
            (3, 0.5, 2),  # 1.5 rounds up
        ],
    )
    def test_rounding(self, weight, factor, expected):
        assert scale_weight(weight, factor) == expected


class TestFamilyPartition:
    def fps(self, *indexes):
        return [f"{i:040X}" for i in indexes]

    def test_transitive_closure(self):
        a, b, c = self.fps(1, 2, 3)
        consensus = make_consensus([make_relay(i) for i in range(1, 4)])
        pairs = [(a, b), (b, a), (b, c), (c, b)]
        partition = build_family_partition(pairs, consensus)
        groups = list(partition.groups().values())
        assert groups == [frozenset({a, b, c})]

    def test_no_pairs(self):
        consensus = make_consensus([make_relay(1)])
        assert len(build_family_partition([], consensus)) == 0

    def test_one_sided_declaration_ignored(self):
        a, b = self.fps(1, 2)
        consensus = make_consensus([make_relay(1), make_relay(2)])
        assert len(build_family_partition([(a, b)], consensus)) == 0

    def test_unknown_fingerprint_rejected(self):
        a, b = self.fps(1, 99)
        consensus = make_consensus([make_relay(1)])
        with pytest.raises(TorsynthError, match=b):
            build_family_partition([(a, b), (b, a)], consensus)

    def test_singleton_family_rejected(self):
        with pytest.raises(TorsynthError, match="member"):
            FamilyPartition({"A" * 40: "fam"})

    @given(
        st.lists(
            st.tuples(st.integers(0, 19), st.integers(0, 19)), max_size=60
        )
    )
    def test_partition_is_disjoint_with_min_size_two(self, edges):
        consensus = make_consensus([make_relay(i) for i in range(20)])
        pairs = []
        for a, b in edges:
            pairs.append((f"{a:040X}", f"{b:040X}"))
            pairs.append((f"{b:040X}", f"{a:040X}"))
        partition = build_family_partition(pairs, consensus)
        groups = partition.groups()
        seen = set()
        for members in groups.values():
            assert len(members) >= 2
            assert not members & seen
            seen |= members
        assert len(partition) == len(seen)

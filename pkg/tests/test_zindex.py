"""Priority-index values, properties, and the lookup table."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revsched.allocation import AllocationVector
from revsched.errors import ConfigError
from revsched.streams import StreamSpec
from revsched.zindex import (PriorityTable, build_table, priority,
                             priority_via_value_difference)

# Frozen oracles (mpmath, 60 digits): stream r=1/350, mean_exec=600,
# mean_deadline=1000, reward=1, share f=0.5.
Z_ORACLES = {1: 0.0012547748902961010433, 5: 0.0016070767778603488761}

S = StreamSpec(0, 1 / 350, 600.0, 1000.0, 1.0)


@pytest.mark.parametrize("l,expected", sorted(Z_ORACLES.items()))
def test_priority_matches_oracle(l, expected):
    assert priority(S, 0.5, l) == pytest.approx(expected, rel=1e-10)


def test_zero_share_index_is_peak_rate():
    # with no fractional share the stream loses nothing by waiting, so the
    # index equals the full peak revenue rate v*s at every length
    for l in (1, 2, 10, 100):
        assert priority(S, 0.0, l) == pytest.approx(S.reward * S.service_rate,
                                                    rel=1e-12)


def test_index_limit_at_huge_queue():
    bound = S.reward * S.service_rate
    z = priority(S, 0.5, 10**6)
    assert z <= bound
    assert z == pytest.approx(bound, rel=1e-4)


def test_two_evaluations_agree():
    for f in (0.0, 0.2, 0.5, 0.9, 1.0):
        for l in (1, 2, 7, 50, 400):
            a = priority(S, f, l)
            b = priority_via_value_difference(S, f, l)
            assert a == pytest.approx(b, rel=1e-12)


def test_index_monotone_and_bounded():
    values = [priority(S, 0.5, l) for l in range(1, 300)]
    assert all(b >= a for a, b in zip(values, values[1:]))
    bound = S.reward * S.service_rate
    assert all(0.0 <= v <= bound for v in values)


def test_index_scales_with_reward():
    # the index is linear in the reward
    s2 = StreamSpec(0, 1 / 350, 600.0, 1000.0, 3.0)
    for l in (1, 4, 20):
        assert priority(s2, 0.5, l) == pytest.approx(3.0 * priority(S, 0.5, l),
                                                     rel=1e-12)


@given(f=st.floats(0.0, 1.0), l=st.integers(1, 500))
@settings(max_examples=100, deadline=None)
def test_index_stays_in_range(f, l):
    z = priority(S, f, l)
    assert 0.0 <= z <= S.reward * S.service_rate * (1 + 1e-12)


def make_table(l_max=64):
    specs = [StreamSpec(0, 1 / 350, 530.0, 500.0, 1.3),
             StreamSpec(1, 1 / 350, 900.0, 500.0, 1.0)]
    f = AllocationVector((0.4, 0.6))
    return specs, build_table(specs, f, l_max)


def test_table_lookup_matches_direct_eval():
    specs, table = make_table()
    for i, s in enumerate(specs):
        for l in (1, 2, 10, 64):
            assert table.lookup(i, l) == pytest.approx(
                priority(s, table.allocation[i], l), rel=1e-12)


def test_table_lookup_beyond_lmax_returns_limit():
    specs, table = make_table(l_max=16)
    for i, s in enumerate(specs):
        assert table.lookup(i, 17) == s.reward * s.service_rate
        assert table.lookup(i, 10**9) == s.reward * s.service_rate


def test_select_prefers_higher_index_and_skips_empty():
    specs, table = make_table()
    assert table.select([0, 0]) is None
    assert table.select([5, 0]) == 0
    assert table.select([0, 5]) == 1
    chosen = table.select([3, 3])
    by_hand = max((0, 1), key=lambda i: table.lookup(i, 3))
    assert chosen == by_hand


def test_select_breaks_ties_toward_low_id():
    specs = [StreamSpec(0, 1 / 350, 600.0, 1000.0, 1.0),
             StreamSpec(1, 1 / 350, 600.0, 1000.0, 1.0)]
    table = build_table(specs, AllocationVector((0.5, 0.5)), 32)
    assert table.select([4, 4]) == 0


def test_bad_arguments_rejected():
    specs, table = make_table()
    with pytest.raises(ConfigError):
        priority(S, 0.5, 0)
    with pytest.raises(ConfigError):
        priority(S, 1.5, 1)
    with pytest.raises(ConfigError):
        table.lookup(0, 0)
    with pytest.raises(ConfigError):
        table.select([1, 2, 3])
    with pytest.raises(ConfigError):
        build_table(specs, AllocationVector((1.0,)), 8)

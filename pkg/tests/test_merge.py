"""Merge queries, super-rank checks, interval scores, the interval DP."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from coiquery import (
    BiasFunction,
    DomainError,
    UtilityContext,
    UtilityKind,
    WeakOrder,
    apply_merge,
    block_expected_user_utility,
    brute_force_merge_opt,
    count_super_ranks,
    interval_score,
    is_super_rank,
    maximize_merge_dp,
)
from coiquery.merge import _quadratic_score12_table
from oracles import brute_block_utility, iter_coarsenings, iter_weak_orders


# --------------------------------------------------------------------------- #
# Applying merges
# --------------------------------------------------------------------------- #


def test_merging_middle_blocks_compacts_the_dense_ranks():
    base = WeakOrder.total(["a", "b", "c", "d"])
    merged = apply_merge(base, 2, 3)
    assert merged.as_lists() == [["a"], ["b", "c"], ["d"]]
    assert merged.block_index_map() == {"a": 1, "b": 2, "c": 2, "d": 3}


def test_merging_everything_or_nothing():
    base = WeakOrder.total(["a", "b", "c"])
    assert apply_merge(base, 1, 3) == WeakOrder.of(["a", "b", "c"])
    assert apply_merge(base, 2, 2) == base


def test_merge_spans_count_blocks_not_positions():
    base = WeakOrder.of(["a", "b"], ["c"], ["d"])
    assert apply_merge(base, 2, 3) == WeakOrder.of(["a", "b"], ["c", "d"])


def test_out_of_range_merge_rejected():
    base = WeakOrder.total(["a", "b"])
    with pytest.raises(DomainError):
        apply_merge(base, 0, 1)
    with pytest.raises(DomainError):
        apply_merge(base, 2, 3)
    with pytest.raises(DomainError):
        apply_merge(base, 2, 1)


# --------------------------------------------------------------------------- #
# The super-rank relation
# --------------------------------------------------------------------------- #


def test_collapsing_everything_into_one_set_is_a_super_rank():
    base = WeakOrder.of(["e1", "e3"], ["e4"], ["e2"])
    candidate = WeakOrder.of(["e1", "e3", "e4", "e2"])
    assert is_super_rank(candidate, base)


def test_appending_below_all_originals_is_a_super_rank():
    base = WeakOrder.of(["e1", "e3"], ["e4"], ["e2"])
    candidate = WeakOrder.of(["e1", "e3"], ["e4"], ["e2"], ["e5"])
    assert is_super_rank(candidate, base)


def test_every_ranking_is_a_super_rank_of_itself():
    order = WeakOrder.of(["a", "b"], ["c"])
    assert is_super_rank(order, order)


def test_violations_name_what_went_wrong():
    base = WeakOrder.of(["a", "b"], ["c"], ["d"])
    dropped = is_super_rank(WeakOrder.of(["a", "b"], ["c"]), base)
    assert not dropped and "drops" in dropped.violation
    broken_tie = is_super_rank(WeakOrder.total(["a", "b", "c", "d"]), base)
    assert not broken_tie and "tie" in broken_tie.violation
    reversed_pair = is_super_rank(WeakOrder.of(["d"], ["a", "b"], ["c"]), base)
    assert not reversed_pair and "reversed" in reversed_pair.violation
    inserted = is_super_rank(WeakOrder.of(["a", "b"], ["x"], ["c"], ["d"]), base)
    assert not inserted and "below" in inserted.violation


def test_merges_are_always_super_ranks():
    rng = random.Random(19)
    for _ in range(50):
        size = rng.randint(1, 8)
        base = WeakOrder.total([f"e{i}" for i in range(1, size + 1)])
        start = rng.randint(1, size)
        end = rng.randint(start, size)
        assert is_super_rank(apply_merge(base, start, end), base)


# --------------------------------------------------------------------------- #
# Counting super-ranks
# --------------------------------------------------------------------------- #


def test_counts_factor_into_coarsenings_times_weak_orders():
    assert count_super_ranks(3, 0) == 4
    assert count_super_ranks(1, 3) == 13
    assert count_super_ranks(2, 2) == 6
    assert [count_super_ranks(1, r) for r in range(6)] == [1, 1, 3, 13, 75, 541]


def test_count_matches_filtering_all_weak_orders():
    base_keys = ("b1", "b2", "b3")
    appended = ("x1", "x2")
    base = WeakOrder.total(base_keys)
    matches = sum(
        1
        for blocks in iter_weak_orders(base_keys + appended)
        if is_super_rank(WeakOrder.of(*blocks), base)
    )
    assert matches == count_super_ranks(3, 2) == 12


def test_count_bounds_enforced():
    with pytest.raises(DomainError):
        count_super_ranks(0, 0)
    with pytest.raises(DomainError):
        count_super_ranks(1, -1)
    with pytest.raises(DomainError):
        count_super_ranks(5000, 0)
    with pytest.raises(DomainError):
        count_super_ranks(1, 301)


# --------------------------------------------------------------------------- #
# Interval scores
# --------------------------------------------------------------------------- #


def _quad_ctx(entries, z=4, top_k=None, default=0):
    return UtilityContext(
        z,
        top_k or z,
        BiasFunction({k: Fraction(v) for k, v in entries.items()},
                     default=Fraction(default)),
    )


def test_singleton_interval_with_no_bias_scores_zero():
    base = WeakOrder.total(["a", "b", "c", "d"])
    assert interval_score(3, 3, _quad_ctx({}), base) == 0


def test_two_tuple_interval_doubles_the_block_utility():
    base = WeakOrder.total(["a", "b", "c", "d"])
    assert interval_score(2, 3, _quad_ctx({}), base) == -1


def test_heterogeneous_interval_is_the_per_tuple_sum():
    base = WeakOrder.total(["a", "b", "c", "d"])
    ctx = _quad_ctx({"b": "1/2", "c": 2})
    expected = block_expected_user_utility(
        2, 3, Fraction(1, 2), ctx
    ) + block_expected_user_utility(2, 3, Fraction(2), ctx)
    assert interval_score(2, 3, ctx, base) == expected


def test_interval_scores_respect_existing_tie_blocks():
    base = WeakOrder.of(["a", "b"], ["c"])
    ctx = _quad_ctx({}, z=3)
    # merging blocks 1..2 spans original positions 1..3
    expected = 3 * block_expected_user_utility(1, 3, 0, ctx)
    assert interval_score(1, 2, ctx, base) == expected


def test_interval_score_matches_longhand_average():
    rng = random.Random(29)
    for _ in range(60):
        size = rng.randint(1, 8)
        keys = [f"e{i}" for i in range(1, size + 1)]
        base = WeakOrder.total(keys)
        ctx = _quad_ctx(
            {k: Fraction(rng.randint(-20, 20), 10) for k in keys}, z=size
        )
        start = rng.randint(1, size)
        end = rng.randint(start, size)
        expected = sum(
            brute_block_utility(start, end, ctx.bias(key), ctx)
            for key in keys[start - 1 : end]
        )
        assert interval_score(start, end, ctx, base) == expected


# --------------------------------------------------------------------------- #
# The sales-assistant instance
# --------------------------------------------------------------------------- #


def _sales_ctx():
    return UtilityContext(
        4,
        3,
        BiasFunction({}, default=Fraction(19, 10)),
        omitted_rank=5,
        kind_user=UtilityKind.PRODUCT_USER,
        kind_source=UtilityKind.PRODUCT_SOURCE_BIASED,
    )


SALES_BASE = ("e3", "e2", "e1", "e4")

SALES_SCORES = {
    (1, 1): -1,
    (2, 2): -10,
    (3, 3): -15,
    (4, 4): -20,
    (1, 2): -3,
    (2, 3): -25,
    (3, 4): -35,
    (1, 3): -30,
    (2, 4): -45,
    (1, 4): -50,
}


def test_sales_interval_scores_frozen():
    base = WeakOrder.total(SALES_BASE)
    ctx = _sales_ctx()
    for (start, end), value in SALES_SCORES.items():
        assert interval_score(start, end, ctx, base) == value


def test_sales_dp_merges_the_top_two():
    intent = WeakOrder.total(SALES_BASE)
    result = maximize_merge_dp(intent, _sales_ctx(), base=intent)
    assert result.opt_value == -38
    assert result.partition.intervals == ((1, 2), (3, 3), (4, 4))
    assert result.ranking == WeakOrder.of(["e3", "e2"], ["e1"], ["e4"])


def test_sales_dp_through_the_query_pipeline():
    # equal biases make the derived base reproduce the intent exactly
    intent = WeakOrder.total(SALES_BASE)
    result = maximize_merge_dp(intent, _sales_ctx())
    assert result.opt_value == -38
    assert result.ranking == WeakOrder.of(["e3", "e2"], ["e1"], ["e4"])


def test_sales_brute_force_agrees_including_the_tie_rule():
    intent = WeakOrder.total(SALES_BASE)
    dp = maximize_merge_dp(intent, _sales_ctx(), base=intent)
    brute = brute_force_merge_opt(intent, _sales_ctx(), base=intent)
    assert brute.opt_value == dp.opt_value
    assert brute.partition.intervals == dp.partition.intervals


def test_sales_result_serialization():
    intent = WeakOrder.total(SALES_BASE)
    payload = maximize_merge_dp(intent, _sales_ctx(), base=intent).as_jsonable()
    assert payload["partition"] == [[1, 2], [3, 3], [4, 4]]
    assert payload["ranking"] == [["e3", "e2"], ["e1"], ["e4"]]
    assert payload["opt"] == -38.0


# --------------------------------------------------------------------------- #
# DP properties
# --------------------------------------------------------------------------- #


def test_zero_bias_keeps_every_singleton():
    intent = WeakOrder.total(["a", "b", "c", "d", "e"])
    result = maximize_merge_dp(intent, _quad_ctx({}, z=5), base=intent)
    assert result.opt_value == 0
    assert result.partition.intervals == tuple((i, i) for i in range(1, 6))
    assert result.ranking == intent


def test_dp_never_loses_to_the_identity_partition():
    rng = random.Random(37)
    for _ in range(40):
        size = rng.randint(1, 9)
        keys = [f"e{i}" for i in range(1, size + 1)]
        intent = WeakOrder.total(keys)
        ctx = _quad_ctx(
            {k: Fraction(rng.randint(-25, 25), 10) for k in keys}, z=size
        )
        result = maximize_merge_dp(intent, ctx, base=intent)
        identity = sum(
            interval_score(i, i, ctx, intent) for i in range(1, size + 1)
        )
        assert result.opt_value >= identity


def test_dp_matches_brute_force_on_random_instances():
    rng = random.Random(43)
    for _ in range(30):
        size = rng.randint(2, 8)
        keys = [f"e{i}" for i in range(1, size + 1)]
        intent = WeakOrder.total(keys)
        if rng.random() < 0.5:
            ctx = _quad_ctx(
                {k: Fraction(rng.randint(-25, 25), 10) for k in keys}, z=size
            )
        else:
            ctx = UtilityContext(
                size,
                max(1, size - 1),
                BiasFunction(
                    {k: Fraction(rng.randint(0, 25), 10) for k in keys}
                ),
                kind_user=UtilityKind.PRODUCT_USER,
                kind_source=UtilityKind.PRODUCT_SOURCE_BIASED,
            )
        dp = maximize_merge_dp(intent, ctx, base=intent)
        brute = brute_force_merge_opt(intent, ctx, base=intent)
        assert dp.opt_value == brute.opt_value
        assert dp.partition.intervals == brute.partition.intervals


def test_dp_handles_tied_base_blocks():
    base = WeakOrder.of(["a", "b"], ["c"], ["d"])
    ctx = _quad_ctx({"a": 2, "b": 2, "c": 2, "d": 2}, z=4)
    dp = maximize_merge_dp(base, ctx, base=base)
    brute = brute_force_merge_opt(base, ctx, base=base)
    assert dp.opt_value == brute.opt_value
    assert dp.partition.intervals == brute.partition.intervals


def test_fast_integer_path_reproduces_exact_interval_scores():
    rng = random.Random(53)
    for _ in range(25):
        size = rng.randint(1, 10)
        keys = [f"e{i}" for i in range(1, size + 1)]
        base = WeakOrder.total(keys)
        ctx = _quad_ctx(
            {k: Fraction(rng.randint(-30, 30), 10) for k in keys},
            z=size,
            top_k=rng.randint(1, size),
        )
        table = _quadratic_score12_table(base, ctx)
        stride = size + 1
        for start in range(1, size + 1):
            for end in range(start, size + 1):
                assert Fraction(table[start * stride + end], 12) == interval_score(
                    start, end, ctx, base
                )


def test_partition_scores_decompose_into_interval_scores():
    rng = random.Random(59)
    for _ in range(10):
        size = rng.randint(2, 8)
        keys = [f"e{i}" for i in range(1, size + 1)]
        base = WeakOrder.total(keys)
        ctx = _quad_ctx(
            {k: Fraction(rng.randint(-20, 20), 10) for k in keys}, z=size
        )
        for blocks in iter_coarsenings(keys):
            total = Fraction(0)
            position = 1
            for block in blocks:
                start, end = position, position + len(block) - 1
                total += sum(
                    brute_block_utility(start, end, ctx.bias(key), ctx)
                    for key in block
                )
                position = end + 1
            intervals = []
            cursor = 1
            for block in blocks:
                intervals.append((cursor, cursor + len(block) - 1))
                cursor += len(block)
            assert total == sum(
                interval_score(i, j, ctx, base) for i, j in intervals
            )


def test_brute_force_enumeration_limit():
    keys = [f"e{i}" for i in range(1, 16)]
    intent = WeakOrder.total(keys)
    ctx = _quad_ctx({}, z=15)
    with pytest.raises(DomainError):
        brute_force_merge_opt(intent, ctx, base=intent)
    assert brute_force_merge_opt(intent, ctx, limit=15, base=intent).opt_value == 0


def test_empty_base_rejected():
    ctx = _quad_ctx({}, z=2)
    with pytest.raises(DomainError):
        maximize_merge_dp(WeakOrder.of(), ctx, base=WeakOrder.of())

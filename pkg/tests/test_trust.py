"""Displacement thresholds, the feasible table, and the trust filter."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from coiquery import (
    BiasFunction,
    ConfigurationError,
    DomainError,
    TrustWitness,
    UtilityContext,
    WeakOrder,
    detect_trustworthy,
    feasible_delta_table,
    gsd_values,
    pairwise_indifference,
)
from oracles import closed_form_gap_shift, trust_baseline_flags


# --------------------------------------------------------------------------- #
# Closed-form thresholds
# --------------------------------------------------------------------------- #


def test_threshold_values_small_universe():
    two = gsd_values(2, 1)
    assert (two.gap, two.shift, two.denom) == (Fraction(2, 3), Fraction(1, 3), 18)

    for separation, gap, shift in (
        (1, Fraction(2, 3), Fraction(1)),
        (2, Fraction(43, 39), Fraction(7, 13)),
        (3, Fraction(8, 5), Fraction(1, 5)),
    ):
        entry = gsd_values(4, separation)
        assert (entry.gap, entry.shift) == (gap, shift)


def test_threshold_values_z_ten():
    assert gsd_values(10, 4).gap == Fraction(455, 237)
    assert gsd_values(10, 4).shift == Fraction(357, 237)
    five = gsd_values(10, 5)
    assert five.gap == Fraction(1220, 510)
    assert five.shift == Fraction(570, 510)
    assert five.denom == 510


def test_unit_separation_gap_is_constant():
    for z in (2, 17, 64, 200):
        assert gsd_values(z, 1).gap == Fraction(2, 3)


def test_denominator_positive_and_separation_range_enforced():
    for z in (2, 9, 33):
        for separation in range(1, z):
            assert gsd_values(z, separation).denom > 0
    with pytest.raises(DomainError):
        gsd_values(5, 0)
    with pytest.raises(DomainError):
        gsd_values(5, 5)


def test_thresholds_match_longhand_formulas():
    for z in (3, 8, 21):
        for separation in range(1, z):
            entry = gsd_values(z, separation)
            gap, shift = closed_form_gap_shift(z, separation)
            assert (entry.gap, entry.shift) == (gap, shift)


# --------------------------------------------------------------------------- #
# Feasible separations
# --------------------------------------------------------------------------- #


def test_feasible_table_tiny_universe():
    (entry,) = feasible_delta_table(2)
    assert entry.separation == 1
    assert (entry.bias_low, entry.bias_high) == (Fraction(1, 3), Fraction(2, 3))


def test_feasible_table_excludes_unit_separation_at_z_four():
    table = feasible_delta_table(4)
    assert [entry.separation for entry in table] == [2, 3]
    assert table[0].bias_low == Fraction(7, 13)
    assert table[0].bias_high == Fraction(43, 39)
    assert table[1].bias_low == Fraction(3, 5)
    assert table[1].bias_high == Fraction(8, 5)


def test_feasible_table_z_ten():
    table = feasible_delta_table(10)
    assert [entry.separation for entry in table] == [4, 5, 6, 7, 8, 9]
    five = table[1]
    assert five.bias_low == Fraction(71, 51)
    assert five.bias_high == Fraction(122, 51)


def test_feasible_entries_follow_the_strict_window_rule():
    for z in (2, 6, 12, 30):
        present = {entry.separation for entry in feasible_delta_table(z)}
        for separation in range(1, z):
            gap, shift = closed_form_gap_shift(z, separation)
            assert (max(gap - 1, shift) < gap) == (separation in present)
            if separation in present:
                (entry,) = [
                    e for e in feasible_delta_table(z) if e.separation == separation
                ]
                assert entry.bias_low == max(gap - 1, shift)
                assert entry.bias_high == gap
                assert entry.bias_low < entry.bias_high


# --------------------------------------------------------------------------- #
# The trust filter
# --------------------------------------------------------------------------- #


def _detect_ctx(z, entries, low, high, top_k=None):
    bias = BiasFunction(
        {k: Fraction(v) for k, v in entries.items()},
        lower=Fraction(low),
        upper=Fraction(high),
    )
    return UtilityContext(z, top_k or z, bias)


def test_zero_bias_key_is_trustworthy_at_z_ten():
    beta = WeakOrder.total(["e"])
    report = detect_trustworthy(beta, _detect_ctx(10, {"e": 0}, 0, 3))
    assert report.trustworthy == ("e",)
    assert not report.flagged


def test_max_bias_key_is_flagged_with_the_first_feasible_witness():
    beta = WeakOrder.total(["e"])
    report = detect_trustworthy(beta, _detect_ctx(10, {"e": 3}, 0, 3))
    assert report.trustworthy == ()
    assert report.flagged["e"] == (
        TrustWitness(4, Fraction(256, 237), Fraction(118, 79)),
    )


def test_exhaustive_mode_reports_every_feasible_witness():
    beta = WeakOrder.total(["e"])
    report = detect_trustworthy(
        beta, _detect_ctx(10, {"e": 3}, 0, 3), exhaustive=True
    )
    witnesses = report.flagged["e"]
    assert witnesses[0].separation == 4
    assert TrustWitness(5, Fraction(31, 51), Fraction(82, 51)) in witnesses
    assert [w.separation for w in witnesses] == sorted(
        w.separation for w in witnesses
    )


def test_unbiased_answers_are_certified_wholesale():
    beta = WeakOrder.total(["a", "b", "c", "d"])
    ctx = _detect_ctx(4, {}, 0, 3)
    report = detect_trustworthy(beta, ctx)
    assert set(report.trustworthy) == {"a", "b", "c", "d"}


def test_mixed_biases_at_z_four_flag_through_the_wide_separations():
    # unit separation is infeasible at z=4, but separations 2 and 3 are
    # live: only the zero-bias key survives.
    beta = WeakOrder.total(["a", "b", "c", "d"])
    ctx = _detect_ctx(4, {"a": 3, "b": 1, "c": 0, "d": 2}, 0, 3)
    report = detect_trustworthy(beta, ctx)
    assert report.trustworthy == ("c",)
    assert set(report.flagged) == {"a", "b", "d"}


def test_point_bias_range_never_flags():
    beta = WeakOrder.total(["e"])
    report = detect_trustworthy(beta, _detect_ctx(10, {"e": 3}, 3, 3))
    assert report.trustworthy == ("e",)


def test_strategy_validation():
    beta = WeakOrder.total(["e"])
    ctx = _detect_ctx(10, {"e": 0}, 0, 3)
    with pytest.raises(ConfigurationError):
        detect_trustworthy(beta, ctx, strategy="??")
    with pytest.raises(ConfigurationError):
        detect_trustworthy(beta, ctx, exhaustive=True, strategy="indexed")


def test_scan_and_indexed_strategies_partition_identically():
    rng = random.Random(7)
    for _ in range(10):
        z = rng.randint(50, 200)
        keys = [f"e{i}" for i in range(1, 41)]
        entries = {k: Fraction(rng.randint(0, 30), 10) for k in keys}
        ctx = _detect_ctx(z, entries, 0, 3, top_k=40)
        beta = WeakOrder.total(keys)
        scan = detect_trustworthy(beta, ctx, strategy="scan")
        indexed = detect_trustworthy(beta, ctx, strategy="indexed")
        assert scan.trustworthy == indexed.trustworthy
        assert set(scan.flagged) == set(indexed.flagged)


def test_report_partitions_the_returned_keys():
    rng = random.Random(13)
    for _ in range(20):
        z = rng.randint(4, 16)
        keys = [f"e{i}" for i in range(1, z + 1)]
        entries = {k: Fraction(rng.randint(0, 30), 10) for k in keys}
        ctx = _detect_ctx(z, entries, 0, 3)
        report = detect_trustworthy(WeakOrder.total(keys), ctx)
        flagged = set(report.flagged)
        assert flagged.isdisjoint(report.trustworthy)
        assert flagged | set(report.trustworthy) == set(keys)


def test_filter_agrees_with_witness_search_smoke():
    rng = random.Random(17)
    for _ in range(25):
        z = rng.randint(4, 12)
        keys = [f"e{i}" for i in range(1, rng.randint(2, z) + 1)]
        entries = {k: Fraction(rng.randint(0, 30), 10) for k in keys}
        ctx = _detect_ctx(z, entries, 0, 3)
        beta = WeakOrder.total(keys)
        report = detect_trustworthy(beta, ctx)
        assert set(report.flagged) == trust_baseline_flags(beta, ctx)


def test_report_serialization_shape():
    beta = WeakOrder.total(["e", "f"])
    ctx = _detect_ctx(10, {"e": 3, "f": 0}, 0, 3)
    payload = detect_trustworthy(beta, ctx).as_jsonable()
    assert payload["trustworthy"] == ["f"]
    (entry,) = payload["flagged"]
    assert entry["key"] == "e"
    assert entry["delta"] == 4
    low, high = entry["interval"]
    assert low == pytest.approx(256 / 237)
    assert high == pytest.approx(354 / 237)


# --------------------------------------------------------------------------- #
# Pairwise indifference
# --------------------------------------------------------------------------- #


def test_identical_rankings_have_null_geometry():
    order = WeakOrder.total(["a", "b"])
    report = pairwise_indifference(order, order, BiasFunction({}))
    assert all(value == 0 for value in report.normals.values())
    assert report.intercept_plain == 0
    assert report.intercept_biased == 0
    assert report.swap_pair is None
    assert report.threshold_plain is None
    assert report.band is None


def test_adjacent_swap_with_unit_bias_gap():
    beta = WeakOrder.total(["top", "e", "ep"])
    beta_prime = WeakOrder.total(["top", "ep", "e"])
    bias = BiasFunction({"e": Fraction(0), "ep": Fraction(1)})
    report = pairwise_indifference(beta, beta_prime, bias)
    assert report.swap_pair == ("e", "ep")
    assert report.normals["e"] == -2
    assert report.intercept_plain == 0
    assert report.intercept_biased == 2
    assert report.threshold_plain == 0
    assert report.band == (Fraction(0), Fraction(1))


def test_zero_bias_swap_collapses_the_band():
    beta = WeakOrder.total(["a", "b"])
    report = pairwise_indifference(
        beta, WeakOrder.total(["b", "a"]), BiasFunction({})
    )
    assert report.threshold_biased == report.threshold_plain
    low, high = report.band
    assert low == high  # the half-open (low, high] band is empty


def test_distant_swap():
    beta = WeakOrder.total(["a", "b", "c", "d"])
    beta_prime = WeakOrder.total(["d", "b", "c", "a"])
    report = pairwise_indifference(
        beta, beta_prime, BiasFunction({"a": Fraction(1, 2)})
    )
    assert report.swap_pair == ("a", "d")
    assert report.normals == {
        "a": Fraction(-6),
        "b": Fraction(0),
        "c": Fraction(0),
        "d": Fraction(6),
    }
    assert report.intercept_biased == -3
    assert report.band == (Fraction(-1, 2), Fraction(0))


def test_non_swap_difference_reports_geometry_only():
    report = pairwise_indifference(
        WeakOrder.total(["a", "b", "c"]),
        WeakOrder.total(["b", "c", "a"]),
        BiasFunction({}),
    )
    assert report.normals == {
        "a": Fraction(-4),
        "b": Fraction(2),
        "c": Fraction(2),
    }
    assert report.swap_pair is None
    assert report.threshold_plain is None
    assert report.threshold_biased is None
    assert report.band is None


def test_mismatched_universes_rejected():
    with pytest.raises(ConfigurationError):
        pairwise_indifference(
            WeakOrder.total(["a", "b"]),
            WeakOrder.total(["a", "c"]),
            BiasFunction({}),
        )

"""Trustworthiness screening of returned rankings.

A biased source only has an incentive to misreport a tuple's position
when the bias it would need to hide falls inside a narrow window.  For
each separation value the window endpoints are rational functions of
the universe size; a separation is *feasible* when its window is
nonempty.  Screening a returned ranking then reduces to interval
intersection: a key is flagged when some feasible separation admits an
alternative bias, inside the configured bias range, that would make its
placement strategic.

Two detection strategies are provided.  The scan walks the feasible
table per key; the indexed strategy builds integer threshold arrays
once per universe size and answers each key with a binary search plus a
suffix-minimum lookup.  Both return identical trustworthy/flagged
partitions, though they may exhibit different witness separations.

The module also measures pairwise indifference: given two rankings that
differ by exchanging two keys, the bias shift that would leave a
quadratic source exactly indifferent between them.

Conventions
-----------
All thresholds are exact :class:`fractions.Fraction` values.  Witness
intervals are half-open ``[low, high)`` and compared strictly against
the closed bias range, so grazing contact at a single point does not
flag.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, NamedTuple

from .core import BiasFunction, ConfigurationError, DomainError, Key, WeakOrder
from .utility import UtilityContext

__all__ = [
    "FeasibleDeltaEntry",
    "GapThresholds",
    "IndifferenceReport",
    "TrustReport",
    "TrustWitness",
    "detect_trustworthy",
    "feasible_delta_table",
    "gsd_values",
    "pairwise_indifference",
]

logger = logging.getLogger(__name__)


class GapThresholds(NamedTuple):
    """Gap and shift thresholds at one separation, over a shared scale."""

    gap: Fraction
    shift: Fraction
    denom: int


def _threshold_numerators(universe_size: int, separation: int) -> tuple[int, int, int]:
    """Integer numerators of the gap and shift thresholds, plus the scale."""
    z, d = universe_size, separation
    scale = 3 * (z * z - z + d * (2 * z + 1) - d * d)
    gap_numerator = -(d**3) + 3 * d * d * z + d * z * z + d + z * z - z
    shift_numerator = (z - d) * (z - d + 1) * (2 * d + z - 1)
    return gap_numerator, shift_numerator, scale


def gsd_values(universe_size: int, separation: int) -> GapThresholds:
    """Gap threshold, shift threshold, and their common denominator.

    The gap threshold is the largest bias advantage a separation can
    absorb; the shift threshold is the mean-rank displacement the
    separation induces.  Both are positive on the admissible range.
    """
    if universe_size < 2:
        raise DomainError("thresholds need a universe of size >= 2")
    if not 1 <= separation <= universe_size - 1:
        raise DomainError(
            f"separation {separation} outside 1..{universe_size - 1}"
        )
    gap_numerator, shift_numerator, scale = _threshold_numerators(
        universe_size, separation
    )
    assert scale > 0
    return GapThresholds(
        Fraction(gap_numerator, scale), Fraction(shift_numerator, scale), scale
    )


class FeasibleDeltaEntry(NamedTuple):
    """One feasible separation with its witness-window endpoints."""

    separation: int
    bias_low: Fraction  # max(gap - 1, shift)
    bias_high: Fraction  # gap


@lru_cache(maxsize=None)
def feasible_delta_table(universe_size: int) -> tuple[FeasibleDeltaEntry, ...]:
    """All separations whose shift stays strictly below their gap.

    Returned in ascending separation order.  Small universes have few
    feasible separations (none below size 2, exactly one at size 2);
    the low end drops out whenever the shift threshold dominates.
    """
    if universe_size < 2:
        raise DomainError("feasibility needs a universe of size >= 2")
    entries = []
    for separation in range(1, universe_size):
        gap, shift, _ = gsd_values(universe_size, separation)
        if shift < gap:
            entries.append(
                FeasibleDeltaEntry(separation, max(gap - 1, shift), gap)
            )
    return tuple(entries)


# --------------------------------------------------------------------------- #
# Detection
# --------------------------------------------------------------------------- #


class TrustWitness(NamedTuple):
    """A separation whose alternative-bias window meets the allowed range."""

    separation: int
    interval_low: Fraction
    interval_high: Fraction  # exclusive


@dataclass(frozen=True, eq=False)
class TrustReport:
    """Partition of a returned ranking into trustworthy and flagged keys."""

    trustworthy: tuple[Key, ...]
    flagged: dict[Key, tuple[TrustWitness, ...]]

    def as_jsonable(self) -> dict:
        flagged = [
            {
                "key": key,
                "delta": witness.separation,
                "interval": [
                    float(witness.interval_low),
                    float(witness.interval_high),
                ],
            }
            for key, witnesses in self.flagged.items()
            for witness in witnesses
        ]
        return {"trustworthy": list(self.trustworthy), "flagged": flagged}


class _TrustIndex(NamedTuple):
    """Integer threshold arrays for the binary-search detection path.

    Window endpoints at one separation share the raw scale, so each
    entry stores unreduced numerators plus that scale; all comparisons
    cross-multiply.  Built straight from the integer kernels to keep
    million-sized universes cheap (no Fraction normalization per entry).
    """

    separations: tuple[int, ...]
    gap_num: tuple[int, ...]
    low_num: tuple[int, ...]
    scale: tuple[int, ...]
    # Suffix minima of the window floor, as (numerator, scale, index).
    floor_num: tuple[int, ...]
    floor_scale: tuple[int, ...]
    floor_at: tuple[int, ...]


@lru_cache(maxsize=4)
def _trust_index(universe_size: int) -> _TrustIndex | None:
    """Build the per-universe index, or None when gaps are not monotone."""
    separations: list[int] = []
    gap_num: list[int] = []
    low_num: list[int] = []
    scale: list[int] = []
    for separation in range(1, universe_size):
        gap, shift, denom = _threshold_numerators(universe_size, separation)
        if shift >= gap:  # infeasible: window floor meets the ceiling
            continue
        separations.append(separation)
        gap_num.append(gap)
        low_num.append(max(gap - denom, shift))
        scale.append(denom)
    for i in range(1, len(separations)):
        # gap[i-1] <= gap[i], cross-multiplied (scales positive).
        if gap_num[i - 1] * scale[i] > gap_num[i] * scale[i - 1]:
            logger.warning(
                "gap thresholds not monotone at universe size %d; "
                "falling back to the scan strategy",
                universe_size,
            )
            return None
    floor_num = [0] * len(separations)
    floor_scale = [1] * len(separations)
    floor_at = [0] * len(separations)
    best: tuple[int, int, int] | None = None
    for i in range(len(separations) - 1, -1, -1):
        if best is None or low_num[i] * best[1] < best[0] * scale[i]:
            best = (low_num[i], scale[i], i)
        floor_num[i], floor_scale[i], floor_at[i] = best
    return _TrustIndex(
        tuple(separations),
        tuple(gap_num),
        tuple(low_num),
        tuple(scale),
        tuple(floor_num),
        tuple(floor_scale),
        tuple(floor_at),
    )


def _scan_witnesses(
    bias_value: Fraction,
    table: tuple[FeasibleDeltaEntry, ...],
    range_low: Fraction,
    range_high: Fraction,
    exhaustive: bool,
) -> Iterator[TrustWitness]:
    for entry in table:
        interval_low = bias_value - entry.bias_high
        interval_high = bias_value - entry.bias_low
        if max(interval_low, range_low) < min(interval_high, range_high):
            yield TrustWitness(entry.separation, interval_low, interval_high)
            if not exhaustive:
                return


def _indexed_witness(
    bias_value: Fraction,
    index: _TrustIndex,
    range_low: Fraction,
    range_high: Fraction,
) -> TrustWitness | None:
    if range_low >= range_high or not index.separations:
        return None
    # Need gap > bias_value - range_high; gaps are monotone, so the
    # qualifying separations form a suffix found by binary search.
    cut = bias_value - range_high
    lo, hi = 0, len(index.separations)
    while lo < hi:
        mid = (lo + hi) // 2
        if index.gap_num[mid] * cut.denominator > cut.numerator * index.scale[mid]:
            hi = mid
        else:
            lo = mid + 1
    if lo == len(index.separations):
        return None
    # Within the suffix, any window floor below bias_value - range_low
    # witnesses a flag; the suffix minimum decides in O(1).
    need = bias_value - range_low
    if not (
        index.floor_num[lo] * need.denominator
        < need.numerator * index.floor_scale[lo]
    ):
        return None
    at = index.floor_at[lo]
    return TrustWitness(
        index.separations[at],
        bias_value - Fraction(index.gap_num[at], index.scale[at]),
        bias_value - Fraction(index.low_num[at], index.scale[at]),
    )


def detect_trustworthy(
    beta: WeakOrder,
    ctx: UtilityContext,
    *,
    exhaustive: bool = False,
    strategy: str = "auto",
) -> TrustReport:
    """Screen every key of a returned ranking against the feasible table.

    A key is flagged when some feasible separation's alternative-bias
    window ``[bias - gap, bias - max(gap - 1, shift))`` intersects the
    configured bias range strictly.  ``exhaustive`` reports every such
    separation per key (scan only); otherwise the first witness found
    suffices.  ``strategy`` is ``"scan"``, ``"indexed"``, or ``"auto"``
    (indexed above universe size 4096, scan below; the partitions never
    differ, only the witness choice may).
    """
    if strategy not in ("auto", "scan", "indexed"):
        raise ConfigurationError(f"unknown detection strategy: {strategy!r}")
    if exhaustive and strategy == "indexed":
        raise ConfigurationError("exhaustive reporting requires the scan strategy")
    if strategy == "auto":
        strategy = "scan" if exhaustive or ctx.universe_size <= 4096 else "indexed"
    range_low, range_high = ctx.bias.lower, ctx.bias.upper
    assert range_low is not None and range_high is not None  # BiasFunction derives bounds
    index = _trust_index(ctx.universe_size) if strategy == "indexed" else None
    if strategy == "indexed" and index is None:
        strategy = "scan"
    table = feasible_delta_table(ctx.universe_size) if strategy == "scan" else ()
    trustworthy: list[Key] = []
    flagged: dict[Key, tuple[TrustWitness, ...]] = {}
    for key in beta.keys():
        bias_value = ctx.bias(key)
        if strategy == "indexed":
            assert index is not None
            witness = _indexed_witness(bias_value, index, range_low, range_high)
            witnesses: tuple[TrustWitness, ...] = (witness,) if witness else ()
        else:
            witnesses = tuple(
                _scan_witnesses(bias_value, table, range_low, range_high, exhaustive)
            )
        if witnesses:
            flagged[key] = witnesses
        else:
            trustworthy.append(key)
    return TrustReport(tuple(trustworthy), flagged)


# --------------------------------------------------------------------------- #
# Pairwise indifference
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class IndifferenceReport:
    """Indifference geometry between two rankings under a quadratic source.

    ``normals`` and the intercepts are always available.  The remaining
    fields are populated only when the rankings differ by exchanging
    exactly two keys: ``swap_pair`` lists them (first-ranked first),
    the thresholds are the plain and bias-corrected indifference
    points, and ``band`` is the half-open ``(low, high]`` interval of
    intent-gap shifts over which the two rankings trade places.
    """

    normals: dict[Key, Fraction]
    intercept_plain: Fraction
    intercept_biased: Fraction
    swap_pair: tuple[Key, Key] | None = None
    threshold_plain: Fraction | None = None
    threshold_biased: Fraction | None = None
    band: tuple[Fraction, Fraction] | None = None


def pairwise_indifference(
    beta: WeakOrder, beta_prime: WeakOrder, bias: BiasFunction
) -> IndifferenceReport:
    """Compare two rankings of the same keys through the source's eyes.

    Each key's normal is twice its rank displacement.  The plain
    intercept is the squared-rank mass moved between the two rankings;
    the biased intercept adds the bias-weighted displacement.  For a
    pure swap both displayed thresholds collapse to the plain one (the
    bias correction cancels inside the biased intercept), so the
    reported band instead runs from the plain threshold to its
    bias-shifted counterpart — the intent gap at which a biased
    source's preference between the two orders actually flips.  An
    equal-bias swap therefore gets an empty band: the order cannot be
    bias-distorted.
    """
    if beta.key_set != beta_prime.key_set:
        raise ConfigurationError("rankings must range over the same keys")
    normals: dict[Key, Fraction] = {}
    intercept_plain = Fraction(0)
    displacement = Fraction(0)
    moved: list[Key] = []
    for key in beta.keys():
        first = beta.rank_of(key)
        second = beta_prime.rank_of(key)
        normals[key] = Fraction(2 * (first - second))
        intercept_plain += Fraction(first * first - second * second)
        displacement += bias(key) * (first - second)
        if first != second:
            moved.append(key)
    intercept_biased = intercept_plain + 2 * displacement
    swap_pair = None
    if len(moved) == 2:
        a, b = moved
        if beta.rank_of(a) == beta_prime.rank_of(b) and beta.rank_of(
            b
        ) == beta_prime.rank_of(a):
            swap_pair = (a, b) if beta.rank_of(a) < beta.rank_of(b) else (b, a)
    if swap_pair is None:
        return IndifferenceReport(normals, intercept_plain, intercept_biased)
    normal = normals[swap_pair[0]]
    threshold_plain = intercept_plain / normal
    bias_gap = bias(swap_pair[0]) - bias(swap_pair[1])
    threshold_biased = intercept_biased / normal - bias_gap
    shifted = threshold_plain - bias_gap
    band = (min(threshold_plain, shifted), max(threshold_plain, shifted))
    return IndifferenceReport(
        normals,
        intercept_plain,
        intercept_biased,
        swap_pair,
        threshold_plain,
        threshold_biased,
        band,
    )

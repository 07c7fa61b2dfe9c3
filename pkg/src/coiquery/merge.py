"""Merge reformulations of a base ranking and the optimal-merge DP.

Tying a contiguous run of rank positions ("merging") hides the exact
order inside the run from the source; the source then best-responds to
the run's posterior mean instead of each position.  Because the
expected user utility of a merged run depends only on the run itself,
the best merge reformulation decomposes over interval partitions and a
quadratic-time dynamic program finds it exactly.

The module also provides the super-rank relation (the partial order of
admissible reformulations: coarsen ties, never reverse order, append
only strictly below), a brute-force enumeration oracle over all
contiguous partitions, and the closed-form count of super-rank queries.

Conventions
-----------
Intervals index base *blocks* (1-based), not raw rank values; for the
usual total-order base the two coincide.  Tie-breaks in the DP prefer
the larger interval start, i.e. fewer merges; the brute-force oracle
reproduces the same choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, NamedTuple

from .core import DomainError, Key, WeakOrder
from .influence import base_query, build_delta_query
from .posterior import block_expected_user_utility
from .utility import UtilityContext, UtilityKind

__all__ = [
    "IntervalPartition",
    "MergeResult",
    "SuperRankCheck",
    "apply_merge",
    "brute_force_merge_opt",
    "count_super_ranks",
    "interval_score",
    "is_super_rank",
    "maximize_merge_dp",
]


@dataclass(frozen=True)
class IntervalPartition:
    """Consecutive intervals covering positions 1..m without gaps."""

    intervals: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "intervals", tuple((int(i), int(j)) for i, j in self.intervals)
        )
        if not self.intervals:
            raise DomainError("a partition needs at least one interval")
        expected_start = 1
        for start, end in self.intervals:
            if start != expected_start or end < start:
                raise DomainError(
                    f"intervals must tile 1..m contiguously; got {self.intervals}"
                )
            expected_start = end + 1

    @property
    def size(self) -> int:
        return self.intervals[-1][1]

    def as_jsonable(self) -> list[list[int]]:
        return [[start, end] for start, end in self.intervals]


@dataclass(frozen=True, eq=False)
class MergeResult:
    """Optimal merge reformulation: the ranking, its partition, its value."""

    ranking: WeakOrder
    partition: IntervalPartition
    opt_value: Fraction

    def as_jsonable(self) -> dict:
        return {
            "partition": self.partition.as_jsonable(),
            "ranking": self.ranking.as_lists(),
            "opt": float(self.opt_value),
        }


def apply_merge(base: WeakOrder, start: int, end: int) -> WeakOrder:
    """Tie base's blocks start..end into one block (1-based block indices).

    Earlier blocks keep their indices, the merged span collapses to
    position ``start``, and later blocks shift up by the span's width.
    """
    block_count = len(base.blocks)
    if not 1 <= start <= end <= block_count:
        raise DomainError(
            f"merge span {start}..{end} outside 1..{block_count}"
        )
    merged: tuple[Key, ...] = ()
    for block in base.blocks[start - 1 : end]:
        merged += block
    return WeakOrder(base.blocks[: start - 1] + (merged,) + base.blocks[end:])


# --------------------------------------------------------------------------- #
# Super-rank relation
# --------------------------------------------------------------------------- #


class SuperRankCheck(NamedTuple):
    holds: bool
    violation: str | None = None

    def __bool__(self) -> bool:  # a failed check must be falsy, not a 2-tuple
        return self.holds


def is_super_rank(candidate: WeakOrder, base: WeakOrder) -> SuperRankCheck:
    """Whether candidate is an admissible reformulation of base.

    Four conditions: (1) candidate contains every base element; (2)
    base ties stay ties; (3) elements new to candidate sit strictly
    below every base element; (4) base's strict precedences never
    reverse — collapsing one into a tie is fine, flipping it is not.
    Every ranking is a super-rank of itself.
    """
    base_keys = base.key_set
    candidate_keys = candidate.key_set
    missing = base_keys - candidate_keys
    if missing:
        return SuperRankCheck(
            False, f"candidate drops base element(s) {sorted(missing)!r}"
        )
    ordered = list(base.keys())
    for index, left in enumerate(ordered):
        for right in ordered[index + 1 :]:
            left_rank = base.rank_of(left)
            right_rank = base.rank_of(right)
            if left_rank == right_rank:
                if candidate.rank_of(left) != candidate.rank_of(right):
                    return SuperRankCheck(
                        False, f"base tie {left!r} ~ {right!r} broken"
                    )
            elif candidate.rank_of(left) > candidate.rank_of(right):
                return SuperRankCheck(
                    False, f"base order {left!r} < {right!r} reversed"
                )
    appended = candidate_keys - base_keys
    if appended:
        deepest_original = max(candidate.rank_of(key) for key in base_keys)
        for key in sorted(appended):
            if candidate.rank_of(key) <= deepest_original:
                return SuperRankCheck(
                    False, f"appended element {key!r} not strictly below originals"
                )
    return SuperRankCheck(True, None)


def count_super_ranks(position_count: int, appended_count: int) -> int:
    """Number of super-rank queries of a total order: 2^(m-1) coarsenings
    of the m base positions times the ordered weak orders of the r
    appended elements.
    """
    if position_count < 1:
        raise DomainError("base must have at least one position")
    if appended_count < 0:
        raise DomainError("appended count must be nonnegative")
    if position_count > 4096 or appended_count > 300:
        raise DomainError("count out of supported range")
    return 2 ** (position_count - 1) * _ordered_weak_orders(appended_count)


@lru_cache(maxsize=None)
def _ordered_weak_orders(size: int) -> int:
    """Weak orders on a labeled set (1, 1, 3, 13, 75, 541, ...)."""
    if size == 0:
        return 1
    return sum(
        math.comb(size, block) * _ordered_weak_orders(size - block)
        for block in range(1, size + 1)
    )


# --------------------------------------------------------------------------- #
# Interval scores and the DP
# --------------------------------------------------------------------------- #


def _position_spans(base: WeakOrder) -> tuple[tuple[int, int], ...]:
    """Original position span occupied by each base block, in block order."""
    spans = []
    position = 1
    for block in base.blocks:
        spans.append((position, position + len(block) - 1))
        position += len(block)
    return tuple(spans)


def interval_score(
    start: int, end: int, ctx: UtilityContext, base: WeakOrder
) -> Fraction:
    """Expected user utility of merging base blocks start..end.

    Sums each member key's block expected utility over the merged
    span's original positions.  With a bias constant on the span this
    equals the member count times the shared per-tuple value; with
    mixed biases it is simply the per-tuple sum.
    """
    block_count = len(base.blocks)
    if not 1 <= start <= end <= block_count:
        raise DomainError(f"interval {start}..{end} outside 1..{block_count}")
    spans = _position_spans(base)
    low = spans[start - 1][0]
    high = spans[end - 1][1]
    total = Fraction(0)
    for block in base.blocks[start - 1 : end]:
        for key in block:
            total += block_expected_user_utility(low, high, ctx.bias(key), ctx)
    return total


def _run_dp(
    block_count: int, score: Callable[[int, int], object]
) -> tuple[object, list[tuple[int, int]]]:
    """Interval-partition DP; ties prefer the larger interval start."""
    best: list = [0] * (block_count + 1)
    parent = [0] * (block_count + 1)
    for j in range(1, block_count + 1):
        top = None
        arg = j
        for i in range(j, 0, -1):  # descending: first strict max keeps largest i
            value = best[i - 1] + score(i, j)
            if top is None or value > top:
                top = value
                arg = i
        best[j] = top
        parent[j] = arg
    intervals = []
    j = block_count
    while j >= 1:
        i = parent[j]
        intervals.append((i, j))
        j = i - 1
    intervals.reverse()
    return best[block_count], intervals


def _quadratic_score12_table(base: WeakOrder, ctx: UtilityContext) -> list[int]:
    """All interval scores times 12, as integers, for a total-order base.

    Twelve times the block expected utility of one tuple is
    ``-(n^2 - 1) - 3 (i + j - 2 rank)^2`` for span i..j of width n and
    assigned rank ``rank``; the assigned rank depends only on the
    tuple's bias and the span midpoint, so one pass per diagonal
    (constant i + j) with a prefix sum yields every interval in O(1).
    """
    keys = [block[0] for block in base.blocks]
    size = len(keys)
    z = ctx.universe_size
    top_k = ctx.top_k
    omitted = ctx.omitted_rank
    bias_num = []
    bias_den = []
    for key in keys:
        value = ctx.bias(key)
        bias_num.append(value.numerator)
        bias_den.append(value.denominator)
    table = [0] * ((size + 1) * (size + 1))
    prefix = [0] * (size + 1)
    for diagonal in range(2, 2 * size + 1):
        for p in range(1, size + 1):
            bn, bd = bias_num[p - 1], bias_den[p - 1]
            # Assigned rank: project (diagonal/2 - bias) onto 1..z with
            # the user-favorable tie rule, all cross-multiplied.
            tn = diagonal * bd - 2 * bn
            td = 2 * bd
            floor = tn // td
            low = 1 if floor < 1 else z if floor > z else floor
            cand = floor + 1
            high = 1 if cand < 1 else z if cand > z else cand
            if low == high:
                rank = low
            else:
                low_err = abs(low * td - tn)
                high_err = abs(high * td - tn)
                if low_err < high_err:
                    rank = low
                elif high_err < low_err:
                    rank = high
                elif abs(2 * low - diagonal) <= abs(2 * high - diagonal):
                    rank = low
                else:
                    rank = high
            response = rank if rank <= top_k else omitted
            gap = diagonal - 2 * response
            prefix[p] = prefix[p - 1] + 3 * gap * gap
        start_low = max(1, diagonal - size)
        for i in range(start_low, diagonal // 2 + 1):
            j = diagonal - i
            width = j - i + 1
            table[i * (size + 1) + j] = -width * (width * width - 1) - (
                prefix[j] - prefix[i - 1]
            )
    return table


def _resolve_base(
    intent: WeakOrder, ctx: UtilityContext, base: WeakOrder | None
) -> WeakOrder:
    if base is not None:
        return base
    return base_query(build_delta_query(intent, ctx.bias, ctx.universe_size))


def _assemble(base: WeakOrder, intervals: list[tuple[int, int]], opt) -> MergeResult:
    blocks = []
    for start, end in intervals:
        merged: tuple[Key, ...] = ()
        for block in base.blocks[start - 1 : end]:
            merged += block
        blocks.append(merged)
    return MergeResult(
        WeakOrder(tuple(blocks)),
        IntervalPartition(tuple(intervals)),
        opt if isinstance(opt, Fraction) else Fraction(opt),
    )


def maximize_merge_dp(
    intent: WeakOrder, ctx: UtilityContext, *, base: WeakOrder | None = None
) -> MergeResult:
    """Best merge reformulation of the base ranking, by the interval DP.

    When no base is supplied it is derived from the intent via the
    constraint-query pipeline (which reduces to the intent's own order
    under equal biases).  Quadratic utility pairs on a total-order base
    take an integer fast path; anything else scores intervals in exact
    rational arithmetic.  Equal-value splits keep the larger interval
    start, so zero-gain merges are never introduced.
    """
    resolved = _resolve_base(intent, ctx, base)
    block_count = len(resolved.blocks)
    if block_count == 0:
        raise DomainError("base ranking is empty")
    fast = (
        ctx.kind_user is UtilityKind.QUADRATIC_USER
        and ctx.kind_source is UtilityKind.QUADRATIC_SOURCE_BIASED
        and all(len(block) == 1 for block in resolved.blocks)
    )
    if fast:
        table = _quadratic_score12_table(resolved, ctx)
        stride = block_count + 1
        opt12, intervals = _run_dp(
            block_count, lambda i, j: table[i * stride + j]
        )
        return _assemble(resolved, intervals, Fraction(opt12, 12))
    cache: dict[tuple[int, int], Fraction] = {}

    def score(i: int, j: int) -> Fraction:
        found = cache.get((i, j))
        if found is None:
            found = interval_score(i, j, ctx, resolved)
            cache[(i, j)] = found
        return found

    opt, intervals = _run_dp(block_count, score)
    return _assemble(resolved, intervals, opt)


def brute_force_merge_opt(
    intent: WeakOrder,
    ctx: UtilityContext,
    limit: int = 14,
    *,
    base: WeakOrder | None = None,
) -> MergeResult:
    """Enumeration oracle: score all 2^(m-1) contiguous partitions.

    Scores come from the exact rational path regardless of utility
    kind, making this independent of the DP's integer fast path.  The
    tie rule matches the DP: among equal-value partitions the sequence
    of interval starts, read from the last interval backward, is
    lexicographically largest.
    """
    resolved = _resolve_base(intent, ctx, base)
    block_count = len(resolved.blocks)
    if block_count == 0:
        raise DomainError("base ranking is empty")
    if block_count > limit:
        raise DomainError(
            f"{block_count} blocks exceed the enumeration limit {limit}"
        )
    scores: dict[tuple[int, int], Fraction] = {}
    for i in range(1, block_count + 1):
        for j in range(i, block_count + 1):
            scores[(i, j)] = interval_score(i, j, ctx, resolved)
    best_value: Fraction | None = None
    best_tiebreak: tuple[int, ...] | None = None
    best_intervals: list[tuple[int, int]] | None = None
    for mask in range(1 << (block_count - 1)):
        intervals = []
        start = 1
        for position in range(1, block_count):
            if mask & (1 << (position - 1)):
                intervals.append((start, position))
                start = position + 1
        intervals.append((start, block_count))
        value = sum(
            (scores[interval] for interval in intervals), start=Fraction(0)
        )
        tiebreak = tuple(interval[0] for interval in reversed(intervals))
        if (
            best_value is None
            or value > best_value
            or (value == best_value and tiebreak > best_tiebreak)
        ):
            best_value = value
            best_tiebreak = tiebreak
            best_intervals = intervals
    assert best_intervals is not None and best_value is not None
    return _assemble(resolved, best_intervals, best_value)

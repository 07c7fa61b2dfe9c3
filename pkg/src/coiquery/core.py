"""Weak orders, rank domains, and bias assignments.

This module holds the small set of domain types every analysis in the
package shares: finite attribute domains and their Cartesian rank
domains, weak orders (ranked lists with ties) over opaque tuple keys,
and bias functions mapping keys to exact rational offsets.

Conventions
-----------
* Ranks are 1-based.  A tie block occupying list positions ``i..j``
  assigns rank ``i`` to every member (the position of the block's first
  member), so a weak order without ties ranks its keys ``1..n`` exactly.
* A second, dense numbering — the *block index* — counts blocks
  ``1..#blocks`` and is available via ``WeakOrder.block_index_of`` for
  callers that need consecutive numbers instead of positions.
* Absent keys have no rank: lookups either raise ``KeyError`` or return
  a caller-supplied "omitted" rank strictly greater than the number of
  ranked keys.
* All numeric state is stored as ``fractions.Fraction``; callers may
  pass ints, floats, decimal strings, or Fractions and get exact
  arithmetic back.  Floats convert to their exact binary value.

Everything here is immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping

__all__ = [
    "AttributeDomain",
    "BiasFunction",
    "ConfigurationError",
    "DomainError",
    "InfeasibleQueryError",
    "Key",
    "QueryAnalysisError",
    "Rank",
    "RankDomain",
    "Relation",
    "WeakOrder",
    "as_fraction",
    "build_rank_domain",
    "pairwise_relation",
    "rank_of",
    "validate_weak_order",
]

# Opaque identifier for a ranked tuple (or rank-domain element).
Key = str

# 1-based position in a ranking; values above the universe size denote
# omitted tuples.
Rank = int


# --------------------------------------------------------------------------- #
# Errors
# --------------------------------------------------------------------------- #


class QueryAnalysisError(Exception):
    """Base class for every error this package raises deliberately."""


class ConfigurationError(QueryAnalysisError, ValueError):
    """Invalid configuration: malformed input artifact, bad schema, or
    out-of-range settings supplied by the caller."""


class DomainError(QueryAnalysisError, ValueError):
    """A numeric argument lies outside its mathematical domain."""


class InfeasibleQueryError(QueryAnalysisError):
    """No ranking satisfies the given constraint query."""


def as_fraction(value: int | float | str | Fraction) -> Fraction:
    """Convert ``value`` to an exact ``Fraction``.

    Decimal strings such as ``"0.1"`` become exact decimals; floats
    convert to their exact binary expansion.
    """
    try:
        return Fraction(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigurationError(f"not a rational value: {value!r}") from exc


# --------------------------------------------------------------------------- #
# Attribute and rank domains
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class AttributeDomain:
    """A named, totally ordered finite domain of attribute values.

    The value order given at construction is authoritative and fixed;
    categorical domains keep their source order.
    """

    name: str
    values: tuple[object, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        if not self.name:
            raise ConfigurationError("attribute name must be nonempty")
        if not self.values:
            raise ConfigurationError(f"attribute {self.name!r} has an empty domain")
        if len(set(self.values)) != len(self.values):
            raise ConfigurationError(f"attribute {self.name!r} has duplicate values")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class RankDomain:
    """The Cartesian product of attribute domains, enumerated once.

    Elements are listed in lexicographic order of the attribute value
    sequences and keyed ``"e1" .. "e{m}"`` in that order.  Two calls to
    :func:`build_rank_domain` with equal inputs enumerate identically.
    """

    attributes: tuple[AttributeDomain, ...]
    elements: tuple[tuple[object, ...], ...]

    @property
    def size(self) -> int:
        """Number of elements (the product of attribute cardinalities)."""
        return len(self.elements)

    def key_for(self, index: int) -> Key:
        """Key of the element at 1-based ``index``."""
        if not 1 <= index <= self.size:
            raise DomainError(f"element index {index} outside 1..{self.size}")
        return f"e{index}"

    def keys(self) -> tuple[Key, ...]:
        return tuple(f"e{i}" for i in range(1, self.size + 1))

    def element_for(self, key: Key) -> tuple[object, ...]:
        """The attribute value tuple behind ``key``."""
        try:
            index = int(key[1:]) if key.startswith("e") else -1
        except ValueError:
            index = -1
        if not 1 <= index <= self.size:
            raise DomainError(f"unknown rank-domain key {key!r}")
        return self.elements[index - 1]

    def __len__(self) -> int:
        return self.size


def build_rank_domain(attributes: Iterable[AttributeDomain]) -> RankDomain:
    """Enumerate the product of ``attributes`` as a :class:`RankDomain`.

    Raises:
        ConfigurationError: if no attributes are given (empty attribute
            domains are rejected at ``AttributeDomain`` construction).
    """
    attrs = tuple(attributes)
    if not attrs:
        raise ConfigurationError("rank domain needs at least one attribute")
    elements = tuple(itertools.product(*(a.values for a in attrs)))
    return RankDomain(attributes=attrs, elements=elements)


# --------------------------------------------------------------------------- #
# Weak orders
# --------------------------------------------------------------------------- #


class Relation(Enum):
    """Pairwise relation of two keys inside one weak order."""

    PRECEDES = "precedes"
    TIED = "tied"
    FOLLOWS = "follows"
    ABSENT = "absent"


@dataclass(frozen=True, eq=False)
class WeakOrder:
    """A ranked list with ties over opaque keys.

    ``blocks`` is the ordered sequence of tie blocks, best to worst.
    Within-block key order is preserved for deterministic iteration but
    carries no ranking meaning: two weak orders are equal iff their
    block sequences agree as sets.

    Construction does not validate; pass candidate block data through
    :func:`validate_weak_order` (or build via :meth:`from_lists`) when
    the input is untrusted.
    """

    blocks: tuple[tuple[Key, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(tuple(b) for b in self.blocks))

    # -- constructors -------------------------------------------------------

    @classmethod
    def of(cls, *blocks: Iterable[Key]) -> "WeakOrder":
        """Build from blocks given as separate iterables."""
        return cls(tuple(tuple(b) for b in blocks))

    @classmethod
    def total(cls, keys: Iterable[Key]) -> "WeakOrder":
        """Total order (no ties) over ``keys`` in the given sequence."""
        return cls(tuple((k,) for k in keys))

    @classmethod
    def from_lists(cls, data: object) -> "WeakOrder":
        """Parse the JSON shape ``[["e3"], ["e2", "e1"], ...]``.

        Raises:
            ConfigurationError: on a malformed shape or invariant
                violation (duplicate key, empty block).
        """
        if not isinstance(data, (list, tuple)):
            raise ConfigurationError("weak order must be a list of lists of keys")
        blocks: list[tuple[Key, ...]] = []
        for block in data:
            if not isinstance(block, (list, tuple)) or not all(
                isinstance(k, str) for k in block
            ):
                raise ConfigurationError("weak order blocks must be lists of strings")
            blocks.append(tuple(block))
        violation = validate_weak_order(blocks)
        if violation is not None:
            raise ConfigurationError(f"invalid weak order: {violation}")
        return cls(tuple(blocks))

    def as_lists(self) -> list[list[Key]]:
        """JSON-ready ``[[key, ...], ...]`` form."""
        return [list(b) for b in self.blocks]

    # -- lookups ------------------------------------------------------------

    @cached_property
    def _rank_by_key(self) -> dict[Key, int]:
        ranks: dict[Key, int] = {}
        position = 1
        for block in self.blocks:
            for key in block:
                ranks[key] = position
            position += len(block)
        return ranks

    @cached_property
    def _block_index_by_key(self) -> dict[Key, int]:
        return {
            key: index
            for index, block in enumerate(self.blocks, start=1)
            for key in block
        }

    @cached_property
    def key_set(self) -> frozenset[Key]:
        return frozenset(self._rank_by_key)

    def keys(self) -> tuple[Key, ...]:
        """All keys, best block first, preserving within-block order."""
        return tuple(k for block in self.blocks for k in block)

    def rank_of(self, key: Key, omitted: Rank | None = None) -> Rank:
        """Rank of ``key``; ``omitted`` for absent keys (else KeyError)."""
        rank = self._rank_by_key.get(key)
        if rank is not None:
            return rank
        if omitted is not None:
            return omitted
        raise KeyError(key)

    def block_index_of(self, key: Key) -> int:
        """Dense 1-based index of the block containing ``key``."""
        return self._block_index_by_key[key]

    def block_index_map(self) -> dict[Key, int]:
        """Key → dense block index, e.g. ``(1, 2, 2, 3)`` after tying the
        middle two keys of a four-key total order."""
        return dict(self._block_index_by_key)

    def relation(self, a: Key, b: Key) -> Relation:
        ranks = self._rank_by_key
        if a not in ranks or b not in ranks:
            return Relation.ABSENT
        if self._block_index_by_key[a] == self._block_index_by_key[b]:
            return Relation.TIED
        return Relation.PRECEDES if ranks[a] < ranks[b] else Relation.FOLLOWS

    def __len__(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __contains__(self, key: object) -> bool:
        return key in self._rank_by_key

    # -- identity -----------------------------------------------------------

    @cached_property
    def _canonical(self) -> tuple[frozenset[Key], ...]:
        return tuple(frozenset(b) for b in self.blocks)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeakOrder):
            return NotImplemented
        return self._canonical == other._canonical

    def __hash__(self) -> int:
        return hash(self._canonical)

    def __repr__(self) -> str:
        rendered = " < ".join("~".join(block) for block in self.blocks)
        return f"WeakOrder[{rendered}]"


def rank_of(order: WeakOrder, key: Key, omitted: Rank | None = None) -> Rank:
    """Rank of ``key`` in ``order``; ``omitted`` stands in for absent keys."""
    return order.rank_of(key, omitted)


def pairwise_relation(order: WeakOrder, a: Key, b: Key) -> Relation:
    """How ``a`` stands to ``b`` inside ``order``."""
    return order.relation(a, b)


def validate_weak_order(order: WeakOrder | Iterable[Iterable[Key]]) -> str | None:
    """Check weak-order invariants; return the first violation, else None.

    Accepts either a constructed :class:`WeakOrder` or raw block data, so
    invalid candidates can be described without being constructible.
    """
    blocks = order.blocks if isinstance(order, WeakOrder) else tuple(
        tuple(b) for b in order
    )
    seen: set[Key] = set()
    for index, block in enumerate(blocks, start=1):
        if len(block) == 0:
            return f"block {index} is empty"
        for key in block:
            if key in seen:
                return f"duplicate key {key!r}"
            seen.add(key)
    return None


# --------------------------------------------------------------------------- #
# Bias functions
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class BiasFunction:
    """Per-key rational bias offsets with a declared feasible range.

    ``entries`` maps keys to bias values; keys without an entry take
    ``default``.  The range ``[lower, upper]`` is the set of bias values
    the analysis treats as possible; when not supplied it is computed
    from the stored values (and the default).  Explicit bounds must
    cover every stored entry but may deliberately exclude the default,
    which only applies to keys outside the analyzed universe.
    """

    entries: Mapping[Key, Fraction]
    default: Fraction = Fraction(0)
    lower: Fraction | None = None
    upper: Fraction | None = None

    def __post_init__(self) -> None:
        entries = {k: as_fraction(v) for k, v in dict(self.entries).items()}
        default = as_fraction(self.default)
        observed = list(entries.values()) or [default]
        if self.lower is None:
            lower = min(observed + ([default] if entries else []))
        else:
            lower = as_fraction(self.lower)
        if self.upper is None:
            upper = max(observed + ([default] if entries else []))
        else:
            upper = as_fraction(self.upper)
        if lower > upper:
            raise ConfigurationError(f"bias range is empty: [{lower}, {upper}]")
        for key, value in entries.items():
            if not lower <= value <= upper:
                raise ConfigurationError(
                    f"bias for {key!r} ({value}) outside range [{lower}, {upper}]"
                )
        if not entries and not lower <= default <= upper:
            raise ConfigurationError(
                f"default bias {default} outside range [{lower}, {upper}]"
            )
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "default", default)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def zero(cls) -> "BiasFunction":
        return cls(entries={})

    @classmethod
    def constant(cls, keys: Iterable[Key], value: int | float | str | Fraction) -> "BiasFunction":
        v = as_fraction(value)
        return cls(entries={k: v for k in keys})

    def __call__(self, key: Key) -> Fraction:
        return self.entries.get(key, self.default)

    def distinct_values(self, keys: Iterable[Key] | None = None) -> frozenset[Fraction]:
        """Distinct bias values over ``keys`` (default: stored entries,
        or just the default when nothing is stored)."""
        if keys is not None:
            return frozenset(self(k) for k in keys)
        if self.entries:
            return frozenset(self.entries.values())
        return frozenset((self.default,))

    def as_jsonable(self) -> dict[str, object]:
        return {
            "entries": {k: float(v) for k, v in sorted(self.entries.items())},
            "default": float(self.default),
            "lower": float(self.lower),
            "upper": float(self.upper),
        }

    @classmethod
    def from_jsonable(cls, data: object) -> "BiasFunction":
        if not isinstance(data, dict):
            raise ConfigurationError("bias must be an object")
        raw_entries = data.get("entries", {})
        if not isinstance(raw_entries, dict):
            raise ConfigurationError("bias entries must be an object")
        return cls(
            entries={str(k): as_fraction(v) for k, v in raw_entries.items()},
            default=as_fraction(data.get("default", 0)),
            lower=None if data.get("lower") is None else as_fraction(data["lower"]),
            upper=None if data.get("upper") is None else as_fraction(data["upper"]),
        )

    def __repr__(self) -> str:
        return (
            f"BiasFunction({len(self.entries)} entries, "
            f"range [{self.lower}, {self.upper}])"
        )

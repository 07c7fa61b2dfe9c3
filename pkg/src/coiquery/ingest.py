"""Table loading, bucketization, and synthetic inputs for the bench.

Raw tables arrive as UTF-8 CSV with a header row.  Numeric attributes
are discretized into dyadic (power-of-two) equal-width bins so that
refining a bucketization splits every bin exactly in two; categorical
attributes keep their most frequent values and fold the rest into an
``"other"`` bin.  Bias values attach to rank-domain elements through
ordered first-match-wins rules, and synthetic ranking intents are drawn
reproducibly from a seed.

Conventions
-----------
* Dyadic bin edges are computed as ``lo + (i * width) / B`` so edges at
  level ``B`` are bit-for-bit a subset of edges at level ``2B``.
* Bin labels use ``%g`` formatting: ``[0,50)``, last bin right-closed
  ``[50,100]``.
* Frequency ties in top-k bucketization break by value order; the
  ``"other"`` bin is always present and always last.
"""

from __future__ import annotations

import csv
import numbers
import random
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .core import (
    AttributeDomain,
    BiasFunction,
    ConfigurationError,
    DomainError,
    RankDomain,
    WeakOrder,
    as_fraction,
    build_rank_domain,
)

__all__ = [
    "BiasConfig",
    "BiasRule",
    "BucketKind",
    "BucketSpec",
    "OTHER_LABEL",
    "assign_bias",
    "bucketize",
    "generate_intents",
    "load_table",
    "random_bias",
]

OTHER_LABEL = "other"

_CELL_TYPES = {"str": str, "int": int, "float": float}


# --------------------------------------------------------------------------- #
# Loading
# --------------------------------------------------------------------------- #


def load_table(
    path: str, schema: Sequence[tuple[str, str | type]]
) -> list[dict[str, object]]:
    """Read a CSV file into typed rows following ``schema``.

    ``schema`` pairs column names with types (``"str"``, ``"int"``,
    ``"float"``, or the types themselves) and must match the file
    header exactly, in order.  Any parse failure is reported with its
    1-based line number.
    """
    columns: list[tuple[str, type]] = []
    for name, kind in schema:
        if isinstance(kind, type):
            ctor = kind
        else:
            ctor = _CELL_TYPES.get(str(kind))
            if ctor is None:
                raise ConfigurationError(f"unknown column type {kind!r}")
        columns.append((str(name), ctor))
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read table {path!r}: {exc}") from exc
    rows: list[dict[str, object]] = []
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ConfigurationError(f"{path}: empty file, expected a header row")
        if header != [name for name, _ in columns]:
            raise ConfigurationError(
                f"{path}: header {header} does not match schema "
                f"{[name for name, _ in columns]}"
            )
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(columns):
                raise ConfigurationError(
                    f"{path}:{lineno}: expected {len(columns)} cells, got {len(cells)}"
                )
            row: dict[str, object] = {}
            for (name, ctor), cell in zip(columns, cells):
                try:
                    row[name] = ctor(cell)
                except ValueError as exc:
                    raise ConfigurationError(
                        f"{path}:{lineno}: column {name!r}: "
                        f"cannot parse {cell!r} as {ctor.__name__}"
                    ) from exc
            rows.append(row)
    return rows


# --------------------------------------------------------------------------- #
# Bucketization
# --------------------------------------------------------------------------- #


class BucketKind(Enum):
    DYADIC_NUMERIC = "dyadic_numeric"
    TOP_K_CATEGORICAL = "top_k_categorical"


@dataclass(frozen=True)
class BucketSpec:
    """How to discretize one source attribute.

    ``count`` is the bin count ``B`` for dyadic bucketization (a power
    of two) or ``k`` for top-k bucketization (at least 1; the
    ``"other"`` bin comes on top of the k kept values).
    """

    attribute: str
    kind: BucketKind
    count: int

    def __post_init__(self) -> None:
        if not self.attribute:
            raise ConfigurationError("bucket spec needs a source attribute")
        if self.kind is BucketKind.DYADIC_NUMERIC:
            if self.count < 2 or self.count & (self.count - 1):
                raise ConfigurationError(
                    f"dyadic bin count must be a power of two >= 2, got {self.count}"
                )
        elif self.count < 1:
            raise ConfigurationError(f"top-k count must be >= 1, got {self.count}")

    @classmethod
    def from_jsonable(cls, data: dict) -> "BucketSpec":
        try:
            return cls(
                attribute=str(data["attribute"]),
                kind=BucketKind(data["kind"]),
                count=int(data["count"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed bucket spec: {exc}") from exc


def _dyadic_edges(lo: float, hi: float, bins: int) -> list[float]:
    width = hi - lo
    edges = [lo + (i * width) / bins for i in range(bins + 1)]
    edges[0], edges[-1] = lo, hi
    return edges


def bucketize(
    values: Iterable[object], spec: BucketSpec
) -> tuple[AttributeDomain, dict[object, str]]:
    """Discretize a column into labelled buckets.

    Returns the bucket labels as an :class:`AttributeDomain` (in bin
    order for dyadic, frequency order plus ``"other"`` for top-k) and a
    mapping from each distinct input value to its bucket label.
    """
    column = list(values)
    if not column:
        raise ConfigurationError("cannot bucketize an empty column")
    if spec.kind is BucketKind.DYADIC_NUMERIC:
        for v in column:
            if isinstance(v, bool) or not isinstance(v, numbers.Real):
                raise ConfigurationError(
                    f"dyadic bucketization needs a numeric column, got {v!r}"
                )
        lo, hi = float(min(column)), float(max(column))
        if lo == hi:
            raise DomainError(
                f"constant column (all {lo:g}) cannot fill {spec.count} bins"
            )
        edges = _dyadic_edges(lo, hi, spec.count)
        labels = [
            f"[{edges[i]:g},{edges[i + 1]:g})" for i in range(spec.count - 1)
        ] + [f"[{edges[spec.count - 1]:g},{edges[spec.count]:g}]"]
        assignment = {}
        for v in column:
            index = min(max(bisect_right(edges, float(v)) - 1, 0), spec.count - 1)
            assignment[v] = labels[index]
        return AttributeDomain(spec.attribute, tuple(labels)), assignment

    counts = Counter(column)
    ordered = sorted(counts, key=lambda v: (-counts[v], v))
    kept = ordered[: spec.count]
    labels = [str(v) for v in kept] + [OTHER_LABEL]
    assignment = {
        v: str(v) if v in kept else OTHER_LABEL for v in counts
    }
    return AttributeDomain(spec.attribute, tuple(labels)), assignment


# --------------------------------------------------------------------------- #
# Bias assignment
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class BiasRule:
    """One first-match rule: a conjunction of attribute = value tests."""

    conditions: tuple[tuple[str, object], ...]
    bias: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "conditions", tuple(self.conditions))
        object.__setattr__(self, "bias", as_fraction(self.bias))

    def matches(self, attributes: dict[str, object]) -> bool:
        return all(attributes.get(name) == value for name, value in self.conditions)

    @classmethod
    def from_jsonable(cls, data: dict) -> "BiasRule":
        try:
            when = data.get("when", {})
            return cls(tuple(sorted(when.items())), as_fraction(data["bias"]))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ConfigurationError(f"malformed bias rule: {exc}") from exc


@dataclass(frozen=True)
class BiasConfig:
    """Ordered bias rules plus a global scale factor."""

    rules: tuple[BiasRule, ...]
    scale: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "scale", as_fraction(self.scale))

    @classmethod
    def from_jsonable(cls, data: dict) -> "BiasConfig":
        rules = data.get("rules", data.get("bias_rules", []))
        if not isinstance(rules, (list, tuple)):
            raise ConfigurationError("bias rules must be a list")
        return cls(
            tuple(BiasRule.from_jsonable(r) for r in rules),
            as_fraction(data.get("scale", 1)),
        )


def assign_bias(config: BiasConfig, domain: RankDomain) -> BiasFunction:
    """Evaluate the rules over every rank-domain element.

    Each element takes the first matching rule's value times the
    configured scale, or an explicit zero when nothing matches.  The
    returned range bounds are tight: both are achieved by some element.
    """
    names = [attribute.name for attribute in domain.attributes]
    known = set(names)
    for rule in config.rules:
        for name, _ in rule.conditions:
            if name not in known:
                raise ConfigurationError(
                    f"bias rule references unknown attribute {name!r}"
                )
    entries: dict[str, Fraction] = {}
    for index in range(1, domain.size + 1):
        attributes = dict(zip(names, domain.elements[index - 1]))
        value = Fraction(0)
        for rule in config.rules:
            if rule.matches(attributes):
                value = rule.bias * config.scale
                break
        entries[domain.key_for(index)] = value
    return BiasFunction(
        entries,
        lower=min(entries.values()),
        upper=max(entries.values()),
    )


def random_bias(
    domain: RankDomain, seed: int, scale: int | float | str | Fraction = 1
) -> BiasFunction:
    """Uniform random bias in ``[0, 1]`` scaled by ``scale``, per element.

    Deterministic per seed; the declared feasible range is the full
    ``[0, scale]`` interval rather than the drawn extremes.
    """
    rng = random.Random(seed)
    factor = as_fraction(scale)
    entries = {
        domain.key_for(index): Fraction(rng.randint(0, 10**6), 10**6) * factor
        for index in range(1, domain.size + 1)
    }
    return BiasFunction(
        entries,
        lower=min(Fraction(0), factor),
        upper=max(Fraction(0), factor),
    )


# --------------------------------------------------------------------------- #
# Synthetic intents
# --------------------------------------------------------------------------- #


def _is_numeric_domain(attribute: AttributeDomain) -> bool:
    return all(
        isinstance(v, numbers.Real) and not isinstance(v, bool)
        for v in attribute.values
    )


def generate_intents(
    domain: RankDomain, count: int, seed: int
) -> list[WeakOrder]:
    """Draw ``count`` total-order intents from ``domain``'s attributes.

    Each intent picks up to three attributes at random, orders numeric
    attribute values descending (categorical values keep domain order),
    and ranks the resulting sub-product lexicographically as a total
    order over that sub-domain's keys.  Deterministic per seed.
    """
    if count < 1:
        raise ConfigurationError(f"intent count must be >= 1, got {count}")
    rng = random.Random(seed)
    attributes = domain.attributes
    intents: list[WeakOrder] = []
    for _ in range(count):
        picked = rng.randint(1, min(3, len(attributes)))
        indices = sorted(rng.sample(range(len(attributes)), picked))
        ordered = []
        for i in indices:
            attribute = attributes[i]
            if _is_numeric_domain(attribute):
                values = tuple(sorted(attribute.values, reverse=True))
            else:
                values = attribute.values
            ordered.append(AttributeDomain(attribute.name, values))
        sub = build_rank_domain(ordered)
        intents.append(WeakOrder.total(sub.keys()))
    return intents

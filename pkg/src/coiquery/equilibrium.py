"""Finite signaling games between a user and a biased source.

The interaction is a sender-receiver game: the user observes an intent,
submits a query, and the source answers with an interpretation.  This
module builds small explicit games (notably the two-intent commission
game), searches for the aligned-preference witness that characterizes
influential communication between set-equivalent intents, enumerates
all pure-strategy equilibria by brute force, and classifies each as
non-influential, influential, or fully influential.

Conventions
-----------
Strategies are pure: the user maps every intent to one query, the
source maps every query to one interpretation (point distributions).
Posterior beliefs follow Bayes' rule on path; off-path queries fall
back to the prior, isolated in :func:`off_path_belief` so tests can
swap the rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, NamedTuple, Sequence

from .core import (
    ConfigurationError,
    DomainError,
    WeakOrder,
    as_fraction,
)
from .merge import is_super_rank

__all__ = [
    "ClassifiedEquilibrium",
    "EquilibriumClass",
    "FiniteGame",
    "StrategyPair",
    "bayes_posterior",
    "classify_equilibrium",
    "commission_game",
    "enumerate_pure_equilibria",
    "influential_witness",
    "off_path_belief",
]

_PROFILE_CAP = 10**6
_PRIOR_TOLERANCE = Fraction(1, 10**12)


@dataclass(frozen=True, eq=False)
class FiniteGame:
    """Explicit payoff tables over intents, queries, and interpretations."""

    intents: tuple[str, ...]
    queries: tuple[str, ...]
    interpretations: tuple[str, ...]
    payoff_user: dict[tuple[str, str], Fraction]
    payoff_source: dict[tuple[str, str], Fraction]
    prior: dict[str, Fraction]
    set_equivalent: bool = False

    def __post_init__(self) -> None:
        for label, values in (
            ("intent", self.intents),
            ("query", self.queries),
            ("interpretation", self.interpretations),
        ):
            if not values:
                raise ConfigurationError(f"game needs at least one {label}")
            if len(set(values)) != len(values):
                raise ConfigurationError(f"duplicate {label} labels")
        cells = set(itertools.product(self.intents, self.interpretations))
        for name, table in (
            ("user", self.payoff_user),
            ("source", self.payoff_source),
        ):
            if set(table) != cells:
                raise ConfigurationError(
                    f"{name} payoff table does not cover intents x interpretations"
                )
        if set(self.prior) != set(self.intents):
            raise ConfigurationError("prior must weight exactly the intents")
        total = sum(self.prior.values(), start=Fraction(0))
        if any(weight < 0 for weight in self.prior.values()):
            raise ConfigurationError("prior weights must be nonnegative")
        if abs(total - 1) > _PRIOR_TOLERANCE:
            raise ConfigurationError(f"prior sums to {float(total)}, not 1")

    @classmethod
    def build(
        cls,
        intents: Sequence[str],
        queries: Sequence[str],
        interpretations: Sequence[str],
        payoff_user: Sequence[Sequence],
        payoff_source: Sequence[Sequence],
        prior: Sequence,
        set_equivalent: bool = False,
    ) -> FiniteGame:
        """Assemble a game from payoff matrices (rows: intents)."""

        def as_table(rows: Sequence[Sequence], name: str) -> dict:
            if len(rows) != len(intents) or any(
                len(row) != len(interpretations) for row in rows
            ):
                raise ConfigurationError(
                    f"{name} matrix must be {len(intents)} x {len(interpretations)}"
                )
            return {
                (intent, interpretation): as_fraction(rows[i][j])
                for i, intent in enumerate(intents)
                for j, interpretation in enumerate(interpretations)
            }

        if len(prior) != len(intents):
            raise ConfigurationError("prior length must match the intents")
        return cls(
            tuple(intents),
            tuple(queries),
            tuple(interpretations),
            as_table(payoff_user, "user"),
            as_table(payoff_source, "source"),
            {intent: as_fraction(w) for intent, w in zip(intents, prior)},
            set_equivalent,
        )

    def user_payoff(self, intent: str, interpretation: str) -> Fraction:
        return self.payoff_user[(intent, interpretation)]

    def source_payoff(self, intent: str, interpretation: str) -> Fraction:
        return self.payoff_source[(intent, interpretation)]

    def as_jsonable(self) -> dict:
        return {
            "intents": list(self.intents),
            "queries": list(self.queries),
            "interpretations": list(self.interpretations),
            "payoff_user": [
                [float(self.payoff_user[(t, b)]) for b in self.interpretations]
                for t in self.intents
            ],
            "payoff_source": [
                [float(self.payoff_source[(t, b)]) for b in self.interpretations]
                for t in self.intents
            ],
            "prior": [float(self.prior[t]) for t in self.intents],
            "set_equivalent": self.set_equivalent,
        }

    @classmethod
    def from_jsonable(cls, data: dict) -> FiniteGame:
        try:
            return cls.build(
                [str(x) for x in data["intents"]],
                [str(x) for x in data["queries"]],
                [str(x) for x in data["interpretations"]],
                data["payoff_user"],
                data["payoff_source"],
                data["prior"],
                bool(data.get("set_equivalent", False)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed game document: {exc}") from exc


def commission_game(commission, loss) -> FiniteGame:
    """Two-intent sales interaction with a per-sale commission.

    The user gains 2 whenever the response crosses over to the other
    intent's preferred interpretation; the source earns the commission
    on its pushed interpretation but pays the loss when the push
    misfires.  Below loss the commission leaves room for truthful
    separation; at or above it the source pushes regardless.
    """
    c = as_fraction(commission)
    ell = as_fraction(loss)
    return FiniteGame.build(
        ("tau", "tau_prime"),
        ("q", "q_prime"),
        ("beta", "beta_prime"),
        payoff_user=((0, 2), (2, 0)),
        payoff_source=((c - ell, 0), (c, -ell)),
        prior=(Fraction(1, 2), Fraction(1, 2)),
        set_equivalent=True,
    )


# --------------------------------------------------------------------------- #
# Witness search
# --------------------------------------------------------------------------- #


def influential_witness(
    game: FiniteGame,
) -> tuple[str, str, str, str] | None:
    """First intent/interpretation pairing both agents weakly prefer.

    Scans ordered intent pairs then ordered interpretation pairs in
    label order; a hit ``(a, b, x, y)`` means assigning x to a and y to
    b satisfies all four weak preference inequalities, which is exactly
    the condition for influential communication between set-equivalent
    intents.  Full indifference therefore also yields a witness.
    """
    if not game.set_equivalent:
        raise DomainError(
            "witness search applies only to set-equivalent intents"
        )
    for a, b in itertools.permutations(game.intents, 2):
        for x, y in itertools.permutations(game.interpretations, 2):
            if (
                game.user_payoff(a, x) >= game.user_payoff(a, y)
                and game.user_payoff(b, y) >= game.user_payoff(b, x)
                and game.source_payoff(a, x) >= game.source_payoff(a, y)
                and game.source_payoff(b, y) >= game.source_payoff(b, x)
            ):
                return (a, b, x, y)
    return None


# --------------------------------------------------------------------------- #
# Equilibrium enumeration
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class StrategyPair:
    """Pure strategies: intent -> query for the user, query ->
    interpretation for the source."""

    user: dict[str, str]
    source: dict[str, str]


class EquilibriumClass(Enum):
    NON_INFLUENTIAL = "NonInfluential"
    INFLUENTIAL = "Influential"
    FULLY_INFLUENTIAL = "FullyInfluential"


class ClassifiedEquilibrium(NamedTuple):
    pair: StrategyPair
    classification: EquilibriumClass


def off_path_belief(game: FiniteGame) -> dict[str, Fraction]:
    """Belief at a query no intent sends: the prior, by convention."""
    return dict(game.prior)


def bayes_posterior(
    game: FiniteGame, user_strategy: Mapping[str, str], query: str
) -> dict[str, Fraction]:
    """Posterior over intents given a query under a pure user strategy."""
    weights = {
        intent: game.prior[intent] if user_strategy[intent] == query else Fraction(0)
        for intent in game.intents
    }
    total = sum(weights.values(), start=Fraction(0))
    if total == 0:
        return off_path_belief(game)
    return {intent: weight / total for intent, weight in weights.items()}


def _validate_pair(pair: StrategyPair, game: FiniteGame) -> None:
    if set(pair.user) != set(game.intents):
        raise ConfigurationError("user strategy must cover exactly the intents")
    if set(pair.source) != set(game.queries):
        raise ConfigurationError("source strategy must cover exactly the queries")
    if any(query not in game.queries for query in pair.user.values()):
        raise ConfigurationError("user strategy plays an unknown query")
    if any(
        interpretation not in game.interpretations
        for interpretation in pair.source.values()
    ):
        raise ConfigurationError("source strategy plays an unknown interpretation")


def _is_equilibrium(pair: StrategyPair, game: FiniteGame) -> bool:
    for intent in game.intents:
        achieved = game.user_payoff(intent, pair.source[pair.user[intent]])
        if any(
            game.user_payoff(intent, pair.source[alternative]) > achieved
            for alternative in game.queries
        ):
            return False
    for query in game.queries:
        posterior = bayes_posterior(game, pair.user, query)
        chosen = pair.source[query]
        achieved = sum(
            (
                posterior[intent] * game.source_payoff(intent, chosen)
                for intent in game.intents
            ),
            start=Fraction(0),
        )
        for alternative in game.interpretations:
            value = sum(
                (
                    posterior[intent] * game.source_payoff(intent, alternative)
                    for intent in game.intents
                ),
                start=Fraction(0),
            )
            if value > achieved:
                return False
    return True


def classify_equilibrium(
    pair: StrategyPair,
    game: FiniteGame,
    *,
    rankings: Mapping[str, WeakOrder] | None = None,
) -> EquilibriumClass:
    """Classification of an equilibrium by how much it communicates.

    Influential means at least two intents end up with different
    responses; fully influential additionally requires, for every
    intent, that its ranking is a super-rank of its response's ranking
    (checked only when ``rankings`` maps the labels involved).
    Non-equilibrium input is rejected.
    """
    _validate_pair(pair, game)
    if not _is_equilibrium(pair, game):
        raise DomainError("strategy pair is not an equilibrium of the game")
    on_path = {
        intent: pair.source[pair.user[intent]] for intent in game.intents
    }
    if len(set(on_path.values())) < 2:
        return EquilibriumClass.NON_INFLUENTIAL
    if rankings is None:
        return EquilibriumClass.INFLUENTIAL
    for intent, response in on_path.items():
        if intent not in rankings or response not in rankings:
            raise ConfigurationError(
                f"rankings missing for {intent!r} or {response!r}"
            )
        if not is_super_rank(rankings[intent], rankings[response]):
            return EquilibriumClass.INFLUENTIAL
    return EquilibriumClass.FULLY_INFLUENTIAL


def enumerate_pure_equilibria(
    game: FiniteGame,
    *,
    rankings: Mapping[str, WeakOrder] | None = None,
) -> list[ClassifiedEquilibrium]:
    """All pure-strategy equilibria, classified, in deterministic order.

    Iterates every pure profile (user maps in query-label order crossed
    with source maps in interpretation-label order) and keeps the ones
    passing both best-response checks.  Refuses games whose profile
    space exceeds a million.
    """
    profile_count = len(game.queries) ** len(game.intents) * len(
        game.interpretations
    ) ** len(game.queries)
    if profile_count > _PROFILE_CAP:
        raise DomainError(
            f"{profile_count} pure profiles exceed the enumeration cap"
        )
    found: list[ClassifiedEquilibrium] = []
    for user_choice in itertools.product(game.queries, repeat=len(game.intents)):
        user = dict(zip(game.intents, user_choice))
        for source_choice in itertools.product(
            game.interpretations, repeat=len(game.queries)
        ):
            pair = StrategyPair(user, dict(zip(game.queries, source_choice)))
            if _is_equilibrium(pair, game):
                found.append(
                    ClassifiedEquilibrium(
                        pair, classify_equilibrium(pair, game, rankings=rankings)
                    )
                )
    return found

"""Command-line entry point: one binary, subcommand per analysis.

Subcommands
-----------
trust        screen a returned ranking for trustworthy vs flagged keys
influence    build the difference-constraint query for an intent, with
             its base ranking and ranking-set classification
maximize     run the merge dynamic program (optionally against the
             brute-force oracle)
equilibrium  analyze a finite game: witness search plus exhaustive
             pure-equilibrium enumeration
bench        timing sweeps (trust filter or merge DP) as CSV
verify       reduced oracle cross-checks; nonzero exit on disagreement

Reports go to standard output as JSON (CSV for bench), diagnostics to
standard error.  Exit codes: 0 success, 1 analysis failure, 2 usage or
configuration error.  The ``COI_LOG`` environment variable sets the
stderr log level (``DEBUG``, ``INFO``, ...).

The configuration file is a JSON object; all keys optional unless
noted::

    {
      "z": 10,                  // universe size (or derived from attributes)
      "k": 3,                   // top-k cutoff, default z
      "omitted_rank": null,     // default z + 1
      "kind_user": "quadratic_user",
      "kind_source": "quadratic_source_biased",
      "bias": {"entries": {"e1": 2.0}, "default": 0, "lower": 0, "upper": 3},
      "seed": 0,
      "limits": {"enumeration": 12, "merge_brute": 14},
      "attributes": [{"name": "brand", "values": ["JBL", "Sony"]}],
      "bias_rules": [{"when": {"brand": "Sony"}, "bias": 2}],
      "scale": 1,
      "buckets": [{"attribute": "price", "kind": "dyadic_numeric", "count": 4}]
    }

When ``attributes`` are given they define the rank domain (and ``z``);
``bias_rules`` then assign bias per element, first match wins.  An
explicit ``bias`` object takes precedence over rules.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from . import bench as bench_mod
from .core import (
    AttributeDomain,
    BiasFunction,
    ConfigurationError,
    QueryAnalysisError,
    RankDomain,
    WeakOrder,
    build_rank_domain,
)
from .equilibrium import (
    FiniteGame,
    enumerate_pure_equilibria,
    influential_witness,
)
from .influence import (
    base_query,
    build_delta_query,
    classify_ranking_set,
    delta_star_for_gap,
    order_by_case_sketch,
)
from .ingest import BiasConfig, BucketSpec, assign_bias
from .merge import brute_force_merge_opt, maximize_merge_dp
from .posterior import RegionSide, region_means
from .trust import detect_trustworthy, gsd_values
from .utility import UtilityContext, UtilityKind

__all__ = ["AnalysisConfig", "load_config", "main", "run_command"]

logger = logging.getLogger("coiquery.cli")


# --------------------------------------------------------------------------- #
# Configuration
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class AnalysisConfig:
    """Validated analysis settings shared by the subcommands."""

    universe_size: int
    top_k: int
    bias: BiasFunction
    omitted_rank: int | None = None
    kind_user: UtilityKind = UtilityKind.QUADRATIC_USER
    kind_source: UtilityKind = UtilityKind.QUADRATIC_SOURCE_BIASED
    seed: int = 0
    enumeration_limit: int = 12
    merge_brute_limit: int = 14
    domain: RankDomain | None = None
    buckets: tuple[BucketSpec, ...] = ()

    def __post_init__(self) -> None:
        if self.enumeration_limit < 1:
            raise ConfigurationError("enumeration limit must be at least 1")
        if not 1 <= self.merge_brute_limit <= 14:
            raise ConfigurationError(
                "brute-force merge limit must lie in 1..14 "
                f"(got {self.merge_brute_limit})"
            )
        self.context()  # validates z/k/omitted/kind combinations

    def context(self) -> UtilityContext:
        return UtilityContext(
            universe_size=self.universe_size,
            top_k=self.top_k,
            bias=self.bias,
            omitted_rank=self.omitted_rank,
            kind_user=self.kind_user,
            kind_source=self.kind_source,
        )


def _read_json(path: str) -> object:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc


def _parse_kind(data: dict, key: str, fallback: UtilityKind) -> UtilityKind:
    raw = data.get(key)
    if raw is None:
        return fallback
    try:
        return UtilityKind(raw)
    except ValueError as exc:
        raise ConfigurationError(f"unknown utility kind {raw!r}") from exc


def load_config(path: str) -> AnalysisConfig:
    """Parse and validate a configuration file (shape in module docs)."""
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: config must be a JSON object")

    domain: RankDomain | None = None
    if "attributes" in data:
        raw_attrs = data["attributes"]
        if not isinstance(raw_attrs, list):
            raise ConfigurationError("attributes must be a list")
        try:
            domain = build_rank_domain(
                AttributeDomain(str(a["name"]), tuple(a["values"]))
                for a in raw_attrs
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed attribute entry: {exc}") from exc

    universe_size = data.get("z")
    if universe_size is None:
        if domain is None:
            raise ConfigurationError("config needs either z or attributes")
        universe_size = domain.size
    elif domain is not None and domain.size != universe_size:
        raise ConfigurationError(
            f"z={universe_size} disagrees with the {domain.size}-element "
            "attribute product"
        )

    if "bias" in data:
        bias = BiasFunction.from_jsonable(data["bias"])
    elif "bias_rules" in data:
        if domain is None:
            raise ConfigurationError("bias_rules require attributes")
        bias = assign_bias(
            BiasConfig.from_jsonable(
                {"rules": data["bias_rules"], "scale": data.get("scale", 1)}
            ),
            domain,
        )
    else:
        bias = BiasFunction.zero()

    limits = data.get("limits", {})
    if not isinstance(limits, dict):
        raise ConfigurationError("limits must be an object")
    return AnalysisConfig(
        universe_size=int(universe_size),
        top_k=int(data.get("k", universe_size)),
        bias=bias,
        omitted_rank=data.get("omitted_rank"),
        kind_user=_parse_kind(data, "kind_user", UtilityKind.QUADRATIC_USER),
        kind_source=_parse_kind(
            data, "kind_source", UtilityKind.QUADRATIC_SOURCE_BIASED
        ),
        seed=int(data.get("seed", 0)),
        enumeration_limit=int(limits.get("enumeration", 12)),
        merge_brute_limit=int(limits.get("merge_brute", 14)),
        domain=domain,
        buckets=tuple(
            BucketSpec.from_jsonable(b) for b in data.get("buckets", ())
        ),
    )


def _load_weak_order(path: str) -> WeakOrder:
    return WeakOrder.from_lists(_read_json(path))


# --------------------------------------------------------------------------- #
# Subcommand handlers (each returns a report object)
# --------------------------------------------------------------------------- #


def _cmd_trust(args: argparse.Namespace) -> dict:
    config = load_config(args.config)
    beta = _load_weak_order(args.beta)
    return detect_trustworthy(beta, config.context()).as_jsonable()


def _cmd_influence(args: argparse.Namespace) -> dict:
    config = load_config(args.config)
    intent = _load_weak_order(args.intent)
    query = build_delta_query(intent, config.bias, config.universe_size)
    base = base_query(query)
    summary = classify_ranking_set(query, config.enumeration_limit)
    return {
        "query": query.as_jsonable(),
        "base": base.as_lists(),
        "ranking_set": {
            "kind": summary.kind.value,
            "count": summary.count,
            "lower_bound": summary.lower_bound,
        },
        "sketch": order_by_case_sketch(query, base),
    }


def _cmd_maximize(args: argparse.Namespace) -> dict:
    config = load_config(args.config)
    intent = _load_weak_order(args.intent)
    ctx = config.context()
    result = maximize_merge_dp(intent, ctx)
    report: dict = {"merge": result.as_jsonable()}
    if args.oracle:
        brute = brute_force_merge_opt(intent, ctx, config.merge_brute_limit)
        report["oracle"] = {
            "opt": float(brute.opt_value),
            "agrees": brute.opt_value == result.opt_value,
        }
    return report


def _cmd_equilibrium(args: argparse.Namespace) -> dict:
    raw = _read_json(args.game)
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{args.game}: game must be a JSON object")
    game = FiniteGame.from_jsonable(raw)
    report: dict = {"set_equivalent": game.set_equivalent}
    if game.set_equivalent:
        witness = influential_witness(game)
        report["witness"] = list(witness) if witness else None
    equilibria = enumerate_pure_equilibria(game)
    report["equilibria"] = [
        {
            "user": dict(entry.pair.user),
            "source": dict(entry.pair.source),
            "classification": entry.classification.value,
        }
        for entry in equilibria
    ]
    report["influential_count"] = sum(
        1
        for entry in equilibria
        if entry.classification.value != "NonInfluential"
    )
    return report


def _cmd_bench(args: argparse.Namespace) -> str:
    if args.jobs and args.jobs > 1:
        logger.info("bench always runs sequentially for timing fidelity")
    sizes = None
    if args.m:
        try:
            sizes = [int(part) for part in args.m.split(",") if part]
        except ValueError as exc:
            raise ConfigurationError(f"bad --m list {args.m!r}: {exc}") from exc
        if not sizes or any(s < 1 for s in sizes):
            raise ConfigurationError(f"bad --m list {args.m!r}")
    if args.suite == "trust":
        rows = bench_mod.run_trust_suite(
            sizes or bench_mod.DEFAULT_TRUST_SIZES,
            top_k=args.top_k,
            seed=args.seed,
            runs=args.runs,
        )
    else:
        rows = bench_mod.run_dp_suite(
            sizes or bench_mod.DEFAULT_DP_SIZES, seed=args.seed, runs=args.runs
        )
    buffer = io.StringIO()
    bench_mod.write_csv(rows, buffer)
    return buffer.getvalue()


# --------------------------------------------------------------------------- #
# verify: reduced oracle cross-checks
# --------------------------------------------------------------------------- #


def _check_region_means(seed: int) -> list[str]:
    problems = []
    for z in range(2, 11):
        for separation in range(1, z):
            for side in RegionSide:
                closed = region_means(z, separation, side, mode="closed")
                brute = region_means(z, separation, side, mode="brute")
                if closed != brute:
                    problems.append(
                        f"region_means mismatch z={z} delta={separation} "
                        f"{side.value}: {closed} vs {brute}"
                    )
    return problems


def _check_gap_invariant(seed: int) -> list[str]:
    expected = Fraction(2, 3)
    return [
        f"gap threshold at separation 1 is {gsd_values(z, 1).gap}, not 2/3 (z={z})"
        for z in range(2, 61)
        if gsd_values(z, 1).gap != expected
    ]


def _check_dp_against_brute(seed: int) -> list[str]:
    problems = []
    rng = random.Random(seed)
    for size in (4, 6, 8):
        for _ in range(5):
            keys = [f"e{i}" for i in range(1, size + 1)]
            order = list(keys)
            rng.shuffle(order)
            intent = WeakOrder.total(order)
            bias = BiasFunction(
                {k: Fraction(rng.randint(0, 20), 10) for k in keys}
            )
            ctx = UtilityContext(size, max(1, size // 2), bias)
            fast = maximize_merge_dp(intent, ctx, base=intent)
            brute = brute_force_merge_opt(intent, ctx, base=intent)
            if fast.opt_value != brute.opt_value:
                problems.append(
                    f"merge OPT mismatch m={size}: "
                    f"{fast.opt_value} vs {brute.opt_value}"
                )
            elif fast.partition != brute.partition:
                problems.append(f"merge partition mismatch m={size}")
    return problems


def _check_delta_star_strategies(seed: int) -> list[str]:
    problems = []
    for z in (8, 32):
        for quarter in range(-12, 13):
            gap = Fraction(quarter, 4)
            binary = delta_star_for_gap(gap, z, strategy="binary")
            linear = delta_star_for_gap(gap, z, strategy="linear")
            if binary != linear:
                problems.append(
                    f"delta* strategy mismatch z={z} gap={gap}: "
                    f"binary={binary} linear={linear}"
                )
    return problems


def _check_trust_strategies(seed: int) -> list[str]:
    problems = []
    rng = random.Random(seed)
    keys = [f"e{i}" for i in range(1, 21)]
    for trial in range(10):
        bias = BiasFunction(
            {k: Fraction(rng.randint(0, 3000), 1000) for k in keys},
            lower=Fraction(0),
            upper=Fraction(3),
        )
        ctx = UtilityContext(200, 10, bias)
        beta = WeakOrder.total(keys)
        scan = detect_trustworthy(beta, ctx, strategy="scan")
        indexed = detect_trustworthy(beta, ctx, strategy="indexed")
        if scan.trustworthy != indexed.trustworthy or set(scan.flagged) != set(
            indexed.flagged
        ):
            problems.append(f"trust partition mismatch on trial {trial}")
    return problems


def _check_query_soundness(seed: int) -> list[str]:
    problems = []
    rng = random.Random(seed)
    for trial in range(50):
        size = rng.randint(2, 8)
        keys = [f"e{i}" for i in range(1, size + 1)]
        rng.shuffle(keys)
        blocks: list[list[str]] = []
        for key in keys:
            if blocks and rng.random() < 0.25:
                blocks[-1].append(key)
            else:
                blocks.append([key])
        intent = WeakOrder.of(*blocks)
        bias = BiasFunction(
            {k: Fraction(rng.randint(0, 30), 10) for k in keys}
        )
        query = build_delta_query(intent, bias, size)
        if not query.satisfied_by(intent):
            problems.append(f"delta query unsatisfied by its intent, trial {trial}")
        elif not query.satisfied_by(base_query(query)):
            problems.append(f"base ranking violates its query, trial {trial}")
    return problems


def _check_equilibrium_iff(seed: int) -> list[str]:
    problems = []
    rng = random.Random(seed)
    for trial in range(100):
        game = FiniteGame.build(
            ("t1", "t2"),
            ("q1", "q2"),
            ("b1", "b2"),
            payoff_user=[
                [rng.randint(-3, 3) for _ in range(2)] for _ in range(2)
            ],
            payoff_source=[
                [rng.randint(-3, 3) for _ in range(2)] for _ in range(2)
            ],
            prior=(Fraction(1, 2), Fraction(1, 2)),
            set_equivalent=True,
        )
        has_witness = influential_witness(game) is not None
        has_influential = any(
            entry.classification.value != "NonInfluential"
            for entry in enumerate_pure_equilibria(game)
        )
        if has_witness != has_influential:
            problems.append(
                f"witness/equilibrium disagreement on trial {trial}: "
                f"witness={has_witness} influential={has_influential}"
            )
    return problems


_VERIFY_CHECKS: tuple[tuple[str, Callable[[int], list[str]]], ...] = (
    ("region_means", _check_region_means),
    ("gap_invariant", _check_gap_invariant),
    ("merge_dp", _check_dp_against_brute),
    ("delta_star", _check_delta_star_strategies),
    ("trust_strategies", _check_trust_strategies),
    ("query_soundness", _check_query_soundness),
    ("equilibrium_iff", _check_equilibrium_iff),
)


def _cmd_verify(args: argparse.Namespace) -> tuple[dict, int]:
    seed = args.seed
    # The delta* sweeps hit the (expected) multiplicity warning on most
    # grid points; keep stderr readable while the checks run.
    influence_logger = logging.getLogger("coiquery.influence")
    previous_level = influence_logger.level
    influence_logger.setLevel(logging.ERROR)
    try:
        if args.jobs > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                outcomes = list(
                    pool.map(lambda item: item[1](seed), _VERIFY_CHECKS)
                )
        else:
            outcomes = [check(seed) for _, check in _VERIFY_CHECKS]
    finally:
        influence_logger.setLevel(previous_level)
    checks = {
        name: {"ok": not problems, "disagreements": problems}
        for (name, _), problems in zip(_VERIFY_CHECKS, outcomes)
    }
    all_ok = all(entry["ok"] for entry in checks.values())
    return {"checks": checks, "ok": all_ok}, 0 if all_ok else 1


# --------------------------------------------------------------------------- #
# Dispatch
# --------------------------------------------------------------------------- #


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coiquery",
        description="Conflict-of-interest query analyses over ranked results.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    trust = commands.add_parser("trust", help="screen a returned ranking")
    trust.add_argument("--config", required=True)
    trust.add_argument("--beta", required=True, help="returned ranking JSON")
    trust.add_argument("--output")

    influence = commands.add_parser(
        "influence", help="build a difference-constraint query"
    )
    influence.add_argument("--config", required=True)
    influence.add_argument("--intent", required=True, help="intent ranking JSON")
    influence.add_argument("--output")

    maximize = commands.add_parser("maximize", help="run the merge DP")
    maximize.add_argument("--config", required=True)
    maximize.add_argument("--intent", required=True, help="intent ranking JSON")
    maximize.add_argument(
        "--oracle", action="store_true", help="cross-check against brute force"
    )
    maximize.add_argument("--output")

    equilibrium = commands.add_parser(
        "equilibrium", help="analyze a finite game"
    )
    equilibrium.add_argument("--game", required=True, help="game JSON")
    equilibrium.add_argument("--output")

    bench = commands.add_parser("bench", help="timing sweeps as CSV")
    bench.add_argument("--suite", required=True, choices=("trust", "dp"))
    bench.add_argument("--m", help="comma-separated sizes, e.g. 100,200,400")
    bench.add_argument("--runs", type=int, default=5)
    bench.add_argument("--top-k", type=int, default=80, dest="top_k")
    bench.add_argument("--seed", type=int, default=1)
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--output")

    verify = commands.add_parser("verify", help="run oracle cross-checks")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--jobs", type=int, default=1)
    verify.add_argument("--output")

    return parser


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _configure_logging() -> None:
    level_name = os.environ.get("COI_LOG", "").upper()
    level = getattr(logging, level_name, None) if level_name else None
    logging.basicConfig(
        stream=sys.stderr,
        level=level if isinstance(level, int) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


def run_command(argv: Sequence[str]) -> int:
    """Run one subcommand; returns the process exit code."""
    _configure_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        exit_code = 0
        if args.command == "trust":
            report: object = _cmd_trust(args)
        elif args.command == "influence":
            report = _cmd_influence(args)
        elif args.command == "maximize":
            report = _cmd_maximize(args)
        elif args.command == "equilibrium":
            report = _cmd_equilibrium(args)
        elif args.command == "verify":
            report, exit_code = _cmd_verify(args)
        else:  # bench emits CSV, not JSON
            _emit(_cmd_bench(args), args.output)
            return 0
        _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.output)
        return exit_code
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except QueryAnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()

"""Command-line front end: generate scenarios, run matchings, sweep, verify.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import sys

from .errors import ConfigurationError
from .matching import (
    brute_force_max_weight,
    build_preferences,
    consumer_oriented_matching,
    enumerate_stable_matchings,
    is_stable,
    km_solve,
    provider_oriented_matching,
    PreferenceLists,
)
from .metrics import SWEEP_COLUMNS, SweepSpec, run_sweep, social_welfare
from .money import format_cents
from .protocol import ALGORITHMS, PLAN_CSV_HEADER, run_protocol
from .scenario import (
    ScenarioConfig,
    generate_scenario,
    scenario_from_json_dict,
    scenario_to_json,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2


def _read_json(path: str, what: str) -> dict:
    if not os.path.exists(path):
        raise ConfigurationError(f"{what} not found: {path}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{what} {path} is not valid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}"
        ) from exc


def cmd_generate(args: argparse.Namespace) -> int:
    config = ScenarioConfig.from_json_dict(_read_json(args.config, "config"))
    seed = args.seed if args.seed is not None else config.seed
    scenario = generate_scenario(config, seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(scenario_to_json(scenario))
    print(f"wrote scenario with N={config.n_consumers} K={config.k_providers} "
          f"seed={seed} to {args.out}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    scenario = scenario_from_json_dict(_read_json(args.scenario, "scenario"))
    plan = run_protocol(scenario, args.algorithm)

    json_path = args.out + ".json"
    csv_path = args.out + ".csv"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(plan.to_json_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PLAN_CSV_HEADER)
        writer.writerows(plan.to_csv_rows())

    welfare = social_welfare(plan, scenario)
    print(f"{args.algorithm}: {len(plan.trades)} trades, "
          f"{len(plan.station_fallbacks)} station fallbacks, "
          f"welfare {format_cents(welfare)} c, rounds {plan.rounds_used}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = SweepSpec.from_json_dict(_read_json(args.spec, "sweep spec"))
    if args.timing:
        from dataclasses import replace

        spec = replace(spec, timed=True)
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("V2V_WORKERS", "1"))
    rows = run_sweep(spec, workers=workers)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([
                str(row["trial"]), str(row["N"]), str(row["K"]), row["algorithm"],
                format_cents(row["social_welfare_c"]),
                format_cents(row["baseline_welfare_c"]),
                f"{row['energy_v2v_kwh']:.9f}",
                f"{row['energy_baseline_kwh']:.9f}",
                f"{row['energy_reduction_kwh']:.9f}",
                str(row["matched_count"]), str(row["fallback_count"]),
                f"{row['wall_time_s']:.9f}",
            ])
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


# --- verify ----------------------------------------------------------------------

def _random_matrix(rng: random.Random, n: int) -> list[list[int]]:
    return [[rng.randint(-100, 100) for _ in range(n)] for _ in range(n)]


def _random_preferences(rng: random.Random, n_c: int, n_p: int) -> PreferenceLists:
    consumers = {}
    for i in range(1, n_c + 1):
        options = [j for j in range(1, n_p + 1) if rng.random() < 0.8]
        rng.shuffle(options)
        consumers[i] = tuple(options)
    providers = {}
    for j in range(1, n_p + 1):
        options = [i for i in range(1, n_c + 1) if rng.random() < 0.8]
        rng.shuffle(options)
        providers[j] = tuple(options)
    return PreferenceLists(consumers=consumers, providers=providers)


def _rank_of(lst: tuple[int, ...], value: int | None) -> float:
    if value is None or value not in lst:
        return float("inf")
    return lst.index(value)


def cmd_verify(args: argparse.Namespace) -> int:
    if args.size_limit > 7:
        print(f"error: size limit {args.size_limit} exceeds the enumeration "
              f"guard of 7", file=sys.stderr)
        return EXIT_USAGE
    rng = random.Random(args.seed)

    # Max-weight solutions must match the exhaustive permutation oracle.
    for trial in range(args.trials):
        n = rng.randint(2, args.size_limit)
        matrix = _random_matrix(rng, n)
        matched = km_solve(matrix, validate=True)
        km_weight = sum(matrix[i][j] for i, j in matched.edges)
        oracle = matrix
        if args.inject_fault and trial == 0:
            oracle = [row[:] for row in matrix]
            oracle[0][0] += 1000  # test hook: perturb one weight
        best, _ = brute_force_max_weight(oracle)
        if km_weight != best:
            print("max-weight mismatch:")
            print(json.dumps({"matrix": matrix, "km_weight": km_weight,
                              "brute_force": best,
                              "matching": matched.pairs()}, indent=2))
            return EXIT_VERIFY_FAILED
    print(f"max-weight vs brute force: {args.trials} trials up to "
          f"{args.size_limit}x{args.size_limit} ok")

    # Deferred-acceptance outputs must be stable.
    for trial in range(args.trials):
        prefs = _random_preferences(rng, rng.randint(1, 8), rng.randint(1, 8))
        for name, produce in (("consumer", consumer_oriented_matching),
                              ("provider", provider_oriented_matching)):
            result = is_stable(produce(prefs), prefs)
            if not result.stable:
                print(f"{name}-oriented output unstable, blocking pair {result.violation}:")
                print(json.dumps({"consumers": {str(k): list(v) for k, v in prefs.consumers.items()},
                                  "providers": {str(k): list(v) for k, v in prefs.providers.items()}},
                                 indent=2))
                return EXIT_VERIFY_FAILED
    print(f"deferred-acceptance stability: {args.trials} instances ok")

    # Proposer-optimality against the enumeration oracle.
    for trial in range(args.trials):
        size = rng.randint(1, min(5, args.size_limit))
        prefs = _random_preferences(rng, size, size)
        stable_set = enumerate_stable_matchings(prefs)
        co = consumer_oriented_matching(prefs).left_to_right()
        po = provider_oriented_matching(prefs).right_to_left()
        for m in stable_set:
            pc = m.left_to_right()
            pp = m.right_to_left()
            for i, lst in prefs.consumers.items():
                if _rank_of(lst, co.get(i)) > _rank_of(lst, pc.get(i)):
                    print(f"consumer {i} worse under consumer-oriented matching "
                          f"than in a stable matching {sorted(m.edges)}")
                    return EXIT_VERIFY_FAILED
            for j, lst in prefs.providers.items():
                if _rank_of(lst, po.get(j)) > _rank_of(lst, pp.get(j)):
                    print(f"provider {j} worse under provider-oriented matching "
                          f"than in a stable matching {sorted(m.edges)}")
                    return EXIT_VERIFY_FAILED
    print(f"proposer optimality vs enumeration: {args.trials} instances ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="v2v",
        description="Cooperative EV-to-EV charging market simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate a scenario from a config")
    p_gen.add_argument("--config", required=True, help="scenario config JSON")
    p_gen.add_argument("--out", required=True, help="output scenario JSON path")
    p_gen.add_argument("--seed", type=int, default=None, help="override config seed")
    p_gen.set_defaults(func=cmd_generate)

    p_run = sub.add_parser("run", help="run one protocol epoch on a scenario")
    p_run.add_argument("--scenario", required=True, help="scenario JSON path")
    p_run.add_argument("--algorithm", required=True, choices=list(ALGORITHMS))
    p_run.add_argument("--out", required=True,
                       help="output path prefix (.json and .csv are appended)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a Monte-Carlo market-size sweep")
    p_sweep.add_argument("--spec", required=True, help="sweep spec JSON")
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.add_argument("--workers", type=int, default=None,
                         help="parallel workers (default. V2V_WORKERS or 1)")
    p_sweep.add_argument("--timing", action="store_true",
                         help="record matching wall time (breaks byte-identical reruns)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the matching oracle suites")
    p_verify.add_argument("--size-limit", type=int, default=5, dest="size_limit")
    p_verify.add_argument("--trials", type=int, default=200)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--inject-fault", action="store_true", dest="inject_fault",
                          help="test hook: perturb one weight to force a failure")
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc.filename} not found", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Control-center protocol: match, post-check, recycle failures, emit the plan.

Each round runs the selected matching algorithm over the EVs still in the
trading buffer.  Matched pairs that fail the post-match checks (consumer must
beat its nearest-station baseline, provider must profit) are returned to the
buffer with the pairing struck for the rest of the epoch; a consumer whose
failure count exceeds the retry limit is sent to a charging station.  The
loop ends when a round produces no rejections or no matchable pair remains.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

from .graph import build_market_graph
from .matching import (
    build_preferences,
    consumer_oriented_matching,
    max_weight_matching,
    provider_oriented_matching,
)
from .money import Money, format_cents, money_to_cents
from .scenario import Scenario
from .utility import TradeEvaluation, evaluate_all_pairs, station_utilities

MAX_WEIGHT = "max-weight"
CONSUMER_ORIENTED = "consumer"
PROVIDER_ORIENTED = "provider"
ALGORITHMS = (MAX_WEIGHT, CONSUMER_ORIENTED, PROVIDER_ORIENTED)


@dataclass(frozen=True)
class Trade:
    consumer_id: int
    provider_id: int
    lot_id: int
    energy_kwh: float
    u_consumer: Money
    u_provider: Money


@dataclass(frozen=True)
class StationFallback:
    consumer_id: int
    station_id: int
    u_consumer: Money


@dataclass(frozen=True)
class TradePlan:
    """Protocol outcome; every consumer lands in exactly one of trades or
    station fallbacks."""

    trades: tuple[Trade, ...]
    station_fallbacks: tuple[StationFallback, ...]
    idle_providers: tuple[int, ...]
    rounds_used: int

    def to_json_dict(self) -> dict:
        return {
            "trades": [
                {
                    "consumer_id": t.consumer_id,
                    "provider_id": t.provider_id,
                    "lot_id": t.lot_id,
                    "energy_kwh": t.energy_kwh,
                    "u_consumer_cents": money_to_cents(t.u_consumer),
                    "u_provider_cents": money_to_cents(t.u_provider),
                }
                for t in self.trades
            ],
            "station_fallbacks": [
                {
                    "consumer_id": f.consumer_id,
                    "station_id": f.station_id,
                    "u_consumer_cents": money_to_cents(f.u_consumer),
                }
                for f in self.station_fallbacks
            ],
            "idle_providers": list(self.idle_providers),
            "rounds_used": self.rounds_used,
        }

    def to_csv_rows(self) -> list[list[str]]:
        """One row per consumer, ordered by consumer id."""
        rows = []
        for t in self.trades:
            rows.append([
                str(t.consumer_id), "trade", str(t.provider_id), str(t.lot_id),
                format_cents(t.u_consumer), format_cents(t.u_provider),
            ])
        for f in self.station_fallbacks:
            rows.append([
                str(f.consumer_id), "station", "", str(f.station_id),
                format_cents(f.u_consumer), "",
            ])
        rows.sort(key=lambda r: int(r[0]))
        return rows


PLAN_CSV_HEADER = [
    "consumer_id", "outcome", "partner_id", "lot_or_station_id",
    "u_consumer_cents", "u_provider_cents",
]


def run_protocol(
    scenario: Scenario,
    algorithm: str,
    evals: dict[tuple[int, int], TradeEvaluation] | None = None,
) -> TradePlan:
    """Run the full protocol loop and return the final plan.

    `evals` may carry precomputed pair evaluations when several algorithms
    run on the same scenario.
    """
    plan, _ = run_protocol_timed(scenario, algorithm, evals)
    return plan


def run_protocol_timed(
    scenario: Scenario,
    algorithm: str,
    evals: dict[tuple[int, int], TradeEvaluation] | None = None,
) -> tuple[TradePlan, float]:
    """As `run_protocol`, also returning wall time spent inside the matching
    algorithm itself (graph assembly, preference sorting, and post-checks are
    excluded)."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}, expected one of {ALGORITHMS}")
    if evals is None:
        evals = evaluate_all_pairs(scenario)
    baselines = station_utilities(scenario)
    consumers = {c.id: c for c in scenario.consumers}

    buffer_c = {c.id: c for c in scenario.consumers}
    buffer_p = {p.id: p for p in scenario.providers}
    fails = {c.id: c.fail_count for c in scenario.consumers}
    excluded: set[tuple[int, int]] = set()
    da = algorithm in (CONSUMER_ORIENTED, PROVIDER_ORIENTED)

    trades: list[Trade] = []
    fallbacks: list[StationFallback] = []
    rounds = 0
    match_seconds = 0.0

    def has_candidates() -> bool:
        for cid in buffer_c:
            base = baselines[cid][0]
            for pid in buffer_p:
                ev = evals[(cid, pid)]
                if not ev.feasible or (cid, pid) in excluded:
                    continue
                if da and not (ev.u_consumer > base and ev.u_provider > 0):
                    continue
                return True
        return False

    def evict(cid: int) -> None:
        base, station_id = baselines[cid]
        fallbacks.append(StationFallback(cid, station_id, base))
        del buffer_c[cid]

    while buffer_c and buffer_p and has_candidates():
        rounds += 1
        sub_consumers = tuple(buffer_c.values())
        sub_providers = tuple(buffer_p.values())

        if algorithm == MAX_WEIGHT:
            g = build_market_graph(
                scenario, evals, consumers=sub_consumers, providers=sub_providers,
                excluded=frozenset(excluded),
            )
            start = time.perf_counter()
            m = max_weight_matching(g)
            match_seconds += time.perf_counter() - start
            matched = [g.evals[(i, j)] for i, j in m.pairs() if (i, j) in g.evals]
        else:
            view = {
                key: ev for key, ev in evals.items()
                if key[0] in buffer_c and key[1] in buffer_p and key not in excluded
            }
            sub = replace(scenario, consumers=sub_consumers, providers=sub_providers)
            prefs = build_preferences(sub, view)
            start = time.perf_counter()
            if algorithm == CONSUMER_ORIENTED:
                m = consumer_oriented_matching(prefs)
            else:
                m = provider_oriented_matching(prefs)
            match_seconds += time.perf_counter() - start
            matched = [evals[pair] for pair in m.pairs()]

        rejections = 0
        for ev in sorted(matched, key=lambda e: e.consumer_id):
            base = baselines[ev.consumer_id][0]
            if ev.u_consumer > base and ev.u_provider > 0:
                trades.append(Trade(
                    consumer_id=ev.consumer_id,
                    provider_id=ev.provider_id,
                    lot_id=ev.lot_id,
                    energy_kwh=consumers[ev.consumer_id].a_c,
                    u_consumer=ev.u_consumer,
                    u_provider=ev.u_provider,
                ))
                del buffer_c[ev.consumer_id]
                del buffer_p[ev.provider_id]
            else:
                rejections += 1
                fails[ev.consumer_id] += 1
                excluded.add((ev.consumer_id, ev.provider_id))

        for cid in list(buffer_c):
            if fails[cid] > scenario.m_max:
                evict(cid)

        if rejections == 0:
            break

    for cid in list(buffer_c):
        evict(cid)

    traded_providers = {t.provider_id for t in trades}
    idle = tuple(p.id for p in scenario.providers if p.id not in traded_providers)
    plan = TradePlan(
        trades=tuple(sorted(trades, key=lambda t: t.consumer_id)),
        station_fallbacks=tuple(sorted(fallbacks, key=lambda f: f.consumer_id)),
        idle_providers=idle,
        rounds_used=rounds,
    )
    return plan, match_seconds

import math
import random

import pytest

from v2vmarket import (
    ALGORITHMS,
    MAX_WEIGHT,
    Matching,
    ScenarioConfig,
    SweepSpec,
    baseline_energy,
    baseline_welfare,
    build_market_graph,
    build_preferences,
    build_run_report,
    consumer_oriented_matching,
    consumer_station_utility,
    energy_consumption,
    evaluate_all_pairs,
    generate_scenario,
    matching_weight,
    max_weight_matching,
    money_to_cents,
    provider_oriented_matching,
    run_protocol,
    run_sweep,
    social_welfare,
    timed_run,
    transfer_loss,
    trial_seed,
)
from v2vmarket.errors import ConfigurationError
from v2vmarket.protocol import TradePlan
from helpers import consumer, lot, make_scenario, provider


def single_trade_scenario():
    c = consumer(1, (0.0, 0.0), a_c=20.0, beta_c=0.25)
    p = provider(1, (3.0, 0.0), a_p=25.0, beta_p=0.3, theta_p=60.0, velocity=30.0)
    return make_scenario(consumers=[c], providers=[p], lots=[lot(1, (2.0, 0.0))])


def test_social_welfare_single_trade():
    s = single_trade_scenario()
    plan = run_protocol(s, MAX_WEIGHT)
    assert abs(money_to_cents(social_welfare(plan, s)) - (-205.053)) <= 0.001


def test_social_welfare_empty_plan():
    s = generate_scenario(ScenarioConfig(n_consumers=0, k_providers=0), seed=0)
    plan = run_protocol(s, MAX_WEIGHT)
    assert social_welfare(plan, s) == 0


def test_baseline_welfare_cancels_for_zero_travel():
    consumers = [
        consumer(1, (10.0, 5.0), a_c=20.0, beta_c=0.25),
        consumer(2, (10.0, 15.0), a_c=30.0, beta_c=0.3),
    ]
    s = make_scenario(consumers=consumers, lots=[lot(1, (10.0, 10.0))])
    assert baseline_welfare(s) == 0


def test_social_welfare_rejects_foreign_plan():
    s = single_trade_scenario()
    plan = run_protocol(s, MAX_WEIGHT)
    other = generate_scenario(ScenarioConfig(n_consumers=2, k_providers=2), seed=9)
    foreign = TradePlan(trades=plan.trades,
                        station_fallbacks=(),
                        idle_providers=(),
                        rounds_used=1)
    # consumer/provider ids 1 exist in `other` too, so shift them out of range
    from dataclasses import replace
    foreign = replace(foreign, trades=(replace(plan.trades[0], consumer_id=99),))
    with pytest.raises(ValueError):
        social_welfare(foreign, other)


def test_energy_consumption_single_trade():
    s = single_trade_scenario()
    plan = run_protocol(s, MAX_WEIGHT)
    assert energy_consumption(plan, s) == pytest.approx(0.25 * 2.0 + 0.3 * 1.0)


def test_energy_zero_when_colocated():
    c = consumer(1, (6.0, 6.0), a_c=20.0, beta_c=0.25)
    p = provider(1, (6.0, 6.0), a_p=25.0, beta_p=0.3)
    s = make_scenario(consumers=[c], providers=[p], lots=[lot(1, (6.0, 6.0))])
    plan = run_protocol(s, MAX_WEIGHT)
    assert len(plan.trades) == 1
    assert energy_consumption(plan, s) == 0.0


def test_energy_matches_per_row_recomputation():
    rng = random.Random(3)
    for _ in range(50):
        cfg = ScenarioConfig(n_consumers=rng.randint(1, 8),
                             k_providers=rng.randint(1, 8))
        s = generate_scenario(cfg, seed=rng.randrange(2 ** 32))
        plan = run_protocol(s, MAX_WEIGHT)
        consumers = {c.id: c for c in s.consumers}
        providers = {p.id: p for p in s.providers}
        lots = {l.id: l for l in s.lots}
        stations = {f.id: f for f in s.stations}
        expected = 0.0
        for t in plan.trades:
            c, p, l = consumers[t.consumer_id], providers[t.provider_id], lots[t.lot_id]
            expected += c.beta_c * math.dist(c.position, l.position)
            expected += p.beta_p * math.dist(p.position, l.position)
        for f in plan.station_fallbacks:
            c = consumers[f.consumer_id]
            expected += c.beta_c * math.dist(c.position, stations[f.station_id].position)
        assert energy_consumption(plan, s) == pytest.approx(expected, rel=1e-12)


def test_transfer_loss_counts_traded_energy_only():
    s = single_trade_scenario()
    plan = run_protocol(s, MAX_WEIGHT)
    assert transfer_loss(plan, s) == pytest.approx((1.0 - 0.95) * 20.0)


def test_timed_run_nonnegative_and_same_plan():
    s = generate_scenario(ScenarioConfig(n_consumers=5, k_providers=5), seed=8)
    plan, seconds = timed_run(s, MAX_WEIGHT)
    assert seconds >= 0.0
    assert plan == run_protocol(s, MAX_WEIGHT)


# --- run report -----------------------------------------------------------------------

def test_run_report_identities():
    s = generate_scenario(ScenarioConfig(n_consumers=8, k_providers=6), seed=5)
    report = build_run_report(s)
    base = baseline_energy(s)
    for alg in ALGORITHMS:
        plan = report.plans[alg]
        assert report.energy_reduction[alg] == pytest.approx(
            report.energy_cost_baseline - report.energy_cost_v2v[alg])
        assert report.energy_cost_baseline == pytest.approx(base)
        welfare = sum(t.u_consumer + t.u_provider for t in plan.trades) + sum(
            f.u_consumer for f in plan.station_fallbacks)
        assert report.social_welfare_v2v[alg] == welfare
        # every consumer appears; fallback rows carry the station value
        assert sorted(report.per_consumer_utilities[alg]) == [c.id for c in s.consumers]
        for f in plan.station_fallbacks:
            expected, _ = consumer_station_utility(
                next(c for c in s.consumers if c.id == f.consumer_id),
                s.stations, s.prices)
            assert report.per_consumer_utilities[alg][f.consumer_id] == expected
        for pid in plan.idle_providers:
            assert report.per_provider_utilities[alg][pid] == 0


def test_welfare_dominance_when_accepted_sets_agree():
    rng = random.Random(5)
    checked = 0
    for _ in range(200):
        cfg = ScenarioConfig(n_consumers=rng.randint(2, 10),
                             k_providers=rng.randint(2, 10))
        s = generate_scenario(cfg, seed=rng.randrange(2 ** 32))
        evals = evaluate_all_pairs(s)
        plans = {a: run_protocol(s, a, evals) for a in ALGORITHMS}
        sets = {a: frozenset(t.consumer_id for t in plans[a].trades)
                for a in ALGORITHMS}
        if sets["max-weight"] == sets["consumer"] == sets["provider"]:
            checked += 1
            w = {a: social_welfare(plans[a], s) for a in ALGORITHMS}
            assert w["max-weight"] >= w["consumer"]
            assert w["max-weight"] >= w["provider"]
    assert checked > 30  # the restriction must actually bite on a healthy sample


def test_raw_matching_dominance_over_stable_matchings():
    # Property-1-level check: the max-weight matching outweighs any stable
    # matching once the latter is completed to a perfect matching
    rng = random.Random(6)
    for _ in range(150):
        cfg = ScenarioConfig(n_consumers=rng.randint(1, 8),
                             k_providers=rng.randint(1, 8))
        s = generate_scenario(cfg, seed=rng.randrange(2 ** 32))
        evals = evaluate_all_pairs(s)
        g = build_market_graph(s, evals)
        km_weight = matching_weight(g, max_weight_matching(g))
        prefs = build_preferences(s, evals)
        idx_c = {c.id: i for i, c in enumerate(s.consumers)}
        idx_p = {p.id: j for j, p in enumerate(s.providers)}
        for produce in (consumer_oriented_matching, provider_oriented_matching):
            mm = produce(prefs)
            pairs = [(idx_c[c], idx_p[p]) for c, p in mm.edges]
            used_l = {i for i, _ in pairs}
            used_r = {j for _, j in pairs}
            pairs += list(zip((i for i in range(g.n) if i not in used_l),
                              (j for j in range(g.n) if j not in used_r)))
            assert km_weight >= matching_weight(g, Matching.of(pairs))


# --- sweeps ----------------------------------------------------------------------------

def test_trial_seed_is_stable():
    assert trial_seed(42, 10, 0) == trial_seed(42, 10, 0)
    assert trial_seed(42, 10, 0) != trial_seed(42, 10, 1)
    assert trial_seed(42, 10, 0) != trial_seed(43, 10, 0)


def test_sweep_row_count_and_order():
    spec = SweepSpec(fixed_side="N", fixed_value=4,
                     varied_values=(4, 6), trials=3, master_seed=1,
                     algorithms=ALGORITHMS)
    rows = run_sweep(spec)
    assert len(rows) == 2 * 3 * 3
    assert [r["K"] for r in rows[:9]] == [4] * 9
    assert [r["algorithm"] for r in rows[:3]] == list(ALGORITHMS)
    for row in rows:
        assert row["matched_count"] + row["fallback_count"] == row["N"]
        assert row["energy_reduction_kwh"] == pytest.approx(
            row["energy_baseline_kwh"] - row["energy_v2v_kwh"])
        assert row["wall_time_s"] == 0.0


def test_sweep_fixed_k_varies_n():
    spec = SweepSpec(fixed_side="K", fixed_value=3, varied_values=(2, 5),
                     trials=1, master_seed=7, algorithms=(MAX_WEIGHT,))
    rows = run_sweep(spec)
    assert [(r["N"], r["K"]) for r in rows] == [(2, 3), (5, 3)]


def test_sweep_deterministic_across_worker_counts():
    spec = SweepSpec(fixed_side="N", fixed_value=3, varied_values=(3, 5),
                     trials=4, master_seed=99, algorithms=ALGORITHMS)
    assert run_sweep(spec, workers=1) == run_sweep(spec, workers=2)


def test_sweep_spec_validation():
    with pytest.raises(ConfigurationError):
        SweepSpec(fixed_side="X", fixed_value=1, varied_values=(1,), trials=1,
                  master_seed=0)
    with pytest.raises(ConfigurationError):
        SweepSpec(fixed_side="N", fixed_value=1, varied_values=(), trials=1,
                  master_seed=0)
    with pytest.raises(ConfigurationError):
        SweepSpec(fixed_side="N", fixed_value=1, varied_values=(1,), trials=0,
                  master_seed=0)
    with pytest.raises(ConfigurationError):
        SweepSpec(fixed_side="N", fixed_value=1, varied_values=(1,), trials=1,
                  master_seed=0, algorithms=("foo",))

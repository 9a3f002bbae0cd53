import math
import random
from dataclasses import replace

import pytest

from v2vmarket import (
    ALGORITHMS,
    CONSUMER_ORIENTED,
    MAX_WEIGHT,
    PROVIDER_ORIENTED,
    ScenarioConfig,
    consumer_station_utility,
    evaluate_all_pairs,
    generate_scenario,
    money_from_cents,
    money_to_cents,
    run_protocol,
    station_utilities,
)
from helpers import TABLE1_PRICES, consumer, lot, make_scenario, provider


def good_pair_scenario():
    """Single pair whose trade beats both baselines (worked utility example)."""
    c = consumer(1, (0.0, 0.0), a_c=20.0, beta_c=0.25)
    p = provider(1, (3.0, 0.0), a_p=25.0, beta_p=0.3, theta_p=60.0, velocity=30.0)
    return make_scenario(consumers=[c], providers=[p], lots=[lot(1, (2.0, 0.0))])


def unprofitable_provider_scenario(k_providers=1):
    """Provider(s) far from the single lot lose money on any trade."""
    c = consumer(1, (2.0, 2.0), a_c=20.0, beta_c=0.25)
    providers = [
        provider(j, (18.0, 18.0), a_p=30.0, beta_p=0.3, theta_p=90.0, velocity=20.0)
        for j in range(1, k_providers + 1)
    ]
    return make_scenario(consumers=[c], providers=providers, lots=[lot(1, (2.0, 2.0))])


def test_good_pair_accepted_first_round():
    s = good_pair_scenario()
    for alg in ALGORITHMS:
        plan = run_protocol(s, alg)
        assert plan.rounds_used == 1
        assert len(plan.trades) == 1 and not plan.station_fallbacks
        t = plan.trades[0]
        assert (t.consumer_id, t.provider_id, t.lot_id) == (1, 1, 1)
        assert t.u_consumer == money_from_cents(-307.5)
        assert abs(money_to_cents(t.u_provider) - 102.447) <= 0.001
        assert t.energy_kwh == 20.0
        assert plan.idle_providers == ()


def test_rejected_pair_falls_back_to_station():
    s = unprofitable_provider_scenario()
    plan = run_protocol(s, MAX_WEIGHT)
    assert plan.rounds_used == 1  # matched once, rejected, no candidates remain
    assert not plan.trades
    assert len(plan.station_fallbacks) == 1
    fb = plan.station_fallbacks[0]
    expected, station_id = consumer_station_utility(s.consumers[0], s.stations, s.prices)
    assert fb.u_consumer == expected and fb.station_id == station_id
    assert plan.idle_providers == (1,)


def test_da_never_matches_unprofitable_pair():
    s = unprofitable_provider_scenario()
    for alg in (CONSUMER_ORIENTED, PROVIDER_ORIENTED):
        plan = run_protocol(s, alg)
        assert plan.rounds_used == 0  # no mutually acceptable pair, loop never runs
        assert not plan.trades and len(plan.station_fallbacks) == 1


def test_m_failure_rule_evicts_after_retries():
    # five unprofitable providers: max-weight matches a fresh one each round
    # until the consumer's failure count exceeds m_max = 3
    s = unprofitable_provider_scenario(k_providers=5)
    plan = run_protocol(s, MAX_WEIGHT)
    assert not plan.trades
    assert plan.rounds_used == 4  # failures 1..4, eviction when count exceeds 3
    assert len(plan.station_fallbacks) == 1
    assert set(plan.idle_providers) == {1, 2, 3, 4, 5}


def test_empty_market():
    s = generate_scenario(ScenarioConfig(n_consumers=0, k_providers=3), seed=1)
    plan = run_protocol(s, MAX_WEIGHT)
    assert not plan.trades and not plan.station_fallbacks
    assert plan.rounds_used == 0
    assert set(plan.idle_providers) == {1, 2, 3}


def test_unknown_algorithm_rejected():
    s = generate_scenario(ScenarioConfig(n_consumers=1, k_providers=1), seed=1)
    with pytest.raises(ValueError):
        run_protocol(s, "foo")


def test_plan_partition_and_soundness_on_random_scenarios():
    rng = random.Random(13)
    for trial in range(300):
        cfg = ScenarioConfig(n_consumers=rng.randint(0, 8),
                             k_providers=rng.randint(0, 8))
        s = generate_scenario(cfg, seed=rng.randrange(2 ** 32))
        evals = evaluate_all_pairs(s)
        baselines = station_utilities(s)
        consumers = {c.id: c for c in s.consumers}
        providers = {p.id: p for p in s.providers}
        lots = {l.id: l for l in s.lots}
        for alg in ALGORITHMS:
            plan = run_protocol(s, alg, evals)
            outcome_ids = sorted(
                [t.consumer_id for t in plan.trades]
                + [f.consumer_id for f in plan.station_fallbacks]
            )
            assert outcome_ids == sorted(consumers)  # exactly one outcome each
            assert plan.rounds_used <= s.m_max * max(len(s.consumers),
                                                     len(s.providers)) + 1
            for t in plan.trades:
                c, p = consumers[t.consumer_id], providers[t.provider_id]
                assert p.a_p >= c.a_c
                assert t.u_consumer > baselines[t.consumer_id][0]
                assert t.u_provider > 0
                # independent recomputation from the raw cost model
                l = lots[t.lot_id]
                d_c = math.dist(c.position, l.position)
                d_p = math.dist(p.position, l.position)
                u_c = -s.prices.p_t * c.a_c - s.prices.p_t * c.beta_c * d_c
                u_p = (s.prices.p_t * c.a_c - s.prices.p_0 * c.a_c / s.prices.eta
                       - s.prices.p_t * p.beta_p * d_p
                       - p.theta_p * (d_p / p.velocity
                                      + s.prices.tau * c.a_c / s.prices.eta)
                       - p.phi * p.d * c.a_c)
                assert abs(money_to_cents(t.u_consumer) - u_c) <= 1e-3
                assert abs(money_to_cents(t.u_provider) - u_p) <= 1e-3
            for f in plan.station_fallbacks:
                expected, sid = consumer_station_utility(
                    consumers[f.consumer_id], s.stations, s.prices)
                assert f.u_consumer == expected and f.station_id == sid


def test_da_passes_postchecks_in_one_round():
    # acceptability-filtered preferences imply the post-checks, so the
    # deferred-acceptance protocols never need a second round
    rng = random.Random(21)
    for trial in range(200):
        cfg = ScenarioConfig(n_consumers=rng.randint(1, 10),
                             k_providers=rng.randint(1, 10))
        s = generate_scenario(cfg, seed=rng.randrange(2 ** 32))
        for alg in (CONSUMER_ORIENTED, PROVIDER_ORIENTED):
            assert run_protocol(s, alg).rounds_used <= 1


def test_termination_over_many_random_scenarios():
    rng = random.Random(99)
    for trial in range(10_000):
        cfg = ScenarioConfig(n_consumers=rng.randint(0, 6),
                             k_providers=rng.randint(0, 6))
        s = generate_scenario(cfg, seed=rng.randrange(2 ** 32))
        plan = run_protocol(s, MAX_WEIGHT)
        assert plan.rounds_used <= s.m_max * max(cfg.n_consumers,
                                                 cfg.k_providers) + 1


def test_virtual_and_infeasible_matches_do_not_count_as_failures():
    # one consumer, no feasible provider: never matched, no failures, one round 0
    c = consumer(1, (5.0, 5.0), a_c=35.0, beta_c=0.25)
    p = provider(1, (6.0, 5.0), a_p=20.0, beta_p=0.3)
    s = make_scenario(consumers=[c], providers=[p], lots=[lot(1, (5.5, 5.0))])
    plan = run_protocol(s, MAX_WEIGHT)
    assert plan.rounds_used == 0
    assert len(plan.station_fallbacks) == 1
    assert plan.idle_providers == (1,)


def test_initial_fail_counts_respected():
    # a consumer arriving with fail_count == m_max is evicted after one more failure
    s = unprofitable_provider_scenario(k_providers=5)
    primed = replace(s, consumers=(replace(s.consumers[0], fail_count=3),))
    plan = run_protocol(primed, MAX_WEIGHT)
    assert plan.rounds_used == 1
    assert len(plan.station_fallbacks) == 1


def test_csv_rows_cover_every_consumer_in_id_order():
    s = generate_scenario(ScenarioConfig(n_consumers=6, k_providers=4), seed=3)
    plan = run_protocol(s, MAX_WEIGHT)
    rows = plan.to_csv_rows()
    assert [int(r[0]) for r in rows] == [1, 2, 3, 4, 5, 6]
    for row in rows:
        assert row[1] in ("trade", "station")

"""Deterministic matching engine and simulation harness for cooperative
EV-to-EV charging markets."""

from .errors import (
    CapacityError,
    ConfigurationError,
    FeasibilityError,
    InvariantViolation,
)
from .graph import MarketGraph, Matching, build_market_graph, matching_weight, matrix_text
from .matching import (
    PreferenceLists,
    StabilityResult,
    brute_force_max_weight,
    build_preferences,
    consumer_oriented_matching,
    enumerate_stable_matchings,
    is_stable,
    km_solve,
    max_weight_matching,
    provider_oriented_matching,
)
from .metrics import (
    RunReport,
    SweepSpec,
    baseline_energy,
    baseline_welfare,
    build_run_report,
    energy_consumption,
    run_sweep,
    social_welfare,
    timed_run,
    transfer_loss,
    trial_seed,
)
from .money import MONEY_SCALE, Money, format_cents, money_from_cents, money_to_cents
from .protocol import (
    ALGORITHMS,
    CONSUMER_ORIENTED,
    MAX_WEIGHT,
    PROVIDER_ORIENTED,
    StationFallback,
    Trade,
    TradePlan,
    run_protocol,
    run_protocol_timed,
)
from .scenario import (
    ConsumerEV,
    Facility,
    PriceSchedule,
    ProviderEV,
    Range,
    Scenario,
    ScenarioConfig,
    advance_motion,
    distance,
    generate_scenario,
    scenario_from_json,
    scenario_to_json,
)
from .utility import (
    TradeEvaluation,
    consumer_station_utility,
    consumer_trade_utility,
    evaluate_all_pairs,
    evaluate_pair,
    provider_trade_utility,
    select_parking_lot,
    station_sum_utility,
    station_utilities,
)

"""Evaluation metrics and the Monte-Carlo sweep harness.

Social welfare sums the utilities of everyone involved; the baseline adds
charging-station revenue so the traditional protocol is compared fairly.
Energy accounting counts driving energy only; the V2V transfer loss is
reported separately and never folded into the reduction metric.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .errors import ConfigurationError
from .money import Money, money_to_cents
from .protocol import ALGORITHMS, TradePlan, run_protocol_timed
from .scenario import Scenario, ScenarioConfig, distance, generate_scenario
from .utility import evaluate_all_pairs, station_sum_utility, station_utilities


def social_welfare(plan: TradePlan, scenario: Scenario) -> Money:
    """Sum utility of all involved EVs under the plan."""
    _check_plan_ids(plan, scenario)
    total = sum(t.u_consumer + t.u_provider for t in plan.trades)
    total += sum(f.u_consumer for f in plan.station_fallbacks)
    return total


def baseline_welfare(scenario: Scenario) -> Money:
    """Traditional-protocol welfare: consumers at their nearest stations plus
    station revenue."""
    consumer_part = sum(u for u, _ in station_utilities(scenario).values())
    return consumer_part + station_sum_utility(scenario.consumers, scenario.prices)


def energy_consumption(plan: TradePlan, scenario: Scenario) -> float:
    """Driving energy (kWh) spent executing the plan."""
    _check_plan_ids(plan, scenario)
    consumers = {c.id: c for c in scenario.consumers}
    providers = {p.id: p for p in scenario.providers}
    lots = {lot.id: lot for lot in scenario.lots}
    stations = {s.id: s for s in scenario.stations}
    total = 0.0
    for t in plan.trades:
        c, p, lot = consumers[t.consumer_id], providers[t.provider_id], lots[t.lot_id]
        total += c.beta_c * distance(c.position, lot.position, scenario.metric)
        total += p.beta_p * distance(p.position, lot.position, scenario.metric)
    for f in plan.station_fallbacks:
        c, s = consumers[f.consumer_id], stations[f.station_id]
        total += c.beta_c * distance(c.position, s.position, scenario.metric)
    return total


def baseline_energy(scenario: Scenario) -> float:
    """Driving energy if every consumer charged at its nearest station."""
    total = 0.0
    for c in scenario.consumers:
        best = min(
            scenario.stations,
            key=lambda s: (distance(c.position, s.position, scenario.metric), s.id),
        )
        total += c.beta_c * distance(c.position, best.position, scenario.metric)
    return total


def transfer_loss(plan: TradePlan, scenario: Scenario) -> float:
    """Energy lost to V2V transfer inefficiency, (1 - eta) per traded kWh."""
    return sum((1.0 - scenario.prices.eta) * t.energy_kwh for t in plan.trades)


def timed_run(scenario: Scenario, algorithm: str) -> tuple[TradePlan, float]:
    """Run the protocol, returning the plan and the monotonic wall time spent
    inside the matching algorithm only."""
    return run_protocol_timed(scenario, algorithm)


def _check_plan_ids(plan: TradePlan, scenario: Scenario) -> None:
    consumer_ids = {c.id for c in scenario.consumers}
    provider_ids = {p.id for p in scenario.providers}
    for t in plan.trades:
        if t.consumer_id not in consumer_ids or t.provider_id not in provider_ids:
            raise ValueError(f"plan references unknown EVs ({t.consumer_id}, {t.provider_id})")
    for f in plan.station_fallbacks:
        if f.consumer_id not in consumer_ids:
            raise ValueError(f"plan references unknown consumer {f.consumer_id}")


# --- per-scenario report ---------------------------------------------------------

@dataclass(frozen=True)
class RunReport:
    """All evaluation quantities for one scenario, keyed by algorithm."""

    per_consumer_utilities: dict[str, dict[int, Money]]
    per_provider_utilities: dict[str, dict[int, Money]]
    social_welfare_v2v: dict[str, Money]
    social_welfare_baseline: Money
    energy_cost_v2v: dict[str, float]
    energy_cost_baseline: float
    energy_reduction: dict[str, float]
    transfer_loss_kwh: dict[str, float]
    wall_time: dict[str, float]
    plans: dict[str, TradePlan]

    def to_json_dict(self) -> dict:
        return {
            "per_consumer_utilities_cents": {
                alg: {str(i): money_to_cents(u) for i, u in table.items()}
                for alg, table in self.per_consumer_utilities.items()
            },
            "per_provider_utilities_cents": {
                alg: {str(j): money_to_cents(u) for j, u in table.items()}
                for alg, table in self.per_provider_utilities.items()
            },
            "social_welfare_v2v_cents": {
                alg: money_to_cents(w) for alg, w in self.social_welfare_v2v.items()
            },
            "social_welfare_baseline_cents": money_to_cents(self.social_welfare_baseline),
            "energy_cost_v2v_kwh": dict(self.energy_cost_v2v),
            "energy_cost_baseline_kwh": self.energy_cost_baseline,
            "energy_reduction_kwh": dict(self.energy_reduction),
            "transfer_loss_kwh": dict(self.transfer_loss_kwh),
            "wall_time_s": dict(self.wall_time),
        }


def build_run_report(
    scenario: Scenario,
    algorithms: tuple[str, ...] = ALGORITHMS,
    timed: bool = False,
) -> RunReport:
    evals = evaluate_all_pairs(scenario)
    baselines = station_utilities(scenario)
    base_energy = baseline_energy(scenario)

    per_c: dict[str, dict[int, Money]] = {}
    per_p: dict[str, dict[int, Money]] = {}
    welfare: dict[str, Money] = {}
    energy: dict[str, float] = {}
    reduction: dict[str, float] = {}
    loss: dict[str, float] = {}
    wall: dict[str, float] = {}
    plans: dict[str, TradePlan] = {}

    for alg in algorithms:
        plan, seconds = run_protocol_timed(scenario, alg, evals)
        plans[alg] = plan
        consumer_u = {t.consumer_id: t.u_consumer for t in plan.trades}
        consumer_u.update({f.consumer_id: f.u_consumer for f in plan.station_fallbacks})
        provider_u = {t.provider_id: t.u_provider for t in plan.trades}
        provider_u.update({pid: 0 for pid in plan.idle_providers})
        per_c[alg] = dict(sorted(consumer_u.items()))
        per_p[alg] = dict(sorted(provider_u.items()))
        welfare[alg] = social_welfare(plan, scenario)
        energy[alg] = energy_consumption(plan, scenario)
        reduction[alg] = base_energy - energy[alg]
        loss[alg] = transfer_loss(plan, scenario)
        wall[alg] = seconds if timed else 0.0

    return RunReport(
        per_consumer_utilities=per_c,
        per_provider_utilities=per_p,
        social_welfare_v2v=welfare,
        social_welfare_baseline=baseline_welfare(scenario),
        energy_cost_v2v=energy,
        energy_cost_baseline=base_energy,
        energy_reduction=reduction,
        transfer_loss_kwh=loss,
        wall_time=wall,
        plans=plans,
    )


# --- sweeps ----------------------------------------------------------------------

SWEEP_COLUMNS = (
    "trial", "N", "K", "algorithm", "social_welfare_c", "baseline_welfare_c",
    "energy_v2v_kwh", "energy_baseline_kwh", "energy_reduction_kwh",
    "matched_count", "fallback_count", "wall_time_s",
)


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional market-size sweep: fix one side, vary the other."""

    fixed_side: str  # "N" or "K"
    fixed_value: int
    varied_values: tuple[int, ...]
    trials: int
    master_seed: int
    algorithms: tuple[str, ...] = ALGORITHMS
    config: ScenarioConfig = field(default_factory=ScenarioConfig)
    timed: bool = False

    def __post_init__(self) -> None:
        if self.fixed_side not in ("N", "K"):
            raise ConfigurationError(f"fixed_side must be 'N' or 'K', got {self.fixed_side!r}")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if not self.varied_values:
            raise ConfigurationError("varied_values must be non-empty")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ConfigurationError(f"unknown algorithms {bad}; expected subset of {ALGORITHMS}")

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SweepSpec":
        try:
            config = (
                ScenarioConfig.from_json_dict(doc["config"])
                if "config" in doc
                else ScenarioConfig()
            )
            return cls(
                fixed_side=str(doc["fixed_side"]),
                fixed_value=int(doc["fixed_value"]),
                varied_values=tuple(int(v) for v in doc["varied_values"]),
                trials=int(doc["trials"]),
                master_seed=int(doc["master_seed"]),
                algorithms=tuple(doc.get("algorithms", ALGORITHMS)),
                config=config,
                timed=bool(doc.get("timed", False)),
            )
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigurationError(f"bad sweep spec: {exc}") from exc

    def scenario_config(self, varied_value: int) -> ScenarioConfig:
        if self.fixed_side == "N":
            return replace(self.config, n_consumers=self.fixed_value,
                           k_providers=varied_value)
        return replace(self.config, n_consumers=varied_value,
                       k_providers=self.fixed_value)


def trial_seed(master_seed: int, varied_value: int, trial: int) -> int:
    """Stable per-trial seed independent of worker scheduling."""
    digest = hashlib.sha256(f"{master_seed}:{varied_value}:{trial}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _sweep_task(args: tuple[SweepSpec, int, int]) -> list[dict]:
    spec, value, trial = args
    config = spec.scenario_config(value)
    scenario = generate_scenario(config, trial_seed(spec.master_seed, value, trial))
    evals = evaluate_all_pairs(scenario)
    base_welfare = baseline_welfare(scenario)
    base_energy = baseline_energy(scenario)
    rows = []
    for alg in spec.algorithms:
        plan, seconds = run_protocol_timed(scenario, alg, evals)
        v2v_energy = energy_consumption(plan, scenario)
        rows.append({
            "trial": trial,
            "N": config.n_consumers,
            "K": config.k_providers,
            "algorithm": alg,
            "social_welfare_c": social_welfare(plan, scenario),
            "baseline_welfare_c": base_welfare,
            "energy_v2v_kwh": v2v_energy,
            "energy_baseline_kwh": base_energy,
            "energy_reduction_kwh": base_energy - v2v_energy,
            "matched_count": len(plan.trades),
            "fallback_count": len(plan.station_fallbacks),
            "wall_time_s": seconds if spec.timed else 0.0,
        })
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[dict]:
    """Run the sweep; row order and content are independent of `workers`.

    Welfare columns are integer money; the CSV writer renders them in cents.
    """
    tasks = [(spec, value, trial) for value in spec.varied_values
             for trial in range(spec.trials)]
    if workers <= 1:
        results = [_sweep_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_task, tasks, chunksize=8))
    return [row for rows in results for row in rows]

"""Trading utilities for consumers and providers, lot choice, pair evaluation.

The public operations return integer money (see `money`); the float helpers
hold the underlying cost model in one place so that batch evaluation and
single-pair evaluation follow bit-identical arithmetic.

Pricing follows the market model as written: the consumer's travel energy is
priced at the trading price p_t while a station detour is priced at the grid
selling price p_s, even though both burn the same physical kWh.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError, FeasibilityError
from .money import Money, money_from_cents, money_to_cents
from .scenario import (
    PARKING_LOT,
    ConsumerEV,
    Facility,
    PriceSchedule,
    ProviderEV,
    Scenario,
    distance,
)


@dataclass(frozen=True)
class TradeEvaluation:
    """Outcome of evaluating one consumer/provider pairing.

    For infeasible pairs (surplus below request) the utilities are zero,
    no lot is chosen, and the edge weight is the scenario's virtual-edge
    penalty so the pair can never win a max-weight matching.
    """

    consumer_id: int
    provider_id: int
    lot_id: int | None
    u_consumer: Money
    u_provider: Money
    edge_weight: Money
    feasible: bool

    def to_json_dict(self) -> dict:
        return {
            "consumer_id": self.consumer_id,
            "provider_id": self.provider_id,
            "lot_id": self.lot_id,
            "u_consumer_cents": money_to_cents(self.u_consumer),
            "u_provider_cents": money_to_cents(self.u_provider),
            "edge_weight_cents": money_to_cents(self.edge_weight),
            "feasible": self.feasible,
        }


# --- float cost model (cents) -------------------------------------------------

def _consumer_trade_cents(c: ConsumerEV, lot_distance: float, prices: PriceSchedule) -> float:
    return -prices.p_t * c.a_c - prices.p_t * c.beta_c * lot_distance


def _consumer_station_cents(c: ConsumerEV, station_distance: float, prices: PriceSchedule) -> float:
    return -prices.p_s * c.a_c - prices.p_s * c.beta_c * station_distance


def _provider_trade_cents(p: ProviderEV, a_c: float, lot_distance: float,
                          prices: PriceSchedule) -> float:
    revenue = prices.p_t * a_c
    supply_cost = prices.p_0 * a_c / prices.eta
    travel_cost = prices.p_t * p.beta_p * lot_distance
    time_cost = p.theta_p * (lot_distance / p.velocity + prices.tau * a_c / prices.eta)
    degradation = p.phi * p.d * a_c
    return revenue - supply_cost - travel_cost - time_cost - degradation


def _lot_cost_cents(c: ConsumerEV, p: ProviderEV, d_c: float, d_p: float,
                    prices: PriceSchedule) -> float:
    # The only lot-dependent part of the pair's summed utility, negated:
    # both travel costs plus the provider's travel-time cost.
    return (prices.p_t * c.beta_c * d_c
            + prices.p_t * p.beta_p * d_p
            + p.theta_p * d_p / p.velocity)


def _require_lot(lot: Facility) -> None:
    if lot.kind != PARKING_LOT:
        raise ValueError(f"facility {lot.id} is not a parking lot")


# --- public operations ---------------------------------------------------------

def consumer_trade_utility(c: ConsumerEV, p: ProviderEV, lot: Facility,
                           prices: PriceSchedule, metric: str = "euclidean") -> Money:
    """Consumer's utility for trading with `p` at `lot`: energy bill plus detour.

    The provider enters only through the lot chosen for the pair.
    """
    _require_lot(lot)
    d = distance(c.position, lot.position, metric)
    return money_from_cents(_consumer_trade_cents(c, d, prices))


def consumer_station_utility(c: ConsumerEV, stations: tuple[Facility, ...],
                             prices: PriceSchedule,
                             metric: str = "euclidean") -> tuple[Money, int]:
    """Baseline utility of charging at the nearest station; ties break to the
    lowest station id."""
    if not stations:
        raise ConfigurationError("no charging stations configured")
    best = min(stations, key=lambda s: (distance(c.position, s.position, metric), s.id))
    d = distance(c.position, best.position, metric)
    return money_from_cents(_consumer_station_cents(c, d, prices)), best.id


def provider_trade_utility(p: ProviderEV, c: ConsumerEV, lot: Facility,
                           prices: PriceSchedule, metric: str = "euclidean") -> Money:
    """Provider's profit: trade revenue net of supply, travel, time, and
    battery degradation costs."""
    if p.a_p < c.a_c:
        raise FeasibilityError(
            f"provider {p.id} surplus {p.a_p} kWh below consumer {c.id} request {c.a_c} kWh"
        )
    _require_lot(lot)
    d = distance(p.position, lot.position, metric)
    return money_from_cents(_provider_trade_cents(p, c.a_c, d, prices))


def select_parking_lot(c: ConsumerEV, p: ProviderEV, lots: tuple[Facility, ...],
                       prices: PriceSchedule, metric: str = "euclidean") -> Facility:
    """Pick the lot maximizing the pair's summed utility.

    Equivalent to minimizing the lot-dependent travel and time costs; ties
    break to the lowest lot id.
    """
    if not lots:
        raise ConfigurationError("no parking lots configured")
    d_c = [distance(c.position, lot.position, metric) for lot in lots]
    d_p = [distance(p.position, lot.position, metric) for lot in lots]
    return lots[_select_lot_index(c, p, d_c, d_p, prices)]


def _select_lot_index(c: ConsumerEV, p: ProviderEV, d_c: list[float], d_p: list[float],
                      prices: PriceSchedule) -> int:
    best_idx = 0
    best_cost = _lot_cost_cents(c, p, d_c[0], d_p[0], prices)
    for idx in range(1, len(d_c)):
        cost = _lot_cost_cents(c, p, d_c[idx], d_p[idx], prices)
        if cost < best_cost:
            best_idx, best_cost = idx, cost
    return best_idx


def _evaluate_with_distances(c: ConsumerEV, p: ProviderEV, lots: tuple[Facility, ...],
                             d_c: list[float], d_p: list[float],
                             prices: PriceSchedule, ne: Money) -> TradeEvaluation:
    if p.a_p < c.a_c:
        return TradeEvaluation(
            consumer_id=c.id, provider_id=p.id, lot_id=None,
            u_consumer=0, u_provider=0, edge_weight=ne, feasible=False,
        )
    idx = _select_lot_index(c, p, d_c, d_p, prices)
    u_c = money_from_cents(_consumer_trade_cents(c, d_c[idx], prices))
    u_p = money_from_cents(_provider_trade_cents(p, c.a_c, d_p[idx], prices))
    return TradeEvaluation(
        consumer_id=c.id, provider_id=p.id, lot_id=lots[idx].id,
        u_consumer=u_c, u_provider=u_p, edge_weight=u_c + u_p, feasible=True,
    )


def evaluate_pair(c: ConsumerEV, p: ProviderEV, scenario: Scenario) -> TradeEvaluation:
    """Full evaluation of one pairing; infeasibility is encoded, not raised."""
    if not scenario.lots:
        raise ConfigurationError("no parking lots configured")
    d_c = [distance(c.position, lot.position, scenario.metric) for lot in scenario.lots]
    d_p = [distance(p.position, lot.position, scenario.metric) for lot in scenario.lots]
    return _evaluate_with_distances(c, p, scenario.lots, d_c, d_p,
                                    scenario.prices, scenario.ne)


def evaluate_all_pairs(scenario: Scenario) -> dict[tuple[int, int], TradeEvaluation]:
    """Evaluate every consumer/provider pair, keyed by (consumer_id, provider_id).

    Distances to lots are computed once per EV; results are identical to
    calling `evaluate_pair` cell by cell.
    """
    if scenario.consumers and scenario.providers and not scenario.lots:
        raise ConfigurationError("no parking lots configured")
    lots = scenario.lots
    metric = scenario.metric
    d_c_all = {
        c.id: [distance(c.position, lot.position, metric) for lot in lots]
        for c in scenario.consumers
    }
    d_p_all = {
        p.id: [distance(p.position, lot.position, metric) for lot in lots]
        for p in scenario.providers
    }
    out: dict[tuple[int, int], TradeEvaluation] = {}
    for c in scenario.consumers:
        d_c = d_c_all[c.id]
        for p in scenario.providers:
            out[(c.id, p.id)] = _evaluate_with_distances(
                c, p, lots, d_c, d_p_all[p.id], scenario.prices, scenario.ne
            )
    return out


def station_utilities(scenario: Scenario) -> dict[int, tuple[Money, int]]:
    """Nearest-station baseline utility and station id for every consumer."""
    return {
        c.id: consumer_station_utility(c, scenario.stations, scenario.prices, scenario.metric)
        for c in scenario.consumers
    }


def station_sum_utility(consumers: tuple[ConsumerEV, ...], prices: PriceSchedule) -> Money:
    """Charging-station revenue if every consumer charged from the grid."""
    return sum(money_from_cents(prices.p_s * c.a_c) for c in consumers)

"""World model: EVs, facilities, price schedule, and seeded scenario generation.

A Scenario is an immutable snapshot of the market at the start of one trading
period.  Matching operates on that snapshot; `advance_motion` produces a new
snapshot for multi-period studies.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace

from .errors import ConfigurationError
from .money import Money, money_from_cents, money_to_cents

Position = tuple[float, float]

CHARGING_STATION = "charging_station"
PARKING_LOT = "parking_lot"

DISTANCE_METRICS = ("euclidean", "manhattan")


def distance(a: Position, b: Position, metric: str = "euclidean") -> float:
    """Driving distance in km between two points.

    The road network is not modeled; "euclidean" is the default and
    "manhattan" is available for grid-city studies.
    """
    if metric == "euclidean":
        return math.hypot(a[0] - b[0], a[1] - b[1])
    if metric == "manhattan":
        return abs(a[0] - b[0]) + abs(a[1] - b[1])
    raise ConfigurationError(f"unknown distance metric: {metric!r}")


@dataclass(frozen=True)
class PriceSchedule:
    """Market prices (cents/kWh), transfer efficiency, and transfer speed.

    p_t: trading price between EVs; p_s: grid selling price at stations;
    p_b: grid buying price; p_0: provider's original cost per unit energy;
    eta: V2V transfer efficiency in (0, 1]; tau: transfer hours per kWh.
    """

    p_t: float = 15.0
    p_s: float = 18.0
    p_b: float = 10.0
    p_0: float = 8.0
    eta: float = 0.95
    tau: float = 0.01

    def __post_init__(self) -> None:
        if not (self.p_b < self.p_t < self.p_s):
            raise ConfigurationError(
                f"prices must satisfy p_b < p_t < p_s, got "
                f"p_b={self.p_b}, p_t={self.p_t}, p_s={self.p_s}"
            )
        if min(self.p_t, self.p_s, self.p_b, self.p_0) < 0:
            raise ConfigurationError("prices must be nonnegative")
        if not (0.0 < self.eta <= 1.0):
            raise ConfigurationError(f"eta must be in (0, 1], got {self.eta}")
        if self.tau < 0:
            raise ConfigurationError(f"tau must be nonnegative, got {self.tau}")


@dataclass(frozen=True)
class ConsumerEV:
    """An EV requesting `a_c` kWh, driving at `beta_c` kWh/km."""

    id: int
    position: Position
    velocity: float
    heading: Position
    a_c: float
    beta_c: float
    fail_count: int = 0


@dataclass(frozen=True)
class ProviderEV:
    """An EV offering `a_p` kWh of surplus energy.

    theta_p values the provider's time (cents/hour); phi * d is the battery
    degradation cost per traded kWh (cents/kWh).
    """

    id: int
    position: Position
    velocity: float
    heading: Position
    a_p: float
    beta_p: float
    theta_p: float
    phi: float
    d: float


@dataclass(frozen=True)
class Facility:
    id: int
    kind: str
    position: Position


@dataclass(frozen=True)
class Scenario:
    """Immutable world snapshot for one trading period."""

    consumers: tuple[ConsumerEV, ...]
    providers: tuple[ProviderEV, ...]
    stations: tuple[Facility, ...]
    lots: tuple[Facility, ...]
    prices: PriceSchedule
    bounds: tuple[float, float]
    seed: int
    m_max: int = 3
    ne: Money = money_from_cents(-1e9)
    metric: str = "euclidean"

    def __post_init__(self) -> None:
        for name, evs in (("consumer", self.consumers), ("provider", self.providers)):
            ids = [ev.id for ev in evs]
            if len(ids) != len(set(ids)):
                raise ConfigurationError(f"duplicate {name} ids")
        if self.m_max < 1:
            raise ConfigurationError(f"m_max must be positive, got {self.m_max}")
        if self.metric not in DISTANCE_METRICS:
            raise ConfigurationError(f"unknown distance metric: {self.metric!r}")


@dataclass(frozen=True)
class Range:
    """Closed interval for a uniform draw."""

    low: float
    high: float

    def __post_init__(self) -> None:
        if self.low > self.high:
            raise ConfigurationError(f"invalid range: low {self.low} > high {self.high}")

    def draw(self, rng: random.Random) -> float:
        return rng.uniform(self.low, self.high)


@dataclass(frozen=True)
class ScenarioConfig:
    """Generation parameters; defaults reproduce the desk-scale urban setup.

    phi_d is the combined battery degradation cost per traded kWh; only the
    product of replacement cost and degradation coefficient is identified, so
    the config supplies it directly.
    """

    n_consumers: int = 10
    k_providers: int = 10
    area_km: tuple[float, float] = (20.0, 20.0)
    prices: PriceSchedule = field(default_factory=PriceSchedule)
    velocity: Range = field(default_factory=lambda: Range(20.0, 60.0))
    beta: Range = field(default_factory=lambda: Range(0.2, 0.5))
    a_c: Range = field(default_factory=lambda: Range(20.0, 40.0))
    a_p: Range = field(default_factory=lambda: Range(20.0, 60.0))
    theta: Range = field(default_factory=lambda: Range(30.0, 90.0))
    phi_d: float = 0.5
    m_max: int = 3
    ne_cents: float = -1e9
    distance_metric: str = "euclidean"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_consumers < 0 or self.k_providers < 0:
            raise ConfigurationError("participant counts must be nonnegative")
        if self.area_km[0] <= 0 or self.area_km[1] <= 0:
            raise ConfigurationError(f"area must be positive, got {self.area_km}")

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ScenarioConfig":
        try:
            kwargs: dict = {}
            if "n_consumers" in doc:
                kwargs["n_consumers"] = int(doc["n_consumers"])
            if "k_providers" in doc:
                kwargs["k_providers"] = int(doc["k_providers"])
            if "area_km" in doc:
                w, h = doc["area_km"]
                kwargs["area_km"] = (float(w), float(h))
            if "price" in doc:
                kwargs["prices"] = PriceSchedule(**{k: float(v) for k, v in doc["price"].items()})
            for key in ("velocity", "beta", "a_c", "a_p", "theta"):
                if key in doc.get("ranges", {}):
                    low, high = doc["ranges"][key]
                    kwargs[key] = Range(float(low), float(high))
            for key in ("phi_d", "ne_cents"):
                if key in doc:
                    kwargs[key] = float(doc[key])
            for key in ("m_max", "seed"):
                if key in doc:
                    kwargs[key] = int(doc[key])
            if "distance_metric" in doc:
                kwargs["distance_metric"] = str(doc["distance_metric"])
            return cls(**kwargs)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigurationError(f"bad scenario config: {exc}") from exc

    def to_json_dict(self) -> dict:
        return {
            "n_consumers": self.n_consumers,
            "k_providers": self.k_providers,
            "area_km": list(self.area_km),
            "price": {
                "p_t": self.prices.p_t,
                "p_s": self.prices.p_s,
                "p_b": self.prices.p_b,
                "p_0": self.prices.p_0,
                "eta": self.prices.eta,
                "tau": self.prices.tau,
            },
            "ranges": {
                "velocity": [self.velocity.low, self.velocity.high],
                "beta": [self.beta.low, self.beta.high],
                "a_c": [self.a_c.low, self.a_c.high],
                "a_p": [self.a_p.low, self.a_p.high],
                "theta": [self.theta.low, self.theta.high],
            },
            "phi_d": self.phi_d,
            "m_max": self.m_max,
            "ne_cents": self.ne_cents,
            "distance_metric": self.distance_metric,
            "seed": self.seed,
        }


def _station_positions(bounds: tuple[float, float]) -> list[Position]:
    # Two stations on the vertical midline at quarter heights; for the
    # default 20x20 km area this puts them at (10, 5) and (10, 15).
    w, h = bounds
    return [(w / 2.0, h / 4.0), (w / 2.0, 3.0 * h / 4.0)]


def _lot_positions(bounds: tuple[float, float]) -> list[Position]:
    # 5x5 grid of cell centers tiling the area uniformly.
    w, h = bounds
    positions = []
    for row in range(5):
        for col in range(5):
            positions.append(((col + 0.5) * w / 5.0, (row + 0.5) * h / 5.0))
    return positions


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Draw a random scenario; identical (config, seed) gives identical output.

    Positions are uniform over the area, headings uniform on the circle, and
    velocity/beta/a_c/a_p/theta are uniform over their configured ranges.
    The draw order is fixed (consumers first, field by field) so scenarios
    are reproducible byte for byte once serialized.
    """
    rng = random.Random(seed)
    w, h = config.area_km

    consumers = []
    for i in range(1, config.n_consumers + 1):
        pos = (rng.uniform(0.0, w), rng.uniform(0.0, h))
        angle = rng.uniform(0.0, 2.0 * math.pi)
        consumers.append(
            ConsumerEV(
                id=i,
                position=pos,
                velocity=config.velocity.draw(rng),
                heading=(math.cos(angle), math.sin(angle)),
                a_c=config.a_c.draw(rng),
                beta_c=config.beta.draw(rng),
            )
        )

    providers = []
    for j in range(1, config.k_providers + 1):
        pos = (rng.uniform(0.0, w), rng.uniform(0.0, h))
        angle = rng.uniform(0.0, 2.0 * math.pi)
        providers.append(
            ProviderEV(
                id=j,
                position=pos,
                velocity=config.velocity.draw(rng),
                heading=(math.cos(angle), math.sin(angle)),
                a_p=config.a_p.draw(rng),
                beta_p=config.beta.draw(rng),
                theta_p=config.theta.draw(rng),
                phi=config.phi_d,
                d=1.0,
            )
        )

    stations = tuple(
        Facility(id=k + 1, kind=CHARGING_STATION, position=p)
        for k, p in enumerate(_station_positions(config.area_km))
    )
    lots = tuple(
        Facility(id=k + 1, kind=PARKING_LOT, position=p)
        for k, p in enumerate(_lot_positions(config.area_km))
    )

    return Scenario(
        consumers=tuple(consumers),
        providers=tuple(providers),
        stations=stations,
        lots=lots,
        prices=config.prices,
        bounds=config.area_km,
        seed=seed,
        m_max=config.m_max,
        ne=money_from_cents(config.ne_cents),
        metric=config.distance_metric,
    )


def _clamp(value: float, low: float, high: float) -> float:
    return low if value < low else high if value > high else value


def advance_motion(scenario: Scenario, dt: float) -> Scenario:
    """Translate every EV along its heading for `dt` hours, clamped to bounds."""
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    w, h = scenario.bounds

    def moved(ev):
        x = _clamp(ev.position[0] + ev.velocity * dt * ev.heading[0], 0.0, w)
        y = _clamp(ev.position[1] + ev.velocity * dt * ev.heading[1], 0.0, h)
        return replace(ev, position=(x, y))

    return replace(
        scenario,
        consumers=tuple(moved(c) for c in scenario.consumers),
        providers=tuple(moved(p) for p in scenario.providers),
    )


# --- JSON round-trip ---------------------------------------------------------

def scenario_to_json_dict(s: Scenario) -> dict:
    return {
        "consumers": [
            {
                "id": c.id,
                "position": list(c.position),
                "velocity": c.velocity,
                "heading": list(c.heading),
                "a_c": c.a_c,
                "beta_c": c.beta_c,
                "fail_count": c.fail_count,
            }
            for c in s.consumers
        ],
        "providers": [
            {
                "id": p.id,
                "position": list(p.position),
                "velocity": p.velocity,
                "heading": list(p.heading),
                "a_p": p.a_p,
                "beta_p": p.beta_p,
                "theta_p": p.theta_p,
                "phi": p.phi,
                "d": p.d,
            }
            for p in s.providers
        ],
        "stations": [{"id": f.id, "position": list(f.position)} for f in s.stations],
        "lots": [{"id": f.id, "position": list(f.position)} for f in s.lots],
        "prices": {
            "p_t": s.prices.p_t,
            "p_s": s.prices.p_s,
            "p_b": s.prices.p_b,
            "p_0": s.prices.p_0,
            "eta": s.prices.eta,
            "tau": s.prices.tau,
        },
        "bounds": list(s.bounds),
        "seed": s.seed,
        "m_max": s.m_max,
        "ne_cents": money_to_cents(s.ne),
        "distance_metric": s.metric,
    }


def scenario_from_json_dict(doc: dict) -> Scenario:
    try:
        consumers = tuple(
            ConsumerEV(
                id=int(c["id"]),
                position=(float(c["position"][0]), float(c["position"][1])),
                velocity=float(c["velocity"]),
                heading=(float(c["heading"][0]), float(c["heading"][1])),
                a_c=float(c["a_c"]),
                beta_c=float(c["beta_c"]),
                fail_count=int(c.get("fail_count", 0)),
            )
            for c in doc["consumers"]
        )
        providers = tuple(
            ProviderEV(
                id=int(p["id"]),
                position=(float(p["position"][0]), float(p["position"][1])),
                velocity=float(p["velocity"]),
                heading=(float(p["heading"][0]), float(p["heading"][1])),
                a_p=float(p["a_p"]),
                beta_p=float(p["beta_p"]),
                theta_p=float(p["theta_p"]),
                phi=float(p["phi"]),
                d=float(p["d"]),
            )
            for p in doc["providers"]
        )
        stations = tuple(
            Facility(id=int(f["id"]), kind=CHARGING_STATION,
                     position=(float(f["position"][0]), float(f["position"][1])))
            for f in doc["stations"]
        )
        lots = tuple(
            Facility(id=int(f["id"]), kind=PARKING_LOT,
                     position=(float(f["position"][0]), float(f["position"][1])))
            for f in doc["lots"]
        )
        return Scenario(
            consumers=consumers,
            providers=providers,
            stations=stations,
            lots=lots,
            prices=PriceSchedule(**{k: float(v) for k, v in doc["prices"].items()}),
            bounds=(float(doc["bounds"][0]), float(doc["bounds"][1])),
            seed=int(doc["seed"]),
            m_max=int(doc["m_max"]),
            ne=money_from_cents(float(doc["ne_cents"])),
            metric=str(doc["distance_metric"]),
        )
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        raise ConfigurationError(f"bad scenario document: {exc}") from exc


def scenario_to_json(s: Scenario) -> str:
    return json.dumps(scenario_to_json_dict(s), sort_keys=True, indent=2) + "\n"


def scenario_from_json(text: str) -> Scenario:
    return scenario_from_json_dict(json.loads(text))

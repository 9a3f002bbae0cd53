"""Shared builders for hand-crafted market instances."""

from __future__ import annotations

import random

from v2vmarket import (
    ConsumerEV,
    Facility,
    PreferenceLists,
    PriceSchedule,
    ProviderEV,
    Scenario,
)
from v2vmarket.scenario import CHARGING_STATION, PARKING_LOT

TABLE1_PRICES = PriceSchedule(p_t=15.0, p_s=18.0, p_b=10.0, p_0=8.0, eta=0.95, tau=0.01)

PAPER_STATIONS = (
    Facility(id=1, kind=CHARGING_STATION, position=(10.0, 5.0)),
    Facility(id=2, kind=CHARGING_STATION, position=(10.0, 15.0)),
)


def consumer(cid: int, pos, a_c: float, beta_c: float, velocity: float = 40.0,
             heading=(1.0, 0.0)) -> ConsumerEV:
    return ConsumerEV(id=cid, position=pos, velocity=velocity, heading=heading,
                      a_c=a_c, beta_c=beta_c)


def provider(pid: int, pos, a_p: float, beta_p: float, theta_p: float = 60.0,
             velocity: float = 30.0, phi: float = 0.5, d: float = 1.0,
             heading=(1.0, 0.0)) -> ProviderEV:
    return ProviderEV(id=pid, position=pos, velocity=velocity, heading=heading,
                      a_p=a_p, beta_p=beta_p, theta_p=theta_p, phi=phi, d=d)


def lot(lid: int, pos) -> Facility:
    return Facility(id=lid, kind=PARKING_LOT, position=pos)


def make_scenario(consumers=(), providers=(), lots=(), stations=PAPER_STATIONS,
                  prices=TABLE1_PRICES, bounds=(20.0, 20.0), m_max=3,
                  metric="euclidean", seed=0) -> Scenario:
    return Scenario(
        consumers=tuple(consumers),
        providers=tuple(providers),
        stations=tuple(stations),
        lots=tuple(lots),
        prices=prices,
        bounds=bounds,
        seed=seed,
        m_max=m_max,
        metric=metric,
    )


def random_preferences(rng: random.Random, n_c: int, n_p: int,
                       density: float = 0.8) -> PreferenceLists:
    consumers = {}
    for i in range(1, n_c + 1):
        options = [j for j in range(1, n_p + 1) if rng.random() < density]
        rng.shuffle(options)
        consumers[i] = tuple(options)
    providers = {}
    for j in range(1, n_p + 1):
        options = [i for i in range(1, n_c + 1) if rng.random() < density]
        rng.shuffle(options)
        providers[j] = tuple(options)
    return PreferenceLists(consumers=consumers, providers=providers)

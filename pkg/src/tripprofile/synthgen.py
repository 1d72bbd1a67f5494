"""Synthetic trip/policy portfolios with controllable routine, peculiarity
and claim-generating structure.

Routine vehicles draw trips from a few tight per-vehicle clusters over
time-of-day, time-of-week, distance and duration; non-routine ones draw from
diffuse mixtures. A peculiar vehicle's attribute draws are shifted away from
the population mixture, and its latent peculiarity feeds the claim logit.
Marginals are kept plausible for a portfolio where long and night trips are
rare and the speed limit is 110 km/h.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .trip_store import PolicyRecord, TripRecord, parse_timestamp

SECONDS_PER_DAY = 86_400
SECONDS_PER_WEEK = 7 * SECONDS_PER_DAY

_COMMUTE_MISSING_RATE = 0.215

# observation year start (a Monday), naive local time
_PERIOD_START = parse_timestamp("2017-01-02 00:00:00")

_GENDERS = ["F", "M"]
_MARITAL = ["single", "married", "widowed", "divorced"]
_PMT_PLANS = ["annual", "monthly", "biannual"]
_VEH_USES = ["commute", "pleasure", "business", "farm"]


@dataclass(frozen=True)
class SynthConfig:
    num_vehicles: int = 500
    trips_per_vehicle_range: tuple[int, int] = (50, 200)
    fraction_routine: float = 0.5
    fraction_peculiar: float = 0.3
    peculiarity_claim_weight: float = 1.0
    base_claim_rate: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.num_vehicles < 1:
            raise ValueError("num_vehicles must be >= 1")
        lo, hi = self.trips_per_vehicle_range
        if not 1 <= lo <= hi:
            raise ValueError("bad trips_per_vehicle_range")
        if not (0 <= self.fraction_routine <= 1
                and 0 <= self.fraction_peculiar <= 1):
            raise ValueError("fractions must lie in [0, 1]")
        if not 0 < self.base_claim_rate < 1:
            raise ValueError("base_claim_rate must lie in (0, 1)")


@dataclass(frozen=True)
class GroundTruth:
    vin: str
    is_routine: bool
    latent_peculiarity: float


def _vehicle_trips(rng: np.random.Generator, vin: str, n_trips: int,
                   is_routine: bool, peculiarity: float) -> list[TripRecord]:
    if is_routine:
        n_clusters = int(rng.integers(1, 4))
        tod_centers = rng.uniform(6 * 3600, 21 * 3600, size=n_clusters)
        dist_centers = rng.uniform(3, 25, size=n_clusters)
        speed_centers = rng.uniform(35, 80, size=n_clusters)
        which = rng.integers(0, n_clusters, size=n_trips)
        tod = rng.normal(tod_centers[which], 1800.0)
        dist = np.abs(rng.normal(dist_centers[which], 1.5))
        speed = np.abs(rng.normal(speed_centers[which], 5.0))
        day = rng.integers(0, 7, size=n_trips)
    else:
        tod = rng.uniform(0, SECONDS_PER_DAY, size=n_trips)
        dist = rng.gamma(shape=1.5, scale=10.0, size=n_trips)
        speed = rng.uniform(20, 95, size=n_trips)
        day = rng.integers(0, 7, size=n_trips)

    # peculiarity shifts the vehicle's draws away from the population mixture:
    # strongly into night hours and higher speeds, moderately into distance
    # (so the baseline's distance feature carries only part of the signal)
    dist = dist * (1.0 + 0.3 * peculiarity) + 2.0 * peculiarity
    speed = np.minimum(speed * (1.0 + 0.3 * peculiarity), 108.0)
    tod = (tod + peculiarity * 6 * 3600) % SECONDS_PER_DAY

    dist = np.maximum(dist, 0.1)
    speed = np.maximum(speed, 5.0)
    duration_h = dist / speed * rng.uniform(1.0, 1.3, size=n_trips)
    max_speed = np.minimum(speed * rng.uniform(1.1, 1.5, size=n_trips), 140.0)

    trips = []
    week = rng.integers(0, 52, size=n_trips)
    departures = (_PERIOD_START + week * SECONDS_PER_WEEK
                  + day * SECONDS_PER_DAY + tod.astype(np.int64))
    order = np.argsort(departures)
    for trip_id, i in enumerate(order, start=1):
        dep = int(departures[i])
        arr = dep + max(int(duration_h[i] * 3600), 0)
        trips.append(TripRecord(
            vin=vin,
            trip_id=trip_id,
            departure=dep,
            arrival=arr,
            distance_km=round(float(dist[i]), 1),
            max_speed_kmh=float(int(max_speed[i])),
        ))
    return trips


def _vehicle_policy(rng: np.random.Generator, vin: str, total_distance: float,
                    claim_ind: int) -> PolicyRecord:
    annual = float(round(total_distance * rng.uniform(0.8, 1.2), -2))
    commute = float(round(rng.gamma(2.0, 8.0), 1))
    if rng.uniform() < _COMMUTE_MISSING_RATE:
        commute = None
    return PolicyRecord(
        vin=vin,
        annual_distance=annual,
        commute_distance=commute,
        conv_count_3_yrs_minor=int(rng.poisson(0.3)),
        gender=str(rng.choice(_GENDERS, p=[0.45, 0.55])),
        marital_status=str(rng.choice(_MARITAL, p=[0.3, 0.55, 0.03, 0.12])),
        pmt_plan=str(rng.choice(_PMT_PLANS, p=[0.5, 0.46, 0.04])),
        veh_age=float(int(rng.integers(0, 20))),
        veh_use=str(rng.choice(_VEH_USES, p=[0.55, 0.3, 0.13, 0.02])),
        years_claim_free=float(int(rng.integers(0, 25))),
        years_licensed=float(int(rng.integers(1, 50))),
        claim_ind=claim_ind,
    )


def generate_portfolio(config: SynthConfig,
                       ) -> tuple[list[TripRecord], list[PolicyRecord],
                                  list[GroundTruth]]:
    """Generate trips, policies and the ground-truth sidecar labels."""
    config.validate()
    master = np.random.default_rng(config.seed)
    base_logit = math.log(config.base_claim_rate / (1 - config.base_claim_rate))

    trips: list[TripRecord] = []
    policies: list[PolicyRecord] = []
    truths: list[GroundTruth] = []
    width = len(str(config.num_vehicles))
    for i in range(config.num_vehicles):
        vin = f"V{i:0{width}d}"
        rng = np.random.default_rng(master.integers(0, 2**63 - 1))
        is_routine = rng.uniform() < config.fraction_routine
        is_peculiar = rng.uniform() < config.fraction_peculiar
        # latent peculiarity: zero-mean for ordinary vehicles, raised for
        # peculiar ones; standardized scale feeds the claim logit directly
        latent = float(rng.normal(1.5, 0.3)) if is_peculiar else float(
            abs(rng.normal(0.0, 0.2)))
        lo, hi = config.trips_per_vehicle_range
        n_trips = int(rng.integers(lo, hi + 1))
        vehicle_trips = _vehicle_trips(rng, vin, n_trips, is_routine, latent)
        claim_p = 1.0 / (1.0 + math.exp(
            -(base_logit + config.peculiarity_claim_weight * latent)))
        claim_ind = int(rng.uniform() < claim_p)
        total_distance = sum(t.distance_km for t in vehicle_trips)
        trips.extend(vehicle_trips)
        policies.append(_vehicle_policy(rng, vin, total_distance, claim_ind))
        truths.append(GroundTruth(vin=vin, is_routine=is_routine,
                                  latent_peculiarity=latent))
    return trips, policies, truths


def write_ground_truth_csv(truths: list[GroundTruth], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["vin", "is_routine", "latent_peculiarity"])
        for t in truths:
            w.writerow([t.vin, int(t.is_routine), repr(t.latent_peculiarity)])

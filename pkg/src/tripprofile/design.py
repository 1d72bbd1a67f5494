"""Assembly of the vin-level design frame from policies, trips and profile
features."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .tabular_prep import TRF_COLUMNS, DISTANCE_COLUMN
from .trip_store import PolicyRecord, TripRecord


def policy_frame(policies: list[PolicyRecord]) -> tuple[pd.DataFrame, pd.Series]:
    """Vin-indexed frame of the ten traditional risk factors plus labels."""
    rows = {}
    labels = {}
    for p in policies:
        rows[p.vin] = {
            "annual_distance": p.annual_distance,
            "commute_distance": np.nan if p.commute_distance is None
            else p.commute_distance,
            "conv_count_3_yrs_minor": p.conv_count_3_yrs_minor,
            "gender": p.gender,
            "marital_status": p.marital_status,
            "pmt_plan": p.pmt_plan,
            "veh_age": p.veh_age,
            "veh_use": p.veh_use,
            "years_claim_free": p.years_claim_free,
            "years_licensed": p.years_licensed,
        }
        labels[p.vin] = p.claim_ind
    frame = pd.DataFrame.from_dict(rows, orient="index")[TRF_COLUMNS]
    frame.index.name = "vin"
    return frame.sort_index(), pd.Series(labels).sort_index()


def distance_driven(trips: list[TripRecord]) -> pd.Series:
    """Total recorded distance per vin."""
    totals: dict[str, float] = {}
    for t in trips:
        totals[t.vin] = totals.get(t.vin, 0.0) + t.distance_km
    return pd.Series(totals).sort_index()


def design_frame(policies: list[PolicyRecord], trips: list[TripRecord],
                 profile_feats: pd.DataFrame | None = None,
                 ) -> tuple[pd.DataFrame, pd.Series]:
    """TRFs + distance driven (+ the 66 profile features when supplied).

    Column order is canonical: TRFs, distance, quantiles, interactions.
    """
    frame, labels = policy_frame(policies)
    frame[DISTANCE_COLUMN] = distance_driven(trips).reindex(frame.index).fillna(0.0)
    if profile_feats is not None:
        missing = frame.index.difference(profile_feats.index)
        if len(missing):
            raise ValueError(f"no profile features for vins: {list(missing)[:5]}")
        frame = frame.join(profile_feats)
    return frame, labels

"""Ingestion and validation of raw trip and policy CSV data.

Timestamps are stored as integer seconds since the Unix epoch, interpreted as
naive local time (the recording clock); no timezone arithmetic is performed.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .errors import ParseError, ValidationError

TRIP_HEADER = ["vin", "trip_id", "departure", "arrival", "distance", "max_speed"]
POLICY_HEADER = [
    "vin",
    "annual_distance",
    "commute_distance",
    "conv_count_3_yrs_minor",
    "gender",
    "marital_status",
    "pmt_plan",
    "veh_age",
    "veh_use",
    "years_claim_free",
    "years_licensed",
    "claim_ind",
]

_EPOCH = datetime(1970, 1, 1)

MISSING = None  # sentinel for an empty commute_distance cell


@dataclass(frozen=True)
class TripRecord:
    """One key-on/key-off event."""

    vin: str
    trip_id: int
    departure: int  # seconds since epoch, naive local time
    arrival: int
    distance_km: float
    max_speed_kmh: float


@dataclass(frozen=True)
class PolicyRecord:
    """One insurance policy with its traditional risk factors and claim label."""

    vin: str
    annual_distance: float
    commute_distance: float | None  # None = MISSING
    conv_count_3_yrs_minor: int
    gender: str
    marital_status: str
    pmt_plan: str
    veh_age: float
    veh_use: str
    years_claim_free: float
    years_licensed: float
    claim_ind: int


@dataclass(frozen=True)
class PortfolioSplit:
    """Disjoint train/test partition of the portfolio's vins."""

    train_vins: frozenset[str]
    test_vins: frozenset[str]
    seed: int


def parse_timestamp(text: str) -> int:
    """Parse 'yyyy-mm-dd HH:MM:SS' into seconds since the epoch (naive)."""
    try:
        dt = datetime(
            int(text[0:4]), int(text[5:7]), int(text[8:10]),
            int(text[11:13]), int(text[14:16]), int(text[17:19]),
        )
    except (ValueError, IndexError) as exc:
        raise ValueError(f"bad timestamp {text!r}") from exc
    if len(text) != 19 or text[4] != "-" or text[7] != "-" or text[10] != " ":
        raise ValueError(f"bad timestamp {text!r}")
    return int((dt - _EPOCH).total_seconds())


def format_timestamp(seconds: int) -> str:
    """Inverse of :func:`parse_timestamp`."""
    from datetime import timedelta

    return (_EPOCH + timedelta(seconds=int(seconds))).strftime("%Y-%m-%d %H:%M:%S")


def parse_trip_csv(path: str | Path) -> list[TripRecord]:
    """Parse and validate a trip CSV, returning rows sorted by (vin, trip_id).

    Raises ParseError on malformed rows (with line number) and ValidationError
    when arrival precedes departure.
    """
    records: list[TripRecord] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected header", line=1)
        if header != TRIP_HEADER:
            raise ParseError(
                f"unexpected header {header!r}, expected {TRIP_HEADER!r}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise ParseError(f"expected 6 fields, got {len(row)}", line=lineno)
            try:
                rec = TripRecord(
                    vin=row[0],
                    trip_id=int(row[1]),
                    departure=parse_timestamp(row[2]),
                    arrival=parse_timestamp(row[3]),
                    distance_km=float(row[4]),
                    max_speed_kmh=float(row[5]),
                )
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno)
            if rec.trip_id < 1:
                raise ParseError(f"trip_id must be >= 1, got {rec.trip_id}", line=lineno)
            if rec.distance_km < 0:
                raise ParseError(f"negative distance {rec.distance_km}", line=lineno)
            if rec.max_speed_kmh < 0:
                raise ParseError(f"negative max speed {rec.max_speed_kmh}", line=lineno)
            records.append(rec)

    bad = [(r.vin, r.trip_id) for r in records if r.arrival < r.departure]
    if bad:
        raise ValidationError(f"arrival before departure for (vin, trip_id): {bad}")
    seen: set[tuple[str, int]] = set()
    for r in records:
        key = (r.vin, r.trip_id)
        if key in seen:
            raise ValidationError(f"duplicate (vin, trip_id): {key}")
        seen.add(key)
    records.sort(key=lambda r: (r.vin, r.trip_id))
    return records


def _parse_policy_field(name: str, value: str, lineno: int):
    if name == "commute_distance" and value == "":
        return MISSING
    if value == "":
        raise ValidationError(
            f"line {lineno}: empty cell only allowed for commute_distance, "
            f"found in {name!r}"
        )
    try:
        if name in ("annual_distance", "commute_distance", "veh_age",
                    "years_claim_free", "years_licensed"):
            out = float(value)
            if out < 0:
                raise ValueError
            return out
        if name == "conv_count_3_yrs_minor":
            out = int(value)
            if out < 0:
                raise ValueError
            return out
        if name == "claim_ind":
            out = int(value)
            if out not in (0, 1):
                raise ValidationError(
                    f"line {lineno}: claim_ind must be 0 or 1, got {value!r}"
                )
            return out
    except ValueError:
        raise ParseError(f"bad value {value!r} for {name}", line=lineno)
    return value  # categorical fields kept verbatim


def parse_policy_csv(path: str | Path) -> list[PolicyRecord]:
    """Parse and validate the policy CSV (one row per vin)."""
    records: list[PolicyRecord] = []
    seen_vins: set[str] = set()
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected header", line=1)
        if header != POLICY_HEADER:
            raise ParseError(
                f"unexpected header {header!r}, expected {POLICY_HEADER!r}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(POLICY_HEADER):
                raise ParseError(
                    f"expected {len(POLICY_HEADER)} fields, got {len(row)}",
                    line=lineno,
                )
            values = {
                name: _parse_policy_field(name, cell, lineno)
                for name, cell in zip(POLICY_HEADER, row)
            }
            if values["vin"] in seen_vins:
                raise ValidationError(f"duplicate vin {values['vin']!r}")
            seen_vins.add(values["vin"])
            records.append(PolicyRecord(**values))
    return records


def split_by_vin(
    policies: list[PolicyRecord], ratio: float, seed: int
) -> PortfolioSplit:
    """Deterministic VIN-level train/test split with |train| = round(ratio*n)."""
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    if len(policies) < 2:
        raise ValueError("need at least 2 policies to split")
    vins = sorted(p.vin for p in policies)
    rng = random.Random(seed)
    rng.shuffle(vins)
    # round-half-to-even matches the documented round() contract
    n_train = round(ratio * len(vins))
    n_train = min(max(n_train, 1), len(vins) - 1)
    return PortfolioSplit(
        train_vins=frozenset(vins[:n_train]),
        test_vins=frozenset(vins[n_train:]),
        seed=seed,
    )


def write_trip_csv(records: list[TripRecord], path: str | Path) -> None:
    """Serialize trips back to the canonical CSV schema (round-trip safe)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(TRIP_HEADER)
        for r in records:
            w.writerow([
                r.vin,
                r.trip_id,
                format_timestamp(r.departure),
                format_timestamp(r.arrival),
                r.distance_km,
                r.max_speed_kmh,
            ])


def write_policy_csv(records: list[PolicyRecord], path: str | Path) -> None:
    """Serialize policies back to the canonical CSV schema."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(POLICY_HEADER)
        for r in records:
            row = []
            for name in POLICY_HEADER:
                v = getattr(r, name)
                row.append("" if v is MISSING else v)
            w.writerow(row)


def trips_by_vin(records: list[TripRecord]) -> dict[str, list[TripRecord]]:
    """Group trips per vehicle, preserving trip_id order."""
    out: dict[str, list[TripRecord]] = {}
    for r in records:
        out.setdefault(r.vin, []).append(r)
    return out

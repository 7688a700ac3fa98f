"""Build the LTLA x day observation table from snapshot CSV files.

Criteria produced:

* ``C1`` total daily cases (sum over age bands), trailing rolling mean
* ``C2`` daily cases in bands starting at 60 or above, trailing rolling mean
* ``C3`` day-over-day difference of raw daily cases, trailing rolling mean
* ``C4`` positivity percentage, trailing rolling mean
* ``C5`` occupied/total beds per NHS trust, mapped to LTLAs with
  probabilistic weights renormalised over the trusts reporting that day

Series frames have columns ``geo, date, value`` (plus ``partial`` after
smoothing, true where the window had fewer than ``window`` days of data).
Functions that drop data append human-readable messages to an optional
``diagnostics`` list.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from .table import Criterion, DecisionAttribute, InformationTable, Observation

log = logging.getLogger(__name__)

CRITERIA = ("C1", "C2", "C3", "C4", "C5")
TIERS = ("1", "2", "3", "4")
OVER_60 = 60

NORTH = "North"
SOUTH = "SouthSansLondon"
LONDON = "London"

REGION_SEGMENTS = {
    "North East": NORTH,
    "North West": NORTH,
    "Yorkshire and The Humber": NORTH,
    "East Midlands": NORTH,
    "West Midlands": NORTH,
    "East of England": SOUTH,
    "South East": SOUTH,
    "South West": SOUTH,
    "London": LONDON,
}

SNAPSHOT_FILES = {
    "cases": ("cases.csv", ["ltla", "date", "band", "count"]),
    "positivity": ("positivity.csv", ["ltla", "date", "percent"]),
    "occupancy": ("occupancy.csv", ["trust", "date", "occupied"]),
    "capacity": ("capacity.csv", ["trust", "beds"]),
    "mapping": ("mapping.csv", ["trust", "ltla", "weight"]),
    "tiers": ("tiers.csv", ["ltla", "start", "end", "tier"]),
    "regions": ("regions.csv", ["ltla", "region"]),
}


class PipelineError(ValueError):
    pass


def _note(diagnostics: list[str] | None, message: str) -> None:
    log.warning(message)
    if diagnostics is not None:
        diagnostics.append(message)


def _as_dates(col: pd.Series) -> pd.Series:
    return pd.to_datetime(col).dt.normalize()


def series_frame(geo, dates, values) -> pd.DataFrame:
    """Small helper to build a ``geo, date, value`` frame."""
    return pd.DataFrame({"geo": geo, "date": _as_dates(pd.Series(dates)), "value": values})


def _check_series(series: pd.DataFrame) -> pd.DataFrame:
    if series.empty:
        raise PipelineError("empty series")
    df = series[["geo", "date", "value"]].copy()
    df["geo"] = df["geo"].astype(str)
    df["date"] = _as_dates(df["date"])
    df["value"] = df["value"].astype(float)
    dup = df.duplicated(["geo", "date"])
    if dup.any():
        first = df[dup].iloc[0]
        raise PipelineError(f"duplicate (geo, date) {first['geo']} {first['date'].date()}")
    return df.sort_values(["geo", "date"], kind="mergesort").reset_index(drop=True)


def rolling_average(series: pd.DataFrame, window: int = 7) -> pd.DataFrame:
    """Trailing mean over the ``window`` calendar days ending at each date.

    Missing days inside the window are skipped, not imputed; such windows
    and the first ``window - 1`` days of each geo are flagged ``partial``.
    """
    if window < 1:
        raise PipelineError(f"window must be >= 1, got {window}")
    df = _check_series(series)
    parts = []
    for geo, g in df.groupby("geo", sort=True):
        days = pd.date_range(g["date"].iloc[0], g["date"].iloc[-1], freq="D")
        grid = g.set_index("date")["value"].reindex(days).to_numpy()
        padded = np.concatenate([np.full(window - 1, np.nan), grid])
        windows = sliding_window_view(padded, window)
        counts = np.sum(~np.isnan(windows), axis=1)
        sums = np.nansum(windows, axis=1)
        keep = ~np.isnan(grid)
        parts.append(
            pd.DataFrame(
                {
                    "geo": geo,
                    "date": days[keep],
                    "value": sums[keep] / counts[keep],
                    "partial": counts[keep] < window,
                }
            )
        )
    return pd.concat(parts, ignore_index=True)


_BAND = re.compile(r"^\s*(\d+)\s*(?:(?:[-_–]|to)\s*(\d+)|\+|plus)?\s*$", re.IGNORECASE)


def parse_band(label: str) -> tuple[int, float]:
    """``"60_64"`` -> (60, 64), ``"90+"`` -> (90, inf)."""
    m = _BAND.match(str(label))
    if not m:
        raise PipelineError(f"unparseable age band {label!r}")
    lo = int(m.group(1))
    hi = float(m.group(2)) if m.group(2) is not None else float("inf")
    if hi < lo:
        raise PipelineError(f"age band {label!r} ends before it starts")
    return lo, hi


def _check_bands(labels) -> dict[str, tuple[int, float]]:
    parsed = {lab: parse_band(lab) for lab in sorted(set(map(str, labels)))}
    spans = sorted(set(parsed.values()))
    for (lo1, hi1), (lo2, hi2) in zip(spans, spans[1:]):
        if lo2 <= hi1:
            raise PipelineError(f"overlapping age bands {lo1}-{hi1} and {lo2}-{hi2}")
    return parsed


def case_totals(cases: pd.DataFrame) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Raw daily (all ages, 60+) series from age-banded case counts."""
    if cases.empty:
        raise PipelineError("empty case data")
    df = cases.rename(columns={"ltla": "geo"})[["geo", "date", "band", "count"]].copy()
    df["geo"] = df["geo"].astype(str)
    df["date"] = _as_dates(df["date"])
    df["band"] = df["band"].astype(str)
    if (df["count"] < 0).any():
        raise PipelineError("negative case count")
    bands = _check_bands(df["band"])
    df["over60"] = df["band"].map(lambda b: bands[b][0] >= OVER_60)
    df = df.sort_values(["geo", "date", "band"], kind="mergesort")
    keys = ["geo", "date"]
    c1 = df.groupby(keys, sort=True)["count"].sum().astype(float).rename("value").reset_index()
    over = df.assign(count=df["count"].where(df["over60"], 0))
    c2 = over.groupby(keys, sort=True)["count"].sum().astype(float).rename("value").reset_index()
    return c1, c2


def aggregate_cases(cases: pd.DataFrame, window: int = 7) -> dict[str, pd.DataFrame]:
    """Smoothed ``C1`` (all ages) and ``C2`` (bands starting at 60+)."""
    c1, c2 = case_totals(cases)
    return {"C1": rolling_average(c1, window), "C2": rolling_average(c2, window)}


def rate_of_change(
    c1_raw: pd.DataFrame, window: int = 7, diagnostics: list[str] | None = None
) -> pd.DataFrame:
    """Smoothed day-over-day difference of raw daily counts.

    The first date of each geo has no value; differences are not taken
    across missing days. Geos with a single date are excluded.
    """
    df = _check_series(c1_raw)
    parts = []
    for geo, g in df.groupby("geo", sort=True):
        if len(g) < 2:
            _note(diagnostics, f"rate of change: {geo} has a single date, excluded")
            continue
        s = g.set_index("date")["value"]
        days = pd.date_range(s.index[0], s.index[-1], freq="D")
        diff = s.reindex(days).diff().dropna()
        parts.append(pd.DataFrame({"geo": geo, "date": diff.index, "value": diff.to_numpy()}))
    if not parts:
        raise PipelineError("rate of change needs at least two dates for some geo")
    return rolling_average(pd.concat(parts, ignore_index=True), window)


def nhs_pressure(
    occupied: pd.DataFrame,
    capacity: pd.DataFrame | dict,
    weights: pd.DataFrame,
    diagnostics: list[str] | None = None,
) -> pd.DataFrame:
    """LTLA-level bed pressure: weighted mean of trust occupancy ratios.

    ``occupied`` has ``trust, date, occupied``; ``capacity`` maps trust to
    beds (frame ``trust, beds`` or a dict); ``weights`` has ``trust, ltla,
    weight``. Weights are renormalised per LTLA-day over trusts that report
    that day. LTLA-days without a reporting trust are absent from the output.
    """
    if isinstance(capacity, dict):
        capacity = pd.DataFrame({"trust": list(capacity), "beds": list(capacity.values())})
    cap = capacity[["trust", "beds"]].copy()
    cap["trust"] = cap["trust"].astype(str)
    occ = occupied[["trust", "date", "occupied"]].copy()
    occ["trust"] = occ["trust"].astype(str)
    occ["date"] = _as_dates(occ["date"])
    w = weights[["trust", "ltla", "weight"]].copy()
    w["trust"] = w["trust"].astype(str)
    w["ltla"] = w["ltla"].astype(str)
    w["weight"] = w["weight"].astype(float)
    if ((w["weight"] < 0) | (w["weight"] > 1)).any():
        raise PipelineError("mapping weights must lie in [0, 1]")

    beds = dict(zip(cap["trust"], cap["beds"].astype(float)))
    bad = sorted(t for t in occ["trust"].unique() if not beds.get(t, 0) > 0)
    for t in bad:
        _note(diagnostics, f"nhs pressure: trust {t} has missing or zero capacity, excluded")
    occ = occ[~occ["trust"].isin(bad)]
    occ = occ.assign(ratio=occ["occupied"].astype(float) / occ["trust"].map(beds))

    rows = w.merge(occ[["trust", "date", "ratio"]], on="trust", how="inner")
    rows = rows[rows["weight"] > 0]
    rows = rows.sort_values(["ltla", "date", "trust"], kind="mergesort")
    rows = rows.assign(wr=rows["weight"] * rows["ratio"])
    grouped = rows.groupby(["ltla", "date"], sort=True)
    out = (grouped["wr"].sum() / grouped["weight"].sum()).rename("value").reset_index()

    all_days = occ["date"].drop_duplicates()
    expected = pd.MultiIndex.from_product(
        [sorted(w["ltla"].unique()), sorted(all_days)], names=["ltla", "date"]
    )
    missing = len(expected.difference(pd.MultiIndex.from_frame(out[["ltla", "date"]])))
    if missing:
        _note(diagnostics, f"nhs pressure: {missing} LTLA-days have no reporting trust")
    return out.rename(columns={"ltla": "geo"})[["geo", "date", "value"]]


def normalise_tier(label) -> str:
    text = str(label).strip()
    m = re.fullmatch(r"(?i)(?:tier)?[-_\s]*(\d+)", text)
    return m.group(1) if m else text


def check_intervals(intervals: pd.DataFrame) -> pd.DataFrame:
    df = intervals[["ltla", "start", "end", "tier"]].copy()
    df["ltla"] = df["ltla"].astype(str)
    df["start"] = _as_dates(df["start"])
    df["end"] = _as_dates(df["end"])
    df["tier"] = df["tier"].map(normalise_tier)
    if (df["start"] > df["end"]).any():
        row = df[df["start"] > df["end"]].iloc[0]
        raise PipelineError(f"tier interval for {row['ltla']} starts after it ends")
    df = df.sort_values(["ltla", "start"], kind="mergesort").reset_index(drop=True)
    for ltla, g in df.groupby("ltla", sort=True):
        ends = g["end"].to_numpy()[:-1]
        starts = g["start"].to_numpy()[1:]
        if (starts <= ends).any():
            raise PipelineError(f"overlapping tier intervals for {ltla}")
    return df


def join_tiers(
    grid: pd.DataFrame, intervals: pd.DataFrame, diagnostics: list[str] | None = None
) -> pd.DataFrame:
    """Attach the tier of the covering interval (start and end inclusive)."""
    iv = check_intervals(intervals)
    g = grid[["ltla", "date"]].copy()
    g["ltla"] = g["ltla"].astype(str)
    g["date"] = _as_dates(g["date"])
    g = g.drop_duplicates().reset_index(drop=True)
    g["_row"] = np.arange(len(g))
    m = g.merge(iv, on="ltla", how="inner")
    m = m[(m["start"] <= m["date"]) & (m["date"] <= m["end"])]
    out = g.merge(m[["_row", "tier"]], on="_row", how="left")
    dropped = out["tier"].isna()
    if dropped.any():
        _note(diagnostics, f"tiers: {int(dropped.sum())} LTLA-days fall outside every tier interval")
    out = out[~dropped].drop(columns="_row")
    return out.sort_values(["ltla", "date"], kind="mergesort").reset_index(drop=True)


@dataclass
class SnapshotInputs:
    cases: pd.DataFrame
    positivity: pd.DataFrame
    occupancy: pd.DataFrame
    capacity: pd.DataFrame
    mapping: pd.DataFrame
    tiers: pd.DataFrame
    regions: pd.DataFrame


@dataclass
class PipelineReport:
    rows: int = 0
    dropped_missing: int = 0
    dropped_untiered: int = 0
    diagnostics: list[str] = field(default_factory=list)


def load_snapshots(directory: str | Path) -> SnapshotInputs:
    directory = Path(directory)
    frames = {}
    for key, (name, cols) in SNAPSHOT_FILES.items():
        path = directory / name
        df = pd.read_csv(path, dtype={"ltla": str, "trust": str, "band": str, "tier": str})
        missing = [c for c in cols if c not in df.columns]
        if missing:
            raise PipelineError(f"{path}: missing column(s) {missing}")
        frames[key] = df
    return SnapshotInputs(**frames)


def build_dataset(inputs: SnapshotInputs, window: int = 7) -> tuple[InformationTable, PipelineReport]:
    """Inner-join C1..C5 and the legislated tier on (LTLA, date) and tag segments."""
    report = PipelineReport()
    diags = report.diagnostics
    c1_raw, c2_raw = case_totals(inputs.cases)
    pos = inputs.positivity.rename(columns={"ltla": "geo", "percent": "value"})
    crit = {
        "C1": rolling_average(c1_raw, window),
        "C2": rolling_average(c2_raw, window),
        "C3": rate_of_change(c1_raw, window, diags),
        "C4": rolling_average(pos[["geo", "date", "value"]], window),
        "C5": nhs_pressure(inputs.occupancy, inputs.capacity, inputs.mapping, diags),
    }

    merged = None
    for name in CRITERIA:
        df = crit[name].rename(columns={"geo": "ltla", "value": name})
        if "partial" in df:
            df = df.rename(columns={"partial": f"partial_{name}"})
        merged = df if merged is None else merged.merge(df, on=["ltla", "date"], how="outer")
    missing = merged[list(CRITERIA)].isna().any(axis=1)
    report.dropped_missing = int(missing.sum())
    if report.dropped_missing:
        _note(diags, f"dataset: {report.dropped_missing} LTLA-days lack at least one criterion, dropped")
    merged = merged[~missing]

    before = len(merged)
    tiers = join_tiers(merged[["ltla", "date"]], inputs.tiers, diags)
    merged = merged.merge(tiers, on=["ltla", "date"], how="inner")
    report.dropped_untiered = before - len(merged)
    unknown = sorted(set(merged["tier"]) - set(TIERS))
    if unknown:
        raise PipelineError(f"unknown tier label(s) {unknown}")

    regions = inputs.regions[["ltla", "region"]].copy()
    regions["ltla"] = regions["ltla"].astype(str)
    region_of = dict(zip(regions["ltla"], regions["region"].astype(str)))
    lacking = sorted(set(merged["ltla"]) - set(region_of))
    if lacking:
        raise PipelineError(f"no region for LTLA(s) {lacking[:5]}{'...' if len(lacking) > 5 else ''}")
    bad_regions = sorted({region_of[l] for l in merged["ltla"].unique()} - set(REGION_SEGMENTS))
    if bad_regions:
        raise PipelineError(f"region(s) without a segment: {bad_regions}")

    merged = merged.sort_values(["ltla", "date"], kind="mergesort").reset_index(drop=True)
    if merged.empty:
        raise PipelineError("the join of criteria and tiers is empty")

    partial_cols = [f"partial_{n}" for n in CRITERIA if f"partial_{n}" in merged]
    observations = []
    for row in merged.itertuples(index=False):
        d = row._asdict()
        day = d["date"].strftime("%Y-%m-%d")
        region = region_of[d["ltla"]]
        partial = ",".join(c.removeprefix("partial_") for c in partial_cols if bool(d[c]))
        observations.append(
            Observation(
                f"{d['ltla']}:{day}",
                tuple(float(d[n]) for n in CRITERIA),
                d["tier"],
                {
                    "ltla": d["ltla"],
                    "date": day,
                    "region": region,
                    "segment": REGION_SEGMENTS[region],
                    "partial": partial,
                },
            )
        )
    table = InformationTable(
        tuple(Criterion(i, n) for i, n in enumerate(CRITERIA)),
        DecisionAttribute("Tier", TIERS),
        tuple(observations),
    )
    report.rows = len(observations)
    return table, report

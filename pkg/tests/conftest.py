from __future__ import annotations

import sys
from pathlib import Path

import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from drsa.datasets import covid_example  # noqa: E402


@pytest.fixture
def example():
    return covid_example()


def write_snapshots(
    directory: Path,
    ltlas=("E1", "E2"),
    days: int = 3,
    start: str = "2020-11-01",
    drop_occupancy: tuple[str, str] | None = None,
) -> Path:
    """Write a small, fully covered snapshot set; optionally drop one trust-day."""
    directory.mkdir(parents=True, exist_ok=True)
    dates = [d.strftime("%Y-%m-%d") for d in pd.date_range(start, periods=days)]
    regions = {"E1": "North West", "E2": "London", "E3": "South East"}
    cases, pos, occ = [], [], []
    for n, ltla in enumerate(ltlas):
        for d, day in enumerate(dates):
            cases += [
                (ltla, day, "00_59", 10 + 3 * d + n),
                (ltla, day, "60_79", 2 + d),
                (ltla, day, "80+", 1),
            ]
            pos.append((ltla, day, 5.0 + d + n))
    for trust in ("T1", "T2"):
        for d, day in enumerate(dates):
            if drop_occupancy == (trust, day):
                continue
            occ.append((trust, day, 20 + 5 * d))
    pd.DataFrame(cases, columns=["ltla", "date", "band", "count"]).to_csv(directory / "cases.csv", index=False)
    pd.DataFrame(pos, columns=["ltla", "date", "percent"]).to_csv(directory / "positivity.csv", index=False)
    pd.DataFrame(occ, columns=["trust", "date", "occupied"]).to_csv(directory / "occupancy.csv", index=False)
    pd.DataFrame({"trust": ["T1", "T2"], "beds": [100, 200]}).to_csv(directory / "capacity.csv", index=False)
    mapping = []
    for ltla in ltlas:
        mapping += [("T1", ltla, 0.7), ("T2", ltla, 0.3)]
    pd.DataFrame(mapping, columns=["trust", "ltla", "weight"]).to_csv(directory / "mapping.csv", index=False)
    tiers = [(ltla, dates[0], dates[-1], 2 + i % 2) for i, ltla in enumerate(ltlas)]
    pd.DataFrame(tiers, columns=["ltla", "start", "end", "tier"]).to_csv(directory / "tiers.csv", index=False)
    pd.DataFrame([(l, regions[l]) for l in ltlas], columns=["ltla", "region"]).to_csv(
        directory / "regions.csv", index=False
    )
    return directory


@pytest.fixture
def snapshots(tmp_path):
    return write_snapshots(tmp_path / "snap")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])

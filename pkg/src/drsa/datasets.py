"""Bundled example data."""

from __future__ import annotations

from .table import InformationTable, make_table

COVID_CRITERIA = ("Number of Cases", "Rate of Change", "Positivity Rate")

_COVID_ROWS = (
    (195, 2.48, 8.05, "3"),
    (92, 2.45, 7.89, "2"),
    (237, -2.74, 8.94, "2"),
    (515, 2.82, 1.43, "3"),
    (528, 7.54, 5.3, "3"),
    (434, 1.65, 5.41, "2"),
    (143, -3.15, 8.01, "1"),
    (75, 3.2, 5.25, "2"),
    (269, 2.33, 1.71, "1"),
    (131, 3.28, 1.03, "1"),
)


def covid_example() -> InformationTable:
    """Ten synthetic observations (cases, rate of change, positivity) with tiers 1-3.

    Observation ids are ``"1"`` .. ``"10"``.
    """
    return make_table(
        COVID_CRITERIA,
        ("1", "2", "3"),
        [r[:3] for r in _COVID_ROWS],
        [r[3] for r in _COVID_ROWS],
        decision_name="Tier",
    )


# Reference rules for the example table: (antecedent, consequent, support, strength).
COVID_REFERENCE_RULES = (
    ("(Number of Cases <= 269) and (Positivity Rate <= 1.71)", "at most T1", 2, 66.67),
    ("(Rate of Change <= 2.45)", "at most T2", 5, 71.43),
    ("(Number of Cases <= 434) and (Positivity Rate <= 5.41)", "at most T2", 4, 57.14),
    ("(Number of Cases <= 131)", "at most T2", 3, 42.86),
    ("(Number of Cases >= 195) and (Rate of Change >= 2.48)", "at least T3", 3, 100.00),
    ("(Number of Cases >= 515)", "at least T3", 2, 66.67),
    ("(Rate of Change >= 2.82) and (Positivity Rate >= 1.43)", "at least T2", 3, 42.86),
    ("(Number of Cases >= 434)", "at least T2", 3, 42.86),
    ("(Rate of Change >= 1.65) and (Positivity Rate >= 5.41)", "at least T2", 3, 42.86),
)

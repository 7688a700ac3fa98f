"""Pure-Python brute-force oracles, deliberately independent of the package internals.

Everything here works on plain lists: ``rows`` are value tuples (all
criteria gain-type), ``ranks`` are integer class ranks 0..m-1.
"""

from __future__ import annotations

import itertools


def dominates(a, b) -> bool:
    return all(x >= y for x, y in zip(a, b))


def positive_cone(rows, i) -> set[int]:
    return {j for j in range(len(rows)) if dominates(rows[j], rows[i])}


def negative_cone(rows, i) -> set[int]:
    return {j for j in range(len(rows)) if dominates(rows[i], rows[j])}


def members(ranks, kind, t) -> set[int]:
    if kind == "at_least":
        return {i for i, r in enumerate(ranks) if r >= t}
    return {i for i, r in enumerate(ranks) if r <= t}


def lower(rows, ranks, kind, t) -> set[int]:
    union = members(ranks, kind, t)
    cone = positive_cone if kind == "at_least" else negative_cone
    return {i for i in union if cone(rows, i) <= union}


def upper(rows, ranks, kind, t) -> set[int]:
    union = members(ranks, kind, t)
    cone = negative_cone if kind == "at_least" else positive_cone
    return {i for i in range(len(rows)) if cone(rows, i) & union}


def quality(rows, ranks, classes: int) -> float:
    boundary = set()
    for t in range(1, classes):
        for kind, tt in (("at_least", t), ("at_most", t - 1)):
            boundary |= upper(rows, ranks, kind, tt) - lower(rows, ranks, kind, tt)
    return (len(rows) - len(boundary)) / len(rows)


def cover(rows, conditions) -> set[int]:
    """``conditions`` is a list of (criterion, relation, threshold)."""
    out = set()
    for i, row in enumerate(rows):
        ok = True
        for q, rel, v in conditions:
            if rel == ">=" and not row[q] >= v or rel == "<=" and not row[q] <= v:
                ok = False
                break
        if ok:
            out.add(i)
    return out


def certain_rules(rows, ranks, kind, t) -> list[tuple]:
    """Every certain rule with thresholds taken from observed values.

    A rule is certain when its cover is non-empty and lies inside the
    lower approximation. Enumerates all criteria subsets and all observed
    threshold combinations.
    """
    k = len(rows[0])
    rel = ">=" if kind == "at_least" else "<="
    low = lower(rows, ranks, kind, t)
    out = []
    for size in range(1, k + 1):
        for qs in itertools.combinations(range(k), size):
            grids = [sorted({r[q] for r in rows}) for q in qs]
            for vals in itertools.product(*grids):
                conds = [(q, rel, v) for q, v in zip(qs, vals)]
                cov = cover(rows, conds)
                if cov and cov <= low:
                    out.append(tuple(conds))
    return out


def is_condition_minimal(rows, ranks, kind, t, conditions) -> bool:
    """No condition can be dropped while keeping the cover inside the lower approximation."""
    low = lower(rows, ranks, kind, t)
    if len(conditions) == 1:
        return True
    for i in range(len(conditions)):
        rest = conditions[:i] + conditions[i + 1 :]
        if cover(rows, rest) <= low:
            return False
    return True

"""Segment-wise rule extraction, cross-segment alignment and exploratory statistics."""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .dominance import UnionKind
from .domlem import induce
from .rules import GE, DecisionRule, InductionParams, RuleSet, filter_rules
from .table import InformationTable, TableError

log = logging.getLogger(__name__)

SEGMENT_KEY = "segment"


def split_by_segment(table: InformationTable, key: str = SEGMENT_KEY) -> dict[str, InformationTable]:
    """Partition ``table`` by the ``key`` meta label, parts in label order."""
    missing = [o.id for o in table.observations if not o.meta.get(key)]
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise TableError(f"{len(missing)} observation(s) lack a {key!r} label: {shown}")
    groups: dict[str, list] = {}
    for o in table.observations:
        groups.setdefault(o.meta[key], []).append(o)
    return {
        label: InformationTable(table.criteria, table.decision, tuple(groups[label]))
        for label in sorted(groups)
    }


def extract_segment_rules(
    parts: Mapping[str, InformationTable],
    params: InductionParams | None = None,
    workers: int = 1,
) -> dict[str, RuleSet]:
    """Induce one rule set per segment; single-class segments get an empty set with a note."""
    params = params or InductionParams()
    labels = sorted(parts)

    def run(label: str) -> RuleSet:
        part = parts[label]
        present = {o.decision for o in part.observations}
        if len(present) < 2:
            note = f"segment {label} has a single decision class, no rules induced"
            log.warning(note)
            return RuleSet(
                (),
                params,
                source=label,
                criteria=tuple(c.name for c in part.criteria),
                classes=part.classes,
                notes=(note,),
            )
        return induce(part, params, source=label)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, labels))
    else:
        results = [run(label) for label in labels]
    return dict(zip(labels, results))


@dataclass(frozen=True)
class SegmentEntry:
    rule: DecisionRule
    thresholds: tuple[float, ...]
    support: int
    strength: float
    confidence: float


@dataclass(frozen=True)
class ComparableRuleGroup:
    """Rules of different segments sharing consequent and antecedent criteria."""

    kind: UnionKind
    threshold: str
    signature: tuple[int, ...]
    relations: tuple[str, ...]
    per_segment: tuple[tuple[str, SegmentEntry], ...]

    @property
    def consequent(self) -> tuple[UnionKind, str]:
        return (self.kind, self.threshold)

    @property
    def segments(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.per_segment)

    def entry(self, segment: str) -> SegmentEntry:
        return dict(self.per_segment)[segment]


@dataclass(frozen=True)
class ThresholdRatio:
    high: str
    low: str
    ratio: float | None
    note: str = ""

    @property
    def label(self) -> str:
        return "undefined" if self.ratio is None else f"1:{self.ratio:.1f}"


def _restrictiveness(rule: DecisionRule) -> tuple[float, ...]:
    # Larger means harder to satisfy.
    return tuple(c.threshold if c.relation == GE else -c.threshold for c in rule.conditions)


def _representative(rules: list[DecisionRule]) -> DecisionRule:
    return min(rules, key=lambda r: (-r.strength, _restrictiveness(r)))


def _check_compatible(rulesets: Mapping[str, RuleSet]) -> tuple[tuple[str, ...], tuple[str, ...]]:
    named = [rs for rs in rulesets.values() if rs.criteria]
    criteria = named[0].criteria if named else ()
    if any(rs.criteria != criteria for rs in named):
        raise TableError("rule sets were induced over different criteria")
    with_classes = [rs for rs in rulesets.values() if rs.classes]
    classes = with_classes[0].classes if with_classes else ()
    if any(rs.classes != classes for rs in with_classes):
        raise TableError("rule sets use different decision classes")
    return criteria, classes


def align_rules(rulesets: Mapping[str, RuleSet]) -> list[ComparableRuleGroup]:
    """Group rules by (consequent, criteria signature) across segments.

    Each segment contributes its highest-strength rule per key (ties to the
    less restrictive thresholds). Keys present in fewer than two segments
    are left out.
    """
    if len(rulesets) < 2:
        raise ValueError("alignment needs at least two rule sets")
    _, classes = _check_compatible(rulesets)
    buckets: dict[tuple, dict[str, list[DecisionRule]]] = {}
    for segment in sorted(rulesets):
        for r in rulesets[segment].rules:
            key = (r.kind, r.threshold, r.signature, tuple(c.relation for c in r.conditions))
            buckets.setdefault(key, {}).setdefault(segment, []).append(r)

    rank = {c: i for i, c in enumerate(classes)}
    groups = []
    for (kind, threshold, signature, relations), by_segment in buckets.items():
        if len(by_segment) < 2:
            continue
        entries = []
        for segment in sorted(by_segment):
            r = _representative(by_segment[segment])
            entries.append(
                (segment, SegmentEntry(r, r.thresholds, r.support, r.strength, r.confidence))
            )
        groups.append(ComparableRuleGroup(kind, threshold, signature, relations, tuple(entries)))
    groups.sort(
        key=lambda g: (
            0 if g.kind is UnionKind.AT_MOST else 1,
            rank.get(g.threshold, 0),
            g.threshold,
            len(g.signature),
            g.signature,
            g.relations,
        )
    )
    return groups


def threshold_ratios(group: ComparableRuleGroup) -> list[ThresholdRatio]:
    """Larger/smaller threshold for each segment pair of a single-criterion group.

    Multi-criterion groups have no scalar ratio: each pair is reported with
    ``ratio=None`` so callers can show the paired threshold vectors instead.
    """
    out = []
    for (sa, ea), (sb, eb) in itertools.combinations(group.per_segment, 2):
        if len(group.signature) != 1:
            out.append(ThresholdRatio(sa, sb, None, "multi-criterion group, compare threshold vectors"))
            continue
        ta, tb = ea.thresholds[0], eb.thresholds[0]
        high, low = (sa, sb) if ta >= tb else (sb, sa)
        big, small = max(ta, tb), min(ta, tb)
        if ta == tb and ta != 0:
            out.append(ThresholdRatio(high, low, 1.0))
        elif small == 0 or big == 0:
            out.append(ThresholdRatio(high, low, None, "zero threshold"))
        elif small < 0:
            out.append(ThresholdRatio(high, low, None, "negative threshold, ratio not meaningful"))
        else:
            out.append(ThresholdRatio(high, low, big / small))
    return out


@dataclass(frozen=True)
class TradeoffPoint:
    min_strength: float
    comparable_count: int


def tradeoff_curve(
    rulesets: Mapping[str, RuleSet],
    thresholds: Sequence[float],
    metric: str = "strength",
) -> list[TradeoffPoint]:
    """Number of comparable groups left after filtering every rule set at each threshold."""
    thresholds = list(thresholds)
    if thresholds != sorted(thresholds):
        raise ValueError("thresholds must be sorted ascending")
    points = []
    for t in thresholds:
        filtered = {s: filter_rules(rs, t, metric=metric) for s, rs in rulesets.items()}
        points.append(TradeoffPoint(float(t), len(align_rules(filtered))))
    counts = [p.comparable_count for p in points]
    if any(b > a for a, b in zip(counts, counts[1:])):
        raise AssertionError(f"trade-off counts increased with the threshold: {counts}")
    return points


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple[str, ...]
    matrix: np.ndarray
    undefined: tuple[str, ...] = ()

    def get(self, a: str, b: str) -> float:
        return float(self.matrix[self.labels.index(a), self.labels.index(b)])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.matrix, index=list(self.labels), columns=list(self.labels))


def correlations(table: InformationTable) -> CorrelationMatrix:
    """Pearson r among all criteria and the decision (encoded as rank 1..m)."""
    if len(table) < 2:
        raise TableError("correlations need at least two observations")
    labels = tuple(c.name for c in table.criteria) + (table.decision.name,)
    data = np.column_stack([table.values, table.ranks + 1.0])
    centred = data - data.mean(axis=0)
    norms = np.sqrt((centred**2).sum(axis=0))
    flat = norms == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = centred / norms
        r = np.clip(unit.T @ unit, -1.0, 1.0)
    r[flat, :] = np.nan
    r[:, flat] = np.nan
    r = (r + r.T) / 2
    np.fill_diagonal(r, np.where(flat, np.nan, 1.0))
    undefined = tuple(labels[i] for i in np.flatnonzero(flat))
    for name in undefined:
        log.warning("correlation undefined for zero-variance column %s", name)
    return CorrelationMatrix(labels, r, undefined)


def tier_shares(table: InformationTable) -> dict[str, float]:
    """Percentage of observations in each decision class (all classes listed)."""
    if len(table) == 0:
        raise TableError("empty table")
    counts = np.bincount(table.ranks, minlength=len(table.classes))
    return {c: 100.0 * n / len(table) for c, n in zip(table.classes, counts)}


@dataclass(frozen=True)
class TierDistribution:
    over_time: pd.DataFrame
    box: pd.DataFrame
    shares: pd.DataFrame


def _frame(table: InformationTable, date_key: str, segment_key: str) -> pd.DataFrame:
    lacking = [o.id for o in table.observations if date_key not in o.meta or segment_key not in o.meta]
    if lacking:
        raise TableError(f"observations lack {date_key!r}/{segment_key!r} meta: {lacking[:10]}")
    df = pd.DataFrame(table.values, columns=[c.name for c in table.criteria])
    df["tier"] = pd.Categorical([o.decision for o in table.observations], categories=table.classes)
    df["date"] = [o.meta[date_key] for o in table.observations]
    df["segment"] = [o.meta[segment_key] for o in table.observations]
    return df


def tier_distribution(
    table: InformationTable, date_key: str = "date", segment_key: str = SEGMENT_KEY
) -> TierDistribution:
    """Tidy frames for plotting: counts over time, box summaries and shares.

    Every frame includes an ``ALL`` segment pooling the whole table.
    """
    df = _frame(table, date_key, segment_key)
    pooled = pd.concat([df, df.assign(segment="ALL")], ignore_index=True)

    over = pooled.groupby(["date", "segment", "tier"], observed=False).size().rename("count").reset_index()
    totals = over.groupby(["date", "segment"])["count"].transform("sum")
    over = over[totals > 0].copy()
    over["share"] = 100.0 * over["count"] / totals[totals > 0]

    names = [c.name for c in table.criteria]
    long = pooled.melt(id_vars=["segment", "tier"], value_vars=names, var_name="criterion")
    box = (
        long.groupby(["segment", "tier", "criterion"], observed=True)["value"]
        .agg(
            n="count",
            min="min",
            q1=lambda s: s.quantile(0.25),
            median="median",
            q3=lambda s: s.quantile(0.75),
            max="max",
        )
        .reset_index()
    )

    shares = pooled.groupby(["segment", "tier"], observed=False).size().rename("count").reset_index()
    shares["share"] = 100.0 * shares["count"] / shares.groupby("segment")["count"].transform("sum")
    for frame in (over, box, shares):
        frame["tier"] = frame["tier"].astype(str)
    return TierDistribution(
        over.sort_values(["date", "segment", "tier"]).reset_index(drop=True),
        box.sort_values(["segment", "tier", "criterion"]).reset_index(drop=True),
        shares.sort_values(["segment", "tier"]).reset_index(drop=True),
    )


def groups_frame(groups: Sequence[ComparableRuleGroup], criteria: Sequence[str]) -> pd.DataFrame:
    """One row per (group, segment) with thresholds, metrics and ratios."""
    rows = []
    for i, g in enumerate(groups):
        ratios = {(t.high, t.low): t for t in threshold_ratios(g)}
        sig = " & ".join(f"{criteria[q]} {rel}" for q, rel in zip(g.signature, g.relations))
        for segment, e in g.per_segment:
            pairs = [
                f"{t.high}/{t.low}={'' if t.ratio is None else round(t.ratio, 4)}"
                for (h, l), t in ratios.items()
                if segment in (h, l)
            ]
            rows.append(
                {
                    "group": i,
                    "consequent": f"{g.kind.phrase} {g.threshold}",
                    "signature": sig,
                    "segment": segment,
                    "thresholds": ";".join(repr(float(v)) for v in e.thresholds),
                    "support": e.support,
                    "strength": round(e.strength, 6),
                    "confidence": round(e.confidence, 6),
                    "ratios": " ".join(pairs),
                }
            )
    columns = ["group", "consequent", "signature", "segment", "thresholds", "support", "strength", "confidence", "ratios"]
    return pd.DataFrame(rows, columns=columns)

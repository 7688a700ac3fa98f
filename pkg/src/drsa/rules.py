"""Decision rules: conditions, metrics, filtering, minimality and the .rls format."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dominance import UnionKind, consistent_mask, union_mask
from .table import InformationTable, TableError, _fmt_number

GE = ">="
LE = "<="


@dataclass(frozen=True, order=True)
class ElementaryCondition:
    criterion: int
    relation: str
    threshold: float

    def __post_init__(self):
        if self.relation not in (GE, LE):
            raise ValueError(f"relation must be >= or <=, got {self.relation!r}")
        object.__setattr__(self, "threshold", float(self.threshold))

    def holds(self, values: Sequence[float]) -> bool:
        v = values[self.criterion]
        return v >= self.threshold if self.relation == GE else v <= self.threshold

    def mask(self, table_values: np.ndarray) -> np.ndarray:
        col = table_values[:, self.criterion]
        return col >= self.threshold if self.relation == GE else col <= self.threshold

    def text(self, names: Sequence[str]) -> str:
        return f"({names[self.criterion]} {self.relation} {_fmt_number(self.threshold)})"


@dataclass(frozen=True)
class RuleMetrics:
    cover: frozenset[str]
    support: int
    strength: float
    confidence: float


@dataclass(frozen=True)
class DecisionRule:
    """IF all ``conditions`` hold THEN the decision is ``kind`` ``threshold``.

    Metrics are stored alongside the rule; ``cover`` is ``None`` for rules
    read back from a file.
    """

    conditions: tuple[ElementaryCondition, ...]
    kind: UnionKind
    threshold: str
    support: int = 0
    strength: float = 0.0
    confidence: float = 0.0
    cover: frozenset[str] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        conds = tuple(sorted(self.conditions))
        if not conds:
            raise ValueError("a decision rule needs at least one condition")
        crits = [c.criterion for c in conds]
        if len(set(crits)) != len(crits):
            raise ValueError(f"conditions must use distinct criteria, got {crits}")
        object.__setattr__(self, "conditions", conds)
        object.__setattr__(self, "kind", UnionKind(self.kind))
        object.__setattr__(self, "threshold", str(self.threshold))

    @property
    def key(self) -> tuple:
        return (self.kind, self.threshold, self.conditions)

    @property
    def length(self) -> int:
        return len(self.conditions)

    @property
    def signature(self) -> tuple[int, ...]:
        return tuple(c.criterion for c in self.conditions)

    @property
    def thresholds(self) -> tuple[float, ...]:
        return tuple(c.threshold for c in self.conditions)

    def covers(self, values: Sequence[float]) -> bool:
        return all(c.holds(values) for c in self.conditions)

    def cover_mask(self, table: InformationTable) -> np.ndarray:
        mask = np.ones(len(table), dtype=bool)
        for c in self.conditions:
            mask &= c.mask(table.values)
        return mask

    def antecedent_text(self, names: Sequence[str]) -> str:
        return " and ".join(c.text(names) for c in self.conditions)

    def consequent_text(self, class_prefix: str = "") -> str:
        return f"{self.kind.phrase} {class_prefix}{self.threshold}"

    def with_metrics(self, metrics: RuleMetrics) -> DecisionRule:
        return replace(
            self,
            support=metrics.support,
            strength=metrics.strength,
            confidence=metrics.confidence,
            cover=metrics.cover,
        )


@dataclass(frozen=True)
class InductionParams:
    min_strength: float = 0.0
    max_length: int | None = None
    strategy: str = "all"

    def __post_init__(self):
        if not 0.0 <= self.min_strength <= 100.0:
            raise ValueError(f"min_strength must be within [0, 100], got {self.min_strength}")
        if self.max_length is not None and self.max_length < 1:
            raise ValueError(f"max_length must be >= 1, got {self.max_length}")
        if self.strategy not in ("all", "domlem"):
            raise ValueError(f"unknown induction strategy {self.strategy!r}")


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[DecisionRule, ...]
    params: InductionParams = InductionParams()
    source: str = ""
    criteria: tuple[str, ...] = ()
    classes: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "criteria", tuple(self.criteria))
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "notes", tuple(self.notes))

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def class_rank(self, label: str) -> int:
        return self.classes.index(label)


def sort_key(rule: DecisionRule, classes: Sequence[str]) -> tuple:
    kind_order = 0 if rule.kind is UnionKind.AT_MOST else 1
    rank = classes.index(rule.threshold) if rule.threshold in classes else -1
    return (
        kind_order,
        rank,
        rule.length,
        rule.signature,
        tuple(c.threshold if c.relation == GE else -c.threshold for c in rule.conditions),
        tuple(c.relation for c in rule.conditions),
    )


def canonical(rules: Iterable[DecisionRule], classes: Sequence[str]) -> tuple[DecisionRule, ...]:
    return tuple(sorted(rules, key=lambda r: sort_key(r, classes)))


def rule_metrics(rule: DecisionRule, table: InformationTable) -> RuleMetrics:
    """Cover, support, strength (% of the union) and confidence (% of the cover)."""
    k = len(table.criteria)
    for c in rule.conditions:
        if not 0 <= c.criterion < k:
            raise TableError(f"rule uses criterion {c.criterion}, table has {k}")
    cover = rule.cover_mask(table)
    members = union_mask(table, rule.kind, rule.threshold)
    support = int(np.count_nonzero(cover & members))
    n_union = int(np.count_nonzero(members))
    n_cover = int(np.count_nonzero(cover))
    strength = 100.0 * support / n_union if n_union else 0.0
    confidence = 100.0 * support / n_cover if n_cover else 0.0
    return RuleMetrics(table.ids_of(cover), support, strength, confidence)


def evaluate(rule: DecisionRule, table: InformationTable) -> DecisionRule:
    return rule.with_metrics(rule_metrics(rule, table))


def filter_rules(
    ruleset: RuleSet,
    min_strength: float = 0.0,
    max_length: int | None = None,
    metric: str = "strength",
) -> RuleSet:
    """Keep rules whose ``metric`` reaches ``min_strength`` and whose length is bounded."""
    if metric not in ("strength", "confidence"):
        raise ValueError(f"metric must be strength or confidence, got {metric!r}")
    kept = tuple(
        r
        for r in ruleset.rules
        if getattr(r, metric) >= min_strength - 1e-9
        and (max_length is None or r.length <= max_length)
    )
    floor = ruleset.params.min_strength
    if metric == "strength":
        floor = min(100.0, max(floor, min_strength))
    params = replace(
        ruleset.params,
        min_strength=floor,
        max_length=_min_opt(ruleset.params.max_length, max_length),
    )
    return replace(ruleset, rules=kept, params=params)


def _min_opt(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _certain_region(table: InformationTable, kind: UnionKind, threshold: str) -> np.ndarray:
    members = union_mask(table, kind, threshold)
    values = table.oriented if kind is UnionKind.AT_LEAST else -table.oriented
    return consistent_mask(values, members)


def _implies(general: DecisionRule, specific: DecisionRule, classes: Sequence[str]) -> bool:
    """``general`` makes ``specific`` superfluous: same direction, at least as
    strong a conclusion, and a subset of its conditions."""
    if general.kind is not specific.kind:
        return False
    g, s = classes.index(general.threshold), classes.index(specific.threshold)
    stronger = g >= s if general.kind is UnionKind.AT_LEAST else g <= s
    return stronger and set(general.conditions) <= set(specific.conditions)


def check_minimality(ruleset: RuleSet, table: InformationTable) -> list[str]:
    """Diagnostics for redundant conditions and for subsumed rules.

    A condition is redundant when the rule without it still covers only the
    certain region (lower approximation) of its union. A rule is subsumed when
    another rule concludes an at-least-as-strong union from a subset of its
    conditions; exact duplicates are reported once.
    """
    names = [c.name for c in table.criteria]
    classes = table.classes
    diags: list[str] = []
    for r in ruleset.rules:
        certain = _certain_region(table, r.kind, r.threshold)
        if len(r.conditions) < 2:
            continue
        for c in r.conditions:
            rest = DecisionRule(tuple(x for x in r.conditions if x != c), r.kind, r.threshold)
            cover = rest.cover_mask(table)
            if not np.any(cover & ~certain):
                diags.append(
                    f"redundant condition {c.text(names)} in rule "
                    f"{r.antecedent_text(names)} -> {r.consequent_text()}"
                )
    rules = ruleset.rules
    for i, a in enumerate(rules):
        for j, b in enumerate(rules):
            if i == j:
                continue
            if a.key == b.key:
                if i < j:
                    diags.append(
                        f"duplicate rule {a.antecedent_text(names)} -> {a.consequent_text()}"
                    )
                continue
            if _implies(b, a, classes):
                diags.append(
                    f"rule {a.antecedent_text(names)} -> {a.consequent_text()} is subsumed by "
                    f"{b.antecedent_text(names)} -> {b.consequent_text()}"
                )
    return diags


# -- .rls text format ----------------------------------------------------------

_RULE_LINE = re.compile(
    r"^IF\s+(?P<ante>.+?)\s+THEN\s+\(class\s+(?P<rel>>=|<=)\s+(?P<cls>\S+?)\)"
    r"(?:\s*\|\s*(?P<metrics>.*))?$"
)
_COND = re.compile(r"^\((?P<name>.+?)\s+(?P<rel>>=|<=)\s+(?P<val>\S+)\)$")
_METRIC = re.compile(r"(support|strength|confidence)=([-+0-9.eE]+)%?")


def format_rule(rule: DecisionRule, names: Sequence[str]) -> str:
    ante = " AND ".join(c.text(names) for c in rule.conditions)
    return (
        f"IF {ante} THEN (class {rule.kind.relation} {rule.threshold}) | "
        f"support={rule.support} strength={rule.strength:.2f}% confidence={rule.confidence:.2f}%"
    )


def dumps_rls(ruleset: RuleSet) -> str:
    lines = [
        f"# criteria: {json.dumps(list(ruleset.criteria))}",
        f"# classes: {json.dumps(list(ruleset.classes))}",
        f"# params: {json.dumps(_params_dict(ruleset.params), sort_keys=True)}",
    ]
    if ruleset.source:
        lines.append(f"# source: {json.dumps(ruleset.source)}")
    for note in ruleset.notes:
        lines.append(f"# note: {json.dumps(note)}")
    lines += [format_rule(r, ruleset.criteria) for r in ruleset.rules]
    return "\n".join(lines) + "\n"


def write_rls(ruleset: RuleSet, path: str | Path) -> None:
    Path(path).write_text(dumps_rls(ruleset), encoding="utf-8")


def _params_dict(p: InductionParams) -> dict:
    return {"min_strength": p.min_strength, "max_length": p.max_length, "strategy": p.strategy}


def loads_rls(text: str, criteria: Sequence[str] | None = None, source: str = "") -> RuleSet:
    """Parse the .rls format written by :func:`dumps_rls`.

    Criterion names resolve against ``criteria`` if given, else the
    ``# criteria:`` header, else the order of first appearance.
    """
    header: dict[str, object] = {}
    body: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            key = key.strip()
            try:
                parsed = json.loads(value)
            except json.JSONDecodeError:
                parsed = value.strip()
            if key == "note":
                header.setdefault("notes", []).append(parsed)  # type: ignore[union-attr]
            else:
                header[key] = parsed
            continue
        body.append((lineno, line))

    names = list(criteria) if criteria is not None else list(header.get("criteria", []))  # type: ignore[arg-type]
    learn = criteria is None and not names
    classes = [str(c) for c in header.get("classes", [])]  # type: ignore[union-attr]
    rules = []
    for lineno, line in body:
        m = _RULE_LINE.match(line)
        if not m:
            raise TableError(f"line {lineno}: not a rule: {line!r}")
        conds = []
        for part in re.split(r"\s+(?:AND|and)\s+", m.group("ante")):
            cm = _COND.match(part.strip())
            if not cm:
                raise TableError(f"line {lineno}: malformed condition {part!r}")
            name = cm.group("name")
            if name not in names:
                if not learn:
                    raise TableError(f"line {lineno}: unknown criterion {name!r}")
                names.append(name)
            try:
                value = float(cm.group("val"))
            except ValueError:
                raise TableError(f"line {lineno}: bad threshold {cm.group('val')!r}") from None
            conds.append(ElementaryCondition(names.index(name), cm.group("rel"), value))
        kind = UnionKind.AT_LEAST if m.group("rel") == GE else UnionKind.AT_MOST
        cls = m.group("cls")
        if classes and cls not in classes:
            raise TableError(f"line {lineno}: unknown class {cls!r}")
        metrics = dict(_METRIC.findall(m.group("metrics") or ""))
        rules.append(
            DecisionRule(
                tuple(conds),
                kind,
                cls,
                support=int(float(metrics.get("support", 0))),
                strength=float(metrics.get("strength", 0.0)),
                confidence=float(metrics.get("confidence", 0.0)),
            )
        )
    params = header.get("params") or {}
    if not isinstance(params, dict):
        params = {}
    if not classes:
        classes = sorted({r.threshold for r in rules}, key=_label_key)
    return RuleSet(
        tuple(rules),
        InductionParams(**params),
        source=str(header.get("source", source)),
        criteria=tuple(names),
        classes=tuple(classes),
        notes=tuple(str(n) for n in header.get("notes", [])),  # type: ignore[union-attr]
    )


def _label_key(label: str):
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)


def read_rls(path: str | Path, criteria: Sequence[str] | None = None) -> RuleSet:
    path = Path(path)
    return loads_rls(path.read_text(encoding="utf-8"), criteria, source=path.stem)


def ruleset_to_dict(ruleset: RuleSet) -> dict:
    names = ruleset.criteria
    return {
        "source": ruleset.source,
        "criteria": list(names),
        "classes": list(ruleset.classes),
        "params": _params_dict(ruleset.params),
        "notes": list(ruleset.notes),
        "rules": [
            {
                "conditions": [
                    {
                        "criterion": names[c.criterion] if c.criterion < len(names) else c.criterion,
                        "relation": c.relation,
                        "threshold": c.threshold,
                    }
                    for c in r.conditions
                ],
                "consequent": {"kind": r.kind.value, "class": r.threshold},
                "support": r.support,
                "strength": r.strength,
                "confidence": r.confidence,
            }
            for r in ruleset.rules
        ],
    }


def ruleset_from_dict(data: dict) -> RuleSet:
    names = list(data.get("criteria", []))
    rules = []
    for r in data["rules"]:
        conds = []
        for c in r["conditions"]:
            crit = c["criterion"]
            idx = names.index(crit) if isinstance(crit, str) else int(crit)
            conds.append(ElementaryCondition(idx, c["relation"], c["threshold"]))
        rules.append(
            DecisionRule(
                tuple(conds),
                UnionKind(r["consequent"]["kind"]),
                r["consequent"]["class"],
                support=int(r["support"]),
                strength=float(r["strength"]),
                confidence=float(r["confidence"]),
            )
        )
    return RuleSet(
        tuple(rules),
        InductionParams(**data.get("params", {})),
        source=data.get("source", ""),
        criteria=tuple(names),
        classes=tuple(data.get("classes", [])),
        notes=tuple(data.get("notes", [])),
    )

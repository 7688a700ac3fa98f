"""Sorting unseen observations with an induced rule set."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .dominance import UnionKind
from .rules import DecisionRule, RuleSet
from .table import Observation

UNCOVERED = "uncovered"
CONFLICT = "conflict"


class ClassificationError(ValueError):
    pass


@dataclass(frozen=True)
class ClassificationResult:
    lower_bound: str
    upper_bound: str
    covering_rules: tuple[DecisionRule, ...]
    recommended: str
    flags: tuple[str, ...] = ()

    @property
    def interval(self) -> tuple[str, str]:
        return (self.lower_bound, self.upper_bound)


def _values(observation: Observation | Sequence[float]) -> tuple[float, ...]:
    if isinstance(observation, Observation):
        return observation.values
    return tuple(float(v) for v in observation)


def covering_rules(ruleset: RuleSet, observation: Observation | Sequence[float]) -> list[DecisionRule]:
    """Rules all of whose conditions the observation satisfies, in rule-set order."""
    values = _values(observation)
    needed = max((c.criterion for r in ruleset.rules for c in r.conditions), default=-1)
    if needed >= len(values):
        raise ClassificationError(
            f"observation has {len(values)} values but rules reference criterion {needed}"
        )
    for r in ruleset.rules:
        for c in r.conditions:
            if math.isnan(values[c.criterion]):
                raise ClassificationError(f"missing value for criterion {c.criterion}")
    return [r for r in ruleset.rules if r.covers(values)]


def classify(ruleset: RuleSet, observation: Observation | Sequence[float]) -> ClassificationResult:
    """Class interval implied by the covering rules, plus one recommended class.

    The lower bound is the strongest "at least" conclusion among covering
    rules (lowest class if none), the upper bound the strongest "at most"
    conclusion (highest class if none). Inside a consistent interval the
    bound backed by more total support is recommended, ties going to the
    lower class. When the bounds cross, the side with more total support wins
    (ties to the lower class) and the result is flagged ``conflict``.
    """
    classes = list(ruleset.classes)
    if len(classes) < 2:
        raise ClassificationError("rule set does not declare its decision classes")
    rank = {c: i for i, c in enumerate(classes)}
    cover = covering_rules(ruleset, observation)
    up = [r for r in cover if r.kind is UnionKind.AT_LEAST]
    down = [r for r in cover if r.kind is UnionKind.AT_MOST]
    lo = max((rank[r.threshold] for r in up), default=0)
    hi = min((rank[r.threshold] for r in down), default=len(classes) - 1)
    up_support = sum(r.support for r in up)
    down_support = sum(r.support for r in down)

    flags = []
    if not cover:
        flags.append(UNCOVERED)
    if lo > hi:
        flags.append(CONFLICT)
    if up_support > down_support:
        pick = lo
    elif down_support > up_support:
        pick = hi
    else:
        pick = min(lo, hi)
    return ClassificationResult(classes[lo], classes[hi], tuple(cover), classes[pick], tuple(flags))


def classify_many(ruleset: RuleSet, observations: Sequence[Observation]) -> list[ClassificationResult]:
    return [classify(ruleset, o) for o in observations]

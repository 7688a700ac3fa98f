"""Dominance relation, cones, class unions and rough approximations.

Criteria are compared in their preference direction (cost criteria are
negated first), so ``x`` dominates ``y`` when ``x`` is at least as good as
``y`` on every criterion. Ties count as dominance, which makes the relation
reflexive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .table import Criterion, InformationTable, Observation, TableError

# Rows per block when comparing many objects against the whole table.
_BLOCK = 512


class UnionKind(str, enum.Enum):
    AT_LEAST = "at_least"
    AT_MOST = "at_most"

    @property
    def relation(self) -> str:
        return ">=" if self is UnionKind.AT_LEAST else "<="

    @property
    def phrase(self) -> str:
        return "at least" if self is UnionKind.AT_LEAST else "at most"


@dataclass(frozen=True)
class ClassUnion:
    kind: UnionKind
    threshold: str
    members: frozenset[str]

    def __str__(self) -> str:
        return f"{self.kind.phrase} {self.threshold}"


@dataclass(frozen=True)
class ApproximationResult:
    union: ClassUnion
    lower: frozenset[str]
    upper: frozenset[str]

    @property
    def boundary(self) -> frozenset[str]:
        return self.upper - self.lower


def dominates(x: Observation, y: Observation, criteria: Sequence[Criterion]) -> bool:
    """True iff ``x`` is at least as good as ``y`` on every criterion."""
    for c in criteria:
        if c.sign * x.values[c.id] < c.sign * y.values[c.id]:
            return False
    return True


def _dominating_mask(table: InformationTable, i: int) -> np.ndarray:
    v = table.oriented
    return np.all(v >= v[i], axis=1)


def _dominated_mask(table: InformationTable, i: int) -> np.ndarray:
    v = table.oriented
    return np.all(v <= v[i], axis=1)


def dominating_set(table: InformationTable, oid: str) -> frozenset[str]:
    """Ids of all objects dominating ``oid`` (its positive cone, itself included)."""
    return table.ids_of(_dominating_mask(table, table.position(oid)))


def dominated_set(table: InformationTable, oid: str) -> frozenset[str]:
    """Ids of all objects dominated by ``oid`` (its negative cone, itself included)."""
    return table.ids_of(_dominated_mask(table, table.position(oid)))


def dominance_matrix(table: InformationTable) -> np.ndarray:
    """Boolean matrix ``M[i, j]`` = object i dominates object j. O(n^2) memory."""
    v = table.oriented
    return np.all(v[:, None, :] >= v[None, :, :], axis=2)


def _check_class(table: InformationTable, label: str) -> int:
    return table.decision.rank(label)


def upward_union(table: InformationTable, threshold: str) -> ClassUnion:
    t = _check_class(table, threshold)
    return ClassUnion(UnionKind.AT_LEAST, str(threshold), table.ids_of(table.ranks >= t))


def downward_union(table: InformationTable, threshold: str) -> ClassUnion:
    t = _check_class(table, threshold)
    return ClassUnion(UnionKind.AT_MOST, str(threshold), table.ids_of(table.ranks <= t))


def union_of(table: InformationTable, kind: UnionKind, threshold: str) -> ClassUnion:
    if kind is UnionKind.AT_LEAST:
        return upward_union(table, threshold)
    return downward_union(table, threshold)


def analysis_unions(table: InformationTable) -> list[ClassUnion]:
    """The non-degenerate unions: at most t for all but the top class, at least t for all but the bottom."""
    classes = table.classes
    down = [downward_union(table, c) for c in classes[:-1]]
    up = [upward_union(table, c) for c in classes[1:]]
    return down + up


def union_mask(table: InformationTable, kind: UnionKind, threshold: str) -> np.ndarray:
    t = _check_class(table, threshold)
    return table.ranks >= t if kind is UnionKind.AT_LEAST else table.ranks <= t


def _oriented_for(table: InformationTable, kind: UnionKind) -> np.ndarray:
    # Downward reasoning is upward reasoning on negated values.
    return table.oriented if kind is UnionKind.AT_LEAST else -table.oriented


def consistent_mask(values: np.ndarray, inside: np.ndarray) -> np.ndarray:
    """Objects in ``inside`` that no outside object dominates (in ``values`` order).

    This is the lower approximation of an upward union when ``values`` are
    oriented values; pass negated values for a downward union.
    """
    out = np.zeros(len(values), dtype=bool)
    pos = np.flatnonzero(inside)
    neg = values[~inside]
    if len(neg) == 0:
        out[pos] = True
        return out
    for start in range(0, len(pos), _BLOCK):
        block = pos[start : start + _BLOCK]
        hit = np.all(neg[None, :, :] >= values[block][:, None, :], axis=2).any(axis=1)
        out[block[~hit]] = True
    return out


def lower_mask(table: InformationTable, kind: UnionKind, threshold: str) -> np.ndarray:
    members = union_mask(table, kind, threshold)
    return consistent_mask(_oriented_for(table, kind), members)


def _resolve(table: InformationTable, union: ClassUnion) -> ClassUnion:
    if union.members != union_of(table, union.kind, union.threshold).members:
        raise TableError(f"union {union} was not built from this table")
    return union


def lower_approximation(table: InformationTable, union: ClassUnion) -> frozenset[str]:
    """Members whose whole relevant cone lies inside the union."""
    _resolve(table, union)
    return table.ids_of(lower_mask(table, union.kind, union.threshold))


def upper_approximation(table: InformationTable, union: ClassUnion) -> frozenset[str]:
    """Complement of the lower approximation of the complementary union."""
    _resolve(table, union)
    members = union_mask(table, union.kind, union.threshold)
    other = UnionKind.AT_MOST if union.kind is UnionKind.AT_LEAST else UnionKind.AT_LEAST
    complement_lower = consistent_mask(_oriented_for(table, other), ~members)
    return table.ids_of(~complement_lower)


def approximate(table: InformationTable, union: ClassUnion) -> ApproximationResult:
    return ApproximationResult(
        union, lower_approximation(table, union), upper_approximation(table, union)
    )


def quality_gamma(table: InformationTable) -> float:
    """Fraction of objects that lie in no union's boundary."""
    n = len(table)
    if n == 0:
        raise TableError("quality of classification needs a non-empty table")
    in_boundary = np.zeros(n, dtype=bool)
    for c in table.classes[1:]:
        # boundary(at least t) == boundary(at most t-1)
        members = union_mask(table, UnionKind.AT_LEAST, c)
        lower = consistent_mask(table.oriented, members)
        upper = ~consistent_mask(-table.oriented, ~members)
        in_boundary |= upper & ~lower
    return float(n - in_boundary.sum()) / n

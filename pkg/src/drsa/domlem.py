"""Induction of certain decision rules from lower approximations.

Two strategies are available; both only emit rules whose cover lies inside
the lower approximation of their union, and both cover every object of
every lower approximation (before length or strength filtering).

``"all"`` (default)
    For every object of a lower approximation, every condition-minimal
    subset of criteria on which that object's own values already form a
    certain rule. This is the exhaustive object-based rule set: it is what
    strength/length-constrained exploration filters down from.

``"domlem"``
    The sequential covering minimal set: greedy conditions chosen by
    ``|cover & G| / |cover|``, ties broken by larger ``|cover & G|``, lower
    criterion id, then less extreme threshold; redundant conditions and then
    redundant rules are removed.

Rules whose antecedent appears with a stronger conclusion of the same
direction (a subset of the conditions, same or stronger class) are dropped.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable

import numpy as np

from .dominance import ClassUnion, UnionKind, analysis_unions, consistent_mask, union_mask
from .rules import (
    GE,
    LE,
    DecisionRule,
    ElementaryCondition,
    InductionParams,
    RuleMetrics,
    RuleSet,
    canonical,
)
from .table import InformationTable, TableError, require_valid

log = logging.getLogger(__name__)

# Exhaustive subset enumeration is 2^k per object.
MAX_CRITERIA_ALL = 16
_BLOCK = 256

# (criterion id, index of the object whose value is the threshold)
_Antecedent = tuple[tuple[int, int], ...]


def _space(table: InformationTable, kind: UnionKind) -> np.ndarray:
    return table.oriented if kind is UnionKind.AT_LEAST else -table.oriented


def _relation(table: InformationTable, kind: UnionKind, q: int) -> str:
    gain = table.criteria[q].sign > 0
    return GE if gain == (kind is UnionKind.AT_LEAST) else LE


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _robust_antecedents(V: np.ndarray, lower: np.ndarray, max_len: int) -> list[_Antecedent]:
    """Condition-minimal certain antecedents built on each lower-approximation object."""
    n, k = V.shape
    neg = V[~lower]
    pos = np.flatnonzero(lower)
    if len(neg) == 0 or len(pos) == 0:
        return []
    full = 1 << k
    weights = 1 << np.arange(k)
    all_masks = np.arange(full)
    subsets = np.array([s for s in range(1, full) if _popcount(s) <= max_len], dtype=np.int64)
    bits = [1 << b for b in range(k)]

    found: dict[tuple, _Antecedent] = {}
    for start in range(0, len(pos), _BLOCK):
        block = pos[start : start + _BLOCK]
        b = len(block)
        ge = neg[None, :, :] >= V[block][:, None, :]  # (b, m, k)
        masks = ge.astype(np.int64) @ weights  # criteria on which a negative is at least as good
        present = np.zeros((b, full), dtype=bool)
        present[np.repeat(np.arange(b), masks.shape[1]), masks.ravel()] = True
        for bit in bits:
            lo = all_masks[(all_masks & bit) == 0]
            present[:, lo] |= present[:, lo | bit]
        certain = ~present  # S certain iff no negative matches the object on all of S
        minimal = certain[:, subsets].copy()
        for bit in bits:
            has = (subsets & bit) != 0
            minimal[:, has] &= ~certain[:, subsets[has] ^ bit]
        rows, cols = np.nonzero(minimal)
        for r, c in zip(rows.tolist(), cols.tolist()):
            x = int(block[r])
            s = int(subsets[c])
            qs = [q for q in range(k) if s & (1 << q)]
            key = (s, tuple(V[x, q] for q in qs))
            if key not in found:
                found[key] = tuple((q, x) for q in qs)
    return list(found.values())


def _domlem_antecedents(V: np.ndarray, lower: np.ndarray) -> list[_Antecedent]:
    """Sequential covering of the lower approximation (minimal rule set)."""
    n, k = V.shape
    if not lower.any() or lower.all():
        return []
    outside = ~lower
    G = lower.copy()
    rules: list[tuple[dict[int, int], np.ndarray]] = []
    while G.any():
        E: dict[int, int] = {}
        cov = np.ones(n, dtype=bool)
        while True:
            S = G & cov
            n_cov = int(cov.sum())
            best = None
            for q in range(k):
                col = V[:, q]
                sorted_cov = np.sort(col[cov])
                sorted_s = np.sort(col[S])
                cand = np.unique(sorted_s)
                n_new = len(sorted_cov) - np.searchsorted(sorted_cov, cand, side="left")
                g_new = len(sorted_s) - np.searchsorted(sorted_s, cand, side="left")
                ok = n_new < n_cov
                if not ok.any():
                    continue
                cand, n_new, g_new = cand[ok], n_new[ok], g_new[ok]
                ratio = g_new / n_new
                i = np.lexsort((cand, -g_new, -ratio))[0]
                key = (float(ratio[i]), int(g_new[i]), -q, -float(cand[i]))
                if best is None or key > best[0]:
                    best = (key, q, float(cand[i]))
            if best is None:  # unreachable for objects of a lower approximation
                raise RuntimeError("no condition narrows the current cover")
            _, q, v = best
            witness = int(np.flatnonzero(S & (V[:, q] == v))[0])
            E[q] = witness
            cov &= V[:, q] >= v
            if not (cov & outside).any():
                break
        for q in list(E):
            if len(E) == 1:
                break
            trial = np.ones(n, dtype=bool)
            for p, x in E.items():
                if p != q:
                    trial &= V[:, p] >= V[x, p]
            if not (trial & outside).any():
                del E[q]
        cover = np.ones(n, dtype=bool)
        for p, x in E.items():
            cover &= V[:, p] >= V[x, p]
        rules.append((E, cover))
        G &= ~cover
    kept = list(rules)
    for r in rules:
        others = [c for e, c in kept if e is not r[0]]
        if others and not (lower & ~np.logical_or.reduce(others)).any():
            kept = [x for x in kept if x[0] is not r[0]]
    return [tuple(sorted(e.items())) for e, _ in kept]


def _union_rules(
    table: InformationTable, union: ClassUnion, params: InductionParams, max_len: int
) -> list[DecisionRule]:
    members = union_mask(table, union.kind, union.threshold)
    if members.all() or not members.any():
        return []
    V = _space(table, union.kind)
    lower = consistent_mask(V, members)
    if params.strategy == "all":
        antecedents = _robust_antecedents(V, lower, max_len)
    else:
        antecedents = [a for a in _domlem_antecedents(V, lower) if len(a) <= max_len]
    raw = table.values
    out = []
    for ante in antecedents:
        conds = tuple(
            ElementaryCondition(q, _relation(table, union.kind, q), raw[x, q]) for q, x in ante
        )
        out.append(DecisionRule(conds, union.kind, union.threshold))
    return out


def prune_subsumed(rules: Iterable[DecisionRule], classes: tuple[str, ...]) -> list[DecisionRule]:
    """Drop duplicates and rules implied by a same-direction rule with a subset of
    the conditions and an at-least-as-strong conclusion."""
    rank = {c: i for i, c in enumerate(classes)}
    rules = list(dict.fromkeys(rules))
    strongest: dict[tuple, int] = {}
    for r in rules:
        key = (r.kind, frozenset(r.conditions))
        t = rank[r.threshold] if r.kind is UnionKind.AT_LEAST else -rank[r.threshold]
        strongest[key] = max(strongest.get(key, t), t)
    kept = []
    for r in rules:
        t = rank[r.threshold] if r.kind is UnionKind.AT_LEAST else -rank[r.threshold]
        conds = r.conditions
        implied = False
        n = len(conds)
        for s in range(1, 1 << n):
            sub = frozenset(conds[i] for i in range(n) if s & (1 << i))
            best = strongest.get((r.kind, sub))
            if best is None:
                continue
            if len(sub) < n and best >= t or len(sub) == n and best > t:
                implied = True
                break
        if not implied:
            kept.append(r)
    return kept


def induce(
    table: InformationTable,
    params: InductionParams | None = None,
    *,
    source: str = "",
    workers: int = 1,
) -> RuleSet:
    """Induce certain rules for every non-degenerate union of ``table``.

    ``params.max_length`` bounds rule length (clamped to the criteria
    count); ``params.min_strength`` filters the result. Output is in
    canonical order and independent of ``workers``.
    """
    params = params or InductionParams()
    require_valid(table)
    k = len(table.criteria)
    notes = []
    max_len = k if params.max_length is None else params.max_length
    if max_len > k:
        notes.append(f"max_length {max_len} clamped to {k} criteria")
        max_len = k
    if params.strategy == "all" and k > MAX_CRITERIA_ALL:
        raise TableError(
            f"strategy 'all' enumerates 2^k criteria subsets; k={k} is too large, use 'domlem'"
        )

    unions = analysis_unions(table)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda u: _union_rules(table, u, params, max_len), unions))
    else:
        parts = [_union_rules(table, u, params, max_len) for u in unions]
    rules = prune_subsumed([r for part in parts for r in part], table.classes)

    evaluated = []
    for r in rules:
        cover = r.cover_mask(table)
        members = union_mask(table, r.kind, r.threshold)
        support = int(np.count_nonzero(cover & members))
        strength = 100.0 * support / int(members.sum())
        if strength < params.min_strength - 1e-9:
            continue
        confidence = 100.0 * support / int(cover.sum())
        evaluated.append(r.with_metrics(RuleMetrics(table.ids_of(cover), support, strength, confidence)))

    if not evaluated:
        notes.append("no rules induced")
        log.info("no rules induced from %s", source or "table")
    return RuleSet(
        canonical(evaluated, table.classes),
        params,
        source=source,
        criteria=tuple(c.name for c in table.criteria),
        classes=table.classes,
        notes=tuple(notes),
    )

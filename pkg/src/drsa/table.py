"""Information table data model and file I/O (ISF and CSV)."""

from __future__ import annotations

import csv
import json
import math
import re
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

GAIN = "gain"
COST = "cost"


class TableError(ValueError):
    """Raised when a table or its source file violates the data model."""


class ParseError(TableError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")


@dataclass(frozen=True)
class Criterion:
    id: int
    name: str
    direction: str = GAIN

    @property
    def sign(self) -> float:
        return 1.0 if self.direction == GAIN else -1.0


@dataclass(frozen=True)
class DecisionAttribute:
    name: str
    classes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(str(c) for c in self.classes))

    def rank(self, label: str) -> int:
        try:
            return self.classes.index(str(label))
        except ValueError:
            raise TableError(f"unknown decision class {label!r}; declared {list(self.classes)}") from None


@dataclass(frozen=True)
class Observation:
    id: str
    values: tuple[float, ...]
    decision: str
    meta: Mapping[str, str] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "decision", str(self.decision))
        object.__setattr__(self, "meta", dict(self.meta))


@dataclass(frozen=True)
class InformationTable:
    """Criteria, an ordered decision attribute and the observations over them.

    Construction does not validate; loaders do, and :func:`validate` reports
    every invariant violation as data. Numeric views (``values``,
    ``ranks``) are computed once and cached.
    """

    criteria: tuple[Criterion, ...]
    decision: DecisionAttribute
    observations: tuple[Observation, ...]

    def __post_init__(self):
        object.__setattr__(self, "criteria", tuple(self.criteria))
        object.__setattr__(self, "observations", tuple(self.observations))

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def classes(self) -> tuple[str, ...]:
        return self.decision.classes

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(o.id for o in self.observations)

    @cached_property
    def index(self) -> dict[str, int]:
        return {oid: i for i, oid in enumerate(self.ids)}

    @cached_property
    def values(self) -> np.ndarray:
        arr = np.array([o.values for o in self.observations], dtype=float)
        return arr.reshape(len(self.observations), len(self.criteria))

    @cached_property
    def oriented(self) -> np.ndarray:
        """Values with cost criteria negated, so that larger is always better."""
        signs = np.array([c.sign for c in self.criteria], dtype=float)
        return self.values * signs

    @cached_property
    def ranks(self) -> np.ndarray:
        return np.array([self.decision.rank(o.decision) for o in self.observations], dtype=int)

    def position(self, oid: str) -> int:
        try:
            return self.index[str(oid)]
        except KeyError:
            raise KeyError(f"unknown observation id {oid!r}") from None

    def observation(self, oid: str) -> Observation:
        return self.observations[self.position(oid)]

    def criterion(self, name: str) -> Criterion:
        for c in self.criteria:
            if c.name == name:
                return c
        raise KeyError(f"unknown criterion {name!r}")

    def ids_of(self, mask: np.ndarray) -> frozenset[str]:
        ids = self.ids
        return frozenset(ids[i] for i in np.flatnonzero(mask))

    def mask_of(self, ids: Iterable[str]) -> np.ndarray:
        mask = np.zeros(len(self), dtype=bool)
        for oid in ids:
            mask[self.position(oid)] = True
        return mask

    def subset(self, ids: Iterable[str]) -> InformationTable:
        keep = set(map(str, ids))
        return InformationTable(
            self.criteria, self.decision, tuple(o for o in self.observations if o.id in keep)
        )


def make_table(
    criteria: Sequence[str],
    classes: Sequence[str],
    rows: Sequence[Sequence[float]],
    decisions: Sequence[str],
    *,
    decision_name: str = "class",
    ids: Sequence[str] | None = None,
    meta: Sequence[Mapping[str, str]] | None = None,
    directions: Sequence[str] | None = None,
) -> InformationTable:
    """Convenience constructor from plain Python sequences."""
    directions = directions or [GAIN] * len(criteria)
    crit = tuple(Criterion(i, n, d) for i, (n, d) in enumerate(zip(criteria, directions)))
    ids = ids if ids is not None else [str(i + 1) for i in range(len(rows))]
    meta = meta if meta is not None else [{}] * len(rows)
    obs = tuple(Observation(i, v, d, m) for i, v, d, m in zip(ids, rows, decisions, meta))
    return InformationTable(crit, DecisionAttribute(decision_name, tuple(classes)), obs)


def validate(table: InformationTable) -> list[str]:
    """Return one diagnostic string per violated invariant; empty when valid."""
    diags: list[str] = []
    k = len(table.criteria)
    ids = [c.id for c in table.criteria]
    if ids != list(range(k)):
        diags.append(f"criterion ids must be 0..{k - 1} in order, got {ids}")
    names = [c.name for c in table.criteria]
    for n in names:
        if not n or not n.strip():
            diags.append("criterion name is empty")
    for n in sorted({n for n in names if names.count(n) > 1}):
        diags.append(f"duplicate criterion name {n!r}")
    for c in table.criteria:
        if c.direction not in (GAIN, COST):
            diags.append(f"criterion {c.name!r} has unknown direction {c.direction!r}")
    classes = table.decision.classes
    if len(classes) < 2:
        diags.append("decision attribute needs at least 2 classes")
    for c in sorted({c for c in classes if classes.count(c) > 1}):
        diags.append(f"duplicate decision class {c!r}")
    if not table.observations:
        diags.append("table has no observations")
    seen: set[str] = set()
    for o in table.observations:
        if o.id in seen:
            diags.append(f"duplicate observation id {o.id!r}")
        seen.add(o.id)
        if len(o.values) != k:
            diags.append(f"observation {o.id!r} has {len(o.values)} values, expected {k}")
        for j, v in enumerate(o.values):
            if not math.isfinite(v):
                diags.append(f"observation {o.id!r} has non-finite value {v!r} on criterion {j}")
        if o.decision not in classes:
            diags.append(f"observation {o.id!r} has undeclared class {o.decision!r}")
    return diags


def require_valid(table: InformationTable) -> InformationTable:
    diags = validate(table)
    if diags:
        raise TableError("invalid information table: " + "; ".join(diags))
    return table


# -- ISF ---------------------------------------------------------------------

_SECTION = re.compile(r"^\*\*([A-Z]+)\s*$")
_ATTR = re.compile(r"^\+\s*(?P<name>.+?)\s*:\s*(?P<domain>.+?)\s*$")
_CLASSES = re.compile(r"^\[(?P<items>.*)\]$")


def _fmt_number(v: float) -> str:
    text = repr(float(v))
    return text[:-2] if text.endswith(".0") else text


def load_isf(path: str | Path) -> InformationTable:
    """Parse an information system file.

    Sections: ``**ATTRIBUTES`` (``+ name: (continuous)`` per criterion, the
    decision as ``+ name: [c1, c2, ...]`` in increasing order, then
    ``decision: name``), ``**PREFERENCES`` (``name: gain|cost``),
    ``**EXAMPLES`` (one whitespace-separated row per observation, decision
    label last), optional ``**METADATA`` (one JSON object per example with
    ``id`` and ``meta``) and ``**END``. ``#`` starts a comment line.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    spath = str(path)

    section = None
    attrs: list[tuple[str, int]] = []
    class_decl: dict[str, tuple[str, ...]] = {}
    decision_name: str | None = None
    decision_line = 0
    prefs: dict[str, str] = {}
    rows: list[tuple[int, list[str]]] = []
    metas: list[tuple[int, dict]] = []
    ended = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ended:
            raise ParseError("content after **END", lineno, spath)
        m = _SECTION.match(line)
        if m:
            name = m.group(1)
            if name not in ("ATTRIBUTES", "PREFERENCES", "EXAMPLES", "METADATA", "END"):
                raise ParseError(f"unknown section header {line!r}", lineno, spath)
            if name == "END":
                ended = True
            section = name
            continue
        if line.startswith("**"):
            raise ParseError(f"malformed section header {line!r}", lineno, spath)
        if section is None:
            raise ParseError("content before the first section header", lineno, spath)

        if section == "ATTRIBUTES":
            if line.startswith("decision:"):
                decision_name = line.split(":", 1)[1].strip()
                decision_line = lineno
                continue
            m = _ATTR.match(line)
            if not m:
                raise ParseError(f"malformed attribute line {line!r}", lineno, spath)
            name, domain = m.group("name"), m.group("domain")
            cm = _CLASSES.match(domain)
            if cm:
                labels = tuple(s.strip() for s in cm.group("items").split(",") if s.strip())
                class_decl[name] = labels
            elif domain == "(continuous)":
                attrs.append((name, lineno))
            else:
                raise ParseError(f"unsupported attribute domain {domain!r}", lineno, spath)
        elif section == "PREFERENCES":
            if ":" not in line:
                raise ParseError(f"malformed preference line {line!r}", lineno, spath)
            name, token = (s.strip() for s in line.rsplit(":", 1))
            if token not in (GAIN, COST):
                raise ParseError(f"preference must be gain or cost, got {token!r}", lineno, spath)
            prefs[name] = token
        elif section == "EXAMPLES":
            rows.append((lineno, line.split()))
        elif section == "METADATA":
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"metadata line is not JSON: {exc.msg}", lineno, spath) from None
            if not isinstance(entry, dict) or "id" not in entry:
                raise ParseError("metadata line needs an object with an 'id'", lineno, spath)
            metas.append((lineno, entry))

    if decision_name is None:
        raise ParseError("no 'decision: <name>' declaration in **ATTRIBUTES", None, spath)
    if decision_name not in class_decl:
        raise ParseError(
            f"decision attribute {decision_name!r} has no class list", decision_line, spath
        )
    if not attrs:
        raise ParseError("no criteria declared", None, spath)

    criteria = []
    for i, (name, lineno) in enumerate(attrs):
        direction = prefs.get(name)
        if direction is None:
            raise ParseError(f"no preference declared for criterion {name!r}", lineno, spath)
        criteria.append(Criterion(i, name, direction))
    decision = DecisionAttribute(decision_name, class_decl[decision_name])

    k = len(criteria)
    values: list[tuple[float, ...]] = []
    labels: list[str] = []
    for lineno, tokens in rows:
        if len(tokens) != k + 1:
            raise ParseError(
                f"expected {k} criterion values and a decision label, got {len(tokens)} fields",
                lineno,
                spath,
            )
        try:
            vals = tuple(float(t) for t in tokens[:k])
        except ValueError:
            bad = next(t for t in tokens[:k] if not _is_float(t))
            raise ParseError(f"non-numeric value {bad!r}", lineno, spath) from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError("non-finite criterion value", lineno, spath)
        if tokens[k] not in decision.classes:
            raise ParseError(f"unknown class label {tokens[k]!r}", lineno, spath)
        values.append(vals)
        labels.append(tokens[k])

    if metas and len(metas) != len(rows):
        raise ParseError(
            f"**METADATA has {len(metas)} entries for {len(rows)} examples", metas[-1][0], spath
        )
    if metas:
        ids = [str(e["id"]) for _, e in metas]
        meta = [{str(a): str(b) for a, b in e.get("meta", {}).items()} for _, e in metas]
    else:
        ids = [str(i + 1) for i in range(len(rows))]
        meta = [{} for _ in rows]

    table = InformationTable(
        tuple(criteria),
        decision,
        tuple(Observation(i, v, d, m) for i, v, d, m in zip(ids, values, labels, meta)),
    )
    diags = validate(table)
    if diags:
        raise ParseError("; ".join(diags), None, spath)
    return table


def _is_float(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _default_ids(table: InformationTable) -> bool:
    return list(table.ids) == [str(i + 1) for i in range(len(table))]


def dumps_isf(table: InformationTable) -> str:
    require_valid(table)
    for c in table.criteria:
        if ":" in c.name or c.name != c.name.strip():
            raise TableError(f"criterion name {c.name!r} cannot be written to ISF")
    for label in table.classes:
        if not label or any(ch.isspace() for ch in label) or "," in label:
            raise TableError(f"class label {label!r} cannot be written to ISF")
    out = ["**ATTRIBUTES"]
    out += [f"+ {c.name}: (continuous)" for c in table.criteria]
    out.append(f"+ {table.decision.name}: [{', '.join(table.classes)}]")
    out.append(f"decision: {table.decision.name}")
    out.append("")
    out.append("**PREFERENCES")
    out += [f"{c.name}: {c.direction}" for c in table.criteria]
    out.append(f"{table.decision.name}: {GAIN}")
    out.append("")
    out.append("**EXAMPLES")
    for o in table.observations:
        out.append(" ".join([_fmt_number(v) for v in o.values] + [o.decision]))
    if not _default_ids(table) or any(o.meta for o in table.observations):
        out.append("")
        out.append("**METADATA")
        for o in table.observations:
            out.append(json.dumps({"id": o.id, "meta": dict(sorted(o.meta.items()))}))
    out.append("")
    out.append("**END")
    return "\n".join(out) + "\n"


def write_isf(table: InformationTable, path: str | Path) -> None:
    Path(path).write_text(dumps_isf(table), encoding="utf-8")


# -- CSV ---------------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    """Maps CSV header names to roles.

    Roles are ``"criterion:<i>"``, ``"decision"``, ``"id"`` or
    ``"meta:<key>"``. ``classes`` gives the decision order; ``class_map``
    rewrites raw labels (e.g. ``{"Tier-2": "2"}``) before lookup.
    """

    columns: Mapping[str, str]
    classes: tuple[str, ...] | None = None
    class_map: Mapping[str, str] = field(default_factory=dict)
    directions: Mapping[int, str] = field(default_factory=dict)


def _parse_schema(schema: CsvSchema | Mapping[str, str]) -> CsvSchema:
    if isinstance(schema, CsvSchema):
        return schema
    return CsvSchema(dict(schema))


def load_observations_csv(path: str | Path, schema: CsvSchema | Mapping[str, str]) -> InformationTable:
    schema = _parse_schema(schema)
    spath = str(path)
    crit_cols: dict[int, str] = {}
    meta_cols: dict[str, str] = {}
    decision_col = id_col = None
    for col, role in schema.columns.items():
        if role == "decision":
            decision_col = col
        elif role == "id":
            id_col = col
        elif role.startswith("criterion:"):
            crit_cols[int(role.split(":", 1)[1])] = col
        elif role.startswith("meta:"):
            meta_cols[role.split(":", 1)[1]] = col
        else:
            raise TableError(f"unknown schema role {role!r} for column {col!r}")
    if decision_col is None:
        raise TableError("schema has no decision column")
    if sorted(crit_cols) != list(range(len(crit_cols))) or not crit_cols:
        raise TableError(f"criterion roles must be 0..k-1, got {sorted(crit_cols)}")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in schema.columns if c not in header]
        if missing:
            raise ParseError(f"missing column(s) {missing}", 1, spath)
        extra = [c for c in header if c not in schema.columns]
        if extra:
            warnings.warn(f"{spath}: ignoring column(s) {extra}", stacklevel=2)
        raw_rows = list(reader)

    def label_of(raw: str) -> str:
        raw = raw.strip()
        return schema.class_map.get(raw, raw)

    if schema.classes is not None:
        classes = tuple(str(c) for c in schema.classes)
    else:
        found = sorted({label_of(r[decision_col]) for r in raw_rows})
        try:
            classes = tuple(sorted(found, key=float))
        except ValueError:
            raise TableError(
                "class order cannot be inferred from non-numeric labels; set CsvSchema.classes"
            ) from None

    k = len(crit_cols)
    criteria = tuple(
        Criterion(i, crit_cols[i], schema.directions.get(i, GAIN)) for i in range(k)
    )
    obs = []
    for n, row in enumerate(raw_rows, start=2):
        vals = []
        for i in range(k):
            cell = (row[crit_cols[i]] or "").strip()
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"unparseable number {cell!r} in column {crit_cols[i]!r}", n, spath
                ) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite value in column {crit_cols[i]!r}", n, spath)
            vals.append(v)
        label = label_of(row[decision_col])
        if label not in classes:
            raise ParseError(f"unknown tier label {row[decision_col]!r}", n, spath)
        oid = row[id_col] if id_col is not None else str(n - 1)
        meta = {key: row[col] for key, col in meta_cols.items()}
        obs.append(Observation(oid, vals, label, meta))

    table = InformationTable(criteria, DecisionAttribute(decision_col, classes), tuple(obs))
    diags = validate(table)
    if diags:
        raise ParseError("; ".join(diags), None, spath)
    return table


def write_observations_csv(table: InformationTable, path: str | Path) -> CsvSchema:
    """Write a table as CSV and return the schema that reads it back."""
    meta_keys = sorted({k for o in table.observations for k in o.meta})
    header = ["id", *meta_keys, *(c.name for c in table.criteria), table.decision.name]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for o in table.observations:
            w.writerow(
                [o.id, *(o.meta.get(k, "") for k in meta_keys), *map(_fmt_number, o.values), o.decision]
            )
    cols = {"id": "id"}
    cols.update({k: f"meta:{k}" for k in meta_keys})
    cols.update({c.name: f"criterion:{c.id}" for c in table.criteria})
    cols[table.decision.name] = "decision"
    return CsvSchema(cols, table.classes, directions={c.id: c.direction for c in table.criteria})

"""Command-line entry point: ``drsa <subcommand> ...``.

Exit status is 0 on success, 1 on usage or validation errors and 2 on I/O
errors. Outputs go to ``--out``, else ``$DRSA_OUT_DIR``, else the current
directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

import pandas as pd

from . import compare as cmp
from .classify import CONFLICT, UNCOVERED, classify_many
from .datasets import COVID_REFERENCE_RULES, covid_example
from .dominance import analysis_unions, approximate, dominated_set, dominating_set, quality_gamma
from .domlem import induce
from .pipeline import PipelineError, build_dataset, load_snapshots
from .rules import InductionParams, RuleSet, dumps_rls, filter_rules, read_rls, ruleset_to_dict
from .table import CsvSchema, InformationTable, TableError, load_isf, load_observations_csv, write_isf, write_observations_csv

OUT_ENV = "DRSA_OUT_DIR"
DEFAULT_THRESHOLDS = "0,25,50,75,100"

log = logging.getLogger("drsa")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _pct(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 100.0:
        raise argparse.ArgumentTypeError(f"percentage must be within [0, 100], got {text}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _grid(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if values != sorted(values):
        raise argparse.ArgumentTypeError("thresholds must be ascending")
    return values


def _add_out(p: argparse.ArgumentParser, fmt: bool = True) -> None:
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or the current directory)")
    if fmt:
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="tabular output format")


def _add_induction(p: argparse.ArgumentParser) -> None:
    p.add_argument("--min-strength", type=_pct, default=0.0, help="minimum rule strength in percent")
    p.add_argument("--max-length", type=_positive, default=None, help="maximum number of conditions per rule")
    p.add_argument(
        "--strategy",
        choices=("all", "domlem"),
        default="all",
        help="all condition-minimal rules per object, or a sequential-covering minimal set",
    )
    p.add_argument("--workers", type=_positive, default=1, help="threads for per-union/segment induction")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="drsa", description="Dominance-based rough set rule induction and comparison.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pipeline", help="build the observation table from snapshot CSV files")
    p.add_argument("snapshots", help="directory with cases/positivity/occupancy/capacity/mapping/tiers/regions CSVs")
    p.add_argument("--window", type=_positive, default=7, help="rolling-average window in days")
    _add_out(p, fmt=False)

    p = sub.add_parser("induce", help="induce certain decision rules from a table (.isf or .csv)")
    p.add_argument("table")
    _add_induction(p)
    p.add_argument("--segments", metavar="COL", help="split by this meta column and induce per segment")
    _add_out(p)

    p = sub.add_parser("classify", help="classify the observations of a table with a rule file")
    p.add_argument("rules", help=".rls file")
    p.add_argument("table", help=".isf or .csv table")
    _add_out(p)

    p = sub.add_parser("compare", help="align rules across segments and report threshold ratios")
    p.add_argument("inputs", nargs="+", help="one table to split by segment, or two or more .rls files")
    _add_induction(p)
    p.add_argument("--segments", metavar="COL", default=cmp.SEGMENT_KEY, help="segment meta column")
    p.add_argument("--metric", choices=("strength", "confidence"), default="strength", help="metric filtered on")
    p.add_argument("--thresholds", type=_grid, default=_grid(DEFAULT_THRESHOLDS), help="ascending trade-off grid")
    _add_out(p)

    p = sub.add_parser("eda", help="correlations and tier distributions of a table")
    p.add_argument("table")
    p.add_argument("--segments", metavar="COL", default=cmp.SEGMENT_KEY, help="segment meta column")
    _add_out(p)

    p = sub.add_parser("demo", help="run the bundled ten-observation example end to end")
    p.add_argument("--min-strength", type=_pct, default=0.0, help="minimum rule strength in percent")
    _add_out(p, fmt=False)
    return parser


# -- I/O helpers --------------------------------------------------------------


def _out_dir(args) -> Path:
    path = Path(args.out or os.environ.get(OUT_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def infer_schema(path: str | Path) -> CsvSchema:
    """Schema for a CSV table: ``id`` column, last column as decision, numeric
    columns as criteria and anything else as metadata."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise TableError(f"{path}: empty CSV")
        rows = list(reader)
    decision = header[-1]
    columns = {}
    k = 0
    for j, name in enumerate(header[:-1]):
        cells = [r[j] for r in rows if j < len(r)]
        if name == "id":
            columns[name] = "id"
        elif cells and all(_is_number(c) for c in cells):
            columns[name] = f"criterion:{k}"
            k += 1
        else:
            columns[name] = f"meta:{name}"
    columns[decision] = "decision"
    return CsvSchema(columns)


def load_table(path: str | Path) -> InformationTable:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    if path.suffix.lower() == ".csv":
        return load_observations_csv(path, infer_schema(path))
    return load_isf(path)


def _write_frame(df: pd.DataFrame, out: Path, stem: str, fmt: str) -> Path:
    path = out / f"{stem}.{fmt}"
    if fmt == "json":
        path.write_text(df.to_json(orient="records", indent=2) + "\n", encoding="utf-8")
    else:
        df.to_csv(path, index=False, lineterminator="\n")
    return path


def _write_ruleset(rs: RuleSet, out: Path, stem: str, fmt: str) -> Path:
    if fmt == "json":
        path = out / f"{stem}.json"
        path.write_text(json.dumps(ruleset_to_dict(rs), indent=2) + "\n", encoding="utf-8")
    else:
        path = out / f"{stem}.rls"
        path.write_text(dumps_rls(rs), encoding="utf-8")
    return path


def _params(args) -> InductionParams:
    return InductionParams(args.min_strength, args.max_length, args.strategy)


# -- subcommands --------------------------------------------------------------


def cmd_pipeline(args) -> int:
    out = _out_dir(args)
    table, report = build_dataset(load_snapshots(args.snapshots), window=args.window)
    write_observations_csv(table, out / "observations.csv")
    write_isf(table, out / "observations.isf")
    summary = {
        "rows": report.rows,
        "dropped_missing_criteria": report.dropped_missing,
        "dropped_outside_tiers": report.dropped_untiered,
        "diagnostics": report.diagnostics,
    }
    (out / "pipeline_report.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(f"{report.rows} observations written to {out}")
    for d in report.diagnostics:
        print(f"  note: {d}")
    return 0


def cmd_induce(args) -> int:
    table = load_table(args.table)
    out = _out_dir(args)
    params = _params(args)
    if args.segments:
        parts = cmp.split_by_segment(table, args.segments)
        rulesets = cmp.extract_segment_rules(parts, params, workers=args.workers)
    else:
        rulesets = {Path(args.table).stem: induce(table, params, source=Path(args.table).stem, workers=args.workers)}
    for name, rs in rulesets.items():
        path = _write_ruleset(rs, out, name, args.format)
        print(f"{name}: {len(rs)} rules -> {path}")
        for note in rs.notes:
            print(f"  note: {note}")
    return 0


def cmd_classify(args) -> int:
    table = load_table(args.table)
    rs = read_rls(args.rules, criteria=[c.name for c in table.criteria])
    if rs.classes and tuple(rs.classes) != table.classes:
        raise TableError(f"rule classes {list(rs.classes)} differ from table classes {list(table.classes)}")
    results = classify_many(rs, table.observations)
    df = pd.DataFrame(
        {
            "id": [o.id for o in table.observations],
            "lower": [r.lower_bound for r in results],
            "upper": [r.upper_bound for r in results],
            "recommended": [r.recommended for r in results],
            "flags": [";".join(r.flags) for r in results],
        }
    )
    path = _write_frame(df, _out_dir(args), "classification", args.format)
    rank = {c: i for i, c in enumerate(table.classes)}
    inside = sum(
        rank[r.lower_bound] <= rank[o.decision] <= rank[r.upper_bound]
        for o, r in zip(table.observations, results)
    )
    uncovered = sum(UNCOVERED in r.flags for r in results)
    conflicts = sum(CONFLICT in r.flags for r in results)
    print(
        f"{len(results)} classified -> {path}; true class inside interval: {inside}/{len(results)}; "
        f"uncovered: {uncovered}; conflicts: {conflicts}"
    )
    return 0


def _eda_outputs(table: InformationTable, segment_key: str, out: Path, fmt: str) -> list[Path]:
    corr = cmp.correlations(table).to_frame().reset_index(names="label")
    written = [_write_frame(corr, out, "correlations", fmt)]
    has_meta = all("date" in o.meta and segment_key in o.meta for o in table.observations)
    if has_meta:
        dist = cmp.tier_distribution(table, segment_key=segment_key)
        written.append(_write_frame(dist.over_time, out, "tier_over_time", fmt))
        written.append(_write_frame(dist.box, out, "tier_box", fmt))
        written.append(_write_frame(dist.shares, out, "tier_shares", fmt))
    else:
        shares = cmp.tier_shares(table)
        frame = pd.DataFrame({"segment": "ALL", "tier": list(shares), "share": list(shares.values())})
        written.append(_write_frame(frame, out, "tier_shares", fmt))
        print(f"note: no date/{segment_key} metadata, distribution over time skipped", file=sys.stderr)
    return written


def cmd_compare(args) -> int:
    out = _out_dir(args)
    inputs = [Path(p) for p in args.inputs]
    for p in inputs:
        if not p.exists():
            raise FileNotFoundError(f"no such file: {p}")
    if len(inputs) == 1:
        table = load_table(inputs[0])
        parts = cmp.split_by_segment(table, args.segments)
        params = InductionParams(0.0, args.max_length, args.strategy)
        rulesets = cmp.extract_segment_rules(parts, params, workers=args.workers)
        for name, rs in rulesets.items():
            _write_ruleset(rs, out, name, "csv" if args.format == "csv" else "json")
        _eda_outputs(table, args.segments, out, args.format)
    else:
        if any(p.suffix.lower() != ".rls" for p in inputs):
            raise UsageError("compare takes one table or two or more .rls files")
        rulesets = {p.stem: read_rls(p) for p in inputs}
        if len(rulesets) != len(inputs):
            raise UsageError("rule files must have distinct names (the name is the segment label)")
    if len(rulesets) < 2:
        raise UsageError(f"need at least two segments to compare, found {list(rulesets)}")

    filtered = {
        s: filter_rules(rs, args.min_strength, args.max_length, metric=args.metric)
        for s, rs in rulesets.items()
    }
    criteria = next(iter(rulesets.values())).criteria
    groups = cmp.align_rules(filtered)
    gpath = _write_frame(cmp.groups_frame(groups, criteria), out, "groups", args.format)
    curve = cmp.tradeoff_curve(rulesets, args.thresholds, metric=args.metric)
    tframe = pd.DataFrame(
        {"threshold": [p.min_strength for p in curve], "count": [p.comparable_count for p in curve]}
    )
    tpath = _write_frame(tframe, out, "tradeoff", args.format)
    print(f"{len(groups)} comparable groups -> {gpath}")
    print(f"trade-off ({args.metric}) -> {tpath}")
    for p in curve:
        print(f"  {p.min_strength:g}%: {p.comparable_count}")
    return 0


def cmd_eda(args) -> int:
    table = load_table(args.table)
    for path in _eda_outputs(table, args.segments, _out_dir(args), args.format):
        print(f"wrote {path}")
    return 0


def _ids(ids) -> str:
    return "{" + ", ".join(sorted(ids, key=int)) + "}"


def cmd_demo(args) -> int:
    table = covid_example()
    names = [c.name for c in table.criteria]
    print("Observations")
    print(f"  {'id':>3}  " + "  ".join(f"{n:>16}" for n in names) + f"  {table.decision.name:>5}")
    for o in table.observations:
        print(f"  {o.id:>3}  " + "  ".join(f"{v:>16g}" for v in o.values) + f"  {o.decision:>5}")

    print("\nDominance cones")
    print(f"  {'id':>3}  {'dominating':<34}{'dominated'}")
    for oid in table.ids:
        print(f"  {oid:>3}  {_ids(dominating_set(table, oid)):<34}{_ids(dominated_set(table, oid))}")

    print("\nClass unions")
    for u in analysis_unions(table):
        a = approximate(table, u)
        label = f"{u.kind.phrase} T{u.threshold}"
        print(f"  {label:<12} {_ids(u.members):<28} lower {_ids(a.lower)}")
    print(f"  quality of classification: {quality_gamma(table):.2f}")

    rs = induce(table, InductionParams(min_strength=args.min_strength), source="demo")
    print(f"\nCertain rules ({len(rs)})")
    for i, r in enumerate(rs.rules, 1):
        print(
            f"  {i:>2}  {r.antecedent_text(names):<58} {r.consequent_text('T'):<12}"
            f" support {r.support}  strength {r.strength:6.2f}"
        )

    print("\nReference rules")
    found = {(r.antecedent_text(names), r.consequent_text("T")): r for r in rs.rules}
    hits = 0
    for i, (ante, cons, support, strength) in enumerate(COVID_REFERENCE_RULES, 1):
        r = found.get((ante, cons))
        ok = r is not None and r.support == support and abs(r.strength - strength) <= 0.01
        hits += ok
        print(f"  {i}  {'found  ' if ok else 'MISSING'}  {ante} -> {cons}  support {support}  strength {strength:.2f}")
    print(f"  {hits}/{len(COVID_REFERENCE_RULES)} reference rules induced")
    if args.out or os.environ.get(OUT_ENV):
        path = _write_ruleset(rs, _out_dir(args), "demo", "csv")
        print(f"\nrules written to {path}")
    return 0


COMMANDS = {
    "pipeline": cmd_pipeline,
    "induce": cmd_induce,
    "classify": cmd_classify,
    "compare": cmd_compare,
    "eda": cmd_eda,
    "demo": cmd_demo,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except OSError as e:
        print(f"drsa: I/O error: {e}", file=sys.stderr)
        return 2
    except (UsageError, TableError, PipelineError, ValueError) as e:
        print(f"drsa: error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

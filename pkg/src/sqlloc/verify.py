"""Execution-equivalence and structural checks, judge-report validation, flag records."""

from __future__ import annotations

import json
import math
import sqlite3
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from sqlloc.catalog import SchemaCatalog, open_readonly
from sqlloc.corpus import write_jsonl
from sqlloc.errors import (
    ConsistencyViolation, ExecutionError, LocalizationError, ParseFailure, QueryTimeout,
    SchemaViolation, UnbalancedBackticks,
)
from sqlloc.nl import backtick_spans
from sqlloc.ports import run_with_timeout
from sqlloc.sql import collect_identifiers, fold, has_outer_order_by, parse_sql

REL_TOL = 1e-9
DEFAULT_TIMEOUT = 30.0

PASS, FAIL, ERROR = "pass", "fail", "error"
FAILURE_CLASSES = ("none", "exec-mismatch", "exec-error", "schema-drift", "evidence-drift")


# -- result comparison -------------------------------------------------------


def cells_equal(a, b, rel_tol: float = REL_TOL) -> bool:
    if a is None or b is None:
        return a is None and b is None
    num_a = isinstance(a, (int, float)) and not isinstance(a, bool)
    num_b = isinstance(b, (int, float)) and not isinstance(b, bool)
    if num_a and num_b:
        if isinstance(a, int) and isinstance(b, int):
            return a == b
        return a == b or math.isclose(a, b, rel_tol=rel_tol, abs_tol=0.0)
    if num_a or num_b:
        return False
    return type(a) is type(b) and a == b


def _cell_key(v):
    if v is None:
        return (0, 0)
    if isinstance(v, (int, float)):
        return (1, v)
    if isinstance(v, str):
        return (2, v)
    return (3, bytes(v))


def _row_key(row):
    return tuple(_cell_key(v) for v in row)


def rows_equal(a: list, b: list, ordered: bool, rel_tol: float = REL_TOL) -> bool:
    """Sequence comparison when ``ordered``, multiset comparison otherwise."""
    if len(a) != len(b):
        return False
    if not ordered:
        if Counter(map(_row_key, a)) == Counter(map(_row_key, b)):
            return True
        a, b = sorted(a, key=_row_key), sorted(b, key=_row_key)
    for ra, rb in zip(a, b):
        if len(ra) != len(rb) or not all(cells_equal(x, y, rel_tol) for x, y in zip(ra, rb)):
            return False
    return True


def execute_query(db, sql: str, timeout: Optional[float] = DEFAULT_TIMEOUT, side: str = "query"):
    """Run ``sql`` read-only on ``db``; returns (rows, column count, elapsed ms)."""
    try:
        conn = open_readonly(db)
    except LocalizationError as exc:
        raise ExecutionError(side, str(exc)) from exc
    try:
        start = time.perf_counter()
        try:
            rows, ncols = run_with_timeout(conn, sql, timeout, side)
        except (sqlite3.Error, sqlite3.Warning) as exc:  # Warning: more than one statement
            raise ExecutionError(side, str(exc)) from exc
        return rows, ncols, (time.perf_counter() - start) * 1000.0
    finally:
        conn.close()


@dataclass
class ExecVerdict:
    status: str  # pass | fail
    ordered: bool
    detail: str = ""
    timings: tuple = (0.0, 0.0)  # ms: source, target


def verify_execution_equivalence(sql_src: str, db_src, sql_tgt: str, db_tgt,
                                 timeout: Optional[float] = DEFAULT_TIMEOUT) -> ExecVerdict:
    """Execute both queries and compare their results.

    Raises ExecutionError or QueryTimeout naming the failing side.
    """
    try:
        ordered = has_outer_order_by(parse_sql(sql_src))
    except LocalizationError as exc:
        raise ParseFailure(f"source SQL: {exc}") from exc
    rows_a, cols_a, ms_a = execute_query(db_src, sql_src, timeout, "source")
    rows_b, cols_b, ms_b = execute_query(db_tgt, sql_tgt, timeout, "target")
    timings = (ms_a, ms_b)
    if cols_a != cols_b:
        return ExecVerdict(FAIL, ordered, f"column count {cols_a} vs {cols_b}", timings)
    if len(rows_a) != len(rows_b):
        return ExecVerdict(FAIL, ordered, f"row count {len(rows_a)} vs {len(rows_b)}", timings)
    if not rows_equal(rows_a, rows_b, ordered):
        what = "row order or values differ" if ordered else "row multisets differ"
        return ExecVerdict(FAIL, ordered, what, timings)
    return ExecVerdict(PASS, ordered, "", timings)


# -- structural checks -------------------------------------------------------


@dataclass
class StructuralVerdict:
    structural: str
    missing: list = field(default_factory=list)
    evidence_links: str = PASS
    unknown_spans: list = field(default_factory=list)


def _known_names(catalog: SchemaCatalog, mapping=None) -> set:
    names = catalog.identifier_set()
    if mapping is not None:
        names |= {fold(n) for n in mapping.target_identifiers()}
    return names


def verify_structural_integrity(item, mapping, catalog_tgt: SchemaCatalog) -> StructuralVerdict:
    """Every table/column of ``item.sql_tgt`` and every backticked evidence span must
    name something in the localized schema."""
    try:
        ast = parse_sql(item.sql_tgt)
    except LocalizationError as exc:
        raise ParseFailure(str(exc)) from exc
    tables = {fold(t.name): t for t in catalog_tgt.tables}
    views = {fold(v.name): {fold(c) for c in v.columns} for v in catalog_tgt.views}
    all_columns = {fold(c.name) for t in catalog_tgt.tables for c in t.columns}
    for cols in views.values():
        all_columns |= cols
    missing = set()
    for occ in collect_identifiers(ast, catalog_tgt):
        key = fold(occ.text)
        if occ.kind == "table":
            if key not in tables and key not in views:
                missing.add(occ.text)
        elif occ.table is not None and fold(occ.table) in tables:
            if tables[fold(occ.table)].column(occ.text) is None:
                missing.add(f"{occ.table}.{occ.text}")
        elif occ.table is not None and fold(occ.table) in views:
            if key not in views[fold(occ.table)]:
                missing.add(f"{occ.table}.{occ.text}")
        elif key not in all_columns:
            missing.add(occ.text)

    verdict = StructuralVerdict(FAIL if missing else PASS, sorted(missing))
    known = _known_names(catalog_tgt, mapping)
    try:
        spans = backtick_spans(item.evidence_tgt or "")
    except UnbalancedBackticks:
        verdict.evidence_links = FAIL
        verdict.unknown_spans = ["`"]
        return verdict
    unknown = []
    for s in spans:
        parts = s.content.split(".") if "." in s.content else [s.content]
        if not all(fold(p) in known for p in parts):
            unknown.append(s.content)
    if unknown:
        verdict.evidence_links = FAIL
        verdict.unknown_spans = unknown
    return verdict


# -- per-item verdict ----------------------------------------------------------


@dataclass
class VerificationVerdict:
    item_id: int
    exec_equal: str = ERROR  # pass | fail | error
    ordered_compare: bool = False
    structural: str = PASS
    missing_identifiers: list = field(default_factory=list)
    evidence_links: str = PASS
    unknown_spans: list = field(default_factory=list)
    failure_class: str = "none"
    detail: str = ""
    timings: tuple = (0.0, 0.0)
    timed_out: bool = False

    @property
    def passed(self) -> bool:
        return self.failure_class == "none"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["timings"] = list(self.timings)
        return d


def classify(v: VerificationVerdict) -> str:
    if v.structural != PASS:
        return "schema-drift"
    if v.exec_equal == ERROR:
        return "exec-error"
    if v.exec_equal != PASS:
        return "exec-mismatch"
    if v.evidence_links != PASS:
        return "evidence-drift"
    return "none"


def verify_item(item, db_src, db_tgt, mapping, catalog_tgt: SchemaCatalog,
                timeout: Optional[float] = DEFAULT_TIMEOUT) -> VerificationVerdict:
    """Run every check on one localized item; never raises for item-level problems."""
    v = VerificationVerdict(item.item_id)
    try:
        s = verify_structural_integrity(item, mapping, catalog_tgt)
        v.structural, v.missing_identifiers = s.structural, s.missing
        v.evidence_links, v.unknown_spans = s.evidence_links, s.unknown_spans
    except ParseFailure as exc:
        v.structural, v.detail = FAIL, f"target SQL does not parse: {exc}"
        v.failure_class = "schema-drift"
        return v
    try:
        e = verify_execution_equivalence(item.sql_src, db_src, item.sql_tgt, db_tgt, timeout)
        v.exec_equal, v.ordered_compare, v.timings = e.status, e.ordered, e.timings
        v.detail = v.detail or e.detail
    except QueryTimeout as exc:
        v.exec_equal, v.timed_out, v.detail = ERROR, True, str(exc)
    except (ExecutionError, ParseFailure) as exc:
        v.exec_equal, v.detail = ERROR, str(exc)
    v.failure_class = classify(v)
    return v


# -- judge reports -----------------------------------------------------------

DIMENSIONS = (
    "intent_match", "constraints_preserved", "aggregation_match",
    "ordering_limit_match", "evidence_consistency", "literal_handling",
)
SEVERITIES = ("low", "medium", "high")
_REPORT_KEYS = set(DIMENSIONS) | {"overall_pass", "severity", "suggested_fix"}


@dataclass(frozen=True)
class RubricReport:
    dimensions: dict  # name -> (passed, reason)
    overall_pass: bool
    severity: str
    suggested_fix: str

    def to_dict(self) -> dict:
        out = {k: {"pass": p, "reason": r} for k, (p, r) in self.dimensions.items()}
        out.update(overall_pass=self.overall_pass, severity=self.severity,
                   suggested_fix=self.suggested_fix)
        return out


def validate_judge_report(raw, evidence_tr: Optional[str] = None) -> RubricReport:
    """Check a judge reply against the rubric schema and its consistency rules.

    ``evidence_tr`` is the evidence the judge saw; a failing
    ``evidence_consistency`` is only compatible with an overall pass when it is
    empty. When unknown (None) the dimension must pass.
    """
    if isinstance(raw, (str, bytes)):
        try:
            raw = json.loads(raw)
        except ValueError as exc:
            raise SchemaViolation("<root>", f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaViolation("<root>", "not a JSON object")
    missing = sorted(_REPORT_KEYS - set(raw))
    if missing:
        raise SchemaViolation(missing[0], "missing")
    extra = sorted(set(raw) - _REPORT_KEYS)
    if extra:
        raise SchemaViolation(extra[0], "unexpected key")
    dims = {}
    for name in DIMENSIONS:
        d = raw[name]
        if not isinstance(d, dict) or set(d) != {"pass", "reason"}:
            raise SchemaViolation(name, 'must be {"pass": bool, "reason": str}')
        if not isinstance(d["pass"], bool) or not isinstance(d["reason"], str):
            raise SchemaViolation(name, "pass must be boolean and reason a string")
        dims[name] = (d["pass"], d["reason"])
    if not isinstance(raw["overall_pass"], bool):
        raise SchemaViolation("overall_pass", "must be boolean")
    if raw["severity"] not in SEVERITIES:
        raise SchemaViolation("severity", f"must be one of {', '.join(SEVERITIES)}")
    fix = raw["suggested_fix"]
    if not isinstance(fix, str):
        raise SchemaViolation("suggested_fix", "must be a string")
    overall = raw["overall_pass"]
    if overall and fix != "":
        raise SchemaViolation("suggested_fix", "must be empty when overall_pass is true")
    if not overall and fix == "":
        raise SchemaViolation("suggested_fix", "must be non-empty when overall_pass is false")
    if overall:
        evidence_empty = evidence_tr is not None and not evidence_tr.strip()
        failing = [n for n, (p, _) in dims.items()
                   if not p and not (n == "evidence_consistency" and evidence_empty)]
        if failing:
            raise ConsistencyViolation("overall_pass is true but " + ", ".join(failing) + " failed")
    return RubricReport(dims, overall, raw["severity"], fix)


# -- flags -------------------------------------------------------------------

RESOLUTIONS = ("open", "corrected", "waived")


@dataclass
class FlagRecord:
    item_id: int
    reason: str  # a failure class, or a translation-stage problem
    detail: str = ""
    judge_report: Optional[dict] = None
    resolution: str = "open"
    corrected_fields: list = field(default_factory=list)
    reverified: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FlagRecord":
        return cls(**d)

    def resolve(self, resolution: str, corrected_fields=(), reverified: bool = False) -> None:
        """Close an open flag. ``corrected`` requires a passing re-verification."""
        if self.resolution != "open":
            raise ConsistencyViolation(f"flag for item {self.item_id} is already {self.resolution}")
        if resolution not in ("corrected", "waived"):
            raise ConsistencyViolation(f"cannot resolve a flag as {resolution!r}")
        if resolution == "corrected" and not reverified:
            raise ConsistencyViolation("a corrected flag needs a passing re-verification")
        self.resolution = resolution
        self.corrected_fields = list(corrected_fields)
        self.reverified = reverified


def load_flags(path) -> list[FlagRecord]:
    p = Path(path)
    if not p.exists():
        return []
    return [FlagRecord.from_dict(json.loads(line))
            for line in p.read_text(encoding="utf-8").splitlines() if line.strip()]


def save_flags(path, flags) -> None:
    write_jsonl(path, (f.to_dict() for f in sorted(flags, key=lambda f: f.item_id)))

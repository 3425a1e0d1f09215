"""Exact match, execution accuracy and valid efficiency score for prediction files."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

from sqlloc.corpus import read_corpus, read_records
from sqlloc.errors import (
    ExecutionError, LocalizationError, MissingPrediction, QueryTimeout, UnknownItem,
)
from sqlloc.ports import SqliteTimer
from sqlloc.sql import canonicalize, parse_sql
from sqlloc.sql import lexer
from sqlloc.verify import DEFAULT_TIMEOUT, execute_query, rows_equal


def exact_match_detail(pred: str, gold: str) -> tuple[int, str]:
    try:
        p = canonicalize(parse_sql(pred))
    except LocalizationError as exc:
        return 0, f"prediction does not parse: {exc}"
    try:
        g = canonicalize(parse_sql(gold))
    except LocalizationError as exc:
        return 0, f"gold does not parse: {exc}"
    return int(p == g), ""


def exact_match(pred: str, gold: str) -> int:
    """1 when both queries have the same canonical AST."""
    return exact_match_detail(pred, gold)[0]


def outer_order_by(sql: str) -> bool:
    """Whether the outermost statement sorts its result.

    Falls back to a token scan (ORDER at parenthesis depth zero) for SQL the
    parser does not support.
    """
    try:
        return bool(parse_sql(sql).order_by)
    except LocalizationError:
        pass
    try:
        tokens = lexer.tokenize(sql)
    except LocalizationError:
        return False
    depth = 0
    for tok in tokens:
        if tok.is_op("("):
            depth += 1
        elif tok.is_op(")"):
            depth -= 1
        elif depth == 0 and tok.is_keyword("ORDER"):
            return True
    return False


def execution_match(pred: str, gold: str, db, timeout: Optional[float] = DEFAULT_TIMEOUT,
                    gold_result=None) -> tuple[int, str]:
    """(bit, note). Gold failures raise; prediction failures score 0."""
    if gold_result is None:
        gold_result = execute_query(db, gold, timeout, "gold")
    gold_rows, gold_cols, _ = gold_result
    try:
        rows, cols, _ = execute_query(db, pred, timeout, "prediction")
    except QueryTimeout as exc:
        return 0, str(exc)
    except ExecutionError as exc:
        return 0, str(exc)
    if cols != gold_cols:
        return 0, f"column count {cols} vs {gold_cols}"
    return int(rows_equal(gold_rows, rows, outer_order_by(gold))), ""


def execution_accuracy(pred: str, gold: str, db, timeout: Optional[float] = DEFAULT_TIMEOUT) -> int:
    return execution_match(pred, gold, db, timeout)[0]


def efficiency_ratio(gold_time: float, pred_time: float, clamp: Optional[tuple] = None) -> float:
    """sqrt(E(gold) / E(pred)), optionally clamped to ``(low, high)``."""
    if pred_time <= 0:
        r = 1.0 if gold_time <= 0 else math.inf
    else:
        r = math.sqrt(max(gold_time, 0.0) / pred_time)
    if clamp is not None:
        r = min(max(r, clamp[0]), clamp[1])
    return r


def valid_efficiency_score(golds: list, preds: list, dbs: list, timer, ex_bits: Optional[list] = None,
                           clamp: Optional[tuple] = None, timeout: Optional[float] = DEFAULT_TIMEOUT):
    """VES in percent: 100/N * sum(ex_bit * sqrt(E(gold) / E(pred))).

    ``ex_bits`` may be passed when execution accuracy was already computed.
    Returns (ves, per-item ratios); incorrect items get ratio 0 and are not timed.
    """
    if not (len(golds) == len(preds) == len(dbs)):
        raise ValueError("golds, preds and dbs must have the same length")
    if not golds:
        return 0.0, []
    if ex_bits is None:
        ex_bits = [execution_accuracy(p, g, d, timeout) for g, p, d in zip(golds, preds, dbs)]
    ratios = []
    for g, p, d, bit in zip(golds, preds, dbs, ex_bits):
        if not bit:
            ratios.append(0.0)
            continue
        ratios.append(efficiency_ratio(timer.measure(g, d), timer.measure(p, d), clamp))
    return 100.0 * sum(ratios) / len(golds), ratios


@dataclass
class ItemScore:
    item_id: int
    em: int
    ex: int
    r_factor: float = 0.0
    note: str = ""


@dataclass
class MetricsReport:
    n: int
    em: float
    ex: float
    ves: float
    runs: int
    per_item: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n",
                              encoding="utf-8")


def score(golds: dict, preds: dict, db_for: Callable, runs: int = 3, timer=None,
          clamp: Optional[tuple] = None, timeout: Optional[float] = DEFAULT_TIMEOUT) -> MetricsReport:
    """Score ``preds`` ({item_id: sql}) against ``golds`` ({item_id: sql}).

    EM and EX are computed once. VES timing is repeated ``runs`` times and the
    per-item ratios averaged.
    """
    unknown = sorted(set(preds) - set(golds))
    if unknown:
        raise UnknownItem(unknown[0])
    missing = sorted(set(golds) - set(preds))
    if missing:
        raise MissingPrediction(missing[0])
    ids = sorted(golds)
    own_timer = timer is None
    timer = timer or SqliteTimer(timeout=timeout)
    per_item = []
    for i in ids:
        em, note = exact_match_detail(preds[i], golds[i])
        ex, ex_note = execution_match(preds[i], golds[i], db_for(i), timeout)
        per_item.append(ItemScore(i, em, ex, note=note or ex_note))
    golds_l = [golds[i] for i in ids]
    preds_l = [preds[i] for i in ids]
    dbs = [db_for(i) for i in ids]
    bits = [s.ex for s in per_item]
    totals = [0.0] * len(ids)
    ves_runs = []
    for _ in range(max(runs, 1)):
        ves, ratios = valid_efficiency_score(golds_l, preds_l, dbs, timer, bits, clamp, timeout)
        ves_runs.append(ves)
        totals = [t + r for t, r in zip(totals, ratios)]
    for s, t in zip(per_item, totals):
        s.r_factor = t / max(runs, 1)
    if own_timer:
        timer.close()
    n = len(ids)
    return MetricsReport(
        n=n,
        em=100.0 * sum(s.em for s in per_item) / n if n else 0.0,
        ex=100.0 * sum(bits) / n if n else 0.0,
        ves=sum(ves_runs) / len(ves_runs),
        runs=max(runs, 1),
        per_item=per_item,
    )


def database_path(db_dir, db_id: str) -> Path:
    """``<dir>/<db>/<db>.sqlite`` (the benchmark's layout) or ``<dir>/<db>.sqlite``."""
    db_dir = Path(db_dir)
    nested = db_dir / db_id / f"{db_id}.sqlite"
    return nested if nested.exists() else db_dir / f"{db_id}.sqlite"


def read_predictions(path) -> dict:
    preds = {}
    for rec in read_records(path):
        preds[int(rec["item_id"])] = rec["sql"]
    return preds


def evaluate_predictions(pred_file, corpus, db_dir, runs: int = 3, side: str = "src", timer=None,
                         clamp: Optional[tuple] = None,
                         timeout: Optional[float] = DEFAULT_TIMEOUT) -> MetricsReport:
    """Score a JSONL prediction file against the source or localized side of a corpus."""
    items = read_corpus(corpus)
    if side == "tgt":
        golds = {it.item_id: it.sql_tgt for it in items if it.sql_tgt is not None}
        dbs = {it.item_id: database_path(db_dir, it.db_id_tgt or it.db_id) for it in items}
    else:
        golds = {it.item_id: it.sql_src for it in items}
        dbs = {it.item_id: database_path(db_dir, it.db_id) for it in items}
    preds = read_predictions(pred_file)
    return score(golds, preds, dbs.__getitem__, runs, timer, clamp, timeout)


def render_metrics_table(results: dict, groups: Optional[list] = None) -> str:
    """``results[method][group] = MetricsReport`` as a text table with EA/VES/EM per group."""
    groups = groups or sorted({g for per in results.values() for g in per})
    head = ["Method"] + [f"{g} {m}" for g in groups for m in ("EA", "VES", "EM")]
    rows = [head]
    for method, per in results.items():
        row = [method]
        for g in groups:
            r = per.get(g)
            row += [f"{r.ex:.2f}", f"{r.ves:.2f}", f"{r.em:.2f}"] if r else ["-", "-", "-"]
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
    return "\n".join("  ".join(c.ljust(widths[0]) if j == 0 else c.rjust(widths[j])
                               for j, c in enumerate(r)) for r in rows)

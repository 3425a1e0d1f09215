"""Linguistic and structural corpus statistics, and side-by-side comparison."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Optional

from sqlloc.errors import EmptyCorpus, InvalidParameter
from sqlloc.ports import default_tokenize
from sqlloc.sql.lexer import count_tokens

LABELS = {
    "total_questions": "Total Questions",
    "avg_words_per_question": "Avg. Words per Question",
    "avg_chars_per_question": "Avg. Characters per Question",
    "avg_tokens_per_question": "Avg. Tokens per Question",
    "vocabulary_size": "Vocabulary Size (Unique)",
    "ttr": "Type-Token Ratio (TTR)",
    "avg_sql_tokens": "Avg. SQL Tokens",
    "avg_evidence_tokens": "Avg. Evidence Tokens",
}


@dataclass(frozen=True)
class StatsTable:
    total_questions: int
    avg_words_per_question: float
    avg_chars_per_question: float
    avg_tokens_per_question: float
    vocabulary_size: int
    ttr: float  # fraction, not percent
    avg_sql_tokens: float
    avg_evidence_tokens: float

    def to_dict(self) -> dict:
        return asdict(self)


def turkish_lower(text: str) -> str:
    """Lower-case with Turkish dotted/dotless i rules."""
    return text.replace("I", "ı").replace("İ", "i").lower()


def _texts(item, side: str):
    if side == "src":
        return item.question_src, item.evidence_src or "", item.sql_src
    if side == "tgt":
        if item.question_tgt is None or item.sql_tgt is None:
            raise InvalidParameter(f"item {item.item_id} has no localized fields")
        return item.question_tgt, item.evidence_tgt or "", item.sql_tgt
    raise InvalidParameter(f"side must be 'src' or 'tgt', got {side!r}")


def compute_corpus_stats(items, side: str = "src", tokenizer: Optional[Callable] = None,
                         turkish_case: bool = False) -> StatsTable:
    """Per-question averages plus vocabulary and type-token ratio.

    Words are whitespace-delimited; characters exclude trailing whitespace;
    the vocabulary and the TTR denominator are taken over tokenizer output.
    """
    items = list(items)
    if not items:
        raise EmptyCorpus("no items")
    tokenize = tokenizer or default_tokenize
    prep = turkish_lower if turkish_case else (lambda s: s)
    words = chars = tokens = sql_tokens = evidence_tokens = 0
    vocab = set()
    for item in items:
        question, evidence, sql = _texts(item, side)
        words += len(question.split())
        chars += len(question.rstrip())
        toks = tokenize(prep(question))
        tokens += len(toks)
        vocab.update(toks)
        sql_tokens += count_tokens(sql)
        evidence_tokens += len(tokenize(prep(evidence))) if evidence else 0
    n = len(items)
    return StatsTable(
        total_questions=n,
        avg_words_per_question=words / n,
        avg_chars_per_question=chars / n,
        avg_tokens_per_question=tokens / n,
        vocabulary_size=len(vocab),
        ttr=len(vocab) / tokens if tokens else 0.0,
        avg_sql_tokens=sql_tokens / n,
        avg_evidence_tokens=evidence_tokens / n,
    )


def percent_change(a: float, b: float) -> Optional[float]:
    """(b - a) / a * 100 rounded to one decimal; None when ``a`` is zero."""
    if a == 0:
        return None
    return round((b - a) / a * 100.0, 1) + 0.0  # + 0.0 turns -0.0 into 0.0


def diff_stats(a: StatsTable, b: StatsTable) -> dict:
    if a.total_questions != b.total_questions:
        raise InvalidParameter("compared corpora must have the same number of questions")
    return {f.name: percent_change(getattr(a, f.name), getattr(b, f.name)) for f in fields(a)}


def _fmt(name: str, value) -> str:
    if name == "ttr":
        return f"{value * 100:.2f}%"
    if isinstance(value, int):
        return f"{value:,}"
    return f"{value:.2f}"


def render_comparison(a: StatsTable, b: StatsTable, left: str = "Source", right: str = "Target") -> str:
    """Plain-text table: one row per statistic with both values and the change."""
    change = diff_stats(a, b)
    rows = [("Statistic", left, right, "Change (%)")]
    for name, label in LABELS.items():
        c = change[name]
        shown = "--" if name == "total_questions" or c is None else f"{c:+.1f}%"
        rows.append((label, _fmt(name, getattr(a, name)), _fmt(name, getattr(b, name)), shown))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = []
    for i, r in enumerate(rows):
        lines.append("  ".join(c.ljust(widths[0]) if j == 0 else c.rjust(widths[j])
                               for j, c in enumerate(r)))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def save_stats(path, a: StatsTable, b: Optional[StatsTable] = None) -> None:
    out = {"source": a.to_dict()}
    if b is not None:
        out["target"] = b.to_dict()
        out["change_percent"] = diff_stats(a, b)
    Path(path).write_text(json.dumps(out, indent=2) + "\n", encoding="utf-8")

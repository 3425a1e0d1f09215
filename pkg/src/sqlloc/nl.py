"""Evidence standardization, question/evidence translation and frozen-content checks.

Frozen content is whatever a translation must not touch: backticked spans,
numbers, dates and single-quoted literals. Numbers, dates and literals are
compared as multisets because word order legitimately changes between
languages; backticked spans are compared in order.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from sqlloc.errors import (
    FrozenContentViolated, MalformedTranslatorReply, TranslatorUnavailable, UnbalancedBackticks,
)
from sqlloc.sql.resolve import fold

NUMBER = re.compile(r"\d+(?:[.,]\d+)*")
DEFAULT_DATE_PATTERNS = (r"\d{4}-\d{2}-\d{2}", r"\d{4}/\d{2}/\d{2}", r"(?<!\d)\d{4}(?!\d)")
# opening quote must not follow a word character, so "20'den" or "school's" do not open a literal
_LITERAL = re.compile(r"(?<![\w'])'([^'\n]*?)'(?!\w)")

# SQL words the translation should keep verbatim outside backticks (checked softly)
SQL_WORDS = (
    "SELECT DISTINCT FROM WHERE JOIN ON USING GROUP BY HAVING ORDER LIMIT OFFSET UNION "
    "INTERSECT EXCEPT WITH AS IN EXISTS BETWEEN LIKE GLOB IS NULL AND OR NOT CASE WHEN THEN "
    "ELSE END ASC DESC COUNT SUM AVG MIN MAX CAST COALESCE NULLIF SUBSTR INSTR LENGTH LOWER "
    "UPPER TRIM ROUND ABS STRFTIME DATE DATETIME"
).split()
_SQL_WORD = re.compile(r"\b(" + "|".join(SQL_WORDS) + r")\b")

TEXT_REPLY_KEYS = ("question_tr", "evidence_tr")


class Span(NamedTuple):
    start: int  # offset of the opening backtick
    end: int  # offset just past the closing backtick
    content: str


def backtick_spans(text: str) -> list[Span]:
    """Every ``...`` span, in order. Raises UnbalancedBackticks on an odd count."""
    marks = [i for i, ch in enumerate(text) if ch == "`"]
    if len(marks) % 2:
        raise UnbalancedBackticks(f"odd number of backticks in {text!r}")
    return [Span(a, b + 1, text[a + 1:b]) for a, b in zip(marks[::2], marks[1::2])]


def _outside_backticks(text: str) -> str:
    try:
        spans = backtick_spans(text)
    except UnbalancedBackticks:
        return text
    out, pos = [], 0
    for s in spans:
        out.append(text[pos:s.start])
        out.append(" ")
        pos = s.end
    out.append(text[pos:])
    return "".join(out)


class StandardizedEvidence(NamedTuple):
    text: str
    unmatched: list  # span contents that named no known identifier


def standardize_evidence(evidence: str, mapping) -> StandardizedEvidence:
    """Replace each backticked source identifier by its backticked target.

    Spans that already hold a target identifier are left alone, which makes the
    operation idempotent. Anything else is left untouched and reported.
    """
    spans = backtick_spans(evidence)
    if not spans:
        return StandardizedEvidence(evidence, [])
    lookup = mapping.text_lookup()
    folded = {}
    for src, tgt in lookup.items():
        folded.setdefault(fold(src), tgt)
    targets = mapping.target_identifiers()
    out, pos, unmatched = [], 0, []
    for s in spans:
        out.append(evidence[pos:s.start])
        content = s.content
        tgt = lookup.get(content)
        if tgt is None:
            tgt = folded.get(fold(content))
        if tgt is None and "." in content:
            table, _, column = content.partition(".")
            t, c = mapping.table_target(table), mapping.column_target(table, column)
            if t is not None and c is not None:
                tgt = f"{t}.{c}"
        if tgt is None:
            if content not in targets:
                unmatched.append(content)
            tgt = content
        out.append("`" + tgt + "`")
        pos = s.end
    out.append(evidence[pos:])
    return StandardizedEvidence("".join(out), unmatched)


# -- frozen content ----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # backtick-span | number | date | literal
    token: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.kind} {self.token!r}" + (f" ({self.detail})" if self.detail else "")


@dataclass
class FrozenVerdict:
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)  # soft issues: SQL words dropped outside backticks

    @property
    def passed(self) -> bool:
        return not self.violations


def extract_numbers(text: str) -> Counter:
    """Digit runs outside backticks; suffixes such as ``20'den`` do not stick to the number."""
    return Counter(NUMBER.findall(_outside_backticks(text)))


def extract_dates(text: str, patterns=DEFAULT_DATE_PATTERNS) -> Counter:
    plain = _outside_backticks(text)
    found = Counter()
    for p in patterns:
        found.update(re.findall(p, plain))
    return found


def extract_literals(text: str) -> Counter:
    return Counter(_LITERAL.findall(_outside_backticks(text)))


def _multiset_diff(kind: str, src: Counter, tgt: Counter) -> list[Violation]:
    out = []
    for tok in sorted(set(src) | set(tgt)):
        if src[tok] != tgt[tok]:
            out.append(Violation(kind, tok, f"{src[tok]} in source, {tgt[tok]} in translation"))
    return out


def _span_check(label: str, src: str, tgt: str) -> list[Violation]:
    try:
        src_spans = [s.content for s in backtick_spans(src)]
    except UnbalancedBackticks:
        return []  # an unbalanced source cannot constrain the translation
    try:
        tgt_spans = [s.content for s in backtick_spans(tgt)]
    except UnbalancedBackticks:
        return [Violation("backtick-span", "`", f"unbalanced backticks in translated {label}")]
    if src_spans == tgt_spans:
        return []
    for i, s in enumerate(src_spans):
        if i >= len(tgt_spans) or tgt_spans[i] != s:
            return [Violation("backtick-span", s, f"{label} span {i + 1} altered or missing")]
    extra = tgt_spans[len(src_spans)]
    return [Violation("backtick-span", extra, f"{label} span added")]


def verify_frozen_content(src_question: str, src_evidence: str, tgt_question: str,
                          tgt_evidence: str, date_patterns=DEFAULT_DATE_PATTERNS) -> FrozenVerdict:
    verdict = FrozenVerdict()
    verdict.violations += _span_check("evidence", src_evidence, tgt_evidence)
    verdict.violations += _span_check("question", src_question, tgt_question)
    src = src_question + "\n" + src_evidence
    tgt = tgt_question + "\n" + tgt_evidence
    verdict.violations += _multiset_diff("number", extract_numbers(src), extract_numbers(tgt))
    verdict.violations += _multiset_diff("date", extract_dates(src, date_patterns),
                                         extract_dates(tgt, date_patterns))
    verdict.violations += _literal_check(src, tgt)
    verdict.warnings += sql_word_warnings(src, tgt)
    return verdict


def _literal_check(src: str, tgt: str) -> list[Violation]:
    # A target literal may carry a suffix ('X'in), so source literals are
    # counted as plain substrings of the translation.
    src_lits = extract_literals(src)
    tgt_plain = _outside_backticks(tgt)
    out = []
    for lit, n in sorted(src_lits.items()):
        found = tgt_plain.count(f"'{lit}'")
        if found < n:
            out.append(Violation("literal", lit, "quoted literal altered or dropped"))
    for lit in sorted(set(extract_literals(tgt)) - set(src_lits)):
        out.append(Violation("literal", lit, "quoted literal not present in source"))
    return out


def sql_word_warnings(src: str, tgt: str) -> list[str]:
    a = Counter(_SQL_WORD.findall(_outside_backticks(src)))
    b = Counter(_SQL_WORD.findall(_outside_backticks(tgt)))
    return [w for w in sorted(a) if b[w] < a[w]]


# -- translation -------------------------------------------------------------


def parse_text_reply(raw) -> tuple[str, str]:
    if isinstance(raw, (str, bytes)):
        try:
            raw = json.loads(raw)
        except ValueError as exc:
            raise MalformedTranslatorReply(f"reply is not JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedTranslatorReply("reply is not a JSON object")
    if set(raw) != set(TEXT_REPLY_KEYS):
        missing = sorted(set(TEXT_REPLY_KEYS) - set(raw))
        extra = sorted(set(raw) - set(TEXT_REPLY_KEYS))
        raise MalformedTranslatorReply(
            "; ".join(p for p in ("missing " + ", ".join(missing) if missing else "",
                                  "unexpected " + ", ".join(extra) if extra else "") if p))
    q, e = raw["question_tr"], raw["evidence_tr"]
    if not isinstance(q, str) or not isinstance(e, str):
        raise MalformedTranslatorReply("question_tr and evidence_tr must be strings")
    return q, e


@dataclass
class TextTranslation:
    question: str
    evidence: str
    attempts: int
    verdict: FrozenVerdict


def localize_text_pair(question: str, evidence_std: str, translator, retries: int = 3,
                       sql: Optional[str] = None, date_patterns=DEFAULT_DATE_PATTERNS) -> TextTranslation:
    """Translate one question/evidence pair, retrying replies that break the contract.

    After ``retries`` rejected retries the last problem is raised:
    MalformedTranslatorReply or FrozenContentViolated.
    """
    request = {"question_en": question, "evidence_std": evidence_std}
    if sql is not None:
        request["sql_en"] = sql
    last: Exception = MalformedTranslatorReply("no reply")
    for attempt in range(1, retries + 2):
        try:
            raw = translator.translate_text(dict(request))
        except (TranslatorUnavailable, MalformedTranslatorReply):
            raise
        except Exception as exc:
            raise TranslatorUnavailable(f"text translator failed: {exc}") from exc
        try:
            q, e = parse_text_reply(raw)
        except MalformedTranslatorReply as exc:
            last = exc
            continue
        verdict = verify_frozen_content(question, evidence_std, q, e, date_patterns)
        if verdict.passed:
            return TextTranslation(q, e, attempt, verdict)
        last = FrozenContentViolated(verdict.violations, (q, e))
    raise last

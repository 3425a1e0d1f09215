"""Syntactic canonical form used for exact-match scoring.

Only spelling is normalized: identifier case (ASCII, as SQLite folds it), quote
style, numeric literal spelling, and synonym keywords (``==``/``=``,
``<>``/``!=``, ``INNER JOIN``/``JOIN``, explicit ``ASC``). Nothing is reordered,
so two queries that are canonically equal always execute identically.
"""

from __future__ import annotations

import math
import re
from dataclasses import fields, replace

from sqlloc.sql.nodes import Binary, Cast, Collate, Identifier, Join, Literal, OrderTerm, Select, Unary
from sqlloc.sql.resolve import fold

_OPERATOR_SYNONYMS = {"==": "=", "<>": "!="}
_JOIN_SYNONYMS = {
    "INNER JOIN": "JOIN",
    "LEFT OUTER JOIN": "LEFT JOIN",
    "RIGHT OUTER JOIN": "RIGHT JOIN",
    "FULL OUTER JOIN": "FULL JOIN",
    "NATURAL INNER JOIN": "NATURAL JOIN",
    "NATURAL LEFT OUTER JOIN": "NATURAL LEFT JOIN",
}


def normalize_number(raw: str) -> str:
    """Shortest spelling of a numeric literal that keeps its value and storage class."""
    if raw[:2] in ("0x", "0X"):
        return str(int(raw, 16))
    if re.fullmatch(r"\d+", raw):
        return str(int(raw))
    value = float(raw)
    if not math.isfinite(value):
        return raw
    return repr(value)


def _canon(node, fold_case=True):
    if isinstance(node, Identifier):
        return Identifier(fold(node.text) if fold_case else node.text)
    if isinstance(node, tuple):
        return tuple(_canon(v, fold_case) for v in node)
    if not hasattr(node, "__dataclass_fields__"):
        return node
    if isinstance(node, Literal) and node.kind == "number":
        return Literal("number", normalize_number(node.value))
    if isinstance(node, Unary) and node.op == "+" and isinstance(node.operand, Literal) \
            and node.operand.kind == "number":
        return _canon(node.operand, fold_case)
    changes = {f.name: _canon(getattr(node, f.name), fold_case) for f in fields(node)}
    node = replace(node, **changes)
    if isinstance(node, Binary):
        node = replace(node, op=_OPERATOR_SYNONYMS.get(node.op, node.op))
    elif isinstance(node, Join):
        node = replace(node, kind=_JOIN_SYNONYMS.get(node.kind, node.kind))
    elif isinstance(node, OrderTerm) and node.direction == "ASC":
        node = replace(node, direction=None)
    elif isinstance(node, Cast):
        node = replace(node, type_name=node.type_name.upper())
    elif isinstance(node, Collate):
        node = replace(node, collation=node.collation.upper())
    return node


def canonicalize(ast: Select, fold_case: bool = True) -> Select:
    """Canonical form of ``ast``; ``fold_case=False`` keeps identifier case significant."""
    return _canon(ast, fold_case)


def canonically_equal(a: Select, b: Select, fold_case: bool = True) -> bool:
    return canonicalize(a, fold_case) == canonicalize(b, fold_case)

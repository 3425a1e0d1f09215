"""SQL lexing, parsing, rendering and identifier rewriting."""

from sqlloc.sql.canonical import canonicalize, canonically_equal
from sqlloc.sql.lexer import count_tokens, tokenize
from sqlloc.sql.nodes import Identifier, Select, SqlAst
from sqlloc.sql.parser import parse_sql
from sqlloc.sql.render import render_sql
from sqlloc.sql.resolve import (
    IdentifierOccurrence, classify_identifiers, collect_identifiers, fold,
    rewrite_identifiers,
)


def has_outer_order_by(ast: Select) -> bool:
    """True when the outermost statement carries ORDER BY."""
    return bool(ast.order_by)


def localize_sql(sql: str, mapping) -> str:
    """Parse, rewrite through ``mapping`` and render one query."""
    return render_sql(rewrite_identifiers(parse_sql(sql), mapping))


__all__ = [
    "Identifier", "IdentifierOccurrence", "Select", "SqlAst", "canonicalize",
    "canonically_equal", "classify_identifiers", "collect_identifiers", "count_tokens",
    "fold", "has_outer_order_by", "localize_sql", "parse_sql", "render_sql",
    "rewrite_identifiers", "tokenize",
]

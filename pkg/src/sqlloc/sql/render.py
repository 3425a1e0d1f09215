"""Render an AST back to executable SQL text.

Output convention: upper-case keywords, single spaces, identifiers bare when
they are plain ASCII words and backtick-quoted otherwise.
"""

from __future__ import annotations

import re

from sqlloc.sql.lexer import KEYWORDS, LITERAL_WORDS
from sqlloc.sql.nodes import (
    Between, Binary, Case, Cast, Collate, ColumnRef, Exists, FunctionCall,
    Identifier, InList, InSelect, Join, Like, Literal, NullTest, OrderTerm, Paren,
    ResultColumn, Select, SelectCore, Star, Subquery, SubquerySource, TableSource,
    Unary,
)

_PLAIN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
# Context-sensitive words the parser gives special meaning to in some positions.
_CONTEXTUAL = frozenset({"RECURSIVE", "NULLS", "FIRST", "LAST", "FILTER", "OVER", "WINDOW",
                         "MATERIALIZED", "INDEXED"})


def needs_quoting(name: str) -> bool:
    if not _PLAIN.fullmatch(name):
        return True
    upper = name.upper()
    return upper in KEYWORDS or upper in LITERAL_WORDS or upper in _CONTEXTUAL


def quote_identifier(name: str, style: str | None = None) -> str:
    if style == '"':
        return '"' + name.replace('"', '""') + '"'
    if style == "[" and "]" not in name:
        return "[" + name + "]"
    return "`" + name.replace("`", "``") + "`"


def quote_string(value: str) -> str:
    return "'" + value.replace("'", "''") + "'"


class Renderer:
    def __init__(self, preserve_quotes: bool = False):
        self.preserve_quotes = preserve_quotes

    def ident(self, ident: Identifier) -> str:
        if self.preserve_quotes and ident.quote in ('"', "[", "`"):
            return quote_identifier(ident.text, ident.quote)
        if needs_quoting(ident.text):
            return quote_identifier(ident.text)
        return ident.text

    # -- statements ----------------------------------------------------------

    def select(self, node: Select) -> str:
        parts = []
        if node.ctes:
            ctes = ", ".join(self.cte(c) for c in node.ctes)
            parts.append("WITH RECURSIVE " + ctes if node.recursive else "WITH " + ctes)
        body = self.core(node.cores[0])
        for op, core in zip(node.ops, node.cores[1:]):
            body += f" {op} " + self.core(core)
        parts.append(body)
        if node.order_by:
            parts.append("ORDER BY " + ", ".join(self.order_term(t) for t in node.order_by))
        if node.limit is not None:
            parts.append("LIMIT " + self.expr(node.limit))
            if node.offset is not None:
                parts.append("OFFSET " + self.expr(node.offset))
        return " ".join(parts)

    def cte(self, cte) -> str:
        head = self.ident(cte.name)
        if cte.columns:
            head += "(" + ", ".join(self.ident(c) for c in cte.columns) + ")"
        return f"{head} AS ({self.select(cte.select)})"

    def core(self, core: SelectCore) -> str:
        out = "SELECT DISTINCT " if core.distinct else "SELECT "
        out += ", ".join(self.result_column(c) for c in core.columns)
        if core.from_ is not None:
            out += " FROM " + self.source(core.from_)
        if core.where is not None:
            out += " WHERE " + self.expr(core.where)
        if core.group_by:
            out += " GROUP BY " + ", ".join(self.expr(e) for e in core.group_by)
        if core.having is not None:
            out += " HAVING " + self.expr(core.having)
        return out

    def result_column(self, col: ResultColumn) -> str:
        if isinstance(col.expr, Star):
            return self.star(col.expr)
        text = self.expr(col.expr)
        if col.alias is not None:
            text += " AS " + self.ident(col.alias)
        return text

    def star(self, star: Star) -> str:
        return "*" if star.table is None else self.ident(star.table) + ".*"

    def order_term(self, term: OrderTerm) -> str:
        text = self.expr(term.expr)
        if term.direction:
            text += " " + term.direction
        if term.nulls:
            text += " NULLS " + term.nulls
        return text

    def source(self, src) -> str:
        if isinstance(src, TableSource):
            text = self.ident(src.name)
            if src.schema is not None:
                text = self.ident(src.schema) + "." + text
        elif isinstance(src, SubquerySource):
            text = "(" + self.select(src.select) + ")"
        else:
            return self.join(src)
        if src.alias is not None:
            text += " AS " + self.ident(src.alias)
        return text

    def join(self, join: Join) -> str:
        right = self.source(join.right)
        if isinstance(join.right, Join):
            right = "(" + right + ")"
        sep = ", " if join.kind == "," else f" {join.kind} "
        text = self.source(join.left) + sep + right
        if join.on is not None:
            text += " ON " + self.expr(join.on)
        elif join.using:
            text += " USING (" + ", ".join(self.ident(c) for c in join.using) + ")"
        return text

    # -- expressions ---------------------------------------------------------

    def expr(self, node) -> str:
        method = getattr(self, "expr_" + type(node).__name__)
        return method(node)

    def expr_Literal(self, node: Literal) -> str:
        if node.kind == "string":
            return quote_string(node.value)
        if node.kind == "blob":
            return "X'" + node.value + "'"
        return node.value

    def expr_ColumnRef(self, node: ColumnRef) -> str:
        parts = [node.schema, node.table, node.name]
        return ".".join(self.ident(p) for p in parts if p is not None)

    def expr_Star(self, node: Star) -> str:
        return self.star(node)

    def expr_FunctionCall(self, node: FunctionCall) -> str:
        if node.star:
            inner = "*"
        else:
            inner = ", ".join(self.expr(a) for a in node.args)
            if node.distinct:
                inner = "DISTINCT " + inner
        return f"{self.ident(node.name)}({inner})"

    def expr_Unary(self, node: Unary) -> str:
        operand = self.expr(node.operand)
        if node.op == "NOT":
            return "NOT " + operand
        if operand[:1] in ("-", "+"):
            return node.op + " " + operand
        return node.op + operand

    def expr_Binary(self, node: Binary) -> str:
        return f"{self.expr(node.left)} {node.op} {self.expr(node.right)}"

    def expr_Between(self, node: Between) -> str:
        kw = " NOT BETWEEN " if node.negated else " BETWEEN "
        return self.expr(node.operand) + kw + self.expr(node.low) + " AND " + self.expr(node.high)

    def expr_InList(self, node: InList) -> str:
        kw = " NOT IN " if node.negated else " IN "
        return self.expr(node.operand) + kw + "(" + ", ".join(self.expr(i) for i in node.items) + ")"

    def expr_InSelect(self, node: InSelect) -> str:
        kw = " NOT IN " if node.negated else " IN "
        return self.expr(node.operand) + kw + "(" + self.select(node.select) + ")"

    def expr_Like(self, node: Like) -> str:
        kw = f" NOT {node.op} " if node.negated else f" {node.op} "
        text = self.expr(node.operand) + kw + self.expr(node.pattern)
        if node.escape is not None:
            text += " ESCAPE " + self.expr(node.escape)
        return text

    def expr_NullTest(self, node: NullTest) -> str:
        return self.expr(node.operand) + " " + node.op

    def expr_Case(self, node: Case) -> str:
        parts = ["CASE"]
        if node.operand is not None:
            parts.append(self.expr(node.operand))
        for cond, result in node.whens:
            parts.append(f"WHEN {self.expr(cond)} THEN {self.expr(result)}")
        if node.default is not None:
            parts.append("ELSE " + self.expr(node.default))
        parts.append("END")
        return " ".join(parts)

    def expr_Cast(self, node: Cast) -> str:
        return f"CAST({self.expr(node.operand)} AS {node.type_name})"

    def expr_Collate(self, node: Collate) -> str:
        collation = node.collation
        if needs_quoting(collation):
            collation = quote_identifier(collation)
        return f"{self.expr(node.operand)} COLLATE {collation}"

    def expr_Exists(self, node: Exists) -> str:
        return "EXISTS (" + self.select(node.select) + ")"

    def expr_Subquery(self, node: Subquery) -> str:
        return "(" + self.select(node.select) + ")"

    def expr_Paren(self, node: Paren) -> str:
        return "(" + self.expr(node.expr) + ")"


def render_sql(ast: Select, preserve_quotes: bool = False) -> str:
    """Render ``ast`` as SQL text; ``parse_sql(render_sql(ast)) == ast``."""
    return Renderer(preserve_quotes).select(ast)


def render_expr(node, preserve_quotes: bool = False) -> str:
    return Renderer(preserve_quotes).expr(node)

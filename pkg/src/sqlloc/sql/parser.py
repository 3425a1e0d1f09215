"""Recursive-descent parser for SQLite SELECT statements.

Precedence, loosest first: OR, AND, NOT, equality-class operators
(= == != <> IS IN LIKE GLOB BETWEEN ISNULL NOTNULL), < <= > >=,
& | << >>, + -, * / %, ||, unary - + ~, COLLATE.
"""

from __future__ import annotations

from sqlloc.errors import SQLSyntaxError, UnsupportedConstruct
from sqlloc.sql import lexer as lx
from sqlloc.sql.lexer import Token, tokenize
from sqlloc.sql.nodes import (
    Between, Binary, Case, Cast, Collate, ColumnRef, CommonTableExpr, Exists,
    FunctionCall, Identifier, InList, InSelect, Join, Like, Literal, NullTest,
    OrderTerm, Paren, ResultColumn, Select, SelectCore, Star, Subquery,
    SubquerySource, TableSource, Unary,
)

_JOIN_WORDS = ("JOIN", "INNER", "LEFT", "RIGHT", "FULL", "CROSS", "NATURAL")
_UNSUPPORTED_STATEMENTS = {
    "INSERT", "UPDATE", "DELETE", "CREATE", "DROP", "ALTER", "PRAGMA", "REPLACE",
    "ATTACH", "DETACH", "VACUUM", "ANALYZE", "EXPLAIN", "BEGIN", "COMMIT", "REINDEX",
}


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != lx.EOF:
            self.i += 1
        return t

    def error(self, expected: str) -> SQLSyntaxError:
        t = self.tok
        found = "end of input" if t.kind == lx.EOF else repr(t.raw)
        return SQLSyntaxError(f"unexpected {found}", t.pos, expected)

    def accept_kw(self, *words: str) -> Token | None:
        if self.tok.is_keyword(*words):
            return self.advance()
        return None

    def expect_kw(self, word: str) -> Token:
        if not self.tok.is_keyword(word):
            raise self.error(word)
        return self.advance()

    def accept_op(self, *ops: str) -> Token | None:
        if self.tok.is_op(*ops):
            return self.advance()
        return None

    def expect_op(self, op: str) -> Token:
        if not self.tok.is_op(op):
            raise self.error(repr(op))
        return self.advance()

    def word(self, offset: int = 0) -> str:
        """Upper-cased text of an unquoted identifier token, else ''."""
        t = self.peek(offset) if offset else self.tok
        if t.kind == lx.IDENT and t.quote is None:
            return t.value.upper()
        return ""

    def identifier(self, what: str = "identifier") -> Identifier:
        t = self.tok
        if t.kind != lx.IDENT:
            raise self.error(what)
        self.advance()
        return Identifier(t.value, t.quote, t.pos)

    # -- statements ----------------------------------------------------------

    def parse(self) -> Select:
        if self.tok.kind == lx.EOF:
            raise self.error("SELECT")
        if self.word() in _UNSUPPORTED_STATEMENTS:
            raise UnsupportedConstruct(f"{self.word()} statement", self.tok.pos)
        select = self.select()
        while self.accept_op(";"):
            pass
        if self.tok.kind != lx.EOF:
            raise self.error("end of statement")
        return select

    def select(self) -> Select:
        ctes: list[CommonTableExpr] = []
        recursive = False
        if self.accept_kw("WITH"):
            if self.word() == "RECURSIVE":
                self.advance()
                recursive = True
            while True:
                ctes.append(self.cte())
                if not self.accept_op(","):
                    break
        cores = [self.core()]
        ops: list[str] = []
        while self.tok.is_keyword("UNION", "INTERSECT", "EXCEPT"):
            op = self.advance().value
            if op == "UNION" and self.accept_kw("ALL"):
                op = "UNION ALL"
            ops.append(op)
            cores.append(self.core())
        order_by: list[OrderTerm] = []
        if self.accept_kw("ORDER"):
            self.expect_kw("BY")
            order_by = self.comma_list(self.order_term)
        limit = offset = None
        if self.accept_kw("LIMIT"):
            limit = self.expr()
            if self.accept_kw("OFFSET"):
                offset = self.expr()
            elif self.accept_op(","):
                offset, limit = limit, self.expr()
        return Select(tuple(cores), tuple(ops), tuple(ctes), recursive, tuple(order_by), limit, offset)

    def cte(self) -> CommonTableExpr:
        name = self.identifier("common table expression name")
        columns: list[Identifier] = []
        if self.accept_op("("):
            columns = self.comma_list(self.identifier)
            self.expect_op(")")
        self.expect_kw("AS")
        if self.word() in ("MATERIALIZED",) or (self.tok.is_keyword("NOT") and self.word(1) == "MATERIALIZED"):
            raise UnsupportedConstruct("MATERIALIZED hint", self.tok.pos)
        self.expect_op("(")
        body = self.select()
        self.expect_op(")")
        return CommonTableExpr(name, body, tuple(columns))

    def core(self) -> SelectCore:
        if self.tok.is_keyword("VALUES"):
            raise UnsupportedConstruct("VALUES clause", self.tok.pos)
        self.expect_kw("SELECT")
        distinct = False
        if self.accept_kw("DISTINCT"):
            distinct = True
        else:
            self.accept_kw("ALL")
        columns = self.comma_list(self.result_column)
        from_ = where = having = None
        group_by: list = []
        if self.accept_kw("FROM"):
            from_ = self.join_clause()
        if self.accept_kw("WHERE"):
            where = self.expr()
        if self.accept_kw("GROUP"):
            self.expect_kw("BY")
            group_by = self.comma_list(self.expr)
            if self.accept_kw("HAVING"):
                having = self.expr()
        elif self.accept_kw("HAVING"):
            having = self.expr()
        if self.word() == "WINDOW":
            raise UnsupportedConstruct("WINDOW clause", self.tok.pos)
        return SelectCore(tuple(columns), distinct, from_, where, tuple(group_by), having)

    def comma_list(self, item) -> list:
        out = [item()]
        while self.accept_op(","):
            out.append(item())
        return out

    def result_column(self) -> ResultColumn:
        if self.accept_op("*"):
            return ResultColumn(Star())
        if self.tok.kind == lx.IDENT and self.peek().is_op(".") and self.peek(2).is_op("*"):
            table = self.identifier()
            self.advance()
            self.advance()
            return ResultColumn(Star(table))
        if self.tok.kind == lx.EOF or self.tok.is_keyword("FROM") or self.tok.is_op(",", ")"):
            raise self.error("result column")
        expr = self.expr()
        return ResultColumn(expr, self.alias())

    def alias(self) -> Identifier | None:
        if self.accept_kw("AS"):
            t = self.tok
            if t.kind == lx.STRING:
                self.advance()
                return Identifier(t.value, "'", t.pos)
            return self.identifier("alias")
        if self.tok.kind == lx.IDENT:
            return self.identifier()
        return None

    def order_term(self) -> OrderTerm:
        expr = self.expr()
        direction = None
        if self.tok.is_keyword("ASC", "DESC"):
            direction = self.advance().value
        nulls = None
        if self.word() == "NULLS" and self.word(1) in ("FIRST", "LAST"):
            self.advance()
            nulls = self.advance().value.upper()
        return OrderTerm(expr, direction, nulls)

    # -- FROM clause ---------------------------------------------------------

    def join_clause(self):
        left = self.table_or_subquery()
        while True:
            if self.accept_op(","):
                kind = ","
            elif self.tok.is_keyword(*_JOIN_WORDS):
                kind = self.join_operator()
            else:
                return left
            right = self.table_or_subquery()
            on = None
            using: list[Identifier] = []
            if self.accept_kw("ON"):
                on = self.expr()
            elif self.accept_kw("USING"):
                self.expect_op("(")
                using = self.comma_list(self.identifier)
                self.expect_op(")")
            left = Join(left, right, kind, on, tuple(using))

    def join_operator(self) -> str:
        words = []
        if self.accept_kw("NATURAL"):
            words.append("NATURAL")
        if self.tok.is_keyword("LEFT", "RIGHT", "FULL"):
            words.append(self.advance().value)
            if self.accept_kw("OUTER"):
                words.append("OUTER")
        elif self.tok.is_keyword("INNER", "CROSS"):
            words.append(self.advance().value)
        self.expect_kw("JOIN")
        words.append("JOIN")
        return " ".join(words)

    def table_or_subquery(self):
        if self.accept_op("("):
            if self.tok.is_keyword("SELECT", "WITH", "VALUES"):
                body = self.select()
                self.expect_op(")")
                return SubquerySource(body, self.alias())
            inner = self.join_clause()
            self.expect_op(")")
            if isinstance(inner, TableSource) and inner.alias is None:
                alias = self.alias()
                return TableSource(inner.name, inner.schema, alias) if alias else inner
            return inner
        name = self.identifier("table name")
        schema = None
        if self.accept_op("."):
            schema, name = name, self.identifier("table name")
        if self.tok.is_op("("):
            raise UnsupportedConstruct("table-valued function", self.tok.pos)
        alias = self.alias()
        if self.word() == "INDEXED" or (self.tok.is_keyword("NOT") and self.word(1) == "INDEXED"):
            raise UnsupportedConstruct("INDEXED BY", self.tok.pos)
        return TableSource(name, schema, alias)

    # -- expressions ---------------------------------------------------------

    def expr(self):
        return self.or_expr()

    def or_expr(self):
        left = self.and_expr()
        while self.accept_kw("OR"):
            left = Binary("OR", left, self.and_expr())
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.accept_kw("AND"):
            left = Binary("AND", left, self.not_expr())
        return left

    def not_expr(self):
        if self.accept_kw("NOT"):
            return Unary("NOT", self.not_expr())
        return self.equality()

    def equality(self):
        left = self.relational()
        while True:
            t = self.tok
            if t.is_op("=", "==", "!=", "<>"):
                self.advance()
                left = Binary(t.value, left, self.relational())
            elif t.is_keyword("IS"):
                self.advance()
                op = "IS"
                if self.accept_kw("NOT"):
                    op = "IS NOT"
                if self.accept_kw("DISTINCT"):
                    self.expect_kw("FROM")
                    op += " DISTINCT FROM"
                left = Binary(op, left, self.relational())
            elif t.is_keyword("ISNULL", "NOTNULL"):
                self.advance()
                left = NullTest(left, t.value)
            elif t.is_keyword("NOT") and self.peek().is_keyword("NULL"):
                self.advance()
                self.advance()
                left = NullTest(left, "NOT NULL")
            elif t.is_keyword("IN", "LIKE", "GLOB", "BETWEEN") or (
                t.is_keyword("NOT") and self.peek().is_keyword("IN", "LIKE", "GLOB", "BETWEEN")
            ):
                negated = bool(self.accept_kw("NOT"))
                op = self.advance().value
                if op == "IN":
                    left = self.in_rest(left, negated)
                elif op == "BETWEEN":
                    low = self.relational()
                    self.expect_kw("AND")
                    left = Between(left, low, self.relational(), negated)
                else:
                    pattern = self.relational()
                    escape = self.relational() if self.accept_kw("ESCAPE") else None
                    left = Like(left, op, pattern, negated, escape)
            else:
                return left

    def in_rest(self, left, negated: bool):
        if not self.tok.is_op("("):
            raise UnsupportedConstruct("IN over a table name", self.tok.pos)
        self.advance()
        if self.tok.is_keyword("SELECT", "WITH"):
            body = self.select()
            self.expect_op(")")
            return InSelect(left, body, negated)
        items: list = []
        if not self.tok.is_op(")"):
            items = self.comma_list(self.expr)
        self.expect_op(")")
        return InList(left, tuple(items), negated)

    def _binary_level(self, ops: tuple[str, ...], operand):
        left = operand()
        while self.tok.kind == lx.OP and self.tok.value in ops:
            op = self.advance().value
            left = Binary(op, left, operand())
        return left

    def relational(self):
        return self._binary_level(("<", "<=", ">", ">="), self.bitwise)

    def bitwise(self):
        return self._binary_level(("&", "|", "<<", ">>"), self.additive)

    def additive(self):
        return self._binary_level(("+", "-"), self.multiplicative)

    def multiplicative(self):
        return self._binary_level(("*", "/", "%"), self.concat)

    def concat(self):
        return self._binary_level(("||",), self.unary)

    def unary(self):
        if self.tok.kind == lx.OP and self.tok.value in ("-", "+", "~"):
            op = self.advance().value
            return Unary(op, self.unary())
        node = self.primary()
        while self.accept_kw("COLLATE"):
            node = Collate(node, self.identifier("collation name").text)
        return node

    def primary(self):
        t = self.tok
        if t.kind == lx.NUMBER:
            self.advance()
            return Literal("number", t.value)
        if t.kind == lx.STRING:
            self.advance()
            return Literal("string", t.value)
        if t.kind == lx.BLOB:
            self.advance()
            return Literal("blob", t.value)
        if t.kind == lx.PARAM:
            raise UnsupportedConstruct("bind parameter", t.pos)
        if t.is_keyword("NULL"):
            self.advance()
            return Literal("null", "NULL")
        if t.is_keyword("CASE"):
            return self.case()
        if t.is_keyword("CAST"):
            self.advance()
            self.expect_op("(")
            operand = self.expr()
            self.expect_kw("AS")
            type_name = self.type_name()
            self.expect_op(")")
            return Cast(operand, type_name)
        if t.is_keyword("EXISTS"):
            self.advance()
            self.expect_op("(")
            body = self.select()
            self.expect_op(")")
            return Exists(body)
        if t.is_op("("):
            self.advance()
            if self.tok.is_keyword("SELECT", "WITH"):
                body = self.select()
                self.expect_op(")")
                return Subquery(body)
            inner = self.expr()
            if self.tok.is_op(","):
                raise UnsupportedConstruct("row value", self.tok.pos)
            self.expect_op(")")
            return Paren(inner)
        if t.kind == lx.IDENT:
            if self.peek().is_op("("):
                return self.function_call()
            if t.quote is None and t.value.upper() in lx.LITERAL_WORDS and not self.peek().is_op("."):
                self.advance()
                return Literal("keyword", t.value.upper())
            first = self.identifier()
            if not self.accept_op("."):
                return ColumnRef(first)
            second = self.identifier("column name")
            if not self.accept_op("."):
                return ColumnRef(second, first)
            third = self.identifier("column name")
            return ColumnRef(third, second, first)
        raise self.error("expression")

    def function_call(self) -> FunctionCall:
        name = self.identifier()
        self.expect_op("(")
        args: list = []
        distinct = star = False
        if self.accept_op("*"):
            star = True
        elif not self.tok.is_op(")"):
            distinct = bool(self.accept_kw("DISTINCT"))
            args = self.comma_list(self.expr)
            if self.tok.is_keyword("ORDER"):
                raise UnsupportedConstruct("ORDER BY inside aggregate", self.tok.pos)
        self.expect_op(")")
        if self.word() == "FILTER":
            raise UnsupportedConstruct("aggregate FILTER clause", self.tok.pos)
        if self.word() == "OVER":
            raise UnsupportedConstruct("window function", self.tok.pos)
        return FunctionCall(name, tuple(args), distinct, star)

    def case(self) -> Case:
        self.expect_kw("CASE")
        operand = None
        if not self.tok.is_keyword("WHEN"):
            operand = self.expr()
        whens = []
        while self.accept_kw("WHEN"):
            cond = self.expr()
            self.expect_kw("THEN")
            whens.append((cond, self.expr()))
        if not whens:
            raise self.error("WHEN")
        default = self.expr() if self.accept_kw("ELSE") else None
        self.expect_kw("END")
        return Case(operand, tuple(whens), default)

    def type_name(self) -> str:
        words = []
        while self.tok.kind == lx.IDENT:
            words.append(self.advance().value)
        if not words:
            raise self.error("type name")
        name = " ".join(words)
        if self.accept_op("("):
            sizes = [self.signed_number()]
            if self.accept_op(","):
                sizes.append(self.signed_number())
            self.expect_op(")")
            name += "(" + ", ".join(sizes) + ")"
        return name

    def signed_number(self) -> str:
        sign = ""
        if self.tok.kind == lx.OP and self.tok.value in ("+", "-"):
            sign = self.advance().value
        if self.tok.kind != lx.NUMBER:
            raise self.error("number")
        return sign + self.advance().value


def parse_sql(text: str) -> Select:
    """Parse one SELECT statement into an AST.

    Raises :class:`SQLSyntaxError` for malformed input and
    :class:`UnsupportedConstruct` for valid SQLite outside the supported subset.
    """
    if not text or not text.strip():
        raise SQLSyntaxError("empty query", 0, "SELECT")
    return Parser(text).parse()

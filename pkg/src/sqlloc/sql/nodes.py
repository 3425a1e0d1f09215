"""Immutable AST for SELECT statements.

Nodes are frozen dataclasses, so ``==`` is structural equality. Quote style and
source position are carried on :class:`Identifier` but excluded from comparison:
two trees that differ only in how an identifier was quoted are equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterator, Optional, Tuple, Union


@dataclass(frozen=True)
class Identifier:
    text: str
    quote: Optional[str] = field(default=None, compare=False)
    pos: Optional[int] = field(default=None, compare=False)

    def renamed(self, text: str) -> "Identifier":
        return replace(self, text=text)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    kind: str  # number | string | blob | null | keyword
    value: str  # number: raw text; string: decoded text; blob: hex digits


@dataclass(frozen=True)
class ColumnRef:
    name: Identifier
    table: Optional[Identifier] = None
    schema: Optional[Identifier] = None


@dataclass(frozen=True)
class Star:
    table: Optional[Identifier] = None


@dataclass(frozen=True)
class FunctionCall:
    name: Identifier
    args: Tuple["Expr", ...] = ()
    distinct: bool = False
    star: bool = False


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Between:
    operand: "Expr"
    low: "Expr"
    high: "Expr"
    negated: bool = False


@dataclass(frozen=True)
class InList:
    operand: "Expr"
    items: Tuple["Expr", ...]
    negated: bool = False


@dataclass(frozen=True)
class InSelect:
    operand: "Expr"
    select: "Select"
    negated: bool = False


@dataclass(frozen=True)
class Like:
    operand: "Expr"
    op: str  # LIKE | GLOB
    pattern: "Expr"
    negated: bool = False
    escape: Optional["Expr"] = None


@dataclass(frozen=True)
class NullTest:
    operand: "Expr"
    op: str  # ISNULL | NOTNULL | NOT NULL


@dataclass(frozen=True)
class Case:
    operand: Optional["Expr"]
    whens: Tuple[Tuple["Expr", "Expr"], ...]
    default: Optional["Expr"] = None


@dataclass(frozen=True)
class Cast:
    operand: "Expr"
    type_name: str


@dataclass(frozen=True)
class Collate:
    operand: "Expr"
    collation: str


@dataclass(frozen=True)
class Exists:
    select: "Select"


@dataclass(frozen=True)
class Subquery:
    select: "Select"


@dataclass(frozen=True)
class Paren:
    expr: "Expr"


Expr = Union[
    Literal, ColumnRef, FunctionCall, Unary, Binary, Between, InList, InSelect,
    Like, NullTest, Case, Cast, Collate, Exists, Subquery, Paren,
]


# -- select structure --------------------------------------------------------


@dataclass(frozen=True)
class ResultColumn:
    expr: Union[Expr, Star]
    alias: Optional[Identifier] = None


@dataclass(frozen=True)
class TableSource:
    name: Identifier
    schema: Optional[Identifier] = None
    alias: Optional[Identifier] = None


@dataclass(frozen=True)
class SubquerySource:
    select: "Select"
    alias: Optional[Identifier] = None


@dataclass(frozen=True)
class Join:
    left: "Source"
    right: "Source"
    kind: str  # "," | "JOIN" | "INNER JOIN" | "LEFT JOIN" | "LEFT OUTER JOIN" | ...
    on: Optional[Expr] = None
    using: Tuple[Identifier, ...] = ()


Source = Union[TableSource, SubquerySource, Join]


@dataclass(frozen=True)
class SelectCore:
    columns: Tuple[ResultColumn, ...]
    distinct: bool = False
    from_: Optional[Source] = None
    where: Optional[Expr] = None
    group_by: Tuple[Expr, ...] = ()
    having: Optional[Expr] = None


@dataclass(frozen=True)
class CommonTableExpr:
    name: Identifier
    select: "Select"
    columns: Tuple[Identifier, ...] = ()


@dataclass(frozen=True)
class OrderTerm:
    expr: Expr
    direction: Optional[str] = None  # ASC | DESC
    nulls: Optional[str] = None  # FIRST | LAST


@dataclass(frozen=True)
class Select:
    cores: Tuple[SelectCore, ...]
    ops: Tuple[str, ...] = ()  # compound operators between consecutive cores
    ctes: Tuple[CommonTableExpr, ...] = ()
    recursive: bool = False
    order_by: Tuple[OrderTerm, ...] = ()
    limit: Optional[Expr] = None
    offset: Optional[Expr] = None


SqlAst = Select

Node = Union[Expr, Star, ResultColumn, TableSource, SubquerySource, Join, SelectCore,
             CommonTableExpr, OrderTerm, Select, Identifier]


def children(node) -> Iterator:
    """Yield the direct child nodes of ``node`` (flattening tuples)."""
    for f in fields(node):
        value = getattr(node, f.name)
        if isinstance(value, tuple):
            for v in value:
                if isinstance(v, tuple):
                    yield from v
                elif v is not None and hasattr(v, "__dataclass_fields__"):
                    yield v
        elif value is not None and hasattr(value, "__dataclass_fields__"):
            yield value


def walk(node) -> Iterator:
    """Pre-order traversal over every node of a tree."""
    yield node
    for child in children(node):
        yield from walk(child)

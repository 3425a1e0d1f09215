"""Identifier classification and rewriting over a parsed SELECT.

Every identifier node is classified as a table name, column name, alias
definition, alias reference, CTE name or function name. Only table and column
names are ever renamed; aliases, CTE names, function names, keywords and
literals come through untouched.

Resolution is deliberately shallow: a column is attributed to whichever
in-scope source lists it, with correlated subqueries falling back to outer
scopes. No type checking or ambiguity diagnostics are attempted.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Optional

from sqlloc.errors import UnmappedIdentifier
from sqlloc.sql.nodes import (
    ColumnRef, CommonTableExpr, Exists, FunctionCall, Identifier, InSelect, Join,
    Literal, OrderTerm, ResultColumn, Select, SelectCore, Star, Subquery,
    SubquerySource, TableSource,
)

TABLE = "table"
COLUMN = "column"
ALIAS_DEF = "alias-definition"
ALIAS_REF = "alias-reference"
CTE = "cte"
FUNCTION = "function"

_ROWID = frozenset({"rowid", "oid", "_rowid_"})
_ASCII_LOWER = str.maketrans("ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz")


def fold(name: str) -> str:
    """Case-fold the way SQLite compares identifiers (ASCII letters only)."""
    return name.translate(_ASCII_LOWER)


@dataclass(frozen=True)
class IdentifierOccurrence:
    kind: str  # table | column
    text: str
    table: Optional[str] = None  # resolved table for qualified column references
    span: Optional[int] = field(default=None, compare=False)


# fold(table) -> (source table, target table, {fold(col): (source col, target col)})
SchemaIndex = dict


def schema_index(schema) -> SchemaIndex:
    """Build a lookup index from an IdentifierMapping or a SchemaCatalog."""
    index: SchemaIndex = {}
    if isinstance(getattr(schema, "tables", None), dict):
        for src, tgt in schema.tables.items():
            cols = {fold(c): (c, t) for c, t in schema.columns.get(src, {}).items()}
            index[fold(src)] = (src, tgt, cols)
        return index
    for table in schema.tables:
        cols = {fold(c.name): (c.name, c.name) for c in table.columns}
        index[fold(table.name)] = (table.name, table.name, cols)
    return index


@dataclass
class _Source:
    visible: Optional[str]  # folded name the source is addressed by
    table: Optional[str]  # base table name, None for derived sources
    columns: Optional[dict]  # fold(name) -> (src, tgt); None when unknown
    via_alias: bool = False

    @property
    def derived(self) -> bool:
        return self.table is None


class _Scope:
    def __init__(self, parent: Optional["_Scope"], ctes: dict):
        self.parent = parent
        self.ctes = ctes
        self.sources: list[_Source] = []
        self.aliases: dict[str, str] = {}

    def chain(self):
        s = self
        while s is not None:
            yield s
            s = s.parent


class _Resolver:
    def __init__(self, index: Optional[SchemaIndex], strict: bool):
        self.index = index
        self.strict = strict
        self.notes: list[tuple[str, Identifier, Optional[str], bool]] = []

    def note(self, kind, ident, context=None, derived=False):
        self.notes.append((kind, ident, context, derived))

    # -- statements ----------------------------------------------------------

    def select(self, sel: Select, outer: Optional[_Scope], ctes: dict, self_cte: Optional[str] = None):
        ctes = dict(ctes)
        new_ctes = []
        for cte in sel.ctes:
            key = fold(cte.name.text)
            self.note(CTE, cte.name)
            for c in cte.columns:
                self.note(ALIAS_DEF, c)
            explicit = [(c.text, c.text) for c in cte.columns]
            if sel.recursive and explicit:
                ctes[key] = explicit
            body, outs = self.select(cte.select, outer, ctes, key if sel.recursive else None)
            ctes[key] = explicit or outs
            new_ctes.append(replace(cte, select=body))

        cores = []
        outputs0 = None
        order_by = sel.order_by if len(sel.cores) == 1 else ()
        new_order = ()
        for core in sel.cores:
            new_core, outs, ordered = self.core(core, outer, ctes, order_by)
            cores.append(new_core)
            if outputs0 is None:
                outputs0 = outs
                new_order = ordered
                if self_cte is not None and self_cte not in ctes:
                    ctes[self_cte] = outs

        if len(sel.cores) > 1 and sel.order_by:
            scope = _Scope(outer, ctes)
            scope.sources.append(_Source(None, None, _columns(outputs0)))
            new_order = tuple(self.order_term(t, scope) for t in sel.order_by)

        bare = _Scope(outer, ctes)
        limit = self.expr(sel.limit, bare, "limit") if sel.limit is not None else None
        offset = self.expr(sel.offset, bare, "limit") if sel.offset is not None else None
        new = replace(sel, cores=tuple(cores), ctes=tuple(new_ctes), order_by=tuple(new_order),
                      limit=limit, offset=offset)
        return new, outputs0

    def core(self, core: SelectCore, outer, ctes, order_by):
        scope = _Scope(outer, ctes)
        from_ = self.source(core.from_, scope) if core.from_ is not None else None
        for col in core.columns:
            if col.alias is not None:
                scope.aliases.setdefault(fold(col.alias.text), col.alias.text)
        columns = []
        outputs: list[tuple[Optional[str], Optional[str]]] = []
        for col in core.columns:
            if isinstance(col.expr, Star):
                star, expanded = self.star(col.expr, scope)
                columns.append(ResultColumn(star))
                outputs.extend(expanded)
                continue
            expr = self.expr(col.expr, scope, "select")
            if col.alias is not None:
                self.note(ALIAS_DEF, col.alias)
                outputs.append((col.alias.text, col.alias.text))
            elif isinstance(col.expr, ColumnRef) and isinstance(expr, ColumnRef):
                outputs.append((col.expr.name.text, expr.name.text))
            else:
                outputs.append((None, None))
            columns.append(ResultColumn(expr, col.alias))
        where = self.expr(core.where, scope, "where") if core.where is not None else None
        group_by = tuple(self.expr(e, scope, "group") for e in core.group_by)
        having = self.expr(core.having, scope, "having") if core.having is not None else None
        ordered = tuple(self.order_term(t, scope) for t in order_by)
        new = SelectCore(tuple(columns), core.distinct, from_, where, group_by, having)
        return new, outputs, ordered

    def order_term(self, term: OrderTerm, scope) -> OrderTerm:
        return replace(term, expr=self.expr(term.expr, scope, "order"))

    def star(self, star: Star, scope: _Scope):
        if star.table is None:
            expanded = []
            for src in scope.sources:
                if src.columns:
                    expanded.extend(src.columns.values())
            return star, expanded
        src = self.find_source(star.table, scope)
        qualifier = self.qualifier(star.table, src)
        expanded = list(src.columns.values()) if src is not None and src.columns else []
        return Star(qualifier), expanded

    # -- FROM clause ---------------------------------------------------------

    def source(self, src, scope: _Scope):
        if isinstance(src, Join):
            left = self.source(src.left, scope)
            right = self.source(src.right, scope)
            on = self.expr(src.on, scope, "on") if src.on is not None else None
            using = tuple(self.using_column(c, scope) for c in src.using)
            return Join(left, right, src.kind, on, using)
        if isinstance(src, SubquerySource):
            body, outs = self.select(src.select, scope.parent, scope.ctes)
            if src.alias is not None:
                self.note(ALIAS_DEF, src.alias)
            visible = fold(src.alias.text) if src.alias is not None else None
            scope.sources.append(_Source(visible, None, _columns(outs), via_alias=True))
            return replace(src, select=body)
        return self.table_source(src, scope)

    def table_source(self, src: TableSource, scope: _Scope):
        key = fold(src.name.text)
        alias = src.alias
        if alias is not None:
            self.note(ALIAS_DEF, alias)
        visible = fold(alias.text) if alias is not None else key
        if src.schema is None and key in scope.ctes:
            self.note(CTE, src.name)
            scope.sources.append(_Source(visible, None, _columns(scope.ctes[key]), alias is not None))
            return src
        entry = self.index.get(key) if self.index is not None else None
        if entry is None:
            if self.index is not None and self.strict:
                raise UnmappedIdentifier(src.name.text, "table")
            self.note(TABLE, src.name)
            scope.sources.append(_Source(visible, src.name.text, None, alias is not None))
            return src
        source_name, target, cols = entry
        self.note(TABLE, src.name)
        scope.sources.append(_Source(visible, source_name, cols, alias is not None))
        return replace(src, name=src.name.renamed(target))

    def using_column(self, ident: Identifier, scope: _Scope) -> Identifier:
        key = fold(ident.text)
        for src in scope.sources:
            if src.columns is not None and key in src.columns:
                if not src.derived:
                    self.note(COLUMN, ident)
                return ident.renamed(src.columns[key][1])
        return self.unresolved_column(ident, None)

    # -- expressions ---------------------------------------------------------

    def expr(self, node, scope: _Scope, clause: str):
        if node is None:
            return None
        if isinstance(node, ColumnRef):
            return self.column_ref(node, scope, clause)
        if isinstance(node, (Subquery, Exists, InSelect)):
            body, _ = self.select(node.select, scope, scope.ctes)
            if isinstance(node, InSelect):
                return InSelect(self.expr(node.operand, scope, clause), body, node.negated)
            return replace(node, select=body)
        if isinstance(node, FunctionCall):
            self.note(FUNCTION, node.name)
            return replace(node, args=tuple(self.expr(a, scope, clause) for a in node.args))
        if isinstance(node, Literal):
            return node
        changes = {}
        for f in fields(node):
            value = getattr(node, f.name)
            if isinstance(value, tuple):
                changes[f.name] = tuple(
                    tuple(self.expr(v, scope, clause) for v in item) if isinstance(item, tuple)
                    else self.expr(item, scope, clause)
                    for item in value
                )
            elif hasattr(value, "__dataclass_fields__"):
                changes[f.name] = self.expr(value, scope, clause)
        return replace(node, **changes)

    def column_ref(self, ref: ColumnRef, scope: _Scope, clause: str):
        if ref.table is None:
            name = self.lookup_column(ref.name, scope, clause)
            if isinstance(name, Literal):
                return name
            return replace(ref, name=name)
        src = self.find_source(ref.table, scope)
        qualifier = self.qualifier(ref.table, src, schema=ref.schema)
        key = fold(ref.name.text)
        if src is None:
            entry = self.index.get(fold(ref.table.text)) if self.index is not None else None
            if entry is not None and key in entry[2]:
                self.note(COLUMN, ref.name, entry[0])
                return replace(ref, table=qualifier, name=ref.name.renamed(entry[2][key][1]))
            name = self.unresolved_column(ref.name, ref.table.text, qualified=True)
            return replace(ref, table=qualifier, name=name)
        if src.columns is None:
            self.note(COLUMN, ref.name, src.table)
            return replace(ref, table=qualifier)
        if key in src.columns:
            self.note(COLUMN, ref.name, src.table, derived=src.derived)
            return replace(ref, table=qualifier, name=ref.name.renamed(src.columns[key][1]))
        name = self.unresolved_column(ref.name, src.table or ref.table.text, qualified=True)
        return replace(ref, table=qualifier, name=name)

    def find_source(self, qualifier: Identifier, scope: _Scope) -> Optional[_Source]:
        key = fold(qualifier.text)
        for s in scope.chain():
            for src in s.sources:
                if src.visible == key:
                    return src
        for s in scope.chain():
            for src in s.sources:
                if src.table is not None and fold(src.table) == key:
                    return src
        return None

    def qualifier(self, ident: Identifier, src: Optional[_Source], schema=None) -> Identifier:
        """Rename a ``T.`` prefix when it names a base table rather than an alias."""
        if src is not None and (src.via_alias or src.derived):
            self.note(ALIAS_REF if src.via_alias else CTE, ident)
            return ident
        if src is not None:
            self.note(TABLE, ident)
            entry = self.index.get(fold(src.table)) if self.index is not None else None
            return ident.renamed(entry[1]) if entry is not None else ident
        entry = self.index.get(fold(ident.text)) if self.index is not None else None
        if entry is None:
            if self.index is not None and self.strict:
                raise UnmappedIdentifier(ident.text, "table")
            self.note(TABLE, ident)
            return ident
        self.note(TABLE, ident)
        return ident.renamed(entry[1])

    def lookup_column(self, name: Identifier, scope: _Scope, clause: str):
        key = fold(name.text)
        for depth, s in enumerate(scope.chain()):
            if depth == 0 and clause == "order" and key in s.aliases:
                self.note(ALIAS_REF, name)
                return name
            for src in s.sources:
                if src.columns is not None and key in src.columns:
                    self.note(COLUMN, name, None, derived=src.derived)
                    return name.renamed(src.columns[key][1])
            for src in s.sources:
                if src.columns is None:
                    self.note(COLUMN, name)
                    return name
            if depth == 0 and key in s.aliases:
                self.note(ALIAS_REF, name)
                return name
        if self.strict and name.quote == '"' and fold(name.text) not in _ROWID:
            # SQLite reads an unresolvable "double-quoted" name as a string literal
            return Literal("string", name.text)
        return self.unresolved_column(name, None)

    def unresolved_column(self, name: Identifier, table: Optional[str], qualified: bool = False):
        if fold(name.text) in _ROWID:
            return name
        if self.index is not None and self.strict:
            label = f"{table}.{name.text}" if qualified and table else name.text
            raise UnmappedIdentifier(label, "column")
        self.note(COLUMN, name, table if qualified else None)
        return name


def _columns(outputs) -> dict:
    cols = {}
    for src, tgt in outputs or ():
        if src is not None:
            cols.setdefault(fold(src), (src, tgt))
    return cols


def rewrite_identifiers(ast: Select, mapping) -> Select:
    """Rename every table and column node of ``ast`` through ``mapping``.

    Raises :class:`UnmappedIdentifier` when the query names a table or column
    the mapping does not know about.
    """
    resolver = _Resolver(schema_index(mapping), strict=True)
    new, _ = resolver.select(ast, None, {})
    return new


def classify_identifiers(ast: Select, schema=None) -> list[tuple[str, Identifier]]:
    """Every identifier node of ``ast`` paired with its kind, in visit order."""
    resolver = _Resolver(schema_index(schema) if schema is not None else None, strict=False)
    resolver.select(ast, None, {})
    return [(kind, ident) for kind, ident, _, _ in resolver.notes]


def collect_identifiers(ast: Select, schema=None) -> set[IdentifierOccurrence]:
    """Table and column references of ``ast``, excluding aliases, CTEs and functions.

    Columns reached through a CTE or derived table are not reported again; the
    base column they come from is reported where the derived query reads it.
    """
    resolver = _Resolver(schema_index(schema) if schema is not None else None, strict=False)
    resolver.select(ast, None, {})
    out = set()
    for kind, ident, context, derived in resolver.notes:
        if kind in (TABLE, COLUMN) and not derived:
            out.add(IdentifierOccurrence(kind, ident.text, context, ident.pos))
    return out

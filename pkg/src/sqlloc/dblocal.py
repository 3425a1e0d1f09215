"""Localized copies of database files: schema renames only, cell values untouched.

The copy is renamed in place with ``ALTER TABLE ... RENAME`` so indexes,
triggers and constraints follow automatically. Views are dropped first and
re-created afterwards from their original SQL, rewritten through the same AST
rewriter as the benchmark queries. View names and view column names are kept
as they were (the mapping only covers tables and columns).
"""

from __future__ import annotations

import json
import os
import sqlite3
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from sqlloc.catalog import SchemaCatalog, extract_catalog, open_readonly, read_catalog
from sqlloc.errors import (
    LocalizationError, MappingIncomplete, OutputExists, RenameFailure, SQLSyntaxError,
)
from sqlloc.mapping import IdentifierMapping
from sqlloc.sql import lexer
from sqlloc.sql.parser import parse_sql
from sqlloc.sql.render import render_sql
from sqlloc.sql.resolve import rewrite_identifiers


@dataclass
class LocalizedDbArtifact:
    source: str
    target: str
    renames: list = field(default_factory=list)  # (scope, source, target)
    views: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "renames": [{"scope": s, "source": a, "target": b} for s, a, b in self.renames],
            "views": list(self.views),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n",
                              encoding="utf-8")


def _q(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def missing_entries(catalog: SchemaCatalog, mapping: IdentifierMapping) -> list[str]:
    missing = []
    for t in catalog.tables:
        if mapping.table_target(t.name) is None:
            missing.append(t.name)
            continue
        for c in t.columns:
            if mapping.column_target(t.name, c.name) is None:
                missing.append(f"{t.name}.{c.name}")
    return missing


def view_body(create_sql: str) -> tuple[str, str]:
    """Split ``CREATE VIEW name [(cols)] AS select`` into (head, select text)."""
    tokens = lexer.tokenize(create_sql)
    depth = 0
    seen_view = False
    for tok in tokens:
        if tok.kind == lexer.IDENT and tok.value.upper() == "VIEW" and tok.quote is None:
            seen_view = True
        elif tok.is_op("("):
            depth += 1
        elif tok.is_op(")"):
            depth -= 1
        elif seen_view and depth == 0 and tok.is_keyword("AS"):
            return create_sql[:tok.pos], create_sql[tok.pos + 2:].strip().rstrip(";")
    raise SQLSyntaxError("cannot locate view body", 0, "AS")


def _with_views(mapping: IdentifierMapping, views: dict) -> IdentifierMapping:
    """Mapping extended with identity entries for views, so views may select from views."""
    tables = dict(mapping.tables)
    columns = {t: dict(c) for t, c in mapping.columns.items()}
    for name, cols in views.items():
        tables[name] = name
        columns[name] = {c: c for c in cols}
    return IdentifierMapping(mapping.db_id_src, mapping.db_id_tgt, tables, columns)


def _fk_violations(conn: sqlite3.Connection) -> int:
    return len(conn.execute("PRAGMA foreign_key_check").fetchall())


def localize_database(db_file, mapping: IdentifierMapping, out_file,
                      catalog: Optional[SchemaCatalog] = None) -> LocalizedDbArtifact:
    """Write a renamed copy of ``db_file`` to ``out_file``; atomic on failure."""
    db_file, out_file = Path(db_file), Path(out_file)
    if out_file.exists():
        raise OutputExists(str(out_file))
    catalog = catalog or extract_catalog(db_file, mapping.db_id_src)
    missing = missing_entries(catalog, mapping)
    if missing:
        raise MappingIncomplete(missing)

    view_cols = {v.name: list(v.columns) for v in catalog.views}
    src = open_readonly(db_file)
    try:
        fk_before = _fk_violations(src)
    finally:
        src.close()

    out_file.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=out_file.name + ".", suffix=".tmp", dir=out_file.parent)
    os.close(fd)
    artifact = LocalizedDbArtifact(str(db_file), str(out_file))
    try:
        src = open_readonly(db_file)
        dst = sqlite3.connect(tmp, isolation_level=None)
        try:
            src.backup(dst)
        finally:
            src.close()
        try:
            _apply(dst, catalog, mapping, view_cols, artifact)
            if _fk_violations(dst) != fk_before:
                raise RenameFailure("foreign key check differs from the source file")
            check = dst.execute("PRAGMA integrity_check").fetchone()[0]
            if check != "ok":
                raise RenameFailure(f"integrity check failed: {check}")
        finally:
            dst.close()
        os.replace(tmp, out_file)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return artifact


def _apply(conn, catalog, mapping, view_cols, artifact):
    conn.execute("PRAGMA foreign_keys = OFF")
    conn.execute("PRAGMA legacy_alter_table = OFF")
    try:
        conn.execute("BEGIN")
        for v in catalog.views:
            conn.execute(f"DROP VIEW {_q(v.name)}")

        # tables: move changed ones aside first so swaps and case-only renames work
        changed = []
        for i, t in enumerate(catalog.tables):
            tgt = mapping.table_target(t.name)
            if tgt != t.name:
                tmp_name = f"__sqlloc_t{i}"
                conn.execute(f"ALTER TABLE {_q(t.name)} RENAME TO {_q(tmp_name)}")
                changed.append((t.name, tmp_name, tgt))
        for name, tmp_name, tgt in changed:
            conn.execute(f"ALTER TABLE {_q(tmp_name)} RENAME TO {_q(tgt)}")
            artifact.renames.append(("table", name, tgt))

        for t in catalog.tables:
            table = mapping.table_target(t.name)
            moved = []
            for j, c in enumerate(t.columns):
                tgt = mapping.column_target(t.name, c.name)
                if tgt != c.name:
                    tmp_name = f"__sqlloc_c{j}"
                    conn.execute(f"ALTER TABLE {_q(table)} RENAME COLUMN {_q(c.name)} TO {_q(tmp_name)}")
                    moved.append((c.name, tmp_name, tgt))
            for name, tmp_name, tgt in moved:
                conn.execute(f"ALTER TABLE {_q(table)} RENAME COLUMN {_q(tmp_name)} TO {_q(tgt)}")
                artifact.renames.append(("column", f"{t.name}.{name}", tgt))

        extended = _with_views(mapping, view_cols)
        for v in catalog.views:
            head, body = view_body(v.sql)
            rewritten = render_sql(rewrite_identifiers(parse_sql(body), extended))
            cols = ", ".join(_q(c) for c in view_cols[v.name])
            conn.execute(f"CREATE VIEW {_q(v.name)}({cols}) AS {rewritten}")
            artifact.views.append(v.name)
        conn.execute("COMMIT")
    except sqlite3.Error as exc:
        if conn.in_transaction:
            conn.execute("ROLLBACK")
        raise RenameFailure(str(exc)) from exc
    except LocalizationError as exc:
        if conn.in_transaction:
            conn.execute("ROLLBACK")
        raise RenameFailure(f"view could not be rewritten: {exc}") from exc
    finally:
        conn.execute("PRAGMA foreign_keys = ON")


def content_mismatches(db_src, db_tgt, mapping: IdentifierMapping) -> list[str]:
    """Compare every table's full contents between a source file and its localized copy."""
    problems = []
    src_conn, tgt_conn = open_readonly(db_src), open_readonly(db_tgt)
    try:
        catalog = read_catalog(src_conn, mapping.db_id_src)
        for t in catalog.tables:
            table = mapping.table_target(t.name)
            src_cols = [c.name for c in t.columns]
            tgt_cols = [mapping.column_target(t.name, c) for c in src_cols]
            order = ", ".join(str(i + 1) for i in range(len(src_cols)))
            a = src_conn.execute(
                f"SELECT {', '.join(map(_q, src_cols))} FROM {_q(t.name)} ORDER BY {order}").fetchall()
            b = tgt_conn.execute(
                f"SELECT {', '.join(map(_q, tgt_cols))} FROM {_q(table)} ORDER BY {order}").fetchall()
            if len(a) != len(b):
                problems.append(f"{t.name}: {len(a)} rows vs {len(b)}")
            elif a != b:
                problems.append(f"{t.name}: values differ")
    finally:
        src_conn.close()
        tgt_conn.close()
    return problems


def localized_catalog_matches(source: SchemaCatalog, target: SchemaCatalog,
                              mapping: IdentifierMapping) -> bool:
    """True when ``target`` is ``source`` with every name passed through ``mapping``."""
    if len(source.tables) != len(target.tables):
        return False
    for s, t in zip(source.tables, target.tables):
        if mapping.table_target(s.name) != t.name:
            return False
        expected = [(mapping.column_target(s.name, c.name), c.type, c.pk) for c in s.columns]
        if expected != [(c.name, c.type, c.pk) for c in t.columns]:
            return False
    fks = {(mapping.table_target(f.child_table), mapping.column_target(f.child_table, f.child_column),
            mapping.table_target(f.parent_table), mapping.column_target(f.parent_table, f.parent_column))
           for f in source.foreign_keys}
    return fks == {(f.child_table, f.child_column, f.parent_table, f.parent_column)
                   for f in target.foreign_keys}

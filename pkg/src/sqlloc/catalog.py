"""Read-only schema introspection for SQLite database files."""

from __future__ import annotations

import json
import os
import sqlite3
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

from sqlloc.errors import CorruptDatabase, EmptySchema, FileNotReadable
from sqlloc.sql.resolve import fold

_HEADER = b"SQLite format 3\x00"


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    type: str
    pk: bool = False


@dataclass(frozen=True)
class TableInfo:
    name: str
    columns: tuple[ColumnInfo, ...]

    def column(self, name: str) -> Optional[ColumnInfo]:
        key = fold(name)
        for col in self.columns:
            if fold(col.name) == key:
                return col
        return None

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]


@dataclass(frozen=True)
class ForeignKey:
    child_table: str
    child_column: str
    parent_table: str
    parent_column: str


@dataclass(frozen=True)
class ViewInfo:
    name: str
    sql: str
    columns: tuple[str, ...] = ()


@dataclass(frozen=True)
class SchemaCatalog:
    db_id: str
    tables: tuple[TableInfo, ...]
    foreign_keys: tuple[ForeignKey, ...] = ()
    views: tuple[ViewInfo, ...] = ()

    def table(self, name: str) -> Optional[TableInfo]:
        key = fold(name)
        for t in self.tables:
            if fold(t.name) == key:
                return t
        return None

    @property
    def table_names(self) -> list[str]:
        return [t.name for t in self.tables]

    def identifier_set(self) -> set[str]:
        """Every table, view and column name, case-folded."""
        names = set()
        for t in self.tables:
            names.add(fold(t.name))
            names.update(fold(c.name) for c in t.columns)
        for v in self.views:
            names.add(fold(v.name))
            names.update(fold(c) for c in v.columns)
        return names

    def to_dict(self) -> dict:
        return {
            "db_id": self.db_id,
            "tables": [
                {"name": t.name, "columns": [asdict(c) for c in t.columns]} for t in self.tables
            ],
            "foreign_keys": [asdict(fk) for fk in self.foreign_keys],
            "views": [asdict(v) for v in self.views],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SchemaCatalog":
        tables = tuple(
            TableInfo(t["name"], tuple(ColumnInfo(**c) for c in t["columns"])) for t in data["tables"]
        )
        return cls(
            data["db_id"],
            tables,
            tuple(ForeignKey(**fk) for fk in data.get("foreign_keys", [])),
            tuple(ViewInfo(v["name"], v["sql"], tuple(v.get("columns", ()))) for v in data.get("views", [])),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SchemaCatalog":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def open_readonly(db_file) -> sqlite3.Connection:
    """Open ``db_file`` read-only, raising toolkit errors instead of sqlite ones."""
    path = Path(db_file)
    if not path.is_file() or not os.access(path, os.R_OK):
        raise FileNotReadable(str(path))
    with open(path, "rb") as fh:
        head = fh.read(len(_HEADER))
    if head and head != _HEADER:
        raise CorruptDatabase(f"{path}: not an SQLite 3 database")
    try:
        return sqlite3.connect(f"{path.resolve().as_uri()}?mode=ro", uri=True)
    except sqlite3.Error as exc:
        raise FileNotReadable(f"{path}: {exc}") from exc


def _quote(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def read_catalog(conn: sqlite3.Connection, db_id: str) -> SchemaCatalog:
    """Introspect an open connection (used for both source and localized files)."""
    try:
        rows = conn.execute(
            "SELECT type, name, sql FROM sqlite_master "
            "WHERE type IN ('table', 'view') ORDER BY rowid"
        ).fetchall()
        tables = []
        views = []
        for kind, name, sql in rows:
            if name.startswith("sqlite_"):
                continue
            if kind == "view":
                info = conn.execute(f"PRAGMA table_info({_quote(name)})").fetchall()
                views.append(ViewInfo(name, sql, tuple(r[1] for r in info)))
                continue
            info = conn.execute(f"PRAGMA table_info({_quote(name)})").fetchall()
            cols = tuple(ColumnInfo(r[1], r[2] or "", bool(r[5])) for r in info)
            tables.append(TableInfo(name, cols))
        fks = []
        by_name = {fold(t.name): t for t in tables}
        for t in tables:
            for row in conn.execute(f"PRAGMA foreign_key_list({_quote(t.name)})").fetchall():
                parent = by_name.get(fold(row[2]))
                if parent is None:
                    continue  # dangling reference; SQLite allows these
                if row[4] is None:
                    pks = [c for c in parent.columns if c.pk]
                    if len(pks) <= row[1]:
                        continue
                    parent_col = pks[row[1]]
                else:
                    parent_col = parent.column(row[4])
                child_col = t.column(row[3])
                if parent_col is None or child_col is None:
                    continue
                fks.append(ForeignKey(t.name, child_col.name, parent.name, parent_col.name))
    except sqlite3.DatabaseError as exc:
        raise CorruptDatabase(str(exc)) from exc
    return SchemaCatalog(db_id, tuple(tables), tuple(fks), tuple(views))


def extract_catalog(db_file, db_id: Optional[str] = None) -> SchemaCatalog:
    """Catalog of ``db_file``; ``db_id`` defaults to the file stem."""
    db_id = db_id if db_id is not None else Path(db_file).stem
    conn = open_readonly(db_file)
    try:
        catalog = read_catalog(conn, db_id)
    finally:
        conn.close()
    if not catalog.tables:
        raise EmptySchema(str(db_file))
    return catalog


class SchemaIdentifier(NamedTuple):
    scope: str  # db | table | column
    name: str
    table: Optional[str] = None


def identifier_sequence(catalog: SchemaCatalog) -> list[SchemaIdentifier]:
    """db id, then each table followed by its columns, in catalog order."""
    seq = [SchemaIdentifier("db", catalog.db_id)]
    for t in catalog.tables:
        seq.append(SchemaIdentifier("table", t.name))
        seq.extend(SchemaIdentifier("column", c.name, t.name) for c in t.columns)
    return seq


def schema_package(catalog: SchemaCatalog, description: Optional[str] = None) -> dict:
    """The JSON package handed to a schema translator."""
    pkg = {
        "db_id": catalog.db_id,
        "tables": [
            {"name": t.name, "columns": [{"name": c.name, "type": c.type} for c in t.columns]}
            for t in catalog.tables
        ],
        "foreign_keys": [
            [fk.child_table, fk.child_column, fk.parent_table, fk.parent_column]
            for fk in catalog.foreign_keys
        ],
    }
    if description:
        pkg["description"] = description
    return pkg

"""Per-database identifier mapping: normalization, construction, de-collision, inversion.

A mapping holds one target per table and one per (table, column). Column
uniqueness is database-wide: two different column names anywhere in the
database never share a target, while the same column name recurring in several
tables (``id``, ``name``) keeps one consistent target.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from sqlloc.catalog import SchemaCatalog, schema_package
from sqlloc.errors import (
    EmptyIdentifier, MalformedTranslatorReply, NotInjective, TranslatorUnavailable,
    UnresolvableCollision,
)
from sqlloc.sql.resolve import fold

ABBREVIATIONS = frozenset({"id", "api", "ip", "url", "uuid", "json", "xml", "http", "https", "sql"})
TARGET_PATTERN = re.compile(r"[a-z_][a-z0-9_]*")
MAX_SUFFIX_ATTEMPTS = 100

_TURKISH = str.maketrans({
    "ç": "c", "Ç": "c", "ğ": "g", "Ğ": "g", "ı": "i", "İ": "i",
    "ö": "o", "Ö": "o", "ş": "s", "Ş": "s", "ü": "u", "Ü": "u",
})
_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def normalize_identifier(raw: str) -> str:
    """ASCII-only lower snake_case form of ``raw``.

    Turkish letters are transliterated, other accents stripped, and any run of
    characters outside ``[a-z0-9]`` collapses to one underscore. A result
    starting with a digit gets a ``c_`` prefix.
    """
    text = raw.strip()
    if not text:
        raise EmptyIdentifier("identifier is empty")
    text = unicodedata.normalize("NFKD", text.translate(_TURKISH))
    text = "".join(ch for ch in text if not unicodedata.combining(ch)).lower()
    out = _NON_ALNUM.sub("_", text).strip("_")
    if not out:
        raise EmptyIdentifier(f"{raw!r} has no ASCII letters or digits")
    if out[0].isdigit():
        out = "c_" + out
    return out


@dataclass(frozen=True)
class IdentifierMapping:
    db_id_src: str
    db_id_tgt: str
    tables: dict  # source table -> target table
    columns: dict  # source table -> {source column -> target column}
    collision_report: list = field(default_factory=list, compare=False)
    term_memory: dict = field(default_factory=dict, compare=False)

    @property
    def entries(self) -> dict:
        """Ordered ``{(scope, source): target}`` over db, tables and columns."""
        out = {("db", self.db_id_src): self.db_id_tgt}
        for t, tgt in self.tables.items():
            out[("table", t)] = tgt
            for c, ctgt in self.columns.get(t, {}).items():
                out[("column", f"{t}.{c}")] = ctgt
        return out

    def table_target(self, name: str) -> Optional[str]:
        key = fold(name)
        for src, tgt in self.tables.items():
            if fold(src) == key:
                return tgt
        return None

    def column_target(self, table: str, column: str) -> Optional[str]:
        key_t, key_c = fold(table), fold(column)
        for src, cols in self.columns.items():
            if fold(src) == key_t:
                for c, tgt in cols.items():
                    if fold(c) == key_c:
                        return tgt
        return None

    def text_lookup(self) -> dict:
        """Source identifier text -> target, for rewriting free text such as evidence.

        When a table and a column share a source name, the column target wins.
        """
        out = {src: tgt for src, tgt in self.tables.items()}
        for cols in self.columns.values():
            out.update(cols)
        return out

    def target_identifiers(self) -> set[str]:
        names = set(self.tables.values())
        for cols in self.columns.values():
            names.update(cols.values())
        return names

    def source_identifiers(self) -> set[str]:
        names = set(self.tables)
        for cols in self.columns.values():
            names.update(cols)
        return names

    def with_entry(self, scope: str, source: str, target: str) -> "IdentifierMapping":
        """Copy with one entry replaced; ``source`` is ``table`` or ``table.column``."""
        tables = dict(self.tables)
        columns = {t: dict(c) for t, c in self.columns.items()}
        if scope == "db":
            return IdentifierMapping(self.db_id_src, target, tables, columns,
                                     list(self.collision_report), dict(self.term_memory))
        if scope == "table":
            if source not in tables:
                raise KeyError(source)
            tables[source] = target
        else:
            t, _, c = source.partition(".")
            while t not in columns or c not in columns[t]:
                # table names may themselves contain dots
                head, sep, rest = c.partition(".")
                if not sep:
                    raise KeyError(source)
                t, c = t + "." + head, rest
            columns[t][c] = target
        return IdentifierMapping(self.db_id_src, self.db_id_tgt, tables, columns,
                                 list(self.collision_report), dict(self.term_memory))

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        translations = {}
        for (scope, src), tgt in self.entries.items():
            if scope != "db":
                translations[src] = tgt
        return {
            "db_id": self.db_id_src,
            "db_id_tr": self.db_id_tgt,
            "translations": translations,
            "tables": dict(self.tables),
            "columns": {t: dict(c) for t, c in self.columns.items()},
            "collision_report": list(self.collision_report),
            "term_memory": dict(self.term_memory),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IdentifierMapping":
        return cls(
            data["db_id"], data["db_id_tr"], dict(data["tables"]),
            {t: dict(c) for t, c in data["columns"].items()},
            list(data.get("collision_report", [])), dict(data.get("term_memory", {})),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "IdentifierMapping":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def identity_mapping(catalog: SchemaCatalog) -> IdentifierMapping:
    """Every identifier mapped to itself (targets are not normalized)."""
    tables = {t.name: t.name for t in catalog.tables}
    columns = {t.name: {c.name: c.name for c in t.columns} for t in catalog.tables}
    return IdentifierMapping(catalog.db_id, catalog.db_id, tables, columns)


def mapping_from_dict(db_id: str, tables: dict, columns: dict, db_id_tgt: Optional[str] = None):
    return IdentifierMapping(db_id, db_id_tgt or db_id, dict(tables),
                             {t: dict(c) for t, c in columns.items()})


# -- term memory -------------------------------------------------------------


@dataclass
class TermMemory:
    """Translations remembered across identifiers (and databases) within one run.

    ``identifiers`` maps a normalized source identifier to its target;
    ``terms`` maps single source words to target words, learned from
    one-word identifiers and used to compose identifiers the translator skipped.
    """

    identifiers: dict = field(default_factory=dict)
    terms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"identifiers": dict(self.identifiers), "terms": dict(self.terms)}

    @classmethod
    def from_dict(cls, data: dict) -> "TermMemory":
        return cls(dict(data.get("identifiers", {})), dict(data.get("terms", {})))

    def translate(self, source: str, replies: dict) -> str:
        key = normalize_identifier(source)
        if key in ABBREVIATIONS:
            return key
        if key in self.identifiers:
            return self.identifiers[key]
        reply = replies.get(source)
        if reply is None:
            reply = replies.get(fold(source))
        if reply is not None:
            try:
                target = normalize_identifier(reply)
            except EmptyIdentifier as exc:
                raise MalformedTranslatorReply(f"empty translation for {source!r}") from exc
            if "_" not in key:
                self.terms.setdefault(key, target)
        else:
            parts = key.split("_")
            target = "_".join(p if p in ABBREVIATIONS else self.terms.get(p, p) for p in parts)
        self.identifiers[key] = target
        return target


# -- construction ------------------------------------------------------------


def parse_schema_reply(raw) -> dict:
    """Validate a schema-translation reply: exactly ``db_id_tr`` and ``translations``."""
    if isinstance(raw, (str, bytes)):
        try:
            raw = json.loads(raw)
        except ValueError as exc:
            raise MalformedTranslatorReply(f"reply is not JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedTranslatorReply("reply is not a JSON object")
    keys = set(raw)
    if keys != {"db_id_tr", "translations"}:
        missing = {"db_id_tr", "translations"} - keys
        extra = keys - {"db_id_tr", "translations"}
        detail = []
        if missing:
            detail.append("missing " + ", ".join(sorted(missing)))
        if extra:
            detail.append("unexpected " + ", ".join(sorted(extra)))
        raise MalformedTranslatorReply("; ".join(detail))
    if not isinstance(raw["db_id_tr"], str):
        raise MalformedTranslatorReply("db_id_tr must be a string")
    trans = raw["translations"]
    if not isinstance(trans, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in trans.items()
    ):
        raise MalformedTranslatorReply("translations must map strings to strings")
    return raw


def build_mapping(catalog: SchemaCatalog, translator, memory: Optional[TermMemory] = None,
                  description: Optional[str] = None) -> IdentifierMapping:
    """Ask ``translator`` for the schema's identifiers and normalize every answer.

    Collisions are not resolved here; pass the result to :func:`resolve_collisions`.
    """
    memory = memory if memory is not None else TermMemory()
    try:
        raw = translator.map_schema(schema_package(catalog, description))
    except (TranslatorUnavailable, MalformedTranslatorReply):
        raise
    except Exception as exc:
        raise TranslatorUnavailable(f"schema translator failed: {exc}") from exc
    reply = parse_schema_reply(raw)
    replies = reply["translations"]
    try:
        db_tgt = normalize_identifier(reply["db_id_tr"])
    except EmptyIdentifier as exc:
        raise MalformedTranslatorReply("db_id_tr is empty") from exc
    tables, columns = {}, {}
    for t in catalog.tables:
        tables[t.name] = memory.translate(t.name, replies)
        columns[t.name] = {c.name: memory.translate(c.name, replies) for c in t.columns}
    return IdentifierMapping(catalog.db_id, db_tgt, tables, columns, [], memory.to_dict())


# -- collisions ----------------------------------------------------------------


def _sort_key(name: str):
    return (name, fold(name))


def _find_collisions(pairs) -> dict:
    """``pairs`` of (source class, target) -> {target: sorted distinct source classes}."""
    users: dict = {}
    for src, tgt in pairs:
        users.setdefault(tgt, {}).setdefault(fold(src), src)
    return {tgt: sorted(srcs.values(), key=_sort_key) for tgt, srcs in users.items() if len(srcs) > 1}


def _suffix_plan(collisions: dict, taken: set, scope: str) -> tuple[dict, list]:
    renames = {}
    report = []
    for tgt in sorted(collisions):
        sources = collisions[tgt]
        assigned = {sources[0]: tgt}
        n = 2
        for src in sources[1:]:
            attempts = 0
            while f"{tgt}_{n}" in taken:
                n += 1
                attempts += 1
                if attempts >= MAX_SUFFIX_ATTEMPTS:
                    raise UnresolvableCollision(f"cannot find a free suffix for {tgt!r}")
            new = f"{tgt}_{n}"
            taken.add(new)
            assigned[src] = new
            renames[(fold(src), tgt)] = new
            n += 1
        report.append({"scope": scope, "target": tgt, "sources": list(sources), "assigned": assigned})
    return renames, report


def resolve_collisions(mapping: IdentifierMapping) -> IdentifierMapping:
    """Make targets unique: the lexicographically smallest source keeps the bare
    target and the rest get ``_2``, ``_3``, ... in source order."""
    table_clashes = _find_collisions(mapping.tables.items())
    table_renames, report = _suffix_plan(table_clashes, set(mapping.tables.values()), "table")
    tables = {s: table_renames.get((fold(s), t), t) for s, t in mapping.tables.items()}

    col_pairs = [(c, t) for cols in mapping.columns.values() for c, t in cols.items()]
    col_clashes = _find_collisions(col_pairs)
    col_renames, col_report = _suffix_plan(col_clashes, {t for _, t in col_pairs}, "column")
    columns = {
        table: {c: col_renames.get((fold(c), t), t) for c, t in cols.items()}
        for table, cols in mapping.columns.items()
    }
    out = IdentifierMapping(mapping.db_id_src, mapping.db_id_tgt, tables, columns,
                            list(mapping.collision_report) + report + col_report,
                            dict(mapping.term_memory))
    problems = injectivity_violations(out)
    if problems:
        raise UnresolvableCollision("; ".join(problems))
    return out


def injectivity_violations(mapping: IdentifierMapping) -> list[str]:
    """Human-readable list of every place two sources share a target."""
    problems = []
    for tgt, srcs in _find_collisions(mapping.tables.items()).items():
        problems.append(f"tables {srcs} -> {tgt}")
    for table, cols in mapping.columns.items():
        seen = {}
        for c, t in cols.items():
            if fold(t) in seen:
                problems.append(f"columns {table}.{seen[fold(t)]}, {table}.{c} -> {t}")
            seen.setdefault(fold(t), c)
    pairs = [(c, t) for cols in mapping.columns.values() for c, t in cols.items()]
    for tgt, srcs in _find_collisions(pairs).items():
        problems.append(f"columns {srcs} -> {tgt}")
    return problems


def target_form_violations(mapping: IdentifierMapping) -> list[str]:
    bad = [t for t in [mapping.db_id_tgt, *mapping.target_identifiers()]
           if not TARGET_PATTERN.fullmatch(t)]
    return sorted(set(bad))


def invert_mapping(mapping: IdentifierMapping) -> IdentifierMapping:
    problems = injectivity_violations(mapping)
    if problems:
        raise NotInjective("; ".join(problems))
    tables = {tgt: src for src, tgt in mapping.tables.items()}
    columns = {
        mapping.tables[t]: {tgt: src for src, tgt in cols.items()}
        for t, cols in mapping.columns.items()
    }
    return IdentifierMapping(mapping.db_id_tgt, mapping.db_id_src, tables, columns)

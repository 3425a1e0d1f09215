"""Benchmark items and JSONL corpus files."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from sqlloc.errors import ConfigInvalid

STATUSES = ("pending", "localized", "verified", "flagged")

# input key -> attribute; the first key present wins
_SOURCE_KEYS = {
    "item_id": ("item_id", "question_id"),
    "db_id": ("db_id",),
    "question_src": ("question",),
    "evidence_src": ("evidence",),
    "sql_src": ("SQL", "sql", "query"),
}
_TARGET_KEYS = {
    "db_id_tgt": "db_id_tr",
    "question_tgt": "question_tr",
    "evidence_tgt": "evidence_tr",
    "sql_tgt": "SQL_tr",
}


@dataclass
class BenchmarkItem:
    item_id: int
    db_id: str
    question_src: str
    evidence_src: str
    sql_src: str
    question_tgt: Optional[str] = None
    evidence_tgt: Optional[str] = None
    sql_tgt: Optional[str] = None
    db_id_tgt: Optional[str] = None
    status: str = "pending"
    extra: dict = field(default_factory=dict)  # unrecognized input keys, written back verbatim

    @property
    def is_localized(self) -> bool:
        return None not in (self.question_tgt, self.evidence_tgt, self.sql_tgt)

    @classmethod
    def from_record(cls, rec: dict) -> "BenchmarkItem":
        values = {}
        used = set()
        for attr, keys in _SOURCE_KEYS.items():
            for k in keys:
                if k in rec:
                    values[attr] = rec[k]
                    used.add(k)
                    break
        for attr in ("item_id", "db_id", "question_src", "sql_src"):
            if attr not in values:
                raise ConfigInvalid(f"corpus record lacks {_SOURCE_KEYS[attr][0]!r}: {rec}")
        values["item_id"] = int(values["item_id"])
        values["evidence_src"] = values.get("evidence_src") or ""
        for attr, key in _TARGET_KEYS.items():
            if key in rec:
                values[attr] = rec[key]
                used.add(key)
        if "status" in rec:
            values["status"] = rec["status"]
            used.add("status")
        values["extra"] = {k: v for k, v in rec.items() if k not in used}
        return cls(**values)

    def to_record(self) -> dict:
        rec = {
            "item_id": self.item_id,
            "db_id": self.db_id,
            "question": self.question_src,
            "evidence": self.evidence_src,
            "SQL": self.sql_src,
        }
        rec.update(self.extra)
        for attr, key in _TARGET_KEYS.items():
            value = getattr(self, attr)
            if value is not None:
                rec[key] = value
        rec["status"] = self.status
        return rec


def read_records(path) -> list[dict]:
    """Records from a JSONL file, or from a JSON array file."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        return json.loads(text)
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def read_corpus(path) -> list[BenchmarkItem]:
    items = [BenchmarkItem.from_record(r) for r in read_records(path)]
    seen = set()
    for it in items:
        if it.item_id in seen:
            raise ConfigInvalid(f"duplicate item_id {it.item_id} in {path}")
        seen.add(it.item_id)
    return items


def write_jsonl(path, records: Iterable[dict]) -> None:
    """Write records atomically (temp file in the same directory, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_corpus(path, items: Iterable[BenchmarkItem]) -> None:
    write_jsonl(path, (it.to_record() for it in sorted(items, key=lambda i: i.item_id)))

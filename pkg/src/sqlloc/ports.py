"""Pluggable boundaries to external services: translators, judges, tokenizers, timers.

A translator answers two kinds of request. ``map_schema`` receives a schema
package and must reply with ``{"db_id_tr": ..., "translations": {...}}``;
``translate_text`` receives ``{"question_en", "evidence_std", "sql_en"?}`` and
must reply with ``{"question_tr", "evidence_tr"}``. Replies may be JSON text or
already-decoded dicts; validation happens in the consuming module.
"""

from __future__ import annotations

import json
import os
import re
import sqlite3
import statistics
import time
import urllib.error
import urllib.request
from pathlib import Path
from typing import Callable, Optional, Protocol, Union

from sqlloc.errors import ConfigInvalid, QueryTimeout, TranslatorUnavailable

Reply = Union[str, dict]


class TranslatorPort(Protocol):
    def map_schema(self, package: dict) -> Reply: ...

    def translate_text(self, request: dict) -> Reply: ...


class JudgePort(Protocol):
    def judge(self, request: dict) -> Reply: ...


class TimerPort(Protocol):
    def measure(self, sql: str, db: Path) -> float: ...


Tokenizer = Callable[[str], list]


def _package_identifiers(package: dict) -> list[str]:
    names = []
    for t in package["tables"]:
        names.append(t["name"])
        names.extend(c["name"] for c in t["columns"])
    return list(dict.fromkeys(names))


class IdentityTranslator:
    """Echoes every identifier and text back; targets end up as normalized sources."""

    def map_schema(self, package: dict) -> dict:
        return {
            "db_id_tr": package["db_id"],
            "translations": {n: n for n in _package_identifiers(package)},
        }

    def translate_text(self, request: dict) -> dict:
        return {"question_tr": request["question_en"], "evidence_tr": request["evidence_std"]}


class DictionaryTranslator:
    """Local lookup tables standing in for a translation service.

    Identifiers missing from ``identifiers`` are left out of the reply (the
    mapping builder then composes or passes them through); texts missing from
    ``texts`` come back unchanged.
    """

    def __init__(self, identifiers: dict, texts: Optional[dict] = None, db_ids: Optional[dict] = None):
        self.identifiers = dict(identifiers)
        self.texts = dict(texts or {})
        self.db_ids = dict(db_ids or {})

    @classmethod
    def from_file(cls, path) -> "DictionaryTranslator":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data.get("identifiers", {}), data.get("texts", {}), data.get("db_ids", {}))

    def map_schema(self, package: dict) -> dict:
        db = package["db_id"]
        found = {n: self.identifiers[n] for n in _package_identifiers(package) if n in self.identifiers}
        return {"db_id_tr": self.db_ids.get(db, self.identifiers.get(db, db)), "translations": found}

    def translate_text(self, request: dict) -> dict:
        q, e = request["question_en"], request["evidence_std"]
        return {"question_tr": self.texts.get(q, q), "evidence_tr": self.texts.get(e, e)}


class HttpService:
    """JSON-over-HTTP client; the API key is read from an environment variable."""

    def __init__(self, endpoint: str, key_env: Optional[str] = None, timeout: float = 60.0):
        self.endpoint = endpoint
        self.key_env = key_env
        self.timeout = timeout

    def call(self, task: str, payload: dict) -> str:
        headers = {"Content-Type": "application/json"}
        if self.key_env:
            key = os.environ.get(self.key_env)
            if not key:
                raise TranslatorUnavailable(f"environment variable {self.key_env} is not set")
            headers["Authorization"] = "Bearer " + key
        body = json.dumps({"task": task, "input": payload}, ensure_ascii=False).encode("utf-8")
        req = urllib.request.Request(self.endpoint, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.read().decode("utf-8")
        except (urllib.error.URLError, OSError) as exc:
            raise TranslatorUnavailable(f"{self.endpoint}: {exc}") from exc


class HttpTranslator(HttpService):
    def map_schema(self, package: dict) -> str:
        return self.call("schema_mapping", package)

    def translate_text(self, request: dict) -> str:
        return self.call("question_evidence", request)


class HttpJudge(HttpService):
    def judge(self, request: dict) -> str:
        return self.call("judge", request)


def translator_from_spec(spec: str):
    """``identity``, ``dict:<file.json>`` or ``http:<url>[#ENV_VAR]``."""
    if spec == "identity":
        return IdentityTranslator()
    if spec.startswith("dict:"):
        path = Path(spec[5:])
        if not path.is_file():
            raise ConfigInvalid(f"dictionary file not found: {path}")
        return DictionaryTranslator.from_file(path)
    if spec.startswith("http:") or spec.startswith("https:"):
        url, _, env = spec.partition("#")
        return HttpTranslator(url, env or None)
    raise ConfigInvalid(f"unknown translator backend: {spec!r}")


def judge_from_spec(spec: Optional[str]):
    if not spec:
        return None
    if spec.startswith("http:") or spec.startswith("https:"):
        url, _, env = spec.partition("#")
        return HttpJudge(url, env or None)
    raise ConfigInvalid(f"unknown judge backend: {spec!r}")


# -- tokenizer ---------------------------------------------------------------

_SUBWORD = re.compile(r"\w+|[^\w\s]")


def default_tokenize(text: str) -> list[str]:
    """Lower-cased word runs and single punctuation marks."""
    return _SUBWORD.findall(text.lower())


# -- timing ------------------------------------------------------------------


def run_with_timeout(conn: sqlite3.Connection, sql: str, timeout: Optional[float], side: str = "query"):
    """Execute ``sql`` and fetch every row, aborting after ``timeout`` seconds."""
    if timeout is not None:
        deadline = time.monotonic() + timeout
        conn.set_progress_handler(lambda: int(time.monotonic() > deadline), 10_000)
    try:
        cur = conn.execute(sql)
        rows = cur.fetchall()
        return rows, len(cur.description or ())
    except sqlite3.OperationalError as exc:
        if timeout is not None and "interrupted" in str(exc):
            raise QueryTimeout(side, timeout) from exc
        raise
    finally:
        if timeout is not None:
            conn.set_progress_handler(None, 0)


class SqliteTimer:
    """Wall-clock cost of a query: one discarded warm-up, then the median of ``repeats`` runs."""

    def __init__(self, repeats: int = 5, warmup: int = 1, timeout: Optional[float] = 30.0):
        self.repeats = repeats
        self.warmup = warmup
        self.timeout = timeout
        self._conns: dict = {}

    def _conn(self, db: Path) -> sqlite3.Connection:
        key = str(Path(db).resolve())
        if key not in self._conns:
            self._conns[key] = sqlite3.connect(f"{Path(key).as_uri()}?mode=ro", uri=True)
        return self._conns[key]

    def measure(self, sql: str, db: Path) -> float:
        conn = self._conn(db)
        for _ in range(self.warmup):
            run_with_timeout(conn, sql, self.timeout)
        samples = []
        for _ in range(self.repeats):
            start = time.perf_counter()
            run_with_timeout(conn, sql, self.timeout)
            samples.append(time.perf_counter() - start)
        return statistics.median(samples)

    def close(self) -> None:
        for conn in self._conns.values():
            conn.close()
        self._conns.clear()


class FixedTimer:
    """Timer returning preset costs, keyed by SQL text; ``default`` for anything else."""

    def __init__(self, costs: Optional[dict] = None, default: float = 1.0):
        self.costs = dict(costs or {})
        self.default = default

    def measure(self, sql: str, db: Path) -> float:
        return self.costs.get(sql, self.default)

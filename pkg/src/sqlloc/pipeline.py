"""End-to-end localization run and the flag-review loop.

Output directory layout::

    schemas/<db>.json          source catalogs
    mappings/<db>.json         collision-resolved identifier mappings
    databases/<db_tr>/<db_tr>.sqlite and renames.json
    corpus.jsonl               every item with its status
    verified.jsonl             items that passed every check (waived ones excluded)
    flags.jsonl, verdicts.jsonl, run_report.json, term_memory.json, audit.jsonl

Phase one (catalog, mapping, database copy) finishes for every database before
any item is translated. Item problems become flags; they never abort the run.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Optional

from sqlloc.catalog import SchemaCatalog, extract_catalog
from sqlloc.corpus import BenchmarkItem, read_corpus, write_corpus, write_jsonl
from sqlloc.dblocal import localize_database
from sqlloc.errors import (
    ConfigInvalid, FrozenContentViolated, LocalizationError, MalformedTranslatorReply,
    SchemaViolation, ConsistencyViolation, TranslatorUnavailable, UnbalancedBackticks,
)
from sqlloc.mapping import (
    IdentifierMapping, TermMemory, build_mapping, normalize_identifier, resolve_collisions,
)
from sqlloc.metrics import database_path
from sqlloc.nl import (
    DEFAULT_DATE_PATTERNS, backtick_spans, localize_text_pair, standardize_evidence, verify_frozen_content,
)
from sqlloc.ports import judge_from_spec, translator_from_spec
from sqlloc.sql import localize_sql
from sqlloc.verify import (
    DEFAULT_TIMEOUT, FlagRecord, VerificationVerdict, load_flags, save_flags, validate_judge_report,
    verify_item,
)


@dataclass
class PipelineConfig:
    corpus: Path
    db_dir: Path
    out_dir: Path
    translator: str = "identity"  # identity | dict:<file> | http(s)://...#ENV_VAR
    judge: Optional[str] = None
    concurrency: int = 4
    seed: int = 0
    timeout: float = DEFAULT_TIMEOUT
    retries: int = 3
    date_patterns: tuple = DEFAULT_DATE_PATTERNS

    def __post_init__(self):
        self.corpus, self.db_dir, self.out_dir = Path(self.corpus), Path(self.db_dir), Path(self.out_dir)
        self.date_patterns = tuple(self.date_patterns)

    def validate(self) -> None:
        if not self.corpus.is_file():
            raise ConfigInvalid(f"corpus file not found: {self.corpus}")
        if not self.db_dir.is_dir():
            raise ConfigInvalid(f"database directory not found: {self.db_dir}")
        if self.concurrency < 1 or self.retries < 0 or self.timeout <= 0:
            raise ConfigInvalid("concurrency >= 1, retries >= 0 and timeout > 0 are required")
        if self.translator.startswith("dict:") and not Path(self.translator[5:]).is_file():
            raise ConfigInvalid(f"dictionary file not found: {self.translator[5:]}")

    @classmethod
    def from_file(cls, path, **overrides) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {', '.join(sorted(unknown))}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc

    # -- output layout -------------------------------------------------------

    def schema_file(self, db_id: str) -> Path:
        return self.out_dir / "schemas" / f"{db_id}.json"

    def mapping_file(self, db_id: str) -> Path:
        return self.out_dir / "mappings" / f"{db_id}.json"

    def localized_db(self, db_id_tgt: str) -> Path:
        return self.out_dir / "databases" / db_id_tgt / f"{db_id_tgt}.sqlite"

    @property
    def corpus_out(self) -> Path:
        return self.out_dir / "corpus.jsonl"

    @property
    def verified_out(self) -> Path:
        return self.out_dir / "verified.jsonl"

    @property
    def flags_file(self) -> Path:
        return self.out_dir / "flags.jsonl"

    @property
    def verdicts_file(self) -> Path:
        return self.out_dir / "verdicts.jsonl"

    @property
    def audit_file(self) -> Path:
        return self.out_dir / "audit.jsonl"


@dataclass
class DbContext:
    db_id: str
    source: Path
    mapping: Optional[IdentifierMapping] = None
    target: Optional[Path] = None
    catalog_tgt: Optional[SchemaCatalog] = None
    error: Optional[str] = None


@dataclass
class RunReport:
    total: int = 0
    processed: int = 0
    skipped: int = 0
    by_status: dict = field(default_factory=dict)
    by_reason: dict = field(default_factory=dict)
    open_flags: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def exit_code(self) -> int:
        return 2 if self.open_flags else 0


def _sha(mapping: IdentifierMapping) -> str:
    return hashlib.sha256(mapping.dumps().encode("utf-8")).hexdigest()


def _description(db_file: Path) -> Optional[str]:
    """Concatenated description files shipped next to a database, if any."""
    folder = db_file.parent / "database_description"
    if not folder.is_dir():
        return None
    parts = []
    for f in sorted(folder.iterdir()):
        if f.is_file():
            parts.append(f"## {f.name}\n" + f.read_text(encoding="utf-8", errors="replace"))
    return "\n".join(parts) or None


def _unique_db_target(mapping: IdentifierMapping, used: set) -> IdentifierMapping:
    tgt, n = mapping.db_id_tgt, 2
    while tgt in used:
        tgt = f"{mapping.db_id_tgt}_{n}"
        n += 1
    used.add(tgt)
    if tgt == mapping.db_id_tgt:
        return mapping
    return mapping.with_entry("db", mapping.db_id_src, tgt)


def ensure_localized_db(config: PipelineConfig, ctx: DbContext) -> None:
    """(Re)build the localized copy when missing or built from a different mapping."""
    target = config.localized_db(ctx.mapping.db_id_tgt)
    manifest = target.parent / "renames.json"
    digest = _sha(ctx.mapping)
    if target.exists() and manifest.exists():
        if json.loads(manifest.read_text(encoding="utf-8")).get("mapping_sha256") == digest:
            ctx.target = target
            ctx.catalog_tgt = extract_catalog(target, ctx.mapping.db_id_tgt)
            return
    if target.parent.exists():
        shutil.rmtree(target.parent)
    artifact = localize_database(ctx.source, ctx.mapping, target)
    record = artifact.to_dict()
    record["mapping_sha256"] = digest
    manifest.write_text(json.dumps(record, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    ctx.target = target
    ctx.catalog_tgt = extract_catalog(target, ctx.mapping.db_id_tgt)


def prepare_databases(config: PipelineConfig, db_ids, translator) -> dict:
    """Phase one for every database, sequentially so term memory is deterministic."""
    memory_file = config.out_dir / "term_memory.json"
    memory = (TermMemory.from_dict(json.loads(memory_file.read_text(encoding="utf-8")))
              if memory_file.exists() else TermMemory())
    for sub in ("schemas", "mappings", "databases"):
        (config.out_dir / sub).mkdir(parents=True, exist_ok=True)
    contexts = {}
    used_targets: set = set()
    for db_id in sorted(db_ids):
        ctx = DbContext(db_id, database_path(config.db_dir, db_id))
        contexts[db_id] = ctx
        try:
            catalog = extract_catalog(ctx.source, db_id)
            catalog.save(config.schema_file(db_id))
            mfile = config.mapping_file(db_id)
            if mfile.exists():
                mapping = IdentifierMapping.load(mfile)
            else:
                mapping = resolve_collisions(
                    build_mapping(catalog, translator, memory, _description(ctx.source)))
            mapping = _unique_db_target(mapping, used_targets)
            mapping.save(mfile)
            ctx.mapping = mapping
            ensure_localized_db(config, ctx)
        except LocalizationError as exc:
            ctx.error = f"{type(exc).__name__}: {exc}"
    memory_file.write_text(json.dumps(memory.to_dict(), indent=2, ensure_ascii=False) + "\n",
                           encoding="utf-8")
    return contexts


@dataclass
class ItemOutcome:
    item: BenchmarkItem
    verdict: Optional[VerificationVerdict] = None
    flag: Optional[FlagRecord] = None


def localize_item(item: BenchmarkItem, ctx: DbContext, translator, config: PipelineConfig) -> ItemOutcome:
    """Phases two and three for one item."""
    if ctx.error is not None:
        item.status = "flagged"
        return ItemOutcome(item, flag=FlagRecord(item.item_id, "schema-mapping", ctx.error))
    mapping = ctx.mapping
    item.db_id_tgt = mapping.db_id_tgt
    try:
        item.sql_tgt = localize_sql(item.sql_src, mapping)
    except LocalizationError as exc:
        item.status = "flagged"
        return ItemOutcome(item, flag=FlagRecord(item.item_id, "sql-rewrite", f"{type(exc).__name__}: {exc}"))
    try:
        std = standardize_evidence(item.evidence_src, mapping)
        text = localize_text_pair(item.question_src, std.text, translator, config.retries,
                                  item.sql_src, config.date_patterns)
        item.question_tgt, item.evidence_tgt = text.question, text.evidence
    except FrozenContentViolated as exc:
        item.status = "flagged"
        if exc.candidate is not None:
            item.question_tgt, item.evidence_tgt = exc.candidate
        return ItemOutcome(item, flag=FlagRecord(item.item_id, "frozen-content", f"FrozenContentViolated: {exc}"))
    except (MalformedTranslatorReply, TranslatorUnavailable, UnbalancedBackticks) as exc:
        item.status = "flagged"
        return ItemOutcome(item, flag=FlagRecord(item.item_id, "translation", f"{type(exc).__name__}: {exc}"))
    item.status = "localized"
    return check_item(item, ctx, config)


def check_item(item: BenchmarkItem, ctx: DbContext, config: PipelineConfig) -> ItemOutcome:
    """Frozen content against the source texts, then execution and structure."""
    try:
        std = standardize_evidence(item.evidence_src, ctx.mapping).text
        frozen = verify_frozen_content(item.question_src, std, item.question_tgt, item.evidence_tgt,
                                       config.date_patterns)
    except UnbalancedBackticks as exc:
        item.status = "flagged"
        return ItemOutcome(item, flag=FlagRecord(item.item_id, "frozen-content", f"UnbalancedBackticks: {exc}"))
    if not frozen.passed:
        item.status = "flagged"
        detail = "FrozenContentViolated: " + "; ".join(str(v) for v in frozen.violations)
        return ItemOutcome(item, flag=FlagRecord(item.item_id, "frozen-content", detail))
    verdict = verify_item(item, ctx.source, ctx.target, ctx.mapping, ctx.catalog_tgt, config.timeout)
    if verdict.passed:
        item.status = "verified"
        return ItemOutcome(item, verdict)
    item.status = "flagged"
    detail = verdict.detail
    if verdict.missing_identifiers:
        detail = "unknown identifiers: " + ", ".join(verdict.missing_identifiers)
    elif verdict.unknown_spans and not detail:
        detail = "unknown evidence spans: " + ", ".join(verdict.unknown_spans)
    return ItemOutcome(item, verdict, FlagRecord(item.item_id, verdict.failure_class, detail))


def _attach_judge(outcome: ItemOutcome, judge) -> None:
    item = outcome.item
    if judge is None or outcome.flag is None or item.sql_tgt is None:
        return
    request = {"question_tr": item.question_tgt or "", "evidence_tr": item.evidence_tgt or "",
               "sql_tr": item.sql_tgt, "sql_en": item.sql_src}
    try:
        report = validate_judge_report(judge.judge(request), item.evidence_tgt or "")
        outcome.flag.judge_report = report.to_dict()
    except (SchemaViolation, ConsistencyViolation, TranslatorUnavailable) as exc:
        outcome.flag.detail += f" [judge report rejected: {exc}]"


def _load_verdicts(path: Path) -> dict:
    if not path.exists():
        return {}
    out = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            d = json.loads(line)
            out[d["item_id"]] = d
    return out


def _previous_items(config: PipelineConfig) -> dict:
    if not config.corpus_out.exists():
        return {}
    return {it.item_id: it for it in read_corpus(config.corpus_out)}


def write_outputs(config: PipelineConfig, items: list, flags: list, verdicts: dict) -> None:
    waived = {f.item_id for f in flags if f.resolution == "waived"}
    write_corpus(config.corpus_out, items)
    write_corpus(config.verified_out,
                 [it for it in items if it.status == "verified" and it.item_id not in waived])
    save_flags(config.flags_file, flags)
    write_jsonl(config.verdicts_file, (verdicts[k] for k in sorted(verdicts)))


def merge_flags(existing: list, fresh: dict, passed: set) -> list:
    """Keep closed flags for audit; replace open flags with this run's findings."""
    merged = []
    for f in existing:
        if f.resolution != "open":
            merged.append(f)
        elif f.item_id not in fresh and f.item_id not in passed:
            merged.append(f)  # item not reprocessed this run
    merged.extend(fresh.values())
    return sorted(merged, key=lambda f: (f.item_id, f.resolution != "open"))


def run_pipeline(config: PipelineConfig, translator=None, judge=None,
                 log: Callable[[str], None] = lambda msg: None) -> RunReport:
    config.validate()
    config.out_dir.mkdir(parents=True, exist_ok=True)
    translator = translator or translator_from_spec(config.translator)
    judge = judge if judge is not None else judge_from_spec(config.judge)
    items = read_corpus(config.corpus)

    previous = _previous_items(config)
    flags = load_flags(config.flags_file)
    waived = {f.item_id for f in flags if f.resolution == "waived"}
    done = {i for i, it in previous.items() if it.status == "verified"} | waived

    log(f"phase 1: {len({it.db_id for it in items})} database(s)")
    contexts = prepare_databases(config, {it.db_id for it in items}, translator)

    todo = [it for it in items if it.item_id not in done]
    final = {it.item_id: previous.get(it.item_id, it) for it in items if it.item_id in done}
    log(f"phases 2-3: {len(todo)} item(s), {len(final)} already done")

    def work(item):
        outcome = localize_item(item, contexts[item.db_id], translator, config)
        _attach_judge(outcome, judge)
        return outcome

    with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
        outcomes = list(pool.map(work, todo))

    verdicts = _load_verdicts(config.verdicts_file)
    fresh, passed = {}, set()
    for o in outcomes:
        final[o.item.item_id] = o.item
        if o.verdict is not None:
            verdicts[o.item.item_id] = o.verdict.to_dict()
        if o.flag is not None:
            fresh[o.item.item_id] = o.flag
        else:
            passed.add(o.item.item_id)
    flags = merge_flags(flags, fresh, passed)
    ordered = [final[it.item_id] for it in items]
    write_outputs(config, ordered, flags, verdicts)

    report = RunReport(
        total=len(items), processed=len(todo), skipped=len(items) - len(todo),
        by_status=dict(sorted(Counter(it.status for it in ordered).items())),
        by_reason=dict(sorted(Counter(f.reason for f in flags if f.resolution == "open").items())),
        open_flags=sum(1 for f in flags if f.resolution == "open"),
    )
    (config.out_dir / "run_report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n",
                                                   encoding="utf-8")
    return report


# -- review ------------------------------------------------------------------

EDITABLE = ("question_tgt", "evidence_tgt", "sql_tgt")


class ReviewSession:
    """Human correction of flagged items, with immediate re-verification.

    Every change is appended to the audit log. Editing a mapping entry rebuilds
    the localized database and re-verifies every item of that database.
    """

    def __init__(self, config: PipelineConfig, clock: Callable[[], float] = time.time):
        self.config = config
        self.clock = clock
        if not config.corpus_out.exists():
            raise ConfigInvalid(f"no pipeline output in {config.out_dir}")
        self.items = {it.item_id: it for it in read_corpus(config.corpus_out)}
        self.flags = load_flags(config.flags_file)
        self.verdicts = _load_verdicts(config.verdicts_file)
        self.contexts: dict = {}

    def open_flags(self) -> list:
        return [f for f in self.flags if f.resolution == "open"]

    def flag_for(self, item_id: int) -> FlagRecord:
        for f in self.flags:
            if f.item_id == item_id and f.resolution == "open":
                return f
        raise KeyError(f"no open flag for item {item_id}")

    def context(self, db_id: str) -> DbContext:
        if db_id not in self.contexts:
            ctx = DbContext(db_id, database_path(self.config.db_dir, db_id))
            ctx.mapping = IdentifierMapping.load(self.config.mapping_file(db_id))
            ensure_localized_db(self.config, ctx)
            self.contexts[db_id] = ctx
        return self.contexts[db_id]

    def audit(self, action: str, **details) -> None:
        self.config.audit_file.parent.mkdir(parents=True, exist_ok=True)
        with open(self.config.audit_file, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"time": self.clock(), "action": action, **details},
                                ensure_ascii=False) + "\n")

    def _recheck(self, item: BenchmarkItem) -> ItemOutcome:
        ctx = self.context(item.db_id)
        if not item.is_localized:
            item.status = "flagged"
            return ItemOutcome(item, flag=FlagRecord(item.item_id, "translation", "item is not localized"))
        outcome = check_item(item, ctx, self.config)
        if outcome.verdict is not None:
            self.verdicts[item.item_id] = outcome.verdict.to_dict()
        return outcome

    def edit_field(self, item_id: int, name: str, value: str) -> bool:
        """Replace one localized field and re-verify; True when the flag closes."""
        if name not in EDITABLE:
            raise ValueError(f"field must be one of {', '.join(EDITABLE)}")
        item = self.items[item_id]
        old = getattr(item, name)
        setattr(item, name, value)
        self.audit("edit", item_id=item_id, field=name, old=old, new=value)
        outcome = self._recheck(item)
        flag = self.flag_for(item_id)
        if outcome.flag is None:
            flag.resolve("corrected", [name], reverified=True)
            self.audit("corrected", item_id=item_id)
            return True
        flag.reason, flag.detail = outcome.flag.reason, outcome.flag.detail
        if name not in flag.corrected_fields:
            flag.corrected_fields.append(name)
        return False

    def waive(self, item_id: int, note: str = "") -> None:
        self.flag_for(item_id).resolve("waived")
        self.audit("waive", item_id=item_id, note=note)

    def edit_mapping(self, db_id: str, scope: str, source: str, target: str) -> list:
        """Change one mapping entry, rebuild the database and re-verify all its items.

        Returns the ids of items whose open flags closed.
        """
        ctx = self.context(db_id)
        old = ctx.mapping
        target = normalize_identifier(target)
        new = resolve_collisions(old.with_entry(scope, source, target))
        new.save(self.config.mapping_file(db_id))
        self.audit("edit-mapping", db_id=db_id, scope=scope, source=source, new=target)
        renamed = _renamed_targets(old, new)
        ctx.mapping = new
        ensure_localized_db(self.config, ctx)
        closed = []
        for item in sorted(self.items.values(), key=lambda i: i.item_id):
            if item.db_id != db_id:
                continue
            item.db_id_tgt = new.db_id_tgt
            if item.item_id in {f.item_id for f in self.flags if f.resolution == "waived"}:
                continue
            if item.evidence_tgt:
                item.evidence_tgt = _rename_spans(item.evidence_tgt, renamed)
            try:
                item.sql_tgt = localize_sql(item.sql_src, new)
            except LocalizationError as exc:
                item.status = "flagged"
                self._reflag(item.item_id, FlagRecord(item.item_id, "sql-rewrite", str(exc)))
                continue
            outcome = self._recheck(item)
            if outcome.flag is None:
                if any(f.item_id == item.item_id and f.resolution == "open" for f in self.flags):
                    self.flag_for(item.item_id).resolve("corrected", ["mapping"], reverified=True)
                    closed.append(item.item_id)
            else:
                self._reflag(item.item_id, outcome.flag)
        return closed

    def reverify_all(self) -> Counter:
        """Re-run every check on every non-waived item; returns counts by outcome."""
        waived = {f.item_id for f in self.flags if f.resolution == "waived"}
        counts: Counter = Counter()
        for item_id in sorted(self.items):
            item = self.items[item_id]
            if item_id in waived:
                counts["waived"] += 1
                continue
            if not item.is_localized:
                counts["not-localized"] += 1
                continue
            outcome = self._recheck(item)
            if outcome.flag is None:
                counts["verified"] += 1
                if any(f.item_id == item_id and f.resolution == "open" for f in self.flags):
                    self.flag_for(item_id).resolve("corrected", [], reverified=True)
            else:
                counts["flagged"] += 1
                self._reflag(item_id, outcome.flag)
        return counts

    def _reflag(self, item_id: int, fresh: FlagRecord) -> None:
        try:
            f = self.flag_for(item_id)
            f.reason, f.detail = fresh.reason, fresh.detail
        except KeyError:
            self.flags.append(fresh)

    def save(self) -> None:
        items = [self.items[k] for k in sorted(self.items)]
        write_outputs(self.config, items, self.flags, self.verdicts)


def _renamed_targets(old: IdentifierMapping, new: IdentifierMapping) -> dict:
    out = {}
    for key, tgt in old.entries.items():
        new_tgt = new.entries.get(key)
        if new_tgt is not None and new_tgt != tgt:
            out[tgt] = new_tgt
    return out


def _rename_spans(text: str, renamed: dict) -> str:
    try:
        spans = backtick_spans(text)
    except UnbalancedBackticks:
        return text
    out, pos = [], 0
    for s in spans:
        out.append(text[pos:s.start])
        out.append("`" + renamed.get(s.content, s.content) + "`")
        pos = s.end
    out.append(text[pos:])
    return "".join(out)


def review_flags(config: PipelineConfig, input_fn: Callable[[str], str] = input,
                 output: Callable[[str], None] = print) -> ReviewSession:
    """Interactive terminal loop over open flags. State is saved after every action."""
    session = ReviewSession(config)
    for flag in list(session.open_flags()):
        item = session.items.get(flag.item_id)
        if item is None:
            continue
        output(f"\nitem {item.item_id} ({item.db_id}) flagged: {flag.reason}")
        if flag.detail:
            output(f"  {flag.detail}")
        if flag.judge_report:
            output(f"  judge: {json.dumps(flag.judge_report, ensure_ascii=False)}")
        for name in EDITABLE:
            output(f"  {name}: {getattr(item, name)}")
        while flag.resolution == "open":
            cmd = input_fn("[e]dit field, [m]apping, [w]aive, [s]kip, [q]uit > ").strip().lower()
            if cmd == "q":
                session.save()
                return session
            if cmd == "s" or cmd == "":
                break
            if cmd == "w":
                session.waive(item.item_id, input_fn("note > "))
            elif cmd == "e":
                name = input_fn(f"field ({'/'.join(EDITABLE)}) > ").strip()
                if name not in EDITABLE:
                    output(f"field must be one of {', '.join(EDITABLE)}")
                    continue
                ok = session.edit_field(item.item_id, name, input_fn("new value > "))
                output("re-verified: pass" if ok else f"still failing: {flag.detail}")
            elif cmd == "m":
                scope = input_fn("scope (db/table/column) > ").strip()
                source = input_fn("source (table or table.column) > ").strip()
                target = input_fn("new target > ").strip()
                try:
                    closed = session.edit_mapping(item.db_id, scope, source, target)
                except (KeyError, LocalizationError) as exc:
                    output(f"mapping edit rejected: {exc}")
                    continue
                output(f"re-verified database {item.db_id}; closed flags: {closed}")
            session.save()
    session.save()
    return session

import json
import sqlite3

import pytest

from faults import CorruptingTranslator
from sqlloc.corpus import read_corpus
from sqlloc.errors import ConfigInvalid
from sqlloc.fixtures import ITEMS
from sqlloc.pipeline import PipelineConfig, ReviewSession, merge_flags, review_flags, run_pipeline
from sqlloc.ports import DictionaryTranslator
from sqlloc.verify import DIMENSIONS, FlagRecord, load_flags


def _config(fixture_paths, out, **kw):
    return PipelineConfig(fixture_paths.corpus, fixture_paths.db_dir, out,
                          translator=f"dict:{fixture_paths.dictionary}", **kw)


def _corrupting(fixture_paths, *indexes):
    base = DictionaryTranslator.from_file(fixture_paths.dictionary)
    return CorruptingTranslator(base, [ITEMS[i].question for i in indexes])


@pytest.fixture(scope="module")
def clean_run(fixture_paths, tmp_path_factory):
    config = _config(fixture_paths, tmp_path_factory.mktemp("run"))
    return config, run_pipeline(config)


def test_clean_run_verifies_everything(clean_run):
    config, report = clean_run
    assert report.by_status == {"verified": len(ITEMS)} and report.exit_code == 0
    verified = read_corpus(config.verified_out)
    assert len(verified) == len(ITEMS)
    first = verified[0]
    assert first.db_id_tgt == "okul" and first.sql_tgt.startswith("SELECT ad FROM ogrenciler")
    assert first.question_tgt == ITEMS[0].question_tr
    assert first.evidence_tgt == "older than 20 refers to `yas` > 20"
    assert (config.out_dir / "databases" / "okul" / "okul.sqlite").exists()


def test_collision_resolved_in_mapping(clean_run):
    config, _ = clean_run
    m = json.loads(config.mapping_file("library").read_text(encoding="utf-8"))
    targets = {m["translations"]["authors.country"], m["translations"]["publishers.nation"]}
    assert targets == {"ulke", "ulke_2"}
    assert m["collision_report"]


def test_rerun_is_skipped_and_byte_identical(fixture_paths, tmp_path):
    config = _config(fixture_paths, tmp_path / "out")
    run_pipeline(config)
    before = config.corpus_out.read_bytes()
    again = run_pipeline(config)
    assert (again.processed, again.skipped) == (0, len(ITEMS))
    assert config.corpus_out.read_bytes() == before
    # a fresh directory reproduces the same corpus too
    other = _config(fixture_paths, tmp_path / "other")
    run_pipeline(other)
    assert other.corpus_out.read_bytes() == before


def test_fault_injection_flags_exactly_the_corrupted_item(fixture_paths, tmp_path):
    config = _config(fixture_paths, tmp_path)
    report = run_pipeline(config, translator=_corrupting(fixture_paths, 3))
    assert report.by_status == {"flagged": 1, "verified": len(ITEMS) - 1}
    assert report.exit_code == 2
    [flag] = load_flags(config.flags_file)
    assert flag.item_id == 3 and flag.reason == "frozen-content"
    assert "FrozenContentViolated" in flag.detail
    assert 3 not in {it.item_id for it in read_corpus(config.verified_out)}


def test_review_edit_closes_flag_and_is_audited(fixture_paths, tmp_path):
    config = _config(fixture_paths, tmp_path)
    run_pipeline(config, translator=_corrupting(fixture_paths, 3))
    times = iter(range(100))
    session = ReviewSession(config, clock=lambda: next(times))
    assert [f.item_id for f in session.open_flags()] == [3]
    item = session.items[3]
    candidate = item.evidence_tgt
    assert item.sql_tgt and "`xyas`" in candidate  # rejected candidate kept for the reviewer
    with pytest.raises(ValueError):
        session.edit_field(3, "question_src", "x")
    assert not session.edit_field(3, "evidence_tgt", "average age refers to AVG(`yas`)")
    assert session.flag_for(3).reason == "frozen-content"
    assert session.edit_field(3, "evidence_tgt", candidate.replace("`xyas`", "`yas`"))
    session.save()
    [flag] = load_flags(config.flags_file)
    assert (flag.resolution, flag.reverified, flag.corrected_fields) == ("corrected", True, ["evidence_tgt"])
    assert len(read_corpus(config.verified_out)) == len(ITEMS)
    audit = [json.loads(line) for line in config.audit_file.read_text().splitlines()]
    assert [a["action"] for a in audit] == ["edit", "edit", "corrected"]
    assert audit[0]["time"] == 0 and audit[0]["field"] == "evidence_tgt"


def test_waived_items_leave_verified_output_and_are_not_rerun(fixture_paths, tmp_path):
    config = _config(fixture_paths, tmp_path)
    translator = _corrupting(fixture_paths, 0)
    run_pipeline(config, translator=translator)
    session = ReviewSession(config)
    session.waive(0, "source question is ambiguous")
    session.save()
    report = run_pipeline(config, translator=translator)
    assert report.processed == 0 and report.exit_code == 0
    assert 0 not in {it.item_id for it in read_corpus(config.verified_out)}
    assert load_flags(config.flags_file)[0].resolution == "waived"


def test_mapping_edit_rebuilds_database_and_reverifies(clean_run, tmp_path):
    base, _ = clean_run
    config = PipelineConfig(base.corpus, base.db_dir, tmp_path, translator=base.translator)
    run_pipeline(config)
    session = ReviewSession(config)
    assert session.edit_mapping("school", "column", "students.age", "yasi") == []
    session.save()
    conn = sqlite3.connect(config.localized_db("okul"))
    cols = [r[1] for r in conn.execute("PRAGMA table_info(ogrenciler)")]
    conn.close()
    assert "yasi" in cols and "yas" not in cols
    items = {it.item_id: it for it in read_corpus(config.corpus_out)}
    assert items[0].sql_tgt == "SELECT ad FROM ogrenciler WHERE yasi > 20 ORDER BY ad"
    assert items[0].evidence_tgt == "older than 20 refers to `yasi` > 20"
    assert all(it.status == "verified" for it in items.values())
    # a rerun sees the new mapping and keeps the rebuilt database
    assert run_pipeline(config).exit_code == 0


def test_reverify_all_detects_tampering(fixture_paths, tmp_path):
    config = _config(fixture_paths, tmp_path)
    run_pipeline(config)
    session = ReviewSession(config)
    session.items[5].sql_tgt = "SELECT 1"
    counts = session.reverify_all()
    assert counts == {"verified": len(ITEMS) - 1, "flagged": 1}
    assert session.flag_for(5).reason == "exec-mismatch"


class Judge:
    def __init__(self):
        self.requests = []

    def judge(self, request):
        self.requests.append(request)
        report = {d: {"pass": d != "schema_fidelity", "reason": "checked"} for d in DIMENSIONS}
        report.update(overall_pass=False, severity="high", suggested_fix="use the mapped column")
        return report


def test_judge_reports_attach_to_flags_only(fixture_paths, tmp_path):
    config = _config(fixture_paths, tmp_path)
    judge = Judge()
    run_pipeline(config, translator=_corrupting(fixture_paths, 7), judge=judge)
    assert len(judge.requests) == 1 and judge.requests[0]["sql_tr"].startswith("SELECT baslik")
    [flag] = load_flags(config.flags_file)
    assert flag.judge_report["severity"] == "high"


def test_scripted_review_loop(fixture_paths, tmp_path):
    config = _config(fixture_paths, tmp_path)
    run_pipeline(config, translator=_corrupting(fixture_paths, 1, 2))
    answers = iter(["e", "bogus_field", "w", "bad translation", "s"])
    printed = []
    session = review_flags(config, input_fn=lambda prompt: next(answers), output=printed.append)
    flags = {f.item_id: f.resolution for f in session.flags}
    assert flags == {1: "waived", 2: "open"}
    assert any("field must be one of" in line for line in printed)
    assert load_flags(config.flags_file)[0].resolution == "waived"


def test_merge_flags_keeps_history():
    closed = FlagRecord(1, "x")
    closed.resolve("waived")
    stale, kept = FlagRecord(2, "x"), FlagRecord(3, "x")
    merged = merge_flags([closed, stale, kept], {4: FlagRecord(4, "y")}, passed={2})
    assert [f.item_id for f in merged] == [1, 3, 4]


def test_config_validation(fixture_paths, tmp_path):
    with pytest.raises(ConfigInvalid):
        PipelineConfig(tmp_path / "none.jsonl", fixture_paths.db_dir, tmp_path).validate()
    with pytest.raises(ConfigInvalid):
        _config(fixture_paths, tmp_path, concurrency=0).validate()
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"corpus": str(fixture_paths.corpus), "db_dir": str(fixture_paths.db_dir),
                                    "out_dir": str(tmp_path), "seed": 3}))
    cfg = PipelineConfig.from_file(cfg_file, concurrency=2)
    assert (cfg.seed, cfg.concurrency) == (3, 2)
    cfg_file.write_text(json.dumps({"corpus": "x", "db_dir": "y", "out_dir": "z", "colour": 1}))
    with pytest.raises(ConfigInvalid):
        PipelineConfig.from_file(cfg_file)
    with pytest.raises(ConfigInvalid):
        ReviewSession(PipelineConfig(fixture_paths.corpus, fixture_paths.db_dir, tmp_path / "empty"))

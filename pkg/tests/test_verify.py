import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqlloc.catalog import extract_catalog
from sqlloc.corpus import BenchmarkItem
from sqlloc.dblocal import localize_database
from sqlloc.errors import ConsistencyViolation, ExecutionError, QueryTimeout, SchemaViolation
from sqlloc.mapping import mapping_from_dict
from sqlloc.verify import (
    DIMENSIONS, FlagRecord, cells_equal, execute_query, load_flags, rows_equal, save_flags,
    validate_judge_report, verify_execution_equivalence, verify_item, verify_structural_integrity,
)

M = mapping_from_dict(
    "shop", {"Users": "kullanicilar", "Orders": "siparisler"},
    {"Users": {"id": "id", "name": "ad", "age": "yas", "home city": "sehir"},
     "Orders": {"order_id": "siparis_id", "user_id": "kullanici_id", "amount": "tutar", "status": "durum"}},
    "dukkan",
)


@pytest.fixture
def pair(shop_db, tmp_path):
    tgt = tmp_path / "dukkan.sqlite"
    localize_database(shop_db, M, tgt)
    return shop_db, tgt, extract_catalog(tgt)


def _item(sql_src, sql_tgt, evidence_tgt="", item_id=1):
    return BenchmarkItem(item_id, "shop", "q", "", sql_src, "q", evidence_tgt, sql_tgt, "dukkan")


# -- result comparison -----------------------------------------------------------


def test_cells_equal_rules():
    assert cells_equal(1, 1.0) and cells_equal(0.1 + 0.2, 0.3)
    assert not cells_equal(1, 1 + 1e-6)
    assert not cells_equal("1", 1) and not cells_equal(None, 0)
    assert cells_equal(None, None) and cells_equal(b"x", b"x")


def test_rows_equal_ordered_vs_multiset():
    a, b = [(1, "x"), (2, "y")], [(2, "y"), (1, "x")]
    assert rows_equal(a, b, ordered=False)
    assert not rows_equal(a, b, ordered=True)
    assert not rows_equal([(1,), (1,), (2,)], [(1,), (2,), (2,)], ordered=False)
    assert rows_equal([(0.1 + 0.2, None)], [(0.3, None)], ordered=False)


@given(st.lists(st.tuples(st.one_of(st.none(), st.integers(-5, 5), st.text(max_size=2),
                                    st.floats(allow_nan=False, allow_infinity=False))), max_size=8),
       st.randoms())
def test_multiset_comparison_ignores_permutation(rows, rnd):
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert rows_equal(rows, shuffled, ordered=False)


# -- execution ---------------------------------------------------------------------


def test_execution_equivalence_pass_and_ordering(pair):
    src, tgt, _ = pair
    v = verify_execution_equivalence("SELECT name FROM Users ORDER BY age", src,
                                     "SELECT ad FROM kullanicilar ORDER BY yas", tgt)
    assert v.status == "pass" and v.ordered
    v = verify_execution_equivalence("SELECT name FROM Users ORDER BY age", src,
                                     "SELECT ad FROM kullanicilar ORDER BY yas DESC", tgt)
    assert v.status == "fail"
    v = verify_execution_equivalence("SELECT name FROM Users", src,
                                     "SELECT ad FROM kullanicilar ORDER BY yas DESC", tgt)
    assert v.status == "pass" and not v.ordered


def test_execution_mismatch_details(pair):
    src, tgt, _ = pair
    v = verify_execution_equivalence("SELECT name, age FROM Users", src, "SELECT ad FROM kullanicilar", tgt)
    assert v.status == "fail" and "column count" in v.detail
    v = verify_execution_equivalence("SELECT name FROM Users", src,
                                     "SELECT ad FROM kullanicilar WHERE yas > 20", tgt)
    assert "row count" in v.detail


def test_execution_errors_name_the_side(pair):
    src, tgt, _ = pair
    with pytest.raises(ExecutionError) as exc:
        verify_execution_equivalence("SELECT name FROM Users", src, "SELECT nope FROM kullanicilar", tgt)
    assert exc.value.side == "target"


def test_timeout_is_enforced(shop_db):
    slow = ("WITH RECURSIVE r(i) AS (SELECT 1 UNION ALL SELECT i + 1 FROM r WHERE i < 100000000) "
            "SELECT COUNT(*) FROM r")
    with pytest.raises(QueryTimeout):
        execute_query(shop_db, slow, timeout=0.05, side="source")


def test_databases_are_opened_read_only(shop_db):
    with pytest.raises(ExecutionError):
        execute_query(shop_db, "SELECT * FROM Users; DELETE FROM Users")
    with pytest.raises(ExecutionError):
        execute_query(shop_db, "INSERT INTO Users(id) VALUES (99) RETURNING id")


# -- structural -------------------------------------------------------------------


def test_structural_pass_and_hallucinated_column(pair):
    _, _, cat = pair
    ok = verify_structural_integrity(_item("", "SELECT u.ad FROM kullanicilar AS u", "`yas` > 1"), M, cat)
    assert ok.structural == "pass" and ok.evidence_links == "pass"
    bad = verify_structural_integrity(_item("", "SELECT u.maas FROM kullanicilar AS u", "`maas`"), M, cat)
    assert bad.structural == "fail" and bad.missing == ["kullanicilar.maas"]
    assert bad.unknown_spans == ["maas"]


def test_structural_accepts_views(pair):
    _, _, cat = pair
    v = verify_structural_integrity(_item("", "SELECT name FROM adult_names"), M, cat)
    assert v.structural == "pass"


def test_verify_item_classification_priority(pair):
    src, tgt, cat = pair
    good = verify_item(_item("SELECT name FROM Users", "SELECT ad FROM kullanicilar", "`ad`"), src, tgt, M, cat)
    assert good.passed and good.failure_class == "none"
    drift = verify_item(_item("SELECT name FROM Users", "SELECT isim FROM kullanicilar"), src, tgt, M, cat)
    assert drift.failure_class == "schema-drift"
    mismatch = verify_item(_item("SELECT name FROM Users", "SELECT sehir FROM kullanicilar"), src, tgt, M, cat)
    assert mismatch.failure_class == "exec-mismatch"
    ev = verify_item(_item("SELECT name FROM Users", "SELECT ad FROM kullanicilar", "`amount`"), src, tgt, M, cat)
    assert ev.failure_class == "evidence-drift"
    err = verify_item(_item("SELECT name FROM Users", "SELECT ad FROM kullanicilar WHERE ad = abs('x', 1)"),
                      src, tgt, M, cat)
    assert err.failure_class == "exec-error"
    assert json.loads(json.dumps(err.to_dict()))["failure_class"] == "exec-error"


# -- judge reports -------------------------------------------------------------------


def _report(**over):
    r = {d: {"pass": True, "reason": "ok"} for d in DIMENSIONS}
    r.update(overall_pass=True, severity="low", suggested_fix="")
    r.update(over)
    return r


def test_judge_report_valid():
    rep = validate_judge_report(json.dumps(_report()), "ev")
    assert rep.overall_pass and rep.to_dict()["intent_match"] == {"pass": True, "reason": "ok"}


@pytest.mark.parametrize("raw", [
    "not json",
    {k: v for k, v in _report().items() if k != "severity"},
    dict(_report(), extra=1),
    _report(severity="critical"),
    _report(intent_match={"pass": "yes", "reason": ""}),
    _report(suggested_fix="rewrite it"),
    _report(overall_pass=False, suggested_fix=""),
])
def test_judge_schema_violations(raw):
    with pytest.raises(SchemaViolation):
        validate_judge_report(raw, "ev")


def test_judge_consistency_rules():
    failing_dim = _report(literal_handling={"pass": False, "reason": "dropped quote"})
    with pytest.raises(ConsistencyViolation):
        validate_judge_report(failing_dim, "ev")
    no_evidence = _report(evidence_consistency={"pass": False, "reason": "no evidence"})
    assert validate_judge_report(no_evidence, "").overall_pass
    with pytest.raises(ConsistencyViolation):
        validate_judge_report(no_evidence, "some evidence")
    with pytest.raises(ConsistencyViolation):
        validate_judge_report(no_evidence, None)
    failing = _report(overall_pass=False, severity="high", suggested_fix="use `yas`",
                      intent_match={"pass": False, "reason": "x"})
    assert not validate_judge_report(failing, "ev").overall_pass


# -- flags ---------------------------------------------------------------------------


def test_flag_lifecycle(tmp_path):
    f = FlagRecord(3, "exec-mismatch", "rows differ")
    with pytest.raises(ConsistencyViolation):
        f.resolve("corrected", ["sql_tgt"], reverified=False)
    f.resolve("corrected", ["sql_tgt"], reverified=True)
    with pytest.raises(ConsistencyViolation):
        f.resolve("waived")
    g = FlagRecord(1, "frozen-content")
    g.resolve("waived")
    save_flags(tmp_path / "flags.jsonl", [f, g])
    loaded = load_flags(tmp_path / "flags.jsonl")
    assert [x.item_id for x in loaded] == [1, 3]
    assert loaded[1] == f

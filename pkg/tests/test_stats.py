from decimal import ROUND_HALF_EVEN, Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqlloc.corpus import BenchmarkItem
from sqlloc.errors import EmptyCorpus, InvalidParameter
from sqlloc.stats import (
    StatsTable, compute_corpus_stats, diff_stats, percent_change, render_comparison, save_stats,
    turkish_lower,
)

# published means and change columns: (english, turkish, change %) for train and dev
PUBLISHED = {
    "avg_words_per_question": [(14.05, 10.21, -27.3), (14.55, 10.64, -26.9)],
    "avg_chars_per_question": [(79.81, 75.75, -5.1), (82.76, 79.18, -4.3)],
    "avg_tokens_per_question": [(15.74, 11.91, -24.3), (16.24, 12.22, -24.8)],
    "vocabulary_size": [(9002, 15142, 68.2), (2450, 3704, 51.2)],
    "ttr": [(0.0607, 0.1349, 122.2), (0.0984, 0.1976, 100.8)],
    "avg_sql_tokens": [(31.03, 30.89, -0.5), (31.46, 31.26, -0.6)],
    "avg_evidence_tokens": [(21.32, 23.31, 9.3), (21.49, 22.04, 2.6)],
}
TOTALS = (9428, 1534)


def _split(k):
    def side(i):
        values = {name: rows[k][i] for name, rows in PUBLISHED.items()}
        return StatsTable(total_questions=TOTALS[k], **values)
    return side(0), side(1)


def _decimal_change(a, b):
    a, b = Decimal(repr(a)), Decimal(repr(b))
    return float(((b - a) / a * 100).quantize(Decimal("0.1"), rounding=ROUND_HALF_EVEN))


@pytest.mark.parametrize("split", [0, 1], ids=["train", "dev"])
def test_published_change_columns_reproduce(split):
    en, tr = _split(split)
    change = diff_stats(en, tr)
    for name, rows in PUBLISHED.items():
        assert change[name] == rows[split][2], name
        assert _decimal_change(rows[split][0], rows[split][1]) == rows[split][2], name
    assert change["total_questions"] == 0.0


def test_percent_change_edge_cases():
    assert percent_change(0, 5) is None
    assert percent_change(3, 3) == 0.0 and str(percent_change(100, 99.99)) == "0.0"


def _item(q, e="", sql="SELECT 1", **tgt):
    return BenchmarkItem(1, "d", q, e, sql, **tgt)


def test_hand_counted_fixture():
    s = compute_corpus_stats([_item("a b c"), _item("a b")])
    assert (s.total_questions, s.avg_words_per_question, s.vocabulary_size) == (2, 2.5, 3)
    assert s.ttr == pytest.approx(0.6)
    assert s.avg_chars_per_question == 4.0
    assert s.avg_sql_tokens == 2.0


def test_all_unique_tokens_give_full_ttr():
    assert compute_corpus_stats([_item("x y"), _item("z w")]).ttr == 1.0


def test_target_side_and_evidence_tokens():
    items = [_item("q", "`a` = 1", question_tgt="soru bir", evidence_tgt="`a` = 1", sql_tgt="SELECT a FROM t")]
    s = compute_corpus_stats(items, side="tgt")
    assert s.avg_words_per_question == 2 and s.avg_sql_tokens == 4
    assert s.avg_evidence_tokens == 5  # ` a ` = 1
    with pytest.raises(InvalidParameter):
        compute_corpus_stats([_item("q")], side="tgt")
    with pytest.raises(InvalidParameter):
        compute_corpus_stats(items, side="both")


def test_turkish_case_folding():
    assert turkish_lower("IŞIK İzmir") == "ışık izmir"
    plain = compute_corpus_stats([_item("Işık ışık")])
    folded = compute_corpus_stats([_item("Işık ışık")], turkish_case=True)
    assert plain.vocabulary_size == 2 and folded.vocabulary_size == 1


@given(st.lists(st.text(alphabet="abc ", min_size=1, max_size=12).filter(str.strip), min_size=1, max_size=6),
       st.data())
def test_duplicate_item_keeps_vocab_and_does_not_raise_ttr(questions, data):
    items = [_item(q) for q in questions]
    dup = data.draw(st.sampled_from(items))
    before, after = compute_corpus_stats(items), compute_corpus_stats(items + [dup])
    assert after.vocabulary_size == before.vocabulary_size
    assert after.ttr <= before.ttr
    assert 0 < before.ttr <= 1


def test_errors_and_rendering(tmp_path):
    with pytest.raises(EmptyCorpus):
        compute_corpus_stats([])
    en, tr = _split(0)
    with pytest.raises(InvalidParameter):
        diff_stats(en, _split(1)[1])
    table = render_comparison(en, tr, "BIRD (En)", "Tr")
    assert "6.07%" in table and "+122.2%" in table and "9,428" in table
    save_stats(tmp_path / "stats.json", en, tr)
    assert '"vocabulary_size": 68.2' in (tmp_path / "stats.json").read_text()

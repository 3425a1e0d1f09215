import json
import math
import sqlite3
from collections import Counter

import pytest

from sqlloc.errors import MissingPrediction, UnknownItem
from sqlloc.metrics import (
    efficiency_ratio, evaluate_predictions, exact_match, execution_accuracy, outer_order_by,
    render_metrics_table, score, valid_efficiency_score,
)
from sqlloc.ports import FixedTimer, SqliteTimer

# (gold, prediction, em, ex), labelled by hand
CASES = [
    ("SELECT name FROM Users", "select NAME from users", 1, 1),
    ("SELECT name FROM Users ORDER BY age", "SELECT name FROM Users ORDER BY age ASC", 1, 1),
    ("SELECT name FROM Users ORDER BY age", "SELECT name FROM Users ORDER BY age DESC", 0, 0),
    ("SELECT name FROM Users WHERE age > 30", "SELECT name FROM Users WHERE NOT age <= 30", 0, 1),
    ("SELECT COUNT(*) FROM Orders", "SELECT COUNT(order_id) FROM Orders", 0, 1),
    ("SELECT name, age FROM Users", "SELECT age, name FROM Users", 0, 0),
    ("SELECT id FROM Users WHERE age = 30", "SELECT id FROM Users WHERE age == 030", 1, 1),
    ("SELECT SUM(amount) FROM Orders", "SELECT SUM(amount) FROM Orders WHERE status = 'paid'", 0, 0),
    ("SELECT name FROM Users", "SELECT nme FROM Users", 0, 0),
    ("SELECT DISTINCT user_id FROM Orders", "SELECT user_id FROM Orders GROUP BY user_id", 0, 1),
]


def _ex_oracle(pred, gold, db):
    conn = sqlite3.connect(db)
    try:
        g = conn.execute(gold).fetchall()
        try:
            p = conn.execute(pred).fetchall()
        except sqlite3.Error:
            return 0
    finally:
        conn.close()
    if "ORDER BY" in gold.upper():
        return int(p == g)
    return int(Counter(p) == Counter(g))


def test_oracle_agrees_with_hand_labels(shop_db):
    for gold, pred, _, ex in CASES:
        assert _ex_oracle(pred, gold, shop_db) == ex, pred


@pytest.mark.parametrize("gold,pred,em,ex", CASES)
def test_em_and_ex_per_item(shop_db, gold, pred, em, ex):
    assert exact_match(pred, gold) == em
    assert execution_accuracy(pred, gold, shop_db) == ex


def test_unparseable_prediction_is_not_an_exact_match():
    assert exact_match("SELEC name", "SELECT name FROM Users") == 0


def test_outer_order_by_detection():
    assert outer_order_by("SELECT a FROM t ORDER BY a")
    assert not outer_order_by("SELECT a FROM (SELECT a FROM t ORDER BY a)")
    assert outer_order_by("SELECT a FROM t WINDOW w AS (x) ORDER BY a")  # token fallback


def test_aggregate_scores(shop_db):
    golds = {i: c[0] for i, c in enumerate(CASES)}
    preds = {i: c[1] for i, c in enumerate(CASES)}
    report = score(golds, preds, lambda i: shop_db, runs=2, timer=FixedTimer())
    assert report.em == 100 * sum(c[2] for c in CASES) / 10 == 30.0
    assert report.ex == 100 * sum(_ex_oracle(c[1], c[0], shop_db) for c in CASES) / 10 == 60.0
    # unit costs everywhere: every correct item contributes exactly 1
    assert report.ves == report.ex
    with pytest.raises(MissingPrediction):
        score(golds, {0: CASES[0][1]}, lambda i: shop_db)
    with pytest.raises(UnknownItem):
        score({0: CASES[0][0]}, {0: CASES[0][1], 99: "SELECT 1"}, lambda i: shop_db)


def test_ves_reward_follows_square_root_of_time_ratio(shop_db):
    gold, pred = "SELECT name FROM Users", "SELECT name FROM Users WHERE 1"
    timer = FixedTimer({gold: 0.001, pred: 0.004})
    ves, ratios = valid_efficiency_score([gold], [pred], [shop_db], timer)
    assert ratios == [0.5] and ves == 50.0
    timer = FixedTimer({gold: 0.004, pred: 0.001})
    assert valid_efficiency_score([gold], [pred], [shop_db], timer)[1] == [2.0]
    # wrong predictions earn nothing regardless of speed
    assert valid_efficiency_score([gold], ["SELECT age FROM Users"], [shop_db], timer)[0] == 0.0


def test_efficiency_ratio_edges_and_clamp():
    assert efficiency_ratio(0.0, 0.0) == 1.0
    assert efficiency_ratio(1.0, 0.0) == math.inf
    assert efficiency_ratio(1.0, 100.0, clamp=(0.25, 4)) == 0.25
    assert efficiency_ratio(100.0, 1.0, clamp=(0.25, 4)) == 4


def test_real_timer_measures_positive_time(shop_db):
    t = SqliteTimer(repeats=3)
    assert t.measure("SELECT COUNT(*) FROM Users", shop_db) > 0
    t.close()


def test_prediction_files_and_table(shop_db, tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    preds = tmp_path / "preds.jsonl"
    corpus.write_text("".join(json.dumps({"question_id": i, "db_id": "shop", "question": "q",
                                          "evidence": "", "SQL": c[0]}) + "\n"
                              for i, c in enumerate(CASES)))
    preds.write_text("".join(json.dumps({"item_id": i, "sql": c[1]}) + "\n" for i, c in enumerate(CASES)))
    report = evaluate_predictions(preds, corpus, shop_db.parent, runs=1, timer=FixedTimer())
    assert (report.em, report.ex) == (30.0, 60.0)
    table = render_metrics_table({"m": {"dev": report}})
    assert "dev EA" in table and "60.00" in table

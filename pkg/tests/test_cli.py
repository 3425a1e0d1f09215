import io
import json

import pytest

from sqlloc.cli import FAILURE, FLAGGED, OK, main
from sqlloc.corpus import read_corpus
from sqlloc.fixtures import ITEMS


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_schema_mapping_and_sql_tools(shop_db, tmp_path, capsys, monkeypatch):
    code, out, _ = run(["extract-schema", shop_db], capsys)
    assert code == OK and {t["name"] for t in json.loads(out)["tables"]} >= {"Users", "Orders"}
    mapping = tmp_path / "m.json"
    assert run(["map-schema", shop_db, "--memory", tmp_path / "mem.json", "-o", mapping], capsys)[0] == OK
    assert (tmp_path / "mem.json").exists()
    code, out, _ = run(["rewrite-sql", "SELECT \"home city\" FROM Users", "--mapping", mapping], capsys)
    assert out.strip() == "SELECT home_city FROM users"
    monkeypatch.setattr("sys.stdin", io.StringIO("SELECT home_city FROM users"))
    code, out, _ = run(["rewrite-sql", "--invert", "--mapping", mapping], capsys)
    assert out.strip() == "SELECT `home city` FROM Users"
    target = tmp_path / "out.sqlite"
    assert run(["localize-db", shop_db, "--mapping", mapping, "-o", target], capsys)[0] == OK
    code, out, _ = run(["verify", "--sql-src", "SELECT name FROM Users", "--db-src", shop_db,
                        "--sql-tgt", "SELECT name FROM users", "--db-tgt", target], capsys)
    assert code == OK and json.loads(out)["exec_equal"] == "pass"
    code, out, _ = run(["verify", "--sql-src", "SELECT name FROM Users", "--db-src", shop_db,
                        "--sql-tgt", "SELECT age FROM users", "--db-tgt", target], capsys)
    assert code == FLAGGED
    code, out, _ = run(["translate", "--question", "over 20?", "--evidence", "`age` > 20",
                        "--mapping", mapping], capsys)
    assert json.loads(out)["evidence_tr"] == "`age` > 20"


def test_errors_exit_with_failure(shop_db, tmp_path, capsys):
    code, _, err = run(["rewrite-sql", "SELECT * FROM Nope", "--mapping", tmp_path / "missing.json"], capsys)
    assert code == FAILURE and "error:" in err
    code, _, err = run(["run", "--corpus", tmp_path / "none.jsonl", "--db-dir", tmp_path,
                        "--out-dir", tmp_path / "o"], capsys)
    assert code == FAILURE and "ConfigInvalid" in err
    assert run(["run", "--corpus", "x"], capsys)[0] == FAILURE
    with pytest.raises(SystemExit):
        main(["no-such-command"])


def test_run_verify_review_stats(fixture_paths, tmp_path, capsys, monkeypatch):
    common = ["--corpus", fixture_paths.corpus, "--db-dir", fixture_paths.db_dir,
              "--out-dir", tmp_path, "--translator", f"dict:{fixture_paths.dictionary}"]
    code, out, _ = run(["run", *common], capsys)
    assert code == OK and json.loads(out)["by_status"] == {"verified": len(ITEMS)}
    code, out, _ = run(["verify", *common], capsys)
    assert code == OK and json.loads(out) == {"verified": len(ITEMS)}
    monkeypatch.setattr("builtins.input", lambda prompt="": pytest.fail("nothing to review"))
    assert run(["review", *common], capsys)[0] == OK
    code, out, _ = run(["stats", tmp_path / "corpus.jsonl", "--compare", "--turkish-case",
                        "-o", tmp_path / "stats.json"], capsys)
    assert code == OK and "Type-Token Ratio (TTR)" in out
    assert json.loads((tmp_path / "stats.json").read_text())["source"]["total_questions"] == len(ITEMS)


def test_sample_commands(tmp_path, capsys):
    code, out, _ = run(["sample", "--population", 10962, "-o", tmp_path / "plan.json"], capsys)
    assert code == OK and json.loads(out)["n"] == 974 and json.loads(out)["n0"] == 1068
    code, out, _ = run(["sample", "--correct", 956, "--n", 974], capsys)
    assert json.loads(out)["accuracy"] == 98.15
    plan = json.loads((tmp_path / "plan.json").read_text())
    review = tmp_path / "review.jsonl"
    review.write_text("".join(json.dumps({"item_id": i, "correct": True}) + "\n" for i in plan["sample_ids"]))
    code, out, _ = run(["sample", "--review", review, "--plan", tmp_path / "plan.json",
                        "--method", "wilson"], capsys)
    assert code == OK and json.loads(out)["accuracy"] == 100.0
    assert run(["sample"], capsys)[0] == FAILURE


def test_evaluate_command(fixture_paths, tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    bad = tmp_path / "bad.jsonl"
    items = read_corpus(fixture_paths.corpus)
    gold.write_text("".join(json.dumps({"item_id": it.item_id, "sql": it.sql_src}) + "\n" for it in items))
    bad.write_text("".join(json.dumps({"item_id": it.item_id, "sql": "SELECT 1"}) + "\n" for it in items))
    code, out, _ = run(["evaluate", "--pred", f"gold={gold}", "--pred", f"bad={bad}", "--corpus",
                        fixture_paths.corpus, "--db-dir", fixture_paths.db_dir, "--runs", 1,
                        "--group", "dev"], capsys)
    assert code == OK
    rows = {line.split()[0]: line.split()[1:] for line in out.splitlines()[1:]}
    assert rows["gold"][0] == "100.00" and rows["gold"][2] == "100.00"
    assert rows["bad"] == ["0.00", "0.00", "0.00"]

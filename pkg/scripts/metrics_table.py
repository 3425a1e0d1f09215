"""EA / VES / EM table for two prediction sets on both sides of the localized fixture.

``gold`` predicts the reference query; ``perturbed`` breaks a seeded third of
them (dropped ORDER BY direction, changed LIMIT or a negated filter).
"""

import argparse
import json
import random
from pathlib import Path

from sqlloc.corpus import read_corpus
from sqlloc.fixtures import write_fixture
from sqlloc.metrics import evaluate_predictions, render_metrics_table
from sqlloc.pipeline import PipelineConfig, run_pipeline


def perturb(sql, rng):
    if rng.random() > 1 / 3:
        return sql
    for old, new in ((" DESC", " ASC"), ("LIMIT 1", "LIMIT 2"), (" WHERE ", " WHERE NOT ")):
        if old in sql:
            return sql.replace(old, new, 1)
    return sql


def write_preds(path, items, side, rng=None):
    with open(path, "w", encoding="utf-8") as fh:
        for it in items:
            sql = it.sql_src if side == "src" else it.sql_tgt
            fh.write(json.dumps({"item_id": it.item_id, "sql": perturb(sql, rng) if rng else sql},
                                ensure_ascii=False) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--work", type=Path, default=Path("metrics_run"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--runs", type=int, default=3)
    args = ap.parse_args()

    paths = write_fixture(args.work / "fixture")
    config = PipelineConfig(paths.corpus, paths.db_dir, args.work / "out", translator=f"dict:{paths.dictionary}")
    run_pipeline(config)
    items = read_corpus(config.verified_out)
    results = {"gold": {}, "perturbed": {}}
    for side, label, db_dir in (("src", "EN", paths.db_dir), ("tgt", "TR", config.out_dir / "databases")):
        for method in results:
            pred = args.work / f"{method}_{side}.jsonl"
            write_preds(pred, items, side, random.Random(args.seed) if method == "perturbed" else None)
            results[method][label] = evaluate_predictions(pred, config.verified_out, db_dir, args.runs, side)
    print(render_metrics_table(results, ["EN", "TR"]))


if __name__ == "__main__":
    main()

"""Command-line entry point: ``sqlloc <subcommand> ...``.

Exit codes: 0 when everything verified, 2 when open flags remain,
1 on configuration or I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from sqlloc.catalog import extract_catalog
from sqlloc.corpus import read_corpus, read_records
from sqlloc.dblocal import localize_database
from sqlloc.errors import ConfigInvalid, LocalizationError
from sqlloc.mapping import IdentifierMapping, TermMemory, build_mapping, invert_mapping, resolve_collisions
from sqlloc.metrics import evaluate_predictions, render_metrics_table
from sqlloc.nl import localize_text_pair, standardize_evidence
from sqlloc.pipeline import PipelineConfig, ReviewSession, review_flags, run_pipeline
from sqlloc.ports import translator_from_spec
from sqlloc.sampling import SamplingPlan, accuracy_estimate, make_plan, score_review
from sqlloc.sql import localize_sql
from sqlloc.stats import compute_corpus_stats, render_comparison, save_stats
from sqlloc.verify import DEFAULT_TIMEOUT, verify_execution_equivalence

log = logging.getLogger("sqlloc")

OK, FAILURE, FLAGGED = 0, 1, 2


def _emit(obj, out=None) -> None:
    text = json.dumps(obj, indent=2, ensure_ascii=False)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _config(args) -> PipelineConfig:
    overrides = {k: getattr(args, k, None) for k in
                 ("corpus", "db_dir", "out_dir", "translator", "judge", "concurrency", "seed",
                  "timeout", "retries")}
    if args.config:
        return PipelineConfig.from_file(args.config, **overrides)
    missing = [k for k in ("corpus", "db_dir", "out_dir") if overrides[k] is None]
    if missing:
        raise ConfigInvalid("missing --" + ", --".join(m.replace("_", "-") for m in missing))
    return PipelineConfig(**{k: v for k, v in overrides.items() if v is not None})


def cmd_extract_schema(args) -> int:
    catalog = extract_catalog(args.db, args.db_id)
    _emit(catalog.to_dict(), args.output)
    return OK


def cmd_map_schema(args) -> int:
    catalog = extract_catalog(args.db, args.db_id)
    memory = None
    if args.memory and Path(args.memory).exists():
        memory = TermMemory.from_dict(json.loads(Path(args.memory).read_text(encoding="utf-8")))
    memory = memory or TermMemory()
    mapping = resolve_collisions(build_mapping(catalog, translator_from_spec(args.translator), memory))
    if args.memory:
        Path(args.memory).write_text(json.dumps(memory.to_dict(), indent=2, ensure_ascii=False) + "\n",
                                     encoding="utf-8")
    _emit(mapping.to_dict(), args.output)
    return OK


def cmd_localize_db(args) -> int:
    artifact = localize_database(args.db, IdentifierMapping.load(args.mapping), args.output)
    log.info("wrote %s (%d renames)", args.output, len(artifact.renames))
    return OK


def cmd_rewrite_sql(args) -> int:
    mapping = IdentifierMapping.load(args.mapping)
    if args.invert:
        mapping = invert_mapping(mapping)
    sql = args.sql if args.sql is not None else sys.stdin.read()
    print(localize_sql(sql, mapping))
    return OK


def cmd_translate(args) -> int:
    mapping = IdentifierMapping.load(args.mapping)
    std = standardize_evidence(args.evidence, mapping)
    result = localize_text_pair(args.question, std.text, translator_from_spec(args.translator),
                                args.retries, args.sql)
    _emit({"question_tr": result.question, "evidence_tr": result.evidence,
           "attempts": result.attempts, "unmatched_spans": std.unmatched,
           "warnings": list(result.verdict.warnings)})
    return OK


def cmd_verify(args) -> int:
    if args.sql_src is not None:
        if None in (args.db_src, args.sql_tgt, args.db_tgt):
            raise ConfigInvalid("--sql-src needs --db-src, --sql-tgt and --db-tgt")
        v = verify_execution_equivalence(args.sql_src, args.db_src, args.sql_tgt, args.db_tgt,
                                         args.timeout or DEFAULT_TIMEOUT)
        _emit({"exec_equal": v.status, "ordered": v.ordered, "detail": v.detail})
        return OK if v.status == "pass" else FLAGGED
    session = ReviewSession(_config(args))
    counts = session.reverify_all()
    session.save()
    _emit(dict(sorted(counts.items())))
    return FLAGGED if session.open_flags() else OK


def cmd_run(args) -> int:
    report = run_pipeline(_config(args), log=log.info)
    _emit(report.to_dict())
    return report.exit_code


def cmd_sample(args) -> int:
    if args.review:
        plan = SamplingPlan.load(args.plan) if args.plan else None
        est = score_review(read_records(args.review), plan, args.method)
    elif args.correct is not None:
        est = accuracy_estimate(args.correct, args.n, args.confidence, args.method)
    else:
        if args.corpus:
            ids = [it.item_id for it in read_corpus(args.corpus)]
        elif args.population:
            ids = list(range(args.population))
        else:
            raise ConfigInvalid("sample needs --corpus or --population (or --review / --correct)")
        plan = make_plan(args.confidence, args.margin, ids, args.seed, args.p)
        if args.output:
            plan.save(args.output)
        _emit({k: v for k, v in plan.to_dict().items() if k != "sample_ids"} | {"drawn": len(plan.sample_ids)})
        return OK
    point, low, high = est.as_percent()
    _emit({"accuracy": point, "low": low, "high": high, "confidence": est.confidence, "method": est.method})
    return OK


def cmd_stats(args) -> int:
    items = read_corpus(args.corpus)
    src = compute_corpus_stats(items, "src")
    if args.compare:
        tgt = compute_corpus_stats(items, "tgt", turkish_case=args.turkish_case)
        print(render_comparison(src, tgt, args.left, args.right))
    else:
        tgt = None
        _emit(src.to_dict())
    if args.output:
        save_stats(args.output, src, tgt)
    return OK


def cmd_evaluate(args) -> int:
    clamp = tuple(args.clamp) if args.clamp else None
    results = {}
    for spec in args.pred:
        name, _, path = spec.rpartition("=")
        report = evaluate_predictions(path, args.corpus, args.db_dir, args.runs, args.side,
                                      clamp=clamp, timeout=args.timeout)
        results.setdefault(name or Path(path).stem, {})[args.group] = report
        if args.output:
            report.save(Path(args.output) / f"{name or Path(path).stem}.metrics.json")
    print(render_metrics_table(results))
    return OK


def cmd_review(args) -> int:
    session = review_flags(_config(args))
    return FLAGGED if session.open_flags() else OK


def _add_config_args(p) -> None:
    p.add_argument("--config", help="JSON file with PipelineConfig fields")
    p.add_argument("--corpus", type=Path)
    p.add_argument("--db-dir", type=Path)
    p.add_argument("--out-dir", type=Path)
    p.add_argument("--translator", help="identity | dict:<file> | http(s)://endpoint#API_KEY_ENV")
    p.add_argument("--judge", help="http(s)://endpoint#API_KEY_ENV")
    p.add_argument("--concurrency", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--retries", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sqlloc", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-schema", help="dump a database catalog as JSON")
    p.add_argument("db")
    p.add_argument("--db-id")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_extract_schema)

    p = sub.add_parser("map-schema", help="build a collision-free identifier mapping")
    p.add_argument("db")
    p.add_argument("--db-id")
    p.add_argument("--translator", default="identity")
    p.add_argument("--memory", help="term memory JSON, read and updated")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_map_schema)

    p = sub.add_parser("localize-db", help="write a renamed copy of a database")
    p.add_argument("db")
    p.add_argument("--mapping", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_localize_db)

    p = sub.add_parser("rewrite-sql", help="rewrite identifiers in one query (stdin if no argument)")
    p.add_argument("sql", nargs="?")
    p.add_argument("--mapping", required=True)
    p.add_argument("--invert", action="store_true", help="apply the inverse mapping")
    p.set_defaults(func=cmd_rewrite_sql)

    p = sub.add_parser("translate", help="standardize evidence and translate one question")
    p.add_argument("--question", required=True)
    p.add_argument("--evidence", default="")
    p.add_argument("--sql")
    p.add_argument("--mapping", required=True)
    p.add_argument("--translator", default="identity")
    p.add_argument("--retries", type=int, default=3)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("verify", help="re-verify a run directory, or compare one query pair")
    _add_config_args(p)
    p.add_argument("--sql-src")
    p.add_argument("--db-src")
    p.add_argument("--sql-tgt")
    p.add_argument("--db-tgt")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="all phases over a corpus")
    _add_config_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sample", help="sample-size plan, or accuracy from review results")
    p.add_argument("--corpus")
    p.add_argument("--population", type=int)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--margin", type=float, default=0.03)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--review", help="JSONL of {item_id, correct}")
    p.add_argument("--plan", help="plan file restricting --review")
    p.add_argument("--correct", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--method", choices=("wald", "wilson"), default="wald")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("stats", help="corpus statistics, optionally source vs localized")
    p.add_argument("corpus")
    p.add_argument("--compare", action="store_true")
    p.add_argument("--turkish-case", action="store_true")
    p.add_argument("--left", default="Source")
    p.add_argument("--right", default="Target")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("evaluate", help="EM / EX / VES for prediction files")
    p.add_argument("--pred", action="append", required=True, help="[method=]predictions.jsonl")
    p.add_argument("--corpus", required=True)
    p.add_argument("--db-dir", required=True)
    p.add_argument("--side", choices=("src", "tgt"), default="src")
    p.add_argument("--group", default="all")
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--clamp", type=float, nargs=2, metavar=("LOW", "HIGH"))
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("review", help="interactive flag review")
    _add_config_args(p)
    p.set_defaults(func=cmd_review)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (LocalizationError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return FAILURE


if __name__ == "__main__":
    sys.exit(main())

"""Build the bundled fixture, localize it end to end and print the run report and statistics."""

import argparse
import json
import time
from pathlib import Path

from sqlloc.corpus import read_corpus
from sqlloc.fixtures import write_fixture
from sqlloc.pipeline import PipelineConfig, run_pipeline
from sqlloc.stats import compute_corpus_stats, render_comparison


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--work", type=Path, default=Path("fixture_run"))
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--concurrency", type=int, default=4)
    args = ap.parse_args()

    paths = write_fixture(args.work / "fixture", seed=args.seed)
    config = PipelineConfig(paths.corpus, paths.db_dir, args.work / "out",
                            translator=f"dict:{paths.dictionary}", concurrency=args.concurrency)
    start = time.perf_counter()
    report = run_pipeline(config, log=print)
    print(json.dumps(report.to_dict(), indent=2))
    print(f"elapsed {time.perf_counter() - start:.2f}s, outputs in {config.out_dir}")

    items = read_corpus(config.corpus_out)
    if all(it.is_localized for it in items):
        src = compute_corpus_stats(items, "src")
        tgt = compute_corpus_stats(items, "tgt", turkish_case=True)
        print()
        print(render_comparison(src, tgt, "English", "Turkish"))
    return report.exit_code


if __name__ == "__main__":
    raise SystemExit(main())

"""Query latency benchmark against a synthetic (or pre-built) index.

Times ranking queries for each nearness measure across worker counts and
checks that worker count never changes the ranking CSV bytes. Writes a
timings CSV and prints one line per (measure, jobs) cell.

Usage:
    python3 scripts/benchmark_query.py --out results/bench
    python3 scripts/benchmark_query.py --index existing.idx --queries 0 104
"""

import argparse
import csv
import sys
import tempfile
import time
from pathlib import Path

from fuzzynear.nearness import MEASURES
from fuzzynear.perceptual import DescribeConfig
from fuzzynear.retrieval import build_index, load_index, query_by_id, save_index
from fuzzynear.synthetic import generate_dataset
from fuzzynear.tolerance import ToleranceConfig


def fmt9(value):
    return "%.9g" % float(value)


def parse_args(argv):
    parser = argparse.ArgumentParser(
        description="Benchmark ranking queries across measures and worker "
                    "counts.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--out", type=Path, default=Path("results/bench"))
    parser.add_argument("--index", type=Path, default=None,
                        help="benchmark an existing index instead of "
                             "generating a synthetic one")
    parser.add_argument("--categories", type=int, default=10)
    parser.add_argument("--per-category", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--width-blocks", type=int, default=8,
                        help="synthetic image width in pattern tiles")
    parser.add_argument("--base-rows", type=int, default=40,
                        help="synthetic image height floor in pattern tiles")
    parser.add_argument("--block-width", type=int, default=8)
    parser.add_argument("--block-height", type=int, default=8)
    parser.add_argument("--queries", nargs="+", default=["0"],
                        help="image ids to query (averaged)")
    parser.add_argument("--jobs-grid", nargs="+", type=int, default=[1, 2, 8])
    parser.add_argument("--epsilon", type=float, default=0.3)
    parser.add_argument("--epsilon-prime", type=float, default=0.45)
    return parser.parse_args(argv)


def ranking_fingerprint(index, query_id, measure, cfg, jobs):
    """Query and reduce the full ranking to comparable (id, value) rows."""
    results = query_by_id(index, query_id, measure, cfg,
                          k=index.image_count, jobs=jobs)
    return [(str(i), fmt9(s.value)) for i, s in results.entries]


def main(argv=None):
    args = parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    if args.index is not None:
        index = load_index(args.index)
        print(f"loaded {args.index} ({index.image_count} images, "
              f"{index.block_count} blocks)")
    else:
        with tempfile.TemporaryDirectory() as tmp:
            dataset_dir = Path(tmp) / "dataset"
            generate_dataset(dataset_dir, categories=args.categories,
                             per_category=args.per_category, seed=args.seed,
                             width_blocks=args.width_blocks,
                             base_rows=args.base_rows)
            config = DescribeConfig(block_width=args.block_width,
                                    block_height=args.block_height)
            index, failures = build_index(dataset_dir, config)
            for name, reason in failures:
                print(f"warning: skipped {name}: {reason}", file=sys.stderr)
        save_index(index, args.out / "bench.idx")
        print(f"indexed {index.image_count} synthetic images "
              f"({index.block_count} blocks) -> {args.out / 'bench.idx'}")

    query_ids = [int(q) if q.isdigit() else q for q in args.queries]
    for query_id in query_ids:
        if query_id not in index:
            raise SystemExit(f"error: query id {query_id!r} not in index")

    cfg = ToleranceConfig(epsilon=args.epsilon,
                          epsilon_prime=args.epsilon_prime)
    per_image = index.block_count / index.image_count
    print(f"{len(query_ids)} query image(s), {index.image_count} candidates, "
          f"{per_image:.0f} blocks/image average")

    rows = []
    for measure in MEASURES:
        baseline = None
        for jobs in args.jobs_grid:
            started = time.perf_counter()
            rankings = [ranking_fingerprint(index, q, measure, cfg, jobs)
                        for q in query_ids]
            elapsed = time.perf_counter() - started
            if baseline is None:
                baseline = rankings
            elif rankings != baseline:
                raise SystemExit(f"error: {measure} ranking changed at "
                                 f"--jobs {jobs}")
            per_query = elapsed / len(query_ids)
            pairs = index.image_count / per_query
            rows.append((measure, jobs, per_query, pairs))
            print(f"{measure:>8} jobs={jobs}: {per_query:6.2f}s/query "
                  f"({pairs:7.1f} image pairs/s)")
        print(f"{measure:>8} rankings identical across jobs "
              f"{args.jobs_grid}")

    timings_path = args.out / "timings.csv"
    with timings_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["measure", "jobs", "seconds_per_query",
                         "image_pairs_per_second"])
        for measure, jobs, per_query, pairs in rows:
            writer.writerow([measure, jobs, fmt9(per_query), fmt9(pairs)])
    print(f"wrote {timings_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

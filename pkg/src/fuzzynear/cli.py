"""Command-line entry point: indexing, querying, evaluation, plotting,
synthetic data generation, and serving.

Data outputs go to files or stdout only; progress and warnings go to stderr.
Every domain error family maps to its own nonzero exit code so scripts can
branch on failures without parsing messages.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import sys
from dataclasses import replace
from pathlib import Path

from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    EmptyDataset,
    EmptyRetrieval,
    FingerprintMismatch,
    FitNotFound,
    FuzzyNearError,
    ImageTooSmall,
    IndexFormatError,
    NoRelevantImages,
    UnknownProbe,
)
from .membership import (
    BetaMF,
    GaussianMF,
    IT2BetaMF,
    TrapezoidalMF,
    TriangularMF,
    eval_it2,
    eval_mf,
    mf_samples,
)
from .nearness import MEASURES, class_membership_rows
from .perceptual import (
    DEFAULT_PROBES,
    BankSpec,
    DescribeConfig,
    describe_image,
    fmt9,
)
from .retrieval import (
    DEFAULT_GRID_DEPTH,
    DEFAULT_TABLE_DEPTH,
    averaged_pr_curve,
    build_index,
    category_average_precision,
    evaluate_queries,
    load_index,
    load_raster,
    query,
    query_by_id,
    refuzzify,
    save_index,
)
from .synthetic import PATTERNS, generate_dataset
from .tolerance import (
    DEFAULT_ENVELOPE,
    DEFAULT_EPSILON,
    DEFAULT_EPSILON_PRIME,
    DEFAULT_MAX_CLIQUES,
    DEFAULT_MAX_SECONDS,
    DISTANCE_MODES,
    ENVELOPES,
    ToleranceConfig,
)

# One exit code per error family; first isinstance match wins.
_EXIT_CODES: tuple[tuple[type, int], ...] = (
    (EmptyDataset, 3),
    (IndexFormatError, 4),
    (FingerprintMismatch, 5),
    (FitNotFound, 6),
    (ImageTooSmall, 7),
    (BudgetExceeded, 8),
    (EmptyRetrieval, 9),
    (NoRelevantImages, 9),
    (UnknownProbe, 10),
    (DimensionMismatch, 10),
    (FuzzyNearError, 11),
    (OSError, 12),
    (ValueError, 13),
    (KeyError, 14),
)

MF_FAMILIES = ("beta", "triangular", "trapezoidal", "gaussian")
_PARAM_HELP = {
    "beta": "alpha,beta,x_min,x_max",
    "triangular": "left,right",
    "trapezoidal": "left,shoulder_left,shoulder_right,right",
    "gaussian": "mean,sigma",
}


def exit_code_for(exc: BaseException) -> int:
    for cls, code in _EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1


def _warn(message: str) -> None:
    print(message, file=sys.stderr)


@contextlib.contextmanager
def _open_out(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _parse_spread(text):
    if text is None:
        return None
    if isinstance(text, (int, float)):
        return float(text)
    lowered = text.strip().lower()
    if lowered in ("none", ""):
        return None
    return float(text)


def _parse_optional_seconds(text):
    if text is None or (isinstance(text, str)
                        and text.strip().lower() == "none"):
        return None
    return float(text)


def _parse_image_id(text: str):
    return int(text) if text.isdigit() else text


# --------------------------------------------------------------------------
# Shared flag groups


def add_describe_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("description configuration")
    g.add_argument("--block-width", type=int, default=13,
                   help="block width in pixels")
    g.add_argument("--block-height", type=int, default=19,
                   help="block height in pixels")
    g.add_argument("--probes", default=",".join(DEFAULT_PROBES),
                   help="comma-separated probe names")
    g.add_argument("--family", default="beta",
                   choices=MF_FAMILIES,
                   help="membership-function family for the term bank")
    g.add_argument("--terms", type=int, default=3,
                   help="number of linguistic terms per probe")
    g.add_argument("--it2-spread", default="0.1",
                   help="interval center spread; 'none' selects type-1 terms")
    g.add_argument("--alpha", type=float, default=2.0,
                   help="left shape parameter of the Beta terms")
    g.add_argument("--beta", type=float, default=2.0,
                   help="right shape parameter of the Beta terms")
    g.add_argument("--literal-centers", action="store_true",
                   help="derive interval centers as center*alpha/center*beta "
                        "instead of the symmetric spread")


def describe_config_from(args) -> DescribeConfig:
    bank = BankSpec(family=args.family, m=args.terms,
                    it2_spread=_parse_spread(args.it2_spread),
                    alpha=args.alpha, beta=args.beta,
                    literal_centers=args.literal_centers)
    probes = tuple(name.strip() for name in args.probes.split(",")
                   if name.strip())
    return DescribeConfig(block_width=args.block_width,
                          block_height=args.block_height,
                          probes=probes, bank=bank)


def add_tolerance_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("tolerance configuration")
    g.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                   help="inner tolerance threshold (full membership)")
    g.add_argument("--epsilon-prime", type=float,
                   default=DEFAULT_EPSILON_PRIME,
                   help="outer tolerance threshold (zero membership)")
    g.add_argument("--distance-mode", default="full-vector",
                   choices=DISTANCE_MODES,
                   help="description distance: full vector RMS or smallest "
                        "per-feature gap")
    g.add_argument("--max-cliques", type=int, default=DEFAULT_MAX_CLIQUES,
                   help="tolerance-class cap per comparison")
    g.add_argument("--max-seconds", default=str(DEFAULT_MAX_SECONDS),
                   help="time budget per comparison in seconds; 'none' "
                        "disables the limit")
    g.add_argument("--envelope", default=DEFAULT_ENVELOPE, choices=ENVELOPES,
                   help="description envelope used by the single-envelope "
                        "measures")


def tolerance_config_from(args) -> ToleranceConfig:
    return ToleranceConfig(epsilon=args.epsilon,
                           epsilon_prime=args.epsilon_prime,
                           distance_mode=args.distance_mode,
                           max_cliques=args.max_cliques,
                           max_seconds=_parse_optional_seconds(
                               args.max_seconds))


def add_measure_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--measure", default="it2bfnm", choices=MEASURES,
                   help="nearness measure used for scoring")


def add_jobs_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes; 1 and N produce identical outputs")


# --------------------------------------------------------------------------
# Subcommands


def cmd_index(args) -> int:
    config = describe_config_from(args)
    index, failures = build_index(args.dataset, config)
    for name, reason in failures:
        _warn(f"skipped {name}: {reason}")
    save_index(index, args.out)
    _warn(f"indexed {index.image_count} images "
          f"({index.block_count} blocks, fingerprint "
          f"{index.config.fingerprint()}) -> {args.out}")
    return 0


def _write_score_rows(fh, result) -> None:
    writer = _csv_writer(fh)
    writer.writerow(["query_id", "candidate_id", "measure", "value",
                     "upper", "lower", "classes", "budget_flag"])
    for candidate_id, score in result.entries:
        writer.writerow([
            result.query_id, candidate_id, score.measure, fmt9(score.value),
            "" if score.upper_value is None else fmt9(score.upper_value),
            "" if score.lower_value is None else fmt9(score.lower_value),
            score.class_count, int(score.budget_exceeded)])


def cmd_query(args) -> int:
    index = load_index(args.index)
    cfg = tolerance_config_from(args)
    override = (_parse_spread(args.override_spread)
                if args.override_spread is not None else None)
    if args.override_spread is not None:
        index = refuzzify(index, override)
    if args.image_id is not None:
        image_id = _parse_image_id(args.image_id)
        result = query_by_id(index, image_id, args.measure, cfg, args.top,
                             envelope=args.envelope, jobs=args.jobs,
                             exclude_self=args.exclude_self)
        query_descs = index.descriptions(image_id)
    else:
        config = describe_config_from(args)
        if args.override_spread is not None:
            config = replace(config, bank=config.bank.with_spread(override))
        pixels = load_raster(args.image)
        tag = _parse_image_id(Path(args.image).stem)
        query_descs = describe_image(pixels, config, image_id=tag)
        result = query(index, query_descs, args.measure, cfg, args.top,
                       query_id=tag, query_config=config,
                       envelope=args.envelope, jobs=args.jobs,
                       exclude_self=args.exclude_self)
    with _open_out(args.out) as fh:
        _write_score_rows(fh, result)
    if args.dump_classes and result.entries:
        top_id = result.entries[0][0]
        rows, flag, _ = class_membership_rows(
            query_descs, index.descriptions(top_id), cfg,
            envelope=args.envelope)
        with _open_out(args.dump_classes) as fh:
            writer = _csv_writer(fh)
            writer.writerow(["class_id", "member_id", "mu"])
            for class_id, object_id, mu in rows:
                writer.writerow([class_id,
                                 ":".join(str(part) for part in object_id),
                                 fmt9(mu)])
        if flag:
            _warn("class dump is partial: enumeration budget exceeded")
    _warn(f"ranked {len(result)} candidates for query {result.query_id!r} "
          f"({args.measure})")
    return 0


def cmd_eval(args) -> int:
    index = load_index(args.index)
    cfg = tolerance_config_from(args)
    eval_depth = args.depth
    if args.curve_out is not None:
        eval_depth = max(eval_depth, args.curve_depth)
    evaluations = evaluate_queries(
        index, args.measure, cfg, eval_depth, envelope=args.envelope,
        jobs=args.jobs, exclude_self=args.exclude_self,
        exclude_category=args.exclude_category)
    table = category_average_precision(
        index, args.measure, cfg, depth=args.depth,
        exclude_self=args.exclude_self,
        exclude_category=args.exclude_category, evaluations=evaluations)
    with _open_out(args.out) as fh:
        writer = _csv_writer(fh)
        writer.writerow(["category", "avg_precision"])
        for category in sorted(table):
            writer.writerow([category, fmt9(table[category])])
    if args.curve_out is not None:
        rows = averaged_pr_curve(
            index, args.measure, cfg, max_k=args.curve_depth,
            exclude_self=args.exclude_self,
            exclude_category=args.exclude_category, evaluations=evaluations)
        with _open_out(args.curve_out) as fh:
            writer = _csv_writer(fh)
            writer.writerow(["k", "precision", "recall"])
            for k, p, r in rows:
                writer.writerow([k, fmt9(p), fmt9(r)])
    _warn(f"evaluated {len(evaluations)} queries at depth {args.depth} "
          f"({args.measure})")
    return 0


def _build_plot_mf(args):
    try:
        params = tuple(float(v) for v in args.params.split(","))
    except ValueError:
        raise ValueError(f"--params must be comma-separated numbers, "
                         f"got {args.params!r}")
    expected = {"beta": 4, "triangular": 2, "trapezoidal": 4, "gaussian": 2}
    if len(params) != expected[args.family]:
        raise ValueError(
            f"{args.family} takes {expected[args.family]} parameters "
            f"({_PARAM_HELP[args.family]}), got {len(params)}")
    if args.family == "beta":
        return BetaMF(*params)
    if args.family == "triangular":
        return TriangularMF(*params)
    if args.family == "trapezoidal":
        return TrapezoidalMF(*params)
    return GaussianMF(*params)


def cmd_mf_plot(args) -> int:
    mf = _build_plot_mf(args)
    spread = _parse_spread(args.it2_spread)
    if spread is not None and args.family != "beta":
        raise ValueError("interval envelopes are only defined for the beta "
                         "family")
    xs = mf_samples(mf, args.samples, pad=args.pad)
    with _open_out(args.out) as fh:
        writer = _csv_writer(fh)
        if spread is None:
            writer.writerow(["x", "grade"])
            grades = eval_mf(mf, xs)
            for x, g in zip(xs.tolist(), grades.tolist()):
                writer.writerow([fmt9(x), fmt9(g)])
        else:
            it2 = IT2BetaMF.from_spread(mf.x_center, mf.width, mf.alpha,
                                        mf.beta, spread)
            lower, upper = eval_it2(it2, xs)
            writer.writerow(["x", "lower", "upper"])
            for x, lo, up in zip(xs.tolist(), lower.tolist(),
                                 upper.tolist()):
                writer.writerow([fmt9(x), fmt9(lo), fmt9(up)])
    _warn(f"sampled {args.samples} points of a {args.family} term")
    return 0


def cmd_gen_synthetic(args) -> int:
    manifest = generate_dataset(
        args.out, categories=args.categories,
        per_category=args.per_category, seed=args.seed, tile=args.tile,
        width_blocks=args.width_blocks, base_rows=args.base_rows,
        pattern=args.pattern, brightness_step=args.brightness_step,
        row_ramp=args.row_ramp)
    _warn(f"wrote {len(manifest)} images across {args.categories} "
          f"categories to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    index = load_index(args.index)
    app = create_app(index, dataset_root=args.dataset,
                     static_dir=args.static, jobs=args.jobs)
    _warn(f"serving index {index.config.fingerprint()} "
          f"({index.image_count} images) on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# --------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzynear",
        description="Content-based image retrieval with tolerance near-set "
                    "nearness measures over interval-valued Beta fuzzy "
                    "block descriptions.")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="subcommand")
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("index", formatter_class=fmt,
                       help="describe a dataset directory into an index file")
    p.add_argument("--dataset", required=True,
                   help="dataset directory (<id>.<ext> files, optional "
                        "labels.csv)")
    p.add_argument("--out", required=True, help="index file to write")
    add_describe_flags(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", formatter_class=fmt,
                       help="rank indexed images against a query image")
    p.add_argument("--index", required=True, help="index file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--image", help="query image file to describe")
    src.add_argument("--image-id", help="already-indexed query image id")
    p.add_argument("--top", type=int, default=DEFAULT_GRID_DEPTH,
                   help="number of candidates to return")
    p.add_argument("--out", default="-",
                   help="score CSV destination ('-' for stdout)")
    p.add_argument("--dump-classes", default=None, metavar="CSV",
                   help="also dump (class id, member id, membership) rows "
                        "for the query against its rank-1 candidate")
    p.add_argument("--exclude-self", action="store_true",
                   help="drop the query image from the candidates")
    p.add_argument("--override-spread", default=None,
                   help="re-derive index and query envelopes with this "
                        "spread ('none' for type-1) before scoring")
    add_measure_flag(p)
    add_describe_flags(p)
    add_tolerance_flags(p)
    add_jobs_flag(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", formatter_class=fmt,
                       help="run every image as a query and aggregate "
                            "precision/recall")
    p.add_argument("--index", required=True, help="index file")
    p.add_argument("--depth", type=int, default=DEFAULT_TABLE_DEPTH,
                   help="retrieval depth for the category table")
    p.add_argument("--out", default="-",
                   help="category,avg_precision CSV ('-' for stdout)")
    p.add_argument("--curve-out", default=None, metavar="CSV",
                   help="also write an averaged k,precision,recall curve")
    p.add_argument("--curve-depth", type=int, default=DEFAULT_GRID_DEPTH,
                   help="maximum k for the averaged curve")
    p.add_argument("--exclude-self", action="store_true",
                   help="drop each query from its own candidate pool")
    p.add_argument("--exclude-category", type=int, default=None,
                   help="drop one category from queries and candidates")
    add_measure_flag(p)
    add_tolerance_flags(p)
    add_jobs_flag(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("mf-plot", formatter_class=fmt,
                       help="sample a membership function to CSV")
    p.add_argument("--family", required=True, choices=MF_FAMILIES)
    p.add_argument("--params", required=True,
                   help="comma-separated parameters; beta: "
                        f"{_PARAM_HELP['beta']}; triangular: "
                        f"{_PARAM_HELP['triangular']}; trapezoidal: "
                        f"{_PARAM_HELP['trapezoidal']}; gaussian: "
                        f"{_PARAM_HELP['gaussian']}")
    p.add_argument("--samples", type=int, default=101,
                   help="number of sample points")
    p.add_argument("--pad", type=float, default=0.05,
                   help="margin beyond the support, as a fraction of it")
    p.add_argument("--it2-spread", default=None,
                   help="emit lower/upper interval envelopes with this "
                        "center spread (beta only)")
    p.add_argument("--out", default="-",
                   help="CSV destination ('-' for stdout)")
    p.set_defaults(func=cmd_mf_plot)

    p = sub.add_parser("gen-synthetic", formatter_class=fmt,
                       help="write a labeled synthetic PNG dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--categories", type=int, default=3)
    p.add_argument("--per-category", type=int, default=10)
    p.add_argument("--seed", type=int, default=0,
                   help="seed for all generated randomness")
    p.add_argument("--tile", type=int, default=8, help="pattern tile size")
    p.add_argument("--width-blocks", type=int, default=4,
                   help="image width in tiles")
    p.add_argument("--base-rows", type=int, default=12,
                   help="minimum image height in tiles")
    p.add_argument("--pattern", default="mixed",
                   choices=("mixed",) + PATTERNS,
                   help="pattern family; 'mixed' cycles per category")
    p.add_argument("--brightness-step", type=float, default=0.004,
                   help="per-image brightness offset step")
    p.add_argument("--row-ramp", type=float, default=0.002,
                   help="per-tile-row brightness ramp")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("serve", formatter_class=fmt,
                       help="serve the query API and UI for an index")
    p.add_argument("--index", required=True, help="index file")
    p.add_argument("--dataset", default=None,
                   help="dataset directory for image/thumbnail bytes")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", default=None,
                   help="directory with the built UI bundle to host at /")
    add_jobs_flag(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except tuple(cls for cls, _ in _EXIT_CODES) as exc:
        message = str(exc) or exc.__class__.__name__
        _warn(f"error: {message}")
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())

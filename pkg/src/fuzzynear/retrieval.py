"""Dataset indexing, query-by-example ranking, and retrieval evaluation.

An index is an immutable snapshot: one descriptions tuple per decodable image
plus a category map, all produced under a single fingerprinted description
configuration. Queries rank every indexed image ascending by nearness score
(distance convention, ties broken by ascending image id); evaluation runs
every indexed image as a query and aggregates precision/recall.

The persisted form is a line-oriented text file with tab-separated fields and
all reals printed at 9 significant digits, so identical inputs always produce
byte-identical files and a reload reproduces descriptions bit-exactly.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from PIL import Image

from .errors import (
    EmptyDataset,
    EmptyRetrieval,
    FingerprintMismatch,
    ImageTooSmall,
    IndexFormatError,
    NoRelevantImages,
)
from .nearness import MEASURES, NearnessScore, compute_score
from .perceptual import (
    BankSpec,
    DescribeConfig,
    ObjectDescription,
    describe_image,
    fmt9,
    round9,
)
from .tolerance import DEFAULT_ENVELOPE, ToleranceConfig

INDEX_MAGIC = "fuzzynear-index"
INDEX_VERSION = 1
IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".gif",
                    ".tif", ".tiff", ".webp")
LABELS_FILENAME = "labels.csv"
DEFAULT_TABLE_DEPTH = 100  # per-category average-precision tables
DEFAULT_GRID_DEPTH = 40    # retrieved-grid views


def _id_key(image_id):
    """Sort key tolerating mixed int/string image ids (ints first)."""
    if isinstance(image_id, int):
        return (0, image_id, "")
    return (1, 0, str(image_id))


def _parse_id(text: str):
    return int(text) if text.isdigit() else text


def load_raster(path) -> np.ndarray:
    """Decode an image file to an RGB uint8 array."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


@dataclass(frozen=True)
class DatasetIndex:
    """Immutable per-image descriptions plus a category map."""

    config: DescribeConfig
    entries: tuple[tuple[object, tuple[ObjectDescription, ...]], ...]
    categories: Mapping[object, int | None]
    filenames: Mapping[object, str] = field(default_factory=dict)

    def __post_init__(self):
        ids = [image_id for image_id, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate image ids in index")
        missing = [i for i in ids if i not in self.categories]
        if missing:
            raise ValueError(f"images without a category entry: {missing[:5]}")
        for image_id, descs in self.entries:
            if not descs:
                raise ValueError(f"image {image_id!r} has no descriptions")

    @cached_property
    def _by_id(self) -> dict:
        return {image_id: descs for image_id, descs in self.entries}

    @property
    def image_ids(self) -> tuple:
        return tuple(image_id for image_id, _ in self.entries)

    @property
    def image_count(self) -> int:
        return len(self.entries)

    @property
    def block_count(self) -> int:
        return sum(len(descs) for _, descs in self.entries)

    def __contains__(self, image_id) -> bool:
        return image_id in self._by_id

    def descriptions(self, image_id) -> tuple[ObjectDescription, ...]:
        try:
            return self._by_id[image_id]
        except KeyError:
            raise KeyError(f"image id {image_id!r} is not in the index")

    def category_of(self, image_id):
        return self.categories[image_id]

    @property
    def has_categories(self) -> bool:
        return all(self.categories[i] is not None for i in self.image_ids)

    def category_members(self, category) -> tuple:
        return tuple(i for i in self.image_ids
                     if self.categories[i] == category)

    def category_sizes(self) -> dict:
        sizes: dict = {}
        for image_id in self.image_ids:
            cat = self.categories[image_id]
            sizes[cat] = sizes.get(cat, 0) + 1
        return sizes

    def filename_of(self, image_id) -> str | None:
        return self.filenames.get(image_id)

    def without_category(self, category) -> "DatasetIndex":
        entries = tuple((i, d) for i, d in self.entries
                        if self.categories[i] != category)
        if not entries:
            raise EmptyDataset(
                f"excluding category {category!r} leaves no images")
        categories = {i: self.categories[i] for i, _ in entries}
        filenames = {i: name for i, name in self.filenames.items()
                     if i in categories}
        return DatasetIndex(self.config, entries, categories, filenames)


def read_labels(path) -> dict[str, int]:
    """Parse a `filename,category` table; a header row is optional."""
    labels: dict[str, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            name = row[0].strip()
            if name.lower() == "filename":
                continue
            if len(row) < 2:
                raise IndexFormatError(
                    f"label row for {name!r} is missing a category")
            try:
                labels[name] = int(row[1])
            except ValueError:
                raise IndexFormatError(
                    f"category for {name!r} is not an integer: {row[1]!r}")
    return labels


def discover_dataset(dataset_root) -> tuple[list[Path], dict[str, int] | None]:
    """Image files (sorted by name) and the optional labels table."""
    root = Path(dataset_root)
    if not root.is_dir():
        raise EmptyDataset(f"dataset root {root} is not a directory")
    files = sorted(p for p in root.iterdir()
                   if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS)
    labels_path = root / LABELS_FILENAME
    labels = read_labels(labels_path) if labels_path.is_file() else None
    return files, labels


def build_index(dataset_root, config: DescribeConfig
                ) -> tuple[DatasetIndex, list[tuple[str, str]]]:
    """Describe every decodable image under the root.

    Returns the index plus a list of (filename, reason) decode failures;
    failures never abort the run, but an empty result does.
    """
    files, labels = discover_dataset(dataset_root)
    described: list[tuple[object, tuple[ObjectDescription, ...]]] = []
    categories: dict = {}
    filenames: dict = {}
    failures: list[tuple[str, str]] = []
    for path in files:
        image_id = _parse_id(path.stem)
        try:
            pixels = load_raster(path)
            descs = tuple(describe_image(pixels, config, image_id=image_id))
        except (OSError, ValueError, ImageTooSmall) as exc:
            failures.append((path.name, str(exc)))
            continue
        if labels is not None and path.name in labels:
            category = labels[path.name]
        elif isinstance(image_id, int):
            category = image_id // 100
        else:
            category = None
        described.append((image_id, descs))
        categories[image_id] = category
        filenames[image_id] = path.name
    if not described:
        raise EmptyDataset(
            f"no decodable images under {dataset_root} "
            f"({len(failures)} failure(s))")
    described.sort(key=lambda pair: _id_key(pair[0]))
    return DatasetIndex(config, tuple(described), categories,
                        filenames), failures


# --------------------------------------------------------------------------
# Persistence


def _format_spread(spread) -> str:
    return "none" if spread is None else fmt9(spread)


def _parse_spread(text: str):
    return None if text == "none" else float(text)


def save_index(index: DatasetIndex, path) -> None:
    """Write the versioned text format (byte-identical across runs)."""
    cfg = index.config
    bank = cfg.bank
    lines = [
        f"{INDEX_MAGIC} {INDEX_VERSION}",
        f"fingerprint\t{cfg.fingerprint()}",
        f"block\t{cfg.block_width}\t{cfg.block_height}",
        f"probes\t{','.join(cfg.probes)}",
        "bank\t" + "\t".join([
            bank.family, str(bank.m), _format_spread(bank.it2_spread),
            fmt9(bank.alpha), fmt9(bank.beta),
            "1" if bank.literal_centers else "0"]),
    ]
    for image_id, _ in index.entries:
        category = index.categories[image_id]
        cat_text = "-" if category is None else str(category)
        name = index.filenames.get(image_id) or "-"
        lines.append(f"C\t{image_id}\t{cat_text}\t{name}")
    for image_id, descs in index.entries:
        for d in descs:
            lines.append("\t".join([
                "B", str(image_id), str(d.block_row), str(d.block_col),
                ",".join(fmt9(v) for v in d.raw_features),
                ",".join(fmt9(v) for v in d.fuzzy_lower),
                ",".join(fmt9(v) for v in d.fuzzy_upper)]))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def load_index(path) -> DatasetIndex:
    """Read the versioned text format back; validates the fingerprint."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IndexFormatError(f"cannot read index file {path}: {exc}")
    lines = text.splitlines()
    if not lines:
        raise IndexFormatError(f"{path} is empty")
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != INDEX_MAGIC:
        raise IndexFormatError(f"{path} is not an index file")
    if magic[1] != str(INDEX_VERSION):
        raise IndexFormatError(
            f"unsupported index format version {magic[1]!r}")

    header: dict[str, list[str]] = {}
    body_start = 1
    for lineno in range(1, len(lines)):
        fields = lines[lineno].split("\t")
        if fields[0] in ("C", "B"):
            body_start = lineno
            break
        header[fields[0]] = fields[1:]
        body_start = lineno + 1
    for key in ("fingerprint", "block", "probes", "bank"):
        if key not in header:
            raise IndexFormatError(f"missing {key!r} header in {path}")
    try:
        bank_fields = header["bank"]
        bank = BankSpec(family=bank_fields[0], m=int(bank_fields[1]),
                        it2_spread=_parse_spread(bank_fields[2]),
                        alpha=float(bank_fields[3]),
                        beta=float(bank_fields[4]),
                        literal_centers=bank_fields[5] == "1")
        config = DescribeConfig(block_width=int(header["block"][0]),
                                block_height=int(header["block"][1]),
                                probes=tuple(header["probes"][0].split(",")),
                                bank=bank)
    except (IndexError, ValueError) as exc:
        raise IndexFormatError(f"malformed header in {path}: {exc}")
    stored = header["fingerprint"][0]
    if config.fingerprint() != stored:
        raise IndexFormatError(
            f"header fingerprint {stored} does not match the stored "
            f"configuration ({config.fingerprint()})")

    categories: dict = {}
    filenames: dict = {}
    blocks: dict[object, list[ObjectDescription]] = {}
    for lineno in range(body_start, len(lines)):
        line = lines[lineno]
        if not line:
            continue
        fields = line.split("\t")
        try:
            if fields[0] == "C":
                image_id = _parse_id(fields[1])
                categories[image_id] = (None if fields[2] == "-"
                                        else int(fields[2]))
                if len(fields) > 3 and fields[3] != "-":
                    filenames[image_id] = fields[3]
            elif fields[0] == "B":
                image_id = _parse_id(fields[1])
                blocks.setdefault(image_id, []).append(ObjectDescription(
                    image_id, int(fields[2]), int(fields[3]),
                    _parse_floats(fields[4]), _parse_floats(fields[5]),
                    _parse_floats(fields[6])))
            else:
                raise ValueError(f"unknown record type {fields[0]!r}")
        except (IndexError, ValueError) as exc:
            raise IndexFormatError(
                f"malformed record at {path}:{lineno + 1}: {exc}")
    if not categories:
        raise IndexFormatError(f"{path} lists no images")
    missing = [i for i in categories if i not in blocks]
    if missing:
        raise IndexFormatError(
            f"images without block records in {path}: {missing[:5]}")
    entries = tuple((image_id, tuple(blocks[image_id]))
                    for image_id in sorted(categories, key=_id_key))
    return DatasetIndex(config, entries, categories, filenames)


def refuzzify(index: DatasetIndex, it2_spread) -> DatasetIndex:
    """Re-derive fuzzy descriptions from stored raw features with a new
    envelope spread (block size and probes unchanged, so no re-decoding)."""
    new_config = replace(index.config,
                         bank=index.config.bank.with_spread(it2_spread))
    bank = new_config.bank.build()
    entries = []
    for image_id, descs in index.entries:
        entries.append((image_id, refuzzify_descriptions(descs, bank)))
    return DatasetIndex(new_config, tuple(entries), dict(index.categories),
                        dict(index.filenames))


def refuzzify_descriptions(descs: Sequence[ObjectDescription], bank
                           ) -> tuple[ObjectDescription, ...]:
    n = len(descs)
    p = len(descs[0].raw_features)
    raws = np.asarray([d.raw_features for d in descs], dtype=np.float64)
    lower_flat, upper_flat = bank.fuzzify(raws.ravel())
    lower = round9(lower_flat.reshape(n, p * bank.term_count))
    upper = round9(upper_flat.reshape(n, p * bank.term_count))
    return tuple(ObjectDescription(d.image_id, d.block_row, d.block_col,
                                   d.raw_features, tuple(lower[i].tolist()),
                                   tuple(upper[i].tolist()))
                 for i, d in enumerate(descs))


# --------------------------------------------------------------------------
# Ranking


@dataclass(frozen=True)
class RankedResult:
    """Candidates ascending by score; ties broken by ascending image id."""

    query_id: object
    measure: str
    entries: tuple[tuple[object, NearnessScore], ...]

    @property
    def ids(self) -> tuple:
        return tuple(image_id for image_id, _ in self.entries)

    def prefix_ids(self, k: int) -> tuple:
        return self.ids[:k]

    def __len__(self) -> int:
        return len(self.entries)


_WORKER_STATE: dict = {}


def _rank_worker_init(state):
    _WORKER_STATE.clear()
    _WORKER_STATE.update(state)


def _rank_worker_score(candidate_id):
    score = compute_score(
        _WORKER_STATE["measure"], _WORKER_STATE["query"],
        _WORKER_STATE["candidates"][candidate_id], _WORKER_STATE["cfg"],
        envelope=_WORKER_STATE["envelope"])
    return candidate_id, score


def rank_all(index: DatasetIndex, query_descs: Sequence[ObjectDescription],
             measure: str, cfg: ToleranceConfig, *,
             query_id=None, envelope: str = DEFAULT_ENVELOPE, jobs: int = 1,
             exclude_self: bool = False) -> RankedResult:
    """Score the query against every indexed image, fully ordered."""
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")
    if not query_descs:
        raise ValueError("query image produced no descriptions")
    candidate_ids = [i for i in index.image_ids
                     if not (exclude_self and i == query_id)]
    if not candidate_ids:
        raise EmptyDataset("no candidate images to rank")
    query = tuple(query_descs)
    if jobs <= 1:
        scored = [(cid, compute_score(measure, query,
                                      index.descriptions(cid), cfg,
                                      envelope=envelope))
                  for cid in candidate_ids]
    else:
        state = {"measure": measure, "query": query, "cfg": cfg,
                 "envelope": envelope,
                 "candidates": {cid: index.descriptions(cid)
                                for cid in candidate_ids}}
        chunk = max(1, len(candidate_ids) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs,
                                 initializer=_rank_worker_init,
                                 initargs=(state,)) as pool:
            scored = list(pool.map(_rank_worker_score, candidate_ids,
                                   chunksize=chunk))
    scored.sort(key=lambda pair: (pair[1].value, _id_key(pair[0])))
    return RankedResult(query_id, measure, tuple(scored))


def query(index: DatasetIndex, query_descs: Sequence[ObjectDescription],
          measure: str, cfg: ToleranceConfig, k: int, *,
          query_id=None, query_config: DescribeConfig | None = None,
          envelope: str = DEFAULT_ENVELOPE, jobs: int = 1,
          exclude_self: bool = False) -> RankedResult:
    """Top-k ranking; k beyond the dataset returns the full ranking."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if (query_config is not None
            and query_config.fingerprint() != index.config.fingerprint()):
        raise FingerprintMismatch(
            f"query described under {query_config.fingerprint()} but the "
            f"index was built under {index.config.fingerprint()}")
    ranked = rank_all(index, query_descs, measure, cfg, query_id=query_id,
                      envelope=envelope, jobs=jobs, exclude_self=exclude_self)
    return RankedResult(ranked.query_id, measure, ranked.entries[:k])


def query_by_id(index: DatasetIndex, image_id, measure: str,
                cfg: ToleranceConfig, k: int, *,
                envelope: str = DEFAULT_ENVELOPE, jobs: int = 1,
                exclude_self: bool = False) -> RankedResult:
    """Query with an already-indexed image's stored descriptions."""
    descs = index.descriptions(image_id)
    return query(index, descs, measure, cfg, k, query_id=image_id,
                 envelope=envelope, jobs=jobs, exclude_self=exclude_self)


# --------------------------------------------------------------------------
# Evaluation


def precision(retrieved_ids: Sequence, relevant: frozenset | set) -> float:
    if not retrieved_ids:
        raise EmptyRetrieval("precision needs at least one retrieved image")
    hits = sum(1 for i in retrieved_ids if i in relevant)
    return hits / len(retrieved_ids)


def recall(retrieved_ids: Sequence, relevant: frozenset | set) -> float:
    if not relevant:
        raise NoRelevantImages("recall needs a non-empty relevant set")
    hits = sum(1 for i in retrieved_ids if i in relevant)
    return hits / len(relevant)


def pr_curve(result: RankedResult, relevant: frozenset | set,
             max_k: int) -> list[tuple[float, float]]:
    """(precision, recall) at every prefix length 1..max_k."""
    if max_k < 1:
        raise ValueError(f"max_k must be >= 1, got {max_k}")
    ids = result.ids
    pairs = []
    for k in range(1, min(max_k, len(ids)) + 1):
        prefix = ids[:k]
        pairs.append((precision(prefix, relevant), recall(prefix, relevant)))
    return pairs


def relevant_set(index: DatasetIndex, image_id, *,
                 exclude_self: bool = False) -> frozenset:
    category = index.category_of(image_id)
    if category is None:
        raise NoRelevantImages(
            f"image {image_id!r} has no category label")
    members = set(index.category_members(category))
    if exclude_self:
        members.discard(image_id)
    return frozenset(members)


@dataclass(frozen=True)
class QueryEvaluation:
    query_id: object
    category: int
    retrieved_ids: tuple


_EVAL_STATE: dict = {}


def _eval_worker_init(state):
    _EVAL_STATE.clear()
    _EVAL_STATE.update(state)


def _eval_worker_run(query_id):
    ranked = rank_all(
        _EVAL_STATE["index"], _EVAL_STATE["index"].descriptions(query_id),
        _EVAL_STATE["measure"], _EVAL_STATE["cfg"], query_id=query_id,
        envelope=_EVAL_STATE["envelope"],
        exclude_self=_EVAL_STATE["exclude_self"])
    return QueryEvaluation(query_id,
                           _EVAL_STATE["index"].category_of(query_id),
                           ranked.prefix_ids(_EVAL_STATE["depth"]))


def evaluate_queries(index: DatasetIndex, measure: str, cfg: ToleranceConfig,
                     depth: int, *, envelope: str = DEFAULT_ENVELOPE,
                     jobs: int = 1, exclude_self: bool = False,
                     exclude_category: int | None = None
                     ) -> list[QueryEvaluation]:
    """Run every indexed image as a query; keep the top `depth` ids each."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if exclude_category is not None:
        index = index.without_category(exclude_category)
    if not index.has_categories:
        raise NoRelevantImages("evaluation requires category labels for "
                               "every indexed image")
    state = {"index": index, "measure": measure, "cfg": cfg,
             "envelope": envelope, "depth": depth,
             "exclude_self": exclude_self}
    query_ids = list(index.image_ids)
    if jobs <= 1:
        _eval_worker_init(state)
        try:
            return [_eval_worker_run(qid) for qid in query_ids]
        finally:
            _EVAL_STATE.clear()
    with ProcessPoolExecutor(max_workers=jobs, initializer=_eval_worker_init,
                             initargs=(state,)) as pool:
        return list(pool.map(_eval_worker_run, query_ids))


def category_average_precision(index: DatasetIndex, measure: str,
                               cfg: ToleranceConfig,
                               depth: int = DEFAULT_TABLE_DEPTH, *,
                               envelope: str = DEFAULT_ENVELOPE,
                               jobs: int = 1, exclude_self: bool = False,
                               exclude_category: int | None = None,
                               evaluations: Sequence[QueryEvaluation] | None
                               = None) -> dict[int, float]:
    """Mean precision at `depth` per category, every image as a query."""
    if evaluations is None:
        evaluations = evaluate_queries(
            index, measure, cfg, depth, envelope=envelope, jobs=jobs,
            exclude_self=exclude_self, exclude_category=exclude_category)
    if exclude_category is not None:
        index = index.without_category(exclude_category)
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for ev in evaluations:
        relevant = relevant_set(index, ev.query_id, exclude_self=exclude_self)
        p = precision(ev.retrieved_ids[:depth], relevant)
        sums[ev.category] = sums.get(ev.category, 0.0) + p
        counts[ev.category] = counts.get(ev.category, 0) + 1
    return {cat: sums[cat] / counts[cat] for cat in sorted(sums)}


def averaged_pr_curve(index: DatasetIndex, measure: str,
                      cfg: ToleranceConfig, max_k: int = DEFAULT_GRID_DEPTH,
                      *, envelope: str = DEFAULT_ENVELOPE, jobs: int = 1,
                      exclude_self: bool = False,
                      exclude_category: int | None = None,
                      evaluations: Sequence[QueryEvaluation] | None = None
                      ) -> list[tuple[int, float, float]]:
    """(k, mean precision, mean recall) over all queries for k = 1..max_k."""
    if evaluations is None:
        evaluations = evaluate_queries(
            index, measure, cfg, max_k, envelope=envelope, jobs=jobs,
            exclude_self=exclude_self, exclude_category=exclude_category)
    if exclude_category is not None:
        index = index.without_category(exclude_category)
    relevants = {ev.query_id: relevant_set(index, ev.query_id,
                                           exclude_self=exclude_self)
                 for ev in evaluations}
    rows = []
    depth = min(max_k, min(len(ev.retrieved_ids) for ev in evaluations))
    for k in range(1, depth + 1):
        p_sum = 0.0
        r_sum = 0.0
        for ev in evaluations:
            prefix = ev.retrieved_ids[:k]
            rel = relevants[ev.query_id]
            p_sum += precision(prefix, rel)
            r_sum += recall(prefix, rel)
        rows.append((k, p_sum / len(evaluations), r_sum / len(evaluations)))
    return rows

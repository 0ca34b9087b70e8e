"""Nearness measures between two described images.

All three measures share one engine: pool both images' objects, collapse
byte-identical description vectors per side into weighted nodes (exact, since
identical-description objects are mutually tolerant and share adjacency, so
every maximal clique takes all of a duplicate group or none of it), enumerate
maximal tolerance classes, and accumulate the cardinality-weighted split
ratio 1 - sum(|C| * min/max) / sum(|C|).

The crisp measure uses classes at the inner threshold; the fuzzy measure uses
classes of the graded support graph with fuzzy cardinalities; the
interval-valued measure averages the fuzzy measure over the upper and lower
description envelopes. All values are distances in [0, 1]: 0 means maximally
near.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch
from .perceptual import ObjectDescription
from .tolerance import (
    DEFAULT_ENVELOPE,
    ToleranceConfig,
    distance_matrix,
    enumerate_maximal_cliques,
    grade_matrix,
    graph_from_grade_matrix,
    tolerance_ramp,
)

MEASURES = ("tnm", "tfnm", "it2bfnm")


@dataclass(frozen=True)
class NearnessScore:
    """A distance-convention similarity score: 0 is maximally near."""

    measure: str
    value: float
    upper_value: float | None = None
    lower_value: float | None = None
    class_count: int = 0
    budget_exceeded: bool = False
    budget_reason: str | None = None

    convention = "distance"

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"measure must be one of {MEASURES}, "
                             f"got {self.measure!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"score {self.value} outside [0, 1]")


def fuzzy_cardinality(grades: Sequence[float]) -> float:
    """Sum of membership grades; recovers set size for crisp grades."""
    total = 0.0
    for g in grades:
        if not 0.0 <= g <= 1.0:
            raise ValueError(f"membership grade {g} outside [0, 1]")
        total += g
    return total


@dataclass(frozen=True)
class _WeightedNode:
    side: int  # 0 = X, 1 = Y
    weight: int
    members: tuple  # original object_ids, for diagnostics/dumps


def _dedup_nodes(x: Sequence[ObjectDescription], y: Sequence[ObjectDescription],
                 envelope: str) -> tuple[list[_WeightedNode], np.ndarray]:
    """Collapse identical description vectors per side into weighted nodes."""
    nodes: list[_WeightedNode] = []
    vectors: list[tuple[float, ...]] = []
    for side, descs in ((0, x), (1, y)):
        groups: dict[tuple[float, ...], list] = {}
        order: list[tuple[float, ...]] = []
        for d in descs:
            vec = d.vector(envelope)
            if vec not in groups:
                groups[vec] = []
                order.append(vec)
            groups[vec].append(d.object_id)
        for vec in order:
            members = groups[vec]
            nodes.append(_WeightedNode(side, len(members), tuple(members)))
            vectors.append(vec)
    lengths = {len(v) for v in vectors}
    if len(lengths) > 1:
        raise DimensionMismatch(
            f"description lengths differ across objects: {sorted(lengths)}")
    return nodes, np.asarray(vectors, dtype=np.float64)


def _enumerate(graph, cfg: ToleranceConfig):
    try:
        cliques = enumerate_maximal_cliques(graph, cfg.max_cliques,
                                            cfg.max_seconds)
        return cliques, False, None
    except BudgetExceeded as exc:
        if not exc.cliques:
            raise  # nothing enumerated; no approximation to report
        return exc.cliques, True, exc.reason


def _accumulate(cliques, nodes: list[_WeightedNode], graph,
                crisp: bool) -> float:
    """Shared split-ratio accumulation over (possibly weighted) classes.

    Per-class terms are combined with math.fsum, so the result does not
    depend on the order the classes were enumerated in.
    """
    cards = []
    terms = []
    for clique in cliques:
        a = 0.0
        b = 0.0
        for z in clique:
            if crisp or len(clique) == 1:
                mu = 1.0
            else:
                mu = min(graph.grade(z, w) for w in clique if w != z)
            if nodes[z].side == 0:
                a += nodes[z].weight * mu
            else:
                b += nodes[z].weight * mu
        card = a + b
        cards.append(card)
        terms.append(card * (min(a, b) / max(a, b)))
    total = math.fsum(cards)
    if total <= 0.0:
        raise ValueError("no tolerance classes found; objects were empty")
    return min(max(1.0 - math.fsum(terms) / total, 0.0), 1.0)


def _check_inputs(x, y):
    if not x or not y:
        raise ValueError("both images must contribute at least one object")


def _crisp_core(x, y, cfg: ToleranceConfig, envelope: str):
    nodes, vectors = _dedup_nodes(x, y, envelope)
    d = distance_matrix(vectors, cfg)
    adjacency = np.where(d <= cfg.epsilon, 1.0, 0.0)
    graph = graph_from_grade_matrix(adjacency)
    cliques, flag, reason = _enumerate(graph, cfg)
    value = _accumulate(cliques, nodes, graph, crisp=True)
    return value, len(cliques), flag, reason


def _fuzzy_core(x, y, cfg: ToleranceConfig, envelope: str):
    nodes, vectors = _dedup_nodes(x, y, envelope)
    d = distance_matrix(vectors, cfg)
    graph = graph_from_grade_matrix(grade_matrix(d, cfg))
    cliques, flag, reason = _enumerate(graph, cfg)
    value = _accumulate(cliques, nodes, graph, crisp=False)
    return value, len(cliques), flag, reason


def tnm(x: Sequence[ObjectDescription], y: Sequence[ObjectDescription],
        cfg: ToleranceConfig, envelope: str = DEFAULT_ENVELOPE) -> NearnessScore:
    """Crisp tolerance nearness over classes at the inner threshold."""
    _check_inputs(x, y)
    value, count, flag, reason = _crisp_core(x, y, cfg, envelope)
    return NearnessScore("tnm", value, class_count=count,
                         budget_exceeded=flag, budget_reason=reason)


def tfnm(x: Sequence[ObjectDescription], y: Sequence[ObjectDescription],
         cfg: ToleranceConfig, envelope: str = DEFAULT_ENVELOPE) -> NearnessScore:
    """Fuzzy tolerance nearness: graded classes, fuzzy cardinalities."""
    _check_inputs(x, y)
    value, count, flag, reason = _fuzzy_core(x, y, cfg, envelope)
    return NearnessScore("tfnm", value, class_count=count,
                         budget_exceeded=flag, budget_reason=reason)


def it2bfnm(x: Sequence[ObjectDescription], y: Sequence[ObjectDescription],
            cfg: ToleranceConfig) -> NearnessScore:
    """Interval-valued nearness: mean of the fuzzy measure per envelope."""
    _check_inputs(x, y)
    up_value, up_count, up_flag, up_reason = _fuzzy_core(x, y, cfg, "upper")
    lo_value, lo_count, lo_flag, lo_reason = _fuzzy_core(x, y, cfg, "lower")
    return NearnessScore(
        "it2bfnm", (up_value + lo_value) / 2.0,
        upper_value=up_value, lower_value=lo_value,
        class_count=up_count + lo_count,
        budget_exceeded=up_flag or lo_flag,
        budget_reason=up_reason or lo_reason)


def compute_score(measure: str, x: Sequence[ObjectDescription],
                  y: Sequence[ObjectDescription], cfg: ToleranceConfig,
                  envelope: str = DEFAULT_ENVELOPE) -> NearnessScore:
    if measure == "tnm":
        return tnm(x, y, cfg, envelope)
    if measure == "tfnm":
        return tfnm(x, y, cfg, envelope)
    if measure == "it2bfnm":
        return it2bfnm(x, y, cfg)
    raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")


def weakly_near(x: Sequence[ObjectDescription], y: Sequence[ObjectDescription],
                cfg: ToleranceConfig,
                envelope: str = DEFAULT_ENVELOPE) -> bool:
    """Whether some tolerance class intersects both images.

    Equivalent to some cross-image object pair lying within epsilon: such a
    pair is a clique that extends to a maximal class meeting both sides, and
    conversely a class meeting both sides contains a cross pair (diagnostic
    predicate; not used in ranking).
    """
    _check_inputs(x, y)
    nodes, vectors = _dedup_nodes(x, y, envelope)
    d = distance_matrix(vectors, cfg)
    sides = np.asarray([n.side for n in nodes])
    cross = sides[:, None] != sides[None, :]
    return bool(np.any(cross & (d <= cfg.epsilon)))


def class_membership_rows(x: Sequence[ObjectDescription],
                          y: Sequence[ObjectDescription],
                          cfg: ToleranceConfig,
                          envelope: str = DEFAULT_ENVELOPE):
    """Audit rows (class id, original object id, membership grade).

    Classes come from the graded support graph (the fuzzy-measure path),
    expanded back from weighted nodes to every original object.
    """
    _check_inputs(x, y)
    nodes, vectors = _dedup_nodes(x, y, envelope)
    d = distance_matrix(vectors, cfg)
    graph = graph_from_grade_matrix(grade_matrix(d, cfg))
    cliques, flag, reason = _enumerate(graph, cfg)
    rows = []
    for class_id, clique in enumerate(cliques):
        for z in clique:
            if len(clique) == 1:
                mu = 1.0
            else:
                mu = min(graph.grade(z, w) for w in clique if w != z)
            for object_id in nodes[z].members:
                rows.append((class_id, object_id, mu))
    return rows, flag, reason

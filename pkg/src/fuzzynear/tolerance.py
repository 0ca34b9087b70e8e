"""Crisp and fuzzy tolerance relations, neighborhoods, tolerance classes.

Two objects are tolerant when their description vectors are within epsilon
(normalized Euclidean by default). The graded relation ramps linearly from 1
at epsilon down to 0 at epsilon_prime. Tolerance classes are the maximal
cliques of the graded graph's support, enumerated depth-first with pivoting
and degeneracy ordering under configurable size/time budgets.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch
from .perceptual import ObjectDescription

DEFAULT_EPSILON = 0.3
DEFAULT_EPSILON_PRIME = 0.45
DEFAULT_MAX_CLIQUES = 500_000
DEFAULT_MAX_SECONDS = 10.0

DISTANCE_MODES = ("full-vector", "per-feature-existential")
ENVELOPES = ("lower", "upper")
DEFAULT_ENVELOPE = "upper"


@dataclass(frozen=True)
class ToleranceConfig:
    epsilon: float = DEFAULT_EPSILON
    epsilon_prime: float = DEFAULT_EPSILON_PRIME
    distance_mode: str = "full-vector"
    normalize_by_dimension: bool = True
    max_cliques: int = DEFAULT_MAX_CLIQUES
    max_seconds: float | None = DEFAULT_MAX_SECONDS

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.epsilon_prime > self.epsilon:
            raise ValueError(
                f"epsilon_prime ({self.epsilon_prime}) must exceed epsilon "
                f"({self.epsilon})")
        if self.distance_mode not in DISTANCE_MODES:
            raise ValueError(f"distance_mode must be one of "
                             f"{DISTANCE_MODES}, got {self.distance_mode!r}")
        if self.max_cliques < 1:
            raise ValueError("max_cliques must be positive")


def description_distance(x_vec, y_vec, cfg: ToleranceConfig) -> float:
    """Scalar distance between two description vectors under the config."""
    x = np.asarray(x_vec, dtype=np.float64)
    y = np.asarray(y_vec, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(
            f"description lengths differ: {x.shape} vs {y.shape}")
    if x.size == 0:
        raise DimensionMismatch("empty description vectors")
    diff = x - y
    if cfg.distance_mode == "per-feature-existential":
        # the relation asks for SOME feature pair within epsilon, so the
        # scalar distance is the best (smallest) per-feature gap
        return float(np.min(np.abs(diff)))
    sq = diff * diff
    if cfg.normalize_by_dimension:
        return math.sqrt(float(np.mean(sq)))
    return math.sqrt(float(np.sum(sq)))


def tolerance_ramp(d: float, epsilon: float, epsilon_prime: float) -> float:
    """Grade 1 inside epsilon, linear to 0 at epsilon_prime, 0 beyond."""
    if d <= epsilon:
        return 1.0
    if d < epsilon_prime:
        return (epsilon_prime - d) / (epsilon_prime - epsilon)
    return 0.0


def _vector(obj: ObjectDescription, envelope: str):
    if envelope not in ENVELOPES:
        raise ValueError(f"envelope must be one of {ENVELOPES}, "
                         f"got {envelope!r}")
    return obj.fuzzy_lower if envelope == "lower" else obj.fuzzy_upper


def crisp_tolerance(x: ObjectDescription, y: ObjectDescription,
                    cfg: ToleranceConfig,
                    envelope: str = DEFAULT_ENVELOPE) -> bool:
    """Weak tolerance: descriptions within epsilon (boundary inclusive)."""
    return description_distance(_vector(x, envelope), _vector(y, envelope),
                                cfg) <= cfg.epsilon


def fuzzy_tolerance(x: ObjectDescription, y: ObjectDescription,
                    cfg: ToleranceConfig,
                    envelope: str = DEFAULT_ENVELOPE) -> float:
    """Graded tolerance via the two-threshold ramp on the chosen envelope."""
    d = description_distance(_vector(x, envelope), _vector(y, envelope), cfg)
    return tolerance_ramp(d, cfg.epsilon, cfg.epsilon_prime)


def neighborhood(x: int, objects: Sequence[ObjectDescription],
                 cfg: ToleranceConfig,
                 envelope: str = DEFAULT_ENVELOPE) -> set[int]:
    """Indices of all objects tolerant to objects[x]; always contains x."""
    if not 0 <= x < len(objects):
        raise IndexError(f"object index {x} out of range")
    me = objects[x]
    return {i for i, obj in enumerate(objects)
            if i == x or crisp_tolerance(me, obj, cfg, envelope)}


@dataclass(frozen=True)
class ToleranceGraph:
    """Undirected graded graph over object indices (no self loops stored)."""

    node_count: int
    adjacency: tuple[frozenset, ...]
    edge_grades: Mapping[tuple[int, int], float]

    def grade(self, i: int, j: int) -> float:
        if i == j:
            return 1.0
        key = (i, j) if i < j else (j, i)
        return self.edge_grades.get(key, 0.0)

    def neighbors(self, i: int) -> frozenset:
        return self.adjacency[i]

    @property
    def edge_count(self) -> int:
        return len(self.edge_grades)


def distance_matrix(vectors: np.ndarray, cfg: ToleranceConfig) -> np.ndarray:
    """Dense pairwise distances (vectorized, chunked to bound memory).

    Distances use direct squared differences (not the expanded gram form) so
    boundary cases land on the same floats as the scalar path. The existential
    mode takes the smallest per-feature gap instead of the Euclidean form.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    n = vectors.shape[0]
    d = np.empty((n, n), dtype=np.float64)
    chunk = max(1, min(n, 8_000_000 // (max(n, 1) * vectors.shape[1] * 8)))
    for i0 in range(0, n, chunk):
        diff = vectors[i0:i0 + chunk, None, :] - vectors[None, :, :]
        if cfg.distance_mode == "per-feature-existential":
            d[i0:i0 + chunk] = np.min(np.abs(diff), axis=2)
        elif cfg.normalize_by_dimension:
            d[i0:i0 + chunk] = np.sqrt(np.mean(diff * diff, axis=2))
        else:
            d[i0:i0 + chunk] = np.sqrt(np.sum(diff * diff, axis=2))
    return d


def grade_matrix(d: np.ndarray, cfg: ToleranceConfig) -> np.ndarray:
    """Vectorized tolerance ramp over a distance matrix."""
    return np.where(
        d <= cfg.epsilon, 1.0,
        np.where(d < cfg.epsilon_prime,
                 (cfg.epsilon_prime - d) / (cfg.epsilon_prime - cfg.epsilon),
                 0.0))


def build_tolerance_graph(objects: Sequence[ObjectDescription],
                          cfg: ToleranceConfig,
                          envelope: str = DEFAULT_ENVELOPE) -> ToleranceGraph:
    """Edges wherever the graded tolerance is positive (d < epsilon_prime)."""
    n = len(objects)
    if n < 1:
        raise ValueError("at least one object is required")
    vectors = np.asarray([_vector(o, envelope) for o in objects],
                         dtype=np.float64)
    if vectors.ndim != 2:
        raise DimensionMismatch("description lengths differ across objects")
    matrix = grade_matrix(distance_matrix(vectors, cfg), cfg)
    return graph_from_grade_matrix(matrix)


def graph_from_grade_matrix(matrix: np.ndarray) -> ToleranceGraph:
    """Assemble a ToleranceGraph from a symmetric grade matrix."""
    n = matrix.shape[0]
    adjacency: list[set[int]] = [set() for _ in range(n)]
    grades: dict[tuple[int, int], float] = {}
    ii, jj = np.nonzero(np.triu(matrix, k=1) > 0.0)
    for i, j in zip(ii.tolist(), jj.tolist()):
        grades[(i, j)] = float(matrix[i, j])
        adjacency[i].add(j)
        adjacency[j].add(i)
    return ToleranceGraph(n, tuple(frozenset(s) for s in adjacency), grades)


def _degeneracy_order(adjacency: Sequence[frozenset]) -> list[int]:
    """Repeatedly peel the minimum-degree vertex (ties to the smallest id).

    Lazy-deletion heap keyed by (degree, id) keeps the peel deterministic.
    """
    n = len(adjacency)
    degree = [len(a) for a in adjacency]
    heap = [(degree[v], v) for v in range(n)]
    heapq.heapify(heap)
    removed = [False] * n
    order = []
    while heap:
        d, v = heapq.heappop(heap)
        if removed[v] or d != degree[v]:
            continue
        removed[v] = True
        order.append(v)
        for w in adjacency[v]:
            if not removed[w]:
                degree[w] -= 1
                heapq.heappush(heap, (degree[w], w))
    return order


class _Budget:
    def __init__(self, max_cliques: int, max_seconds: float | None):
        self.max_cliques = max_cliques
        self.deadline = (time.monotonic() + max_seconds
                         if max_seconds is not None else None)
        self.found: list[tuple[int, ...]] = []

    def record(self, clique: Iterable[int]):
        if len(self.found) >= self.max_cliques:
            raise BudgetExceeded(
                f"clique cap {self.max_cliques} exceeded; results are partial",
                cliques=sorted(self.found), reason="cliques")
        self.found.append(tuple(sorted(clique)))

    def check_time(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise BudgetExceeded(
                "time budget exhausted during clique enumeration; "
                "results are partial",
                cliques=sorted(self.found), reason="time")


def _expand_pivot(seed: int, P: set[int], X: set[int],
                  adjacency: Sequence[frozenset], budget: _Budget):
    """Iterative depth-first candidate extension with pivoting."""
    # frame: [R, P, X, candidate list, next candidate index]
    stack = [[{seed}, P, X, None, 0]]
    while stack:
        budget.check_time()
        frame = stack[-1]
        R, P, X, cands, idx = frame
        if cands is None:
            if not P and not X:
                budget.record(R)
                stack.pop()
                continue
            if not P:
                stack.pop()
                continue
            pool = sorted(P | X)
            pivot = max(pool, key=lambda u: len(P & adjacency[u]))
            frame[3] = cands = sorted(P - adjacency[pivot])
        if idx >= len(cands):
            stack.pop()
            continue
        v = cands[idx]
        frame[4] = idx + 1
        child_P = P & adjacency[v]
        child_X = X & adjacency[v]
        P.discard(v)
        X.add(v)
        stack.append([R | {v}, child_P, child_X, None, 0])


def enumerate_maximal_cliques(graph: ToleranceGraph,
                              max_cliques: int = DEFAULT_MAX_CLIQUES,
                              max_seconds: float | None = DEFAULT_MAX_SECONDS
                              ) -> list[tuple[int, ...]]:
    """All maximal cliques as sorted tuples, in deterministic order.

    Every node appears in at least one clique (isolated nodes come back as
    singletons). Raises BudgetExceeded carrying the cliques found so far when
    the cap or the time budget trips; those partial results are still
    genuinely maximal cliques.
    """
    adjacency = graph.adjacency
    budget = _Budget(max_cliques, max_seconds)
    order = _degeneracy_order(adjacency)
    rank = {v: i for i, v in enumerate(order)}
    for v in order:
        later = {w for w in adjacency[v] if rank[w] > rank[v]}
        earlier = {w for w in adjacency[v] if rank[w] < rank[v]}
        if not later and not earlier:
            budget.record((v,))
            continue
        _expand_pivot(v, later, earlier, adjacency, budget)
    return sorted(budget.found)


@dataclass(frozen=True)
class FuzzyToleranceClass:
    """A maximal clique with a membership grade per member."""

    members: tuple[int, ...]
    grades: tuple[float, ...]

    def __post_init__(self):
        if len(self.members) != len(self.grades):
            raise ValueError("members and grades must align")
        if not self.members:
            raise ValueError("a tolerance class cannot be empty")

    @property
    def mu(self) -> dict[int, float]:
        return dict(zip(self.members, self.grades))

    def grade_of(self, member: int) -> float:
        return self.grades[self.members.index(member)]


def fuzzy_classes(cliques: Sequence[Sequence[int]],
                  graph: ToleranceGraph) -> list[FuzzyToleranceClass]:
    """Grade each clique member by its weakest edge within the clique."""
    out = []
    for clique in cliques:
        members = tuple(sorted(clique))
        if len(members) == 1:
            out.append(FuzzyToleranceClass(members, (1.0,)))
            continue
        grades = tuple(
            min(graph.grade(z, w) for w in members if w != z)
            for z in members)
        out.append(FuzzyToleranceClass(members, grades))
    return out

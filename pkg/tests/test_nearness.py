"""Tests for the three nearness measures and their shared weighted core."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzynear.errors import BudgetExceeded, DimensionMismatch
from fuzzynear.nearness import (
    MEASURES,
    NearnessScore,
    class_membership_rows,
    compute_score,
    fuzzy_cardinality,
    it2bfnm,
    tfnm,
    tnm,
    weakly_near,
)
from fuzzynear.perceptual import ObjectDescription
from fuzzynear.tolerance import ToleranceConfig

from oracles import (
    it2bfnm_reference,
    random_described_image,
    tfnm_reference,
    tnm_reference,
)

CFG = ToleranceConfig()


def desc(tag, index, vec, lower=None, upper=None):
    vec = tuple(float(v) for v in vec)
    lower = vec if lower is None else tuple(float(v) for v in lower)
    upper = vec if upper is None else tuple(float(v) for v in upper)
    return ObjectDescription(tag, index, 0, vec, lower, upper)


def image(tag, *vectors):
    return [desc(tag, i, v) for i, v in enumerate(vectors)]


class TestScoreObject:
    def test_measure_name_validated(self):
        with pytest.raises(ValueError):
            NearnessScore("cosine", 0.5)

    def test_value_range_validated(self):
        with pytest.raises(ValueError):
            NearnessScore("tnm", 1.5)
        with pytest.raises(ValueError):
            NearnessScore("tnm", -0.1)

    def test_distance_convention_marker(self):
        assert NearnessScore("tnm", 0.0).convention == "distance"

    def test_fuzzy_cardinality_crisp_recovers_count(self):
        assert fuzzy_cardinality([1.0, 1.0, 1.0]) == 3.0

    def test_fuzzy_cardinality_sums_grades(self):
        assert fuzzy_cardinality([1.0, 0.5, 0.25]) == 1.75

    def test_fuzzy_cardinality_rejects_bad_grade(self):
        with pytest.raises(ValueError):
            fuzzy_cardinality([0.5, 1.2])


class TestSingletonPairs:
    def test_identical_singletons_are_maximally_near(self):
        x = image("x", (0.25, 0.5))
        y = image("y", (0.25, 0.5))
        assert tnm(x, y, CFG).value == 0.0
        assert tfnm(x, y, CFG).value == 0.0
        assert it2bfnm(x, y, CFG).value == 0.0

    def test_far_singletons_are_maximally_far(self):
        x = image("x", (0.0,))
        y = image("y", (0.9,))
        assert tnm(x, y, CFG).value == 1.0
        assert tfnm(x, y, CFG).value == 1.0
        assert it2bfnm(x, y, CFG).value == 1.0

    def test_soft_band_pair_splits_the_measures(self):
        # d = 0.4 sits between the thresholds: no crisp edge, but the
        # support-graph clique is balanced, so the fuzzy measures see a match.
        x = image("x", (0.0,))
        y = image("y", (0.4,))
        assert tnm(x, y, CFG).value == 1.0
        assert tfnm(x, y, CFG).value == 0.0
        assert it2bfnm(x, y, CFG).value == 0.0

    def test_inclusive_inner_threshold(self):
        x = image("x", (0.0, 0.0))
        y = image("y", (0.3, 0.3))  # distance exactly 0.3 in float64
        assert tnm(x, y, CFG).value == 0.0

    def test_class_counts(self):
        near = tnm(image("x", (0.0,)), image("y", (0.1,)), CFG)
        far = tnm(image("x", (0.0,)), image("y", (0.9,)), CFG)
        assert near.class_count == 1
        assert far.class_count == 2


class TestHandComputedTriangle:
    """x1=0.0, x2=0.05 against y=0.4 (scalar descriptions).

    Crisp classes at 0.3: {x1,x2} and {y} — both one-sided, score 1.
    Support graph at 0.45 is a triangle; ramp grades give x1 -> 1/3,
    x2 -> 2/3, y -> 1/3, so a=1, b=1/3 and the score is 1 - 1/3 = 2/3.
    """

    X = image("x", (0.0,), (0.05,))
    Y = image("y", (0.4,))

    def test_crisp_sees_no_overlap(self):
        score = tnm(self.X, self.Y, CFG)
        assert score.value == 1.0
        assert score.class_count == 2

    def test_fuzzy_hand_value(self):
        score = tfnm(self.X, self.Y, CFG)
        assert score.value == pytest.approx(2.0 / 3.0, abs=1e-9)
        assert score.class_count == 1

    def test_membership_rows_match_hand_grades(self):
        rows, flag, reason = class_membership_rows(self.X, self.Y, CFG)
        assert not flag and reason is None
        assert len(rows) == 3
        grades = {object_id: mu for _, object_id, mu in rows}
        assert grades[("x", 0, 0)] == pytest.approx(1.0 / 3.0, abs=1e-9)
        assert grades[("x", 1, 0)] == pytest.approx(2.0 / 3.0, abs=1e-9)
        assert grades[("y", 0, 0)] == pytest.approx(1.0 / 3.0, abs=1e-9)
        assert {class_id for class_id, _, _ in rows} == {0}

    def test_oracle_agreement_on_this_example(self):
        assert tfnm(self.X, self.Y, CFG).value == pytest.approx(
            tfnm_reference([(0.0,), (0.05,)], [(0.4,)], 0.3, 0.45), abs=1e-12)


class TestDuplicateCollapse:
    def test_balanced_duplicates_stay_maximally_near(self):
        x = [desc("x", i, (0.5, 0.5)) for i in range(3)]
        y = [desc("y", i, (0.5, 0.5)) for i in range(3)]
        for measure in MEASURES:
            score = compute_score(measure, x, y, CFG)
            assert score.value == 0.0

    def test_imbalanced_duplicates_score_the_cardinality_ratio(self):
        # One class with side cardinalities 3 and 2: score = 1 - 2/3.
        x = [desc("x", i, (0.5, 0.5)) for i in range(3)]
        y = [desc("y", i, (0.5, 0.5)) for i in range(2)]
        for measure in MEASURES:
            score = compute_score(measure, x, y, CFG)
            assert score.value == pytest.approx(1.0 / 3.0, abs=1e-12)
            assert score.class_count == (2 if measure == "it2bfnm" else 1)

    def test_weighted_soft_pair_hand_value(self):
        # Two identical x objects against one y in the soft band: the single
        # support clique has a = 2g, b = g, so the score is 1 - 1/2.
        x = [desc("x", 0, (0.0,)), desc("x", 1, (0.0,))]
        y = [desc("y", 0, (0.4,))]
        assert tfnm(x, y, CFG).value == pytest.approx(0.5, abs=1e-12)

    def test_membership_rows_expand_duplicates(self):
        x = [desc("x", 0, (0.0,)), desc("x", 1, (0.0,))]
        y = [desc("y", 0, (0.4,))]
        rows, _, _ = class_membership_rows(x, y, CFG)
        ids = {object_id for _, object_id, _ in rows}
        assert ids == {("x", 0, 0), ("x", 1, 0), ("y", 0, 0)}

    def test_duplicate_heavy_systems_match_undeduplicated_oracle(self):
        rng = np.random.default_rng(7)
        palette = [0.0, 0.1, 0.2, 0.35, 0.5, 0.9]
        for _ in range(40):
            nx = int(rng.integers(1, 7))
            ny = int(rng.integers(1, 7))
            xv = [(float(rng.choice(palette)),) for _ in range(nx)]
            yv = [(float(rng.choice(palette)),) for _ in range(ny)]
            x = [desc("x", i, v) for i, v in enumerate(xv)]
            y = [desc("y", i, v) for i, v in enumerate(yv)]
            assert tnm(x, y, CFG).value == pytest.approx(
                tnm_reference(xv, yv, CFG.epsilon), abs=1e-12)
            assert tfnm(x, y, CFG).value == pytest.approx(
                tfnm_reference(xv, yv, CFG.epsilon, CFG.epsilon_prime),
                abs=1e-12)


class TestSelfScore:
    def test_every_measure_is_exactly_zero_against_itself(self):
        rng = np.random.default_rng(3)
        for trial in range(5):
            x = random_described_image(rng, "a", count=8, n_features=3,
                                       spread=0.2)
            y = [o.retag("b") for o in x]
            assert tnm(x, y, CFG).value == 0.0
            assert tfnm(x, y, CFG).value == 0.0
            score = it2bfnm(x, y, CFG)
            assert score.value == 0.0
            assert score.upper_value == 0.0 and score.lower_value == 0.0


class TestOracleAgreement:
    def test_random_systems_match_brute_force(self):
        rng = np.random.default_rng(11)
        for trial in range(30):
            nx = int(rng.integers(1, 7))
            ny = int(rng.integers(1, 7))
            dim = int(rng.integers(1, 4))
            x = random_described_image(rng, "x", nx, dim, spread=0.25)
            y = random_described_image(rng, "y", ny, dim, spread=0.25)
            xu = [o.fuzzy_upper for o in x]
            yu = [o.fuzzy_upper for o in y]
            xl = [o.fuzzy_lower for o in x]
            yl = [o.fuzzy_lower for o in y]
            assert tnm(x, y, CFG).value == pytest.approx(
                tnm_reference(xu, yu, CFG.epsilon), abs=1e-12)
            assert tfnm(x, y, CFG).value == pytest.approx(
                tfnm_reference(xu, yu, CFG.epsilon, CFG.epsilon_prime),
                abs=1e-12)
            expected, up, lo = it2bfnm_reference(
                xl, xu, yl, yu, CFG.epsilon, CFG.epsilon_prime)
            score = it2bfnm(x, y, CFG)
            assert score.value == pytest.approx(expected, abs=1e-12)
            assert score.upper_value == pytest.approx(up, abs=1e-12)
            assert score.lower_value == pytest.approx(lo, abs=1e-12)

    def test_lower_envelope_agreement(self):
        rng = np.random.default_rng(13)
        x = random_described_image(rng, "x", 5, 2, spread=0.3)
        y = random_described_image(rng, "y", 5, 2, spread=0.3)
        xl = [o.fuzzy_lower for o in x]
        yl = [o.fuzzy_lower for o in y]
        assert tfnm(x, y, CFG, envelope="lower").value == pytest.approx(
            tfnm_reference(xl, yl, CFG.epsilon, CFG.epsilon_prime), abs=1e-12)


class TestDegenerationChain:
    def test_fuzzy_collapses_to_crisp_without_soft_band_distances(self):
        # With epsilon_prime tightened below the smallest distance above
        # epsilon, the support graph equals the crisp graph and every grade
        # is 1, so all three measures agree exactly (descriptions type-1).
        rng = np.random.default_rng(23)
        for trial in range(25):
            nx = int(rng.integers(1, 7))
            ny = int(rng.integers(1, 7))
            dim = int(rng.integers(1, 4))
            x = random_described_image(rng, "x", nx, dim, spread=0.0)
            y = [o.retag("y") for o in
                 random_described_image(rng, "y", ny, dim, spread=0.0)]
            vectors = np.asarray([o.fuzzy_upper for o in x + y])
            diff = vectors[:, None, :] - vectors[None, :, :]
            d = np.sqrt(np.mean(diff * diff, axis=2))
            eps = 0.3
            above = d[d > eps]
            gap = float(above.min()) - eps if above.size else 1.0
            cfg = ToleranceConfig(epsilon=eps,
                                  epsilon_prime=eps + 0.5 * gap)
            a = tnm(x, y, cfg).value
            b = tfnm(x, y, cfg).value
            c = it2bfnm(x, y, cfg).value
            assert a == b == c


class TestSymmetryAndBounds:
    def test_symmetry_within_float_noise(self):
        rng = np.random.default_rng(31)
        for trial in range(15):
            x = random_described_image(rng, "x", int(rng.integers(1, 7)), 2,
                                       spread=0.2)
            y = random_described_image(rng, "y", int(rng.integers(1, 7)), 2,
                                       spread=0.2)
            for measure in MEASURES:
                fwd = compute_score(measure, x, y, CFG).value
                rev = compute_score(measure, y, x, CFG).value
                assert fwd == pytest.approx(rev, abs=1e-12)
                assert 0.0 <= fwd <= 1.0

    def test_interval_mean_and_ordering(self):
        rng = np.random.default_rng(37)
        for trial in range(10):
            x = random_described_image(rng, "x", 5, 2, spread=0.3)
            y = random_described_image(rng, "y", 5, 2, spread=0.3)
            score = it2bfnm(x, y, CFG)
            assert score.value == (score.upper_value + score.lower_value) / 2.0
            lo, hi = sorted([score.lower_value, score.upper_value])
            assert lo - 1e-15 <= score.value <= hi + 1e-15

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1,
                    max_size=5),
           st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1,
                    max_size=5))
    @settings(max_examples=30, deadline=None)
    def test_scalar_systems_stay_bounded_and_symmetric(self, xs, ys):
        x = [desc("x", i, (v,)) for i, v in enumerate(xs)]
        y = [desc("y", i, (v,)) for i, v in enumerate(ys)]
        fwd = tfnm(x, y, CFG).value
        rev = tfnm(y, x, CFG).value
        assert 0.0 <= fwd <= 1.0
        assert math.isclose(fwd, rev, abs_tol=1e-12)


class TestTypeOneCollapse:
    def test_equal_envelopes_make_interval_degenerate(self):
        rng = np.random.default_rng(41)
        x = random_described_image(rng, "x", 6, 2, spread=0.0)
        y = random_described_image(rng, "y", 6, 2, spread=0.0)
        score = it2bfnm(x, y, CFG)
        assert score.upper_value == score.lower_value == score.value
        assert score.value == tfnm(x, y, CFG).value

    def test_envelope_selection_changes_the_score(self):
        x = [ObjectDescription("x", 0, 0, (0.25,), (0.0,), (0.5,))]
        y = [ObjectDescription("y", 0, 0, (0.7,), (0.9,), (0.9,))]
        # upper envelopes sit 0.4 apart (soft band), lower 0.9 apart (far)
        assert tfnm(x, y, CFG, envelope="upper").value == 0.0
        assert tfnm(x, y, CFG, envelope="lower").value == 1.0
        assert it2bfnm(x, y, CFG).value == 0.5


class TestBudgets:
    X = image("x", (0.0,), (0.05,))
    Y = image("y", (0.9,))

    def test_partial_enumeration_is_flagged(self):
        cfg = ToleranceConfig(max_cliques=1)
        score = tnm(self.X, self.Y, cfg)
        assert score.budget_exceeded is True
        assert score.budget_reason == "cliques"
        assert score.class_count == 1
        assert 0.0 <= score.value <= 1.0

    def test_small_systems_stay_unflagged(self):
        score = tnm(self.X, self.Y, CFG)
        assert score.budget_exceeded is False
        assert score.budget_reason is None

    def test_empty_partial_propagates(self):
        cfg = ToleranceConfig(max_seconds=0.0)
        with pytest.raises(BudgetExceeded):
            tnm(image("x", (0.5,)), image("y", (0.5,)), cfg)

    def test_interval_measure_carries_the_flag(self):
        cfg = ToleranceConfig(max_cliques=1)
        score = it2bfnm(self.X, self.Y, cfg)
        assert score.budget_exceeded is True
        assert score.budget_reason == "cliques"


class TestWeaklyNear:
    def test_identical_pair(self):
        assert weakly_near(image("x", (0.2,)), image("y", (0.2,)), CFG)

    def test_far_pair(self):
        assert not weakly_near(image("x", (0.0,)), image("y", (0.9,)), CFG)

    def test_inclusive_boundary(self):
        x = image("x", (0.0, 0.0))
        y = image("y", (0.3, 0.3))
        assert weakly_near(x, y, CFG)

    def test_one_near_object_suffices(self):
        x = image("x", (0.0,), (0.95,))
        y = image("y", (0.9,))
        assert weakly_near(x, y, CFG)

    def test_within_side_proximity_does_not_count(self):
        x = image("x", (0.0,), (0.01,))
        y = image("y", (0.9,), (0.91,))
        assert not weakly_near(x, y, CFG)


class TestValidation:
    def test_empty_side_rejected(self):
        with pytest.raises(ValueError):
            tnm([], image("y", (0.5,)), CFG)
        with pytest.raises(ValueError):
            tfnm(image("x", (0.5,)), [], CFG)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            tnm(image("x", (0.5, 0.5)), image("y", (0.5,)), CFG)

    def test_compute_score_dispatch(self):
        x = image("x", (0.1,))
        y = image("y", (0.2,))
        for measure in MEASURES:
            assert compute_score(measure, x, y, CFG).measure == measure
        with pytest.raises(ValueError):
            compute_score("euclidean", x, y, CFG)

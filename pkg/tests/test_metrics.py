"""Metrics tests against straight-line oracle re-implementations.

The oracles below use plain Python loops and no shared helpers from the
module under test, so an indexing or masking bug in the vectorized code
cannot hide. Expected values for the hand examples were worked out by
hand from the confusion matrices.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isoform.classifier import ClassPrediction
from isoform.metrics import (
    EmptyEvalSet,
    EvalSet,
    f_beta,
    summary,
    three_part,
    weighted_f1,
)


def oracle_f_beta(precision, recall, beta):
    b2 = beta * beta
    if b2 * precision + recall == 0.0:
        return 0.0
    return (1.0 + b2) * precision * recall / (b2 * precision + recall)


def oracle_weighted_f1(truths, preds, classes):
    total = sum(1 for t in truths if t in classes)
    score = 0.0
    for c in classes:
        support = sum(1 for t in truths if t == c)
        if support == 0:
            continue
        tp = sum(1 for t, p in zip(truths, preds) if t == c and p == c)
        fp = sum(1 for t, p in zip(truths, preds) if t != c and p == c)
        fn = sum(1 for t, p in zip(truths, preds) if t == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        score += (support / total) * oracle_f_beta(precision, recall, 1.0)
    return score


def oracle_three_part(truths, probs, tau, beta):
    """Literal per-example walk of the three-part metric definition."""
    n = len(truths)
    preds = [row.index(max(row)) for row in probs]

    pool = [i for i in range(n) if truths[i] == 0 or preds[i] == 0]
    tp = sum(1 for i in pool if truths[i] == 0 and preds[i] == 0)
    fp = sum(1 for i in pool if truths[i] != 0 and preds[i] == 0)
    fn = sum(1 for i in pool if truths[i] == 0 and preds[i] != 0)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    m1 = oracle_f_beta(precision, recall, beta)

    m2_set, m3_set, mistaken_correct = [], [], []
    for i in range(n):
        if truths[i] == 0:
            continue
        if preds[i] == 0:
            mistaken_correct.append(i)
        elif max(probs[i][1], probs[i][2]) >= tau:
            m2_set.append(i)
        else:
            m3_set.append(i)

    if m2_set:
        m2 = oracle_weighted_f1(
            [truths[i] for i in m2_set], [preds[i] for i in m2_set], (1, 2)
        )
    else:
        m2 = None
    incorrect = sum(1 for t in truths if t != 0)
    m3 = 100.0 * len(m3_set) / incorrect if incorrect else 0.0
    return m1, m2, m3, m2_set, m3_set, mistaken_correct


def one_hot(index, high=0.8):
    row = [(1.0 - high) / 2.0] * 3
    row[index] = high
    return row


def random_eval_set(rng, with_ties=False):
    n = int(rng.integers(1, 40))
    truths = rng.integers(0, 3, size=n)
    if rng.random() < 0.1:
        truths = np.zeros(n, dtype=int)
    probs = rng.dirichlet((1.0, 1.0, 1.0), size=n)
    tau = float(rng.choice([0.3, 0.5, 0.7]))
    if with_ties and rng.random() < 0.5:
        tie_row = np.array([1.0 - tau - 0.1, tau, 0.1])
        probs = np.vstack([probs, tie_row])
        truths = np.append(truths, 1)
    return EvalSet(truths=truths, probs=probs, tau=tau)


class TestWeightedF1:
    def test_perfect_predictions_give_one(self):
        truths = np.array([0, 1, 2, 0, 1, 2])
        probs = np.array([one_hot(t) for t in truths])
        assert weighted_f1(EvalSet(truths=truths, probs=probs)) == 1.0

    def test_hand_confusion_matrix_example(self):
        # truths [0,0,1,2] vs argmaxes [0,1,1,2]: class 0 has P=1, R=1/2;
        # class 1 has P=1/2, R=1; class 2 is perfect. Support weights
        # (2,1,1)/4 give 0.5*(2/3) + 0.25*(2/3) + 0.25*1 = 0.75.
        truths = np.array([0, 0, 1, 2])
        probs = np.array([one_hot(c) for c in (0, 1, 1, 2)])
        assert weighted_f1(EvalSet(truths=truths, probs=probs)) == pytest.approx(
            0.75, abs=1e-12
        )

    def test_single_class_predictions_match_oracle(self):
        truths = np.array([0, 0, 1, 1, 2, 2])
        probs = np.array([one_hot(1)] * 6)
        got = weighted_f1(EvalSet(truths=truths, probs=probs))
        assert got == oracle_weighted_f1(list(truths), [1] * 6, (0, 1, 2))

    def test_matches_oracle_on_random_sets(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            es = random_eval_set(rng)
            preds = [row.index(max(row)) for row in es.probs.tolist()]
            assert weighted_f1(es) == oracle_weighted_f1(
                list(es.truths), preds, (0, 1, 2)
            )

    def test_stays_in_unit_interval_and_one_only_when_perfect(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            es = random_eval_set(rng)
            score = weighted_f1(es)
            assert 0.0 <= score <= 1.0
            if score == 1.0:
                assert np.array_equal(es.predictions, es.truths)
            if np.array_equal(es.predictions, es.truths):
                assert score == 1.0


class TestFBeta:
    def test_collapses_to_f1_at_beta_one(self):
        assert f_beta(0.8, 0.8, 1.0) == pytest.approx(0.8, abs=1e-12)

    def test_zero_recall_gives_zero(self):
        assert f_beta(1.0, 0.0, 1.0) == 0.0

    def test_zero_denominator_gives_zero(self):
        assert f_beta(0.0, 0.0, 1.0) == 0.0
        assert f_beta(0.0, 0.0, 0.5) == 0.0

    def test_matches_direct_formula_for_low_beta(self):
        p, r, beta = 0.9, 0.6, 0.5
        expected = (1.0 + 0.25) * p * r / (0.25 * p + 0.6)
        assert f_beta(p, r, beta) == expected

    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
    )
    def test_beta_one_is_harmonic_mean_exactly(self, p, r):
        if p + r == 0.0:
            assert f_beta(p, r, 1.0) == 0.0
        else:
            assert f_beta(p, r, 1.0) == 2.0 * p * r / (p + r)

    @given(
        st.floats(min_value=0.01, max_value=1.0),
        st.floats(min_value=0.01, max_value=1.0),
        st.floats(min_value=0.1, max_value=10.0),
    )
    def test_stays_between_min_and_max_of_inputs(self, p, r, beta):
        score = f_beta(p, r, beta)
        assert min(p, r) - 1e-12 <= score <= max(p, r) + 1e-12


class TestThreePart:
    def test_perfect_classifier_edge_case(self):
        truths = np.zeros(5, dtype=int)
        probs = np.array([[1.0, 0.0, 0.0]] * 5)
        report = three_part(EvalSet(truths=truths, probs=probs))
        assert report.m1 == 1.0
        assert report.m2 is None
        assert report.m3_percent == 0.0
        assert report.m2_indices == ()
        assert report.m3_indices == ()
        assert report.mistaken_as_correct_indices == ()

    def test_hand_traced_partition_example(self):
        # Four correct truths predicted correctly, then four incorrect
        # truths: two confident and right about mistake 1, one uncertain
        # (max mistake prob 0.45), one mistaken for correct form.
        truths = np.array([0, 0, 0, 0, 1, 1, 2, 2])
        probs = np.array(
            [
                [0.8, 0.1, 0.1],
                [0.8, 0.1, 0.1],
                [0.8, 0.1, 0.1],
                [0.8, 0.1, 0.1],
                [0.05, 0.90, 0.05],
                [0.05, 0.90, 0.05],
                [0.12, 0.43, 0.45],
                [0.60, 0.20, 0.20],
            ]
        )
        report = three_part(EvalSet(truths=truths, probs=probs))
        assert report.m2_indices == (4, 5)
        assert report.m2 == 1.0
        assert report.m3_indices == (6,)
        assert report.m3_percent == 25.0
        assert report.mistaken_as_correct_indices == (7,)
        # M1 pool: the four true positives plus one false positive.
        assert report.m1 == pytest.approx(8.0 / 9.0, abs=1e-12)

    def test_empty_m2_is_none_not_zero(self):
        # All mistakes predicted without confidence: M2 must be the
        # undefined marker even though a zero would also be "empty-ish".
        truths = np.array([1, 2])
        probs = np.array([[0.2, 0.45, 0.35], [0.2, 0.35, 0.45]])
        report = three_part(EvalSet(truths=truths, probs=probs))
        assert report.m2 is None
        assert report.m3_percent == 100.0

    def test_confident_but_wrong_mistake_gives_zero_m2(self):
        # Confident predictions exist but name the wrong mistake, so M2
        # is a genuine 0.0, distinct from the undefined None above.
        truths = np.array([1, 2])
        probs = np.array([[0.05, 0.05, 0.90], [0.05, 0.90, 0.05]])
        report = three_part(EvalSet(truths=truths, probs=probs))
        assert report.m2 == 0.0
        assert report.m2 is not None

    def test_tie_at_tau_counts_as_confident(self):
        truths = np.array([1])
        probs = np.array([[0.4, 0.5, 0.1]])
        report = three_part(EvalSet(truths=truths, probs=probs, tau=0.5))
        assert report.m2_indices == (0,)
        assert report.m3_indices == ()

    def test_matches_oracle_on_random_sets(self):
        rng = np.random.default_rng(21)
        for _ in range(500):
            es = random_eval_set(rng, with_ties=True)
            report = three_part(es)
            m1, m2, m3, m2_set, m3_set, mac = oracle_three_part(
                list(es.truths), es.probs.tolist(), es.tau, es.beta
            )
            assert report.m1 == m1
            assert report.m2 == m2
            assert report.m3_percent == m3
            assert report.m2_indices == tuple(m2_set)
            assert report.m3_indices == tuple(m3_set)
            assert report.mistaken_as_correct_indices == tuple(mac)

    def test_partition_identity_on_random_sets(self):
        rng = np.random.default_rng(22)
        for _ in range(300):
            es = random_eval_set(rng, with_ties=True)
            report = three_part(es)
            parts = (
                set(report.m2_indices),
                set(report.m3_indices),
                set(report.mistaken_as_correct_indices),
            )
            union = parts[0] | parts[1] | parts[2]
            assert len(union) == sum(len(p) for p in parts)
            assert union == {int(i) for i in np.flatnonzero(es.truths != 0)}

    def test_m1_filter_equals_full_set_binary_f1(self):
        rng = np.random.default_rng(23)
        for _ in range(300):
            es = random_eval_set(rng)
            preds = es.predictions
            tp = int(((es.truths == 0) & (preds == 0)).sum())
            fp = int(((es.truths != 0) & (preds == 0)).sum())
            fn = int(((es.truths == 0) & (preds != 0)).sum())
            precision = tp / (tp + fp) if tp + fp else 0.0
            recall = tp / (tp + fn) if tp + fn else 0.0
            assert three_part(es).m1 == f_beta(precision, recall, es.beta)

    def test_m3_never_decreases_as_tau_rises(self):
        rng = np.random.default_rng(24)
        truths = rng.integers(0, 3, size=60)
        probs = rng.dirichlet((1.0, 1.0, 1.0), size=60)
        last = -1.0
        for tau in np.linspace(0.0, 1.0, 21):
            m3 = three_part(EvalSet(truths=truths, probs=probs, tau=float(tau))).m3_percent
            assert m3 >= last
            last = m3

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_oracle_agreement_property(self, seed):
        rng = np.random.default_rng(seed)
        es = random_eval_set(rng, with_ties=True)
        report = three_part(es)
        m1, m2, m3, *_ = oracle_three_part(
            list(es.truths), es.probs.tolist(), es.tau, es.beta
        )
        assert (report.m1, report.m2, report.m3_percent) == (m1, m2, m3)


class TestEvalSetValidation:
    def test_empty_set_raises(self):
        with pytest.raises(EmptyEvalSet):
            EvalSet(truths=np.array([], dtype=int), probs=np.zeros((0, 3)))

    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            EvalSet(truths=np.array([0]), probs=np.array([[0.5, 0.2, 0.2]]))

    def test_probs_shape_checked(self):
        with pytest.raises(ValueError, match=r"\(n, 3\)"):
            EvalSet(truths=np.array([0]), probs=np.array([[0.5, 0.5]]))

    def test_truth_indices_checked(self):
        with pytest.raises(ValueError, match="class indices"):
            EvalSet(truths=np.array([3]), probs=np.array([[1.0, 0.0, 0.0]]))

    def test_tau_and_beta_ranges_checked(self):
        probs = np.array([[1.0, 0.0, 0.0]])
        with pytest.raises(ValueError, match="tau"):
            EvalSet(truths=np.array([0]), probs=probs, tau=1.5)
        with pytest.raises(ValueError, match="beta"):
            EvalSet(truths=np.array([0]), probs=probs, beta=0.0)

    def test_from_pairs_round_trip(self):
        pairs = [
            (0, ClassPrediction(probs=np.array([0.7, 0.2, 0.1]))),
            (1, ClassPrediction(probs=np.array([0.1, 0.8, 0.1]))),
        ]
        es = EvalSet.from_pairs(pairs, tau=0.6)
        assert list(es.truths) == [0, 1]
        assert es.tau == 0.6
        assert np.allclose(es.probs[1], [0.1, 0.8, 0.1])


class TestSummary:
    def test_summary_keys_and_counts(self):
        truths = np.array([0, 0, 1, 2])
        probs = np.array(
            [
                [0.8, 0.1, 0.1],
                [0.60, 0.20, 0.20],
                [0.05, 0.90, 0.05],
                [0.12, 0.43, 0.45],
            ]
        )
        out = summary(EvalSet(truths=truths, probs=probs))
        assert set(out) == {"multiclass_f1", "m1", "m2", "m3_percent", "counts"}
        assert out["counts"] == {
            "examples": 4,
            "truth_incorrect": 2,
            "confident_mistakes": 1,
            "uncertain_mistakes": 1,
            "mistaken_as_correct": 0,
        }
        assert out["m2"] == 1.0
        assert out["m3_percent"] == 50.0

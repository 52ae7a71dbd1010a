import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from covelm.elm import CLASSES
from covelm.errors import DegenerateCurve, InvalidInput
from covelm.metrics import (
    ConfusionMatrix,
    class_report,
    confusion,
    mann_whitney_auc,
    mean_ci,
    roc_one_vs_rest,
    sensitivity_ci,
)


def covid_row_matrix():
    # only the COVID row is reported in the text: 364 correct, 3 -> normal, 13 -> pneumonia
    return ConfusionMatrix(np.array([[364, 3, 13], [0, 1, 0], [0, 0, 1]]), CLASSES)


class TestConfusion:
    def test_counts(self):
        cm = confusion(["covid", "covid", "normal"], ["covid", "pneumonia", "normal"], CLASSES)
        np.testing.assert_array_equal(cm.counts, [[1, 0, 1], [0, 1, 0], [0, 0, 0]])
        assert cm.total == 3

    def test_covid_row_recall(self):
        truth = ["covid"] * 380
        pred = ["covid"] * 364 + ["normal"] * 3 + ["pneumonia"] * 13
        cm = confusion(truth, pred, CLASSES)
        np.testing.assert_array_equal(cm.counts[0], [364, 3, 13])
        assert class_report(cm).recall[0] == pytest.approx(364 / 380)

    def test_perfect(self):
        y = ["covid", "normal", "pneumonia"] * 4
        cm = confusion(y, y, CLASSES)
        assert np.count_nonzero(cm.counts - np.diag(np.diag(cm.counts))) == 0
        assert class_report(cm).accuracy == 1.0

    def test_constant_predictor(self):
        y = ["covid", "normal", "pneumonia"] * 5
        cm = confusion(y, ["covid"] * 15, CLASSES)
        assert cm.counts[:, 0].sum() == 15 and cm.counts[:, 1:].sum() == 0
        assert class_report(cm).accuracy == pytest.approx(1 / 3)

    def test_unknown_label(self):
        with pytest.raises(InvalidInput):
            confusion(["covid"], ["covd"], CLASSES)

    def test_length_mismatch(self):
        with pytest.raises(InvalidInput):
            confusion(["covid"], [], CLASSES)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from(CLASSES), st.sampled_from(CLASSES)), min_size=1, max_size=60),
           st.randoms())
    def test_total_preserved_under_permutation(self, pairs, rnd):
        shuffled = list(pairs)
        rnd.shuffle(shuffled)
        a = confusion(*zip(*pairs), CLASSES)
        b = confusion(*zip(*shuffled), CLASSES)
        np.testing.assert_array_equal(a.counts, b.counts)
        assert a.total == len(pairs)
        acc = sum(t == p for t, p in pairs) / len(pairs)
        assert class_report(a).accuracy == pytest.approx(acc)


class TestClassReport:
    def test_covid_recall_from_confusion_row(self):
        rep = class_report(covid_row_matrix())
        assert abs(rep.recall[0] - 0.9579) <= 1e-4
        assert round(100 * rep.recall[0], 2) == 95.79  # 95.789..., printed as 95.78 by truncation

    def test_hand_case(self):
        rep = class_report(ConfusionMatrix(np.array([[5, 5], [0, 10]]), ("a", "b")))
        assert rep.recall[0] == 0.5 and rep.precision[0] == 1.0
        assert rep.f1[0] == pytest.approx(2 / 3)
        assert rep.precision[1] == pytest.approx(10 / 15) and rep.recall[1] == 1.0
        assert rep.accuracy == 0.75

    def test_zero_division(self):
        rep = class_report(ConfusionMatrix(np.array([[3, 0], [2, 0]]), ("a", "b")))
        assert rep.precision[1] == 0 and rep.recall[1] == 0 and rep.f1[1] == 0
        assert rep.macro_f1 == pytest.approx(rep.f1[0] / 2)

    def test_empty(self):
        with pytest.raises(InvalidInput):
            class_report(ConfusionMatrix(np.zeros((3, 3), dtype=int), CLASSES))

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(0, 30), min_size=9, max_size=9).filter(lambda v: sum(v) > 0), st.permutations(range(3)))
    def test_macro_f1_permutation_invariant(self, counts, perm):
        M = np.array(counts).reshape(3, 3)
        P = M[np.ix_(perm, perm)]
        a = class_report(ConfusionMatrix(M, CLASSES))
        b = class_report(ConfusionMatrix(P, tuple(CLASSES[i] for i in perm)))
        assert a.macro_f1 == pytest.approx(b.macro_f1, abs=1e-12)
        for arr in (a.precision, a.recall, a.f1):
            assert np.all((arr >= 0) & (arr <= 1))


class TestRoc:
    def test_perfect_separation(self):
        curve = roc_one_vs_rest([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1], 1)
        assert curve.auc == 1.0

    def test_constant_scores(self):
        curve = roc_one_vs_rest([1, 0, 1, 0, 0], [0.3] * 5, 1)
        assert curve.auc == 0.5
        assert curve.points == [(0.0, 0.0), (1.0, 1.0)]

    def test_single_inversion_hand_case(self):
        y = [1, 1, 1, 0, 0, 0]
        s = [0.9, 0.8, 0.4, 0.5, 0.3, 0.2]
        # 9 pairs, one inverted (0.4 < 0.5)
        assert roc_one_vs_rest(y, s, 1).auc == pytest.approx(8 / 9, abs=1e-15)
        assert oracles.mann_whitney(y, s) == pytest.approx(8 / 9)

    def test_monotone_endpoints(self, rng):
        y = rng.integers(0, 2, 40)
        c = roc_one_vs_rest(y, rng.random(40), 1)
        assert c.points[0] == (0.0, 0.0) and c.points[-1] == (1.0, 1.0)
        assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)

    def test_matrix_scores(self):
        scores = np.array([[0.9, 0.1, 0.0], [0.2, 0.7, 0.1], [0.1, 0.1, 0.8]])
        c = roc_one_vs_rest(CLASSES, scores, "normal", CLASSES)
        assert c.auc == 1.0

    def test_degenerate(self):
        with pytest.raises(DegenerateCurve):
            roc_one_vs_rest([0, 0, 0], [0.1, 0.2, 0.3], 1)
        with pytest.raises(DegenerateCurve):
            roc_one_vs_rest([1, 1], [0.1, 0.2], 1)

    def test_nonfinite(self):
        with pytest.raises(InvalidInput):
            roc_one_vs_rest([0, 1], [0.1, np.inf], 1)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(2, 50), st.integers(0, 2**32 - 1), st.booleans())
    def test_auc_equals_pair_counting(self, n, seed, coarse):
        rng = np.random.default_rng(seed)
        y = rng.integers(0, 2, n)
        y[0], y[1] = 0, 1
        s = rng.integers(0, 5, n).astype(float) if coarse else rng.random(n)
        auc = roc_one_vs_rest(y, s, 1).auc
        assert abs(auc - oracles.mann_whitney(y, s)) <= 1e-10
        assert abs(auc - mann_whitney_auc(y, s, 1)) <= 1e-10


class TestSensitivityCi:
    def test_identical_folds(self):
        ci = sensitivity_ci([[0.9, 0.8]] * 10, ("a", "b"))
        assert ci["per_class"]["a"].mean == pytest.approx(0.9) and ci["per_class"]["a"].half_width == 0.0

    def test_two_folds(self):
        iv = mean_ci([0.9, 1.0])
        assert iv.mean == pytest.approx(0.95)
        assert iv.half_width == pytest.approx(1.96 * np.std([0.9, 1.0], ddof=1) / np.sqrt(2))
        assert iv.half_width == pytest.approx(0.098, abs=5e-4)

    def test_text_format(self):
        assert str(mean_ci([0.92, 1.0, 0.96, 0.96])) == "0.96 ± 0.03"

    def test_overall_is_over_macro_recall(self):
        R = np.array([[0.9, 1.0, 0.8], [1.0, 0.9, 0.9], [0.95, 0.95, 0.85]])
        ci = sensitivity_ci(R, CLASSES)
        assert ci["overall"].mean == pytest.approx(R.mean())
        assert ci["overall"].half_width == pytest.approx(1.96 * R.mean(axis=1).std(ddof=1) / np.sqrt(3))

    def test_needs_two_folds(self):
        with pytest.raises(InvalidInput):
            sensitivity_ci([[0.9, 0.9, 0.9]], CLASSES)

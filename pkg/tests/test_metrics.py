import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from landcover.errors import (
    EmptyMatrix,
    ExtentMismatch,
    PredictionContainsUnknown,
)
from landcover.metrics import (
    ConfusionMatrix,
    average_accuracy,
    confusion,
    kappa,
    overall_accuracy,
    per_class_recall,
    report,
)
from landcover.raster import LabelMask


def cm(counts):
    return ConfusionMatrix(np.array(counts, dtype=np.int64))


def mask(labels, c=5):
    return LabelMask(np.array(labels, dtype=np.int32), c)


class TestConfusion:
    def test_perfect_prediction_diagonal(self, rng):
        labels = rng.integers(1, 6, (10, 10), dtype=np.int32)
        out = confusion(mask(labels), mask(labels))
        assert np.trace(out.counts) == 100
        assert out.counts.sum() - np.trace(out.counts) == 0

    def test_all_unknown_truth(self):
        out = confusion(mask([[1, 2]]), mask([[0, 0]]))
        assert out.total == 0

    def test_hand_tally(self):
        out = confusion(mask([[1, 2, 2, 2]], c=2), mask([[1, 1, 2, 2]], c=2))
        np.testing.assert_array_equal(out.counts, [[1, 1], [0, 2]])

    def test_extent_mismatch(self):
        with pytest.raises(ExtentMismatch):
            confusion(mask([[1]]), mask([[1, 2]]))

    def test_prediction_unknown_rejected(self):
        with pytest.raises(PredictionContainsUnknown):
            confusion(mask([[0, 1]]), mask([[1, 1]]))

    def test_unknown_pred_on_ignored_pixel_ok(self):
        out = confusion(mask([[0, 1]]), mask([[0, 1]]))
        assert out.total == 1


class TestOverallAccuracy:
    def test_diagonal(self):
        assert overall_accuracy(cm([[3, 0], [0, 7]])) == 1.0

    def test_hand_matrix(self):
        assert overall_accuracy(cm([[1, 1], [0, 2]])) == 0.75

    def test_all_off_diagonal(self):
        assert overall_accuracy(cm([[0, 4], [6, 0]])) == 0.0

    def test_empty(self):
        with pytest.raises(EmptyMatrix):
            overall_accuracy(cm([[0, 0], [0, 0]]))


class TestAverageAccuracy:
    def test_hand_matrix(self):
        assert average_accuracy(cm([[40, 10], [20, 30]])) == pytest.approx(0.7)

    def test_diagonal(self):
        assert average_accuracy(cm([[3, 0], [0, 9]])) == 1.0

    def test_absent_class_excluded(self):
        assert average_accuracy(cm([[8, 2], [0, 0]])) == pytest.approx(0.8)


class TestKappa:
    def test_perfect_agreement(self):
        assert kappa(cm([[50, 0], [0, 50]])) == 1.0

    def test_chance_level(self):
        assert kappa(cm([[25, 25], [25, 25]])) == 0.0

    def test_hand_matrix(self):
        assert kappa(cm([[40, 10], [20, 30]])) == pytest.approx(0.4, abs=1e-12)

    def test_degenerate_pe_one(self):
        assert kappa(cm([[5, 0], [0, 0]])) == 1.0
        assert kappa(cm([[0, 5], [0, 0]])) == 0.0

    @given(st.lists(st.lists(st.integers(0, 50), min_size=3, max_size=3),
                    min_size=3, max_size=3))
    def test_bounds(self, counts):
        m = cm(counts)
        if m.total == 0:
            return
        assert -1.0 - 1e-12 <= kappa(m) <= 1.0 + 1e-12

    def test_kappa_one_iff_diagonal(self, rng):
        diag = np.diag(rng.integers(1, 50, 4))
        assert kappa(ConfusionMatrix(diag)) == 1.0
        off = diag.copy()
        off[0, 1] = 3
        assert kappa(ConfusionMatrix(off)) < 1.0


@st.composite
def matrices(draw):
    counts = draw(st.lists(st.lists(st.integers(0, 30), min_size=4, max_size=4),
                           min_size=4, max_size=4))
    m = np.array(counts, dtype=np.int64)
    if m.sum() == 0 or (m.sum(axis=1) == 0).any():
        m = m + 1  # keep every class present so AA is permutation-stable
    return m


class TestScoreProperties:
    @given(matrices(), st.permutations(range(4)))
    def test_class_permutation_invariance(self, m, perm):
        perm = list(perm)
        a = ConfusionMatrix(m)
        b = ConfusionMatrix(m[np.ix_(perm, perm)])
        assert overall_accuracy(a) == pytest.approx(overall_accuracy(b))
        assert average_accuracy(a) == pytest.approx(average_accuracy(b))
        assert kappa(a) == pytest.approx(kappa(b))

    @given(matrices(), st.integers(2, 9))
    def test_count_scaling_invariance(self, m, factor):
        a = ConfusionMatrix(m)
        b = ConfusionMatrix(m * factor)
        assert overall_accuracy(a) == pytest.approx(overall_accuracy(b))
        assert average_accuracy(a) == pytest.approx(average_accuracy(b))
        assert kappa(a) == pytest.approx(kappa(b))


class TestReport:
    def test_fields(self):
        rep = report(cm([[40, 10], [20, 30]]))
        assert rep["oa"] == pytest.approx(0.7)
        assert rep["aa"] == pytest.approx(0.7)
        assert rep["kappa"] == pytest.approx(0.4)
        assert rep["per_class_recall"] == [pytest.approx(0.8), pytest.approx(0.6)]
        assert rep["confusion"] == [[40, 10], [20, 30]]

    def test_absent_class_recall_is_null(self):
        rep = report(cm([[5, 0], [0, 0]]))
        assert rep["per_class_recall"][1] is None

    def test_recall_definition(self):
        rec = per_class_recall(cm([[40, 10], [20, 30]]))
        np.testing.assert_allclose(rec, [0.8, 0.6])

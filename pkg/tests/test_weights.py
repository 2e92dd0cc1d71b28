import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsfusion import weights
from dsfusion.metrics import ConfusionMatrix
from dsfusion.weights import WeightScheme, WeightVector, build_weight, dempster_weight_combine


def combine_oracle(a, b):
    """Two-hypothesis Dempster fusion of positive vectors by hand.

    Normalize each vector, multiply matching components, renormalize.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    pa = a / a.sum()
    pb = b / b.sum()
    joint = pa * pb
    return joint / joint.sum()


positive_pairs = st.tuples(
    st.floats(min_value=1e-3, max_value=1.0),
    st.floats(min_value=1e-3, max_value=1.0),
)


class TestDempsterWeightCombine:
    def test_symmetric_inputs_stay_symmetric(self):
        out = dempster_weight_combine(WeightVector([1, 1]), WeightVector([1, 1]))
        np.testing.assert_allclose(out.values, [0.5, 0.5], atol=1e-15)

    def test_uniform_input_is_neutral(self):
        out = dempster_weight_combine(WeightVector([0.9, 0.9]), WeightVector([0.8, 0.95]))
        expected = combine_oracle([0.9, 0.9], [0.8, 0.95])
        np.testing.assert_allclose(out.values, expected, atol=1e-12)
        np.testing.assert_allclose(out.values, [0.4571, 0.5429], atol=1e-4)

    def test_agreement_sharpens(self):
        out = dempster_weight_combine(WeightVector([1, 0.0001]), WeightVector([1, 0.0001]))
        expected = combine_oracle([1, 0.0001], [1, 0.0001])
        np.testing.assert_allclose(out.values, expected, atol=1e-12)
        assert out.values[0] > 0.99999999

    @given(positive_pairs, positive_pairs)
    @settings(max_examples=400, deadline=None)
    def test_algebraic_properties(self, a, b):
        wa, wb = WeightVector(a), WeightVector(b)
        ab = dempster_weight_combine(wa, wb).values
        ba = dempster_weight_combine(wb, wa).values
        assert abs(ab.sum() - 1.0) <= 1e-12
        assert np.all(ab > 0)
        np.testing.assert_allclose(ab, ba, atol=1e-12)
        np.testing.assert_allclose(ab, combine_oracle(a, b), atol=1e-12)
        # a uniform partner only normalizes the other side
        neutral = dempster_weight_combine(WeightVector([0.7, 0.7]), wb).values
        np.testing.assert_allclose(neutral, np.array(b) / sum(b), atol=1e-12)

    @given(
        st.tuples(st.floats(min_value=0.5, max_value=1.0), st.floats(min_value=1e-3, max_value=0.49)),
        st.tuples(st.floats(min_value=0.5, max_value=1.0), st.floats(min_value=1e-3, max_value=0.49)),
    )
    @settings(max_examples=200, deadline=None)
    def test_agreeing_vectors_sharpen_the_leader(self, a, b):
        fused = dempster_weight_combine(WeightVector(a), WeightVector(b)).values
        assert fused[0] > a[0] / sum(a)
        assert fused[0] > b[0] / sum(b)


class TestBuildWeight:
    cm = ConfusionMatrix(tp=40, fp=10, fn=5, tn=45)

    def test_unweighted_scheme(self):
        out = build_weight(self.cm, WeightScheme.W0)
        np.testing.assert_array_equal(out.values, [1.0, 1.0])

    def test_overall_accuracy_scheme(self):
        out = build_weight(self.cm, WeightScheme.W1)
        np.testing.assert_allclose(out.values, [0.85, 0.85], atol=1e-12)

    def test_class_accuracy_scheme(self):
        out = build_weight(self.cm, WeightScheme.W2)
        np.testing.assert_allclose(out.values, [0.8889, 0.8182], atol=1e-4)

    def test_predictive_value_scheme(self):
        out = build_weight(self.cm, WeightScheme.W3)
        np.testing.assert_allclose(out.values, [0.8, 0.9], atol=1e-12)

    def test_fused_schemes_match_oracle(self):
        w4 = build_weight(self.cm, WeightScheme.W4)
        np.testing.assert_allclose(w4.values, combine_oracle([40 / 45, 45 / 55], [0.8, 0.9]), atol=1e-12)
        w5 = build_weight(self.cm, WeightScheme.W5)
        np.testing.assert_allclose(w5.values, combine_oracle([0.85, 0.85], [40 / 45, 45 / 55]), atol=1e-12)

    def test_accuracy_and_class_accuracy_fusion_example(self):
        # Acc 0.9 twice fused with [Sns 0.8, Spc 0.95]
        out = dempster_weight_combine(WeightVector([0.9, 0.9]), WeightVector([0.8, 0.95]))
        np.testing.assert_allclose(out.values, [0.4571, 0.5429], atol=1e-4)

    def test_undefined_rate_falls_back_to_neutral(self):
        cm = ConfusionMatrix(tp=0, fp=3, fn=0, tn=2)  # no positive samples
        out = build_weight(cm, WeightScheme.W2)
        assert out.values[0] == 1.0
        assert out.values[1] == pytest.approx(2 / 5)

    def test_zero_rate_is_floored_positive(self):
        cm = ConfusionMatrix(tp=0, fp=2, fn=3, tn=2)
        out = build_weight(cm, WeightScheme.W2)
        assert out.values[0] == weights.WEIGHT_FLOOR
        assert 0 < out.values[0] <= 1


class TestParseSchemes:
    def test_all_shortcut(self):
        assert weights.parse_schemes("all") == list(WeightScheme)

    def test_explicit_list(self):
        assert weights.parse_schemes("w0,w4") == [WeightScheme.W0, WeightScheme.W4]

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            weights.parse_schemes("w9")

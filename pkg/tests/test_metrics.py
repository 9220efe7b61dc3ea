import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sondlab.metrics import ErrorMetrics, comparison_table, compute_metrics

H = 0.002
T2 = np.arange(1001) * H

series = arrays(np.float64, 201, elements=st.floats(-10, 10, allow_nan=False))
# magnitudes kept clear of the range where e*e underflows to zero
sparse = arrays(
    np.float64, 201,
    elements=st.one_of(st.just(0.0), st.floats(1e-100, 10.0), st.floats(-10.0, -1e-100)),
)


class TestComputeMetrics:
    def test_constant_error(self):
        m = compute_metrics(np.ones_like(T2), T2)
        for got, want in zip(m.as_tuple(), (1.0, 2.0, 2.0, 2.0)):
            assert abs(got - want) <= 0.004

    def test_ramp(self):
        t = np.arange(501) * H
        m = compute_metrics(t, t)
        for got, want in zip(m.as_tuple(), (1 / 3, 1 / 2, 1 / 3, 1 / 4)):
            assert abs(got - want) <= 2 * H

    @pytest.mark.parametrize("rule", ["right", "left", "trapezoid"])
    def test_rules_agree_to_first_order(self, rule):
        t = np.arange(501) * H
        m = compute_metrics(np.sin(t), t, rule=rule)
        assert m.iae == pytest.approx(1 - np.cos(1.0), abs=H)

    def test_trapezoid_is_second_order(self):
        t = np.arange(501) * H
        m = compute_metrics(t, t, rule="trapezoid")
        assert m.iae == pytest.approx(0.5, abs=1e-12)
        assert m.itae == pytest.approx(1 / 3, abs=H**2)

    def test_right_rule_ignores_first_sample(self):
        e = np.zeros_like(T2)
        e[0] = 100.0
        assert compute_metrics(e, T2) == ErrorMetrics(0.0, 0.0, 0.0, 0.0)
        assert compute_metrics(e, T2, rule="left").iae == pytest.approx(100 * H)

    def test_quadrature_converges(self):
        errs = []
        for n in (100, 200, 400):
            t = np.linspace(0.0, 1.0, n + 1)
            errs.append(abs(compute_metrics(np.exp(t), t).iae - (np.e - 1)))
        assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.05)
        assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.05)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            compute_metrics(np.ones(3), np.arange(4.0))

    def test_nonuniform(self):
        with pytest.raises(ValueError):
            compute_metrics(np.ones(3), np.array([0.0, 0.1, 0.3]))

    def test_unknown_rule(self):
        with pytest.raises(ValueError):
            compute_metrics(np.ones(3), np.arange(3.0), rule="simpson")

    @given(series, st.floats(0, 100))
    def test_homogeneity(self, e, k):
        t = np.arange(e.size) * H
        a, b = compute_metrics(e, t), compute_metrics(k * e, t)
        np.testing.assert_allclose(b.as_tuple(), (k * k * a.mse, k * a.iae, k * a.itae, k * k * a.itse),
                                   rtol=1e-12, atol=1e-300)

    @given(series)
    def test_nonnegative(self, e):
        t = np.arange(e.size) * H
        assert all(v >= 0 for v in compute_metrics(e, t).as_tuple())

    @given(sparse)
    def test_zero_iff_zero(self, e):
        t = np.arange(e.size) * H
        m = compute_metrics(e, t, rule="trapezoid")
        assert (m.iae == 0) == (not e.any())
        assert (m.mse == 0) == (not e.any())

    @given(series, st.integers(1, 20))
    def test_leading_zeros_left_rule(self, e, k):
        # zeros at the start add no weight; only the duration normalisation changes
        t = np.arange(e.size) * H
        padded = np.concatenate([np.zeros(k), e])
        tp = np.arange(padded.size) * H
        a = compute_metrics(e, t, rule="left")
        b = compute_metrics(padded, tp, rule="left")
        assert b.iae == pytest.approx(a.iae, rel=1e-12, abs=1e-300)
        assert b.mse * (tp[-1]) == pytest.approx(a.mse * t[-1], rel=1e-12, abs=1e-300)

    @given(series, st.integers(1, 20))
    def test_leading_zeros_right_rule(self, e, k):
        e = e.copy()
        e[0] = 0.0
        t = np.arange(e.size) * H
        padded = np.concatenate([np.zeros(k), e])
        tp = np.arange(padded.size) * H
        assert compute_metrics(padded, tp).iae == pytest.approx(compute_metrics(e, t).iae, rel=1e-12, abs=1e-300)


class TestComparisonTable:
    def test_single_zero_row(self):
        text, csv_text, records = comparison_table([("z", ErrorMetrics(0.0, 0.0, 0.0, 0.0))])
        assert records == [{"label": "z", "mse": 0.0, "iae": 0.0, "itae": 0.0, "itse": 0.0}]
        assert csv_text == "label,mse,iae,itae,itse\nz,0.0,0.0,0.0,0.0\n"
        assert "0.000000" in text

    def test_order_preserved(self):
        rows = [("b", ErrorMetrics(2, 2, 2, 2)), ("a", ErrorMetrics(1, 1, 1, 1))]
        _, csv_text, records = comparison_table(rows)
        assert [r["label"] for r in records] == ["b", "a"]
        assert csv_text.splitlines()[1].startswith("b,")

    def test_csv_round_trip(self):
        m = ErrorMetrics(1 / 3, 1e-17, 2.0, 7.25)
        _, csv_text, _ = comparison_table([("x", m)])
        values = [float(v) for v in csv_text.splitlines()[1].split(",")[1:]]
        assert tuple(values) == m.as_tuple()

    def test_empty(self):
        with pytest.raises(ValueError):
            comparison_table([])

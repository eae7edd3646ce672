import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbmrec.errors import DegenerateRegression
from fbmrec.estimator import Covering, alpha_value, default_fit_range, estimate_dimension, ols_slope
from fbmrec.records import BoxCountCurve, BoxCountEntry, RecordSet, box_count_curve


def synthetic_curve(c: float, d: float, ks, n: int = 2**20) -> BoxCountCurve:
    """M_eps = c * eps^-d exactly."""
    return BoxCountCurve(tuple(BoxCountEntry(k, 2.0**-k, c * 2.0 ** (k * d)) for k in ks), n, "synthetic")


class TestOls:
    def test_exact_line(self):
        fit = ols_slope([(1, 2), (2, 4), (3, 6)])
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(0.0, abs=1e-12)
        assert fit.r_squared == 1.0
        assert fit.stderr == pytest.approx(0.0, abs=1e-12)

    def test_constant(self):
        fit = ols_slope([(0, 1), (1, 1), (2, 1)])
        assert fit.slope == 0.0 and fit.intercept == 1.0

    def test_tent(self):
        # normal equations [[3, 3], [3, 5]] (b, m) = (1, 1) -> b = 1/3, m = 0
        fit = ols_slope([(0, 0), (1, 1), (2, 0)])
        assert fit.slope == pytest.approx(0.0, abs=1e-15)
        assert fit.intercept == pytest.approx(1 / 3)
        assert fit.r_squared == pytest.approx(0.0, abs=1e-15)
        # SSR = 2/3 over 1 dof, Sxx = 2
        assert fit.stderr == pytest.approx(math.sqrt(1 / 3))

    @pytest.mark.parametrize("pts", [[(0, 1), (1, 2)], [(1, 0), (1, 1), (1, 2)], []])
    def test_degenerate(self, pts):
        with pytest.raises(DegenerateRegression):
            ols_slope(pts)

    @settings(max_examples=50, deadline=None)
    @given(
        ys=st.lists(st.floats(-100, 100), min_size=3, max_size=12),
        shift=st.floats(-1e3, 1e3),
        scale=st.floats(-50, 50),
    )
    def test_shift_invariance_and_scale_equivariance(self, ys, shift, scale):
        xs = np.arange(len(ys), dtype=float)
        base = ols_slope(np.column_stack([xs, ys])).slope
        shifted = ols_slope(np.column_stack([xs, np.add(ys, shift)])).slope
        scaled = ols_slope(np.column_stack([xs, np.multiply(ys, scale)])).slope
        tol = 1e-9 * (1 + abs(shift) + max(abs(y) for y in ys))
        assert shifted == pytest.approx(base, abs=tol)
        assert scaled == pytest.approx(scale * base, abs=tol * (1 + abs(scale)))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=3, max_size=15))
    def test_r_squared_in_unit_interval(self, pts):
        xs = [p[0] for p in pts]
        if max(xs) - min(xs) < 1e-6:
            return
        assert 0.0 <= ols_slope(pts).r_squared <= 1.0


class TestEstimateDimension:
    def test_full_set(self):
        curve = box_count_curve(RecordSet(np.arange(1025), 1024), 0, 7)
        est = estimate_dimension(curve, 0, 7)
        assert est.dimension == pytest.approx(1.0)
        assert est.dimension == -est.slope
        assert est.k_range == (0, 7)

    def test_single_point(self):
        curve = box_count_curve(RecordSet(np.array([0]), 1024), 0, 7)
        assert estimate_dimension(curve, 0, 7).dimension == 0.0

    @settings(max_examples=50, deadline=None)
    @given(c=st.floats(1e-3, 1e3), d=st.floats(0.0, 1.0))
    def test_exact_recovery(self, c, d):
        est = estimate_dimension(synthetic_curve(c, d, range(0, 18)), 3, 15)
        assert est.dimension == pytest.approx(d, abs=1e-12)
        assert 0.0 <= est.r_squared <= 1.0

    def test_default_range(self):
        assert default_fit_range(2**20) == (6, 17)
        assert default_fit_range(2**18) == (6, 15)
        assert default_fit_range(2**8) == (3, 5)
        est = estimate_dimension(synthetic_curve(2.0, 0.4, range(0, 18)))
        assert est.k_range == (6, 17)

    def test_too_few_scales(self):
        with pytest.raises(DegenerateRegression):
            estimate_dimension(synthetic_curve(1.0, 0.5, range(0, 10)), 4, 5)

    def test_range_outside_curve(self):
        with pytest.raises(ValueError):
            estimate_dimension(synthetic_curve(1.0, 0.5, range(0, 10)), 4, 12)

    def test_to_dict(self):
        d = estimate_dimension(synthetic_curve(1.0, 0.5, range(0, 10)), 2, 8).to_dict()
        assert d["kind"] == "box-counting" and d["dimension"] == -d["slope"]


class TestAlphaValue:
    def test_total_length(self):
        assert alpha_value(Covering.uniform(7), 1.0) == pytest.approx(1.0)

    def test_power(self):
        assert alpha_value(Covering.uniform(4), 0.5) == pytest.approx(2.0)
        assert alpha_value(Covering.uniform(10), 0.0) == 10.0

    def test_empty(self):
        assert alpha_value(Covering(), 0.7) == 0.0

    def test_plain_intervals(self):
        assert alpha_value([(0, 0.5), (0.5, 1.0)], 1.0) == 1.0

    def test_invalid(self):
        with pytest.raises(ValueError):
            Covering(((0.3, 0.3),))
        with pytest.raises(ValueError):
            alpha_value(Covering.uniform(2), -0.1)

    @settings(max_examples=50, deadline=None)
    @given(
        cuts=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=20, unique=True),
        a1=st.floats(0.0, 3.0),
        a2=st.floats(0.0, 3.0),
    )
    def test_monotone_in_alpha(self, cuts, a1, a2):
        edges = np.unique(np.concatenate([[0.0, 1.0], cuts]))
        cov = Covering(tuple((a, b) for a, b in zip(edges[:-1], edges[1:]) if a < b))
        lo, hi = sorted((a1, a2))
        assert alpha_value(cov, hi) <= alpha_value(cov, lo) * (1 + 1e-12)

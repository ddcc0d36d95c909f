import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.models import QuantileMode
from src.stats import check_alpha, empirical_quantile, normal_ppf, normal_quantile, upper_quantile


class TestNormalPpf:
    def test_median(self):
        assert normal_ppf(0.5) == pytest.approx(0.0, abs=1e-12)

    def test_known_values(self):
        assert normal_ppf(0.975) == pytest.approx(1.959964, abs=1e-6)
        assert normal_ppf(0.95) == pytest.approx(1.644854, abs=1e-6)
        assert normal_ppf(0.001) == pytest.approx(-3.090232, abs=1e-6)

    def test_edges(self):
        assert normal_ppf(0.0) == -math.inf
        assert normal_ppf(1.0) == math.inf

    @pytest.mark.parametrize("p", [-0.1, 1.1, math.nan])
    def test_out_of_range(self, p):
        with pytest.raises(ValueError):
            normal_ppf(p)

    def test_vectorized(self):
        z = normal_ppf(np.array([0.025, 0.5, 0.975]))
        assert z.shape == (3,)
        assert z[1] == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=500)
    @given(p=st.floats(min_value=1e-12, max_value=0.5, exclude_max=True))
    def test_symmetry(self, p):
        assert normal_ppf(p) == pytest.approx(-normal_ppf(1 - p), rel=1e-6, abs=1e-9)

    def test_halley_step_reaches_double_precision(self):
        z = normal_quantile(0.95)
        assert 0.5 * math.erfc(-z / math.sqrt(2)) == pytest.approx(0.95, abs=1e-15)


class TestUpperQuantile:
    @pytest.mark.parametrize("alpha, z", [(0.05, 1.64), (0.025, 1.95), (0.01, 2.32)])
    def test_paper_mode_truncates(self, alpha, z):
        assert upper_quantile(alpha, QuantileMode.PAPER) == z

    def test_exact_mode(self):
        assert upper_quantile(0.05) == pytest.approx(1.6448536, abs=1e-7)

    def test_half_is_zero(self):
        assert upper_quantile(0.5) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.0, -0.1, 0.7, 1.0])
    def test_check_alpha(self, alpha):
        with pytest.raises(ValueError):
            check_alpha(alpha)


class TestEmpiricalQuantile:
    def test_interpolates(self):
        assert empirical_quantile(np.array([5.0, 1.0, 3.0, 2.0, 4.0]), 0.25) == 2.0
        assert empirical_quantile(np.array([10.0, 20.0]), 0.05) == pytest.approx(10.5)

    def test_single_value(self):
        assert empirical_quantile(np.array([7.0]), 0.05) == 7.0

    def test_empty(self):
        with pytest.raises(ValueError):
            empirical_quantile(np.array([]), 0.05)

    def test_level_range(self):
        with pytest.raises(ValueError):
            empirical_quantile(np.array([1.0, 2.0]), 1.5)

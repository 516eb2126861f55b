"""Tests of the sine eigenbasis: constants, projection, synthesis, point checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from heatinv import (
    DomainError,
    DataError,
    SineSeries,
    check_observation_point,
    eval_basis,
    mode_constants,
    project,
    synthesize,
)
SQ = math.sqrt(2.0 / math.pi)


class TestModeConstants:
    def test_mode_1(self):
        m = mode_constants(1)
        assert m.lam == 1.0
        assert m.c_m == pytest.approx(2.0 * SQ, abs=1e-15)
        assert m.fprime0 == pytest.approx(SQ, abs=1e-15)

    def test_mode_2_source_blind(self):
        assert mode_constants(2).c_m == 0.0  # exact zero, not approximate

    def test_mode_3(self):
        m = mode_constants(3)
        assert m.lam == 9.0
        assert m.c_m == pytest.approx(2.0 * SQ / 3.0, abs=1e-15)
        assert m.fprime0 == pytest.approx(3.0 * SQ, abs=1e-15)

    def test_all_even_modes_blind(self):
        assert all(mode_constants(m).c_m == 0.0 for m in range(2, 65, 2))

    def test_lambda_exact(self):
        assert all(mode_constants(m).lam == m * m for m in range(1, 65))

    def test_rejects_bad_index(self):
        with pytest.raises(DomainError):
            mode_constants(0)
        with pytest.raises(DomainError):
            mode_constants(-3)


class TestEvalBasis:
    def test_peak_of_first_mode(self):
        assert eval_basis(1, math.pi / 2) == pytest.approx(SQ, abs=1e-15)

    def test_zero_of_second_mode(self):
        assert abs(eval_basis(2, math.pi / 2)) < 1e-12

    def test_high_precision_value(self):
        # sqrt(2/pi) sin(3) evaluated with 50-digit arithmetic
        assert eval_basis(3, 1.0) == pytest.approx(0.1125974756513439776570336, abs=1e-15)

    def test_vanishes_at_endpoints(self):
        for m in (1, 2, 7):
            assert eval_basis(m, 0.0) == 0.0
            assert abs(eval_basis(m, math.pi)) < 1e-12

    def test_unit_l2_norm_quad_oracle(self):
        # independent oracle: adaptive quadrature of f_m^2
        for m in (1, 2, 5):
            norm2, _ = quad(lambda x: eval_basis(m, x) ** 2, 0.0, math.pi)
            assert norm2 == pytest.approx(1.0, abs=1e-10)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            eval_basis(1, -0.1)
        with pytest.raises(DomainError):
            eval_basis(1, math.pi + 0.1)


class TestProject:
    def test_basis_function_projects_to_unit_vector(self):
        series = project(lambda x: eval_basis(2, x), 4)
        np.testing.assert_allclose(series.coeffs, [0.0, 1.0, 0.0, 0.0], atol=1e-12)

    def test_linear_ramp(self):
        # analytic: integral of (1 - x/pi) sin(m x) over [0, pi] equals 1/m,
        # so the coefficient is sqrt(2/pi)/m; trapezoid error is O(h^2)
        series = project(lambda x: 1.0 - x / math.pi, 3)
        np.testing.assert_allclose(series.coeffs, SQ / np.arange(1, 4), atol=1e-5)

    def test_linear_ramp_vs_quad_oracle(self):
        series = project(lambda x: 1.0 - x / math.pi, 3, quad_points=8192)
        for m in (1, 2, 3):
            ref, _ = quad(lambda x: (1.0 - x / math.pi) * eval_basis(m, x), 0.0, math.pi)
            assert series.coeffs[m - 1] == pytest.approx(ref, abs=1e-6)

    def test_zero_function(self):
        series = project(lambda x: np.zeros_like(x), 5)
        assert np.all(series.coeffs == 0.0)

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            project(lambda x: np.where(x > 1.0, np.inf, 1.0), 3)

    def test_scalar_only_callable(self):
        series = project(lambda x: math.sin(x), 2)  # math.sin rejects arrays
        np.testing.assert_allclose(series.coeffs, [1.0 / SQ, 0.0], atol=1e-6)


class TestSynthesize:
    def test_single_mode(self):
        s = SineSeries([1.0])
        assert synthesize(s, math.pi / 2) == pytest.approx(SQ, abs=1e-15)

    def test_zero_series(self):
        s = SineSeries([0.0, 0.0, 0.0])
        assert synthesize(s, 1.234) == 0.0

    def test_two_modes(self):
        s = SineSeries([1.0, 0.5])
        expect = SQ * (math.sin(1.0) + 0.5 * math.sin(2.0))
        assert synthesize(s, 1.0) == pytest.approx(expect, abs=1e-15)

    def test_boundary_values_vanish(self):
        s = SineSeries([0.3, -1.2, 0.7])
        assert synthesize(s, 0.0) == 0.0
        assert abs(synthesize(s, math.pi)) < 1e-14

    def test_sin_amplitude_convention(self):
        s = SineSeries.from_sin_amplitudes([1.0, 0.5])
        x = np.linspace(0.0, math.pi, 7)
        np.testing.assert_allclose(s(x), np.sin(x) + 0.5 * np.sin(2 * x), atol=1e-14)
        np.testing.assert_allclose(s.sin_amplitudes, [1.0, 0.5], atol=1e-15)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            synthesize(SineSeries([1.0]), 4.0)


class TestOrthonormality:
    def test_gram_matrix_is_identity(self):
        order = 8
        x = np.linspace(0.0, math.pi, 2048)
        f = np.array([eval_basis(m, x) for m in range(1, order + 1)])
        gram = np.trapezoid(f[:, None, :] * f[None, :, :], x, axis=2)
        np.testing.assert_allclose(gram, np.eye(order), atol=1e-12)

    @given(st.integers(1, 64), st.integers(1, 64))
    @settings(max_examples=25, deadline=None)
    def test_random_pair(self, m, n):
        x = np.linspace(0.0, math.pi, 2048)
        val = np.trapezoid(eval_basis(m, x) * eval_basis(n, x), x)
        assert val == pytest.approx(1.0 if m == n else 0.0, abs=1e-10)


class TestRoundTrip:
    @given(
        st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=64)
    )
    @settings(max_examples=25, deadline=None)
    def test_project_synthesize_identity(self, coeffs):
        s = SineSeries(coeffs)
        back = project(lambda x: synthesize(s, x), s.order)
        np.testing.assert_allclose(back.coeffs, s.coeffs, atol=1e-10)


class TestObservationPoint:
    def test_pi_half_unsafe_at_mode_2(self):
        chk = check_observation_point(math.pi / 2, 4)
        assert not chk.safe
        assert chk.worst_mode == 2
        assert chk.min_abs_sin < 1e-12

    def test_y1_safe_to_50_modes(self):
        chk = check_observation_point(1.0, 50)
        assert chk.safe
        # 50-digit scan: the minimum is |sin 22| = 8.85131e-3
        assert chk.worst_mode == 22
        assert chk.min_abs_sin == pytest.approx(0.0088513092904038759, abs=1e-12)

    def test_pi_third_unsafe_at_mode_3(self):
        chk = check_observation_point(math.pi / 3, 3)
        assert not chk.safe
        assert chk.worst_mode == 3

    def test_boundary_rejected(self):
        for y in (0.0, math.pi, -1.0):
            with pytest.raises(DomainError):
                check_observation_point(y, 4)

    def test_threshold_configurable(self):
        assert check_observation_point(1.0, 50, threshold=1e-6).safe
        assert not check_observation_point(1.0, 50, threshold=1e-1).safe

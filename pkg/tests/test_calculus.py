"""Unit tests for inverse, conjugate, ε-regularization and the inequality suites."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orlicz_reg.calculus import (
    ConjugatePhi,
    conjugate,
    conjugate_derivative_gap,
    derivative_bounds,
    epsilon_regularize,
    growth_constants,
    inverse,
    monotone_inverse,
    vector_comparability,
    young_gap,
    young_kappa_constants,
)
from orlicz_reg.geometry import Domain, domain_samples
from orlicz_reg.phi import Family, PhiError, PhiSpec

SQUARE = Domain.rect([(-1.0, 1.0), (-1.0, 1.0)])
X = np.array([0.5, 0.0])


def double_phase(q=2.2) -> PhiSpec:
    return PhiSpec.create(Family.DOUBLE_PHASE, {"p": 2.0, "q": q}, {"a": "abs(x1)"}, domain=SQUARE)


def power(p: float, dimension: int = 1) -> PhiSpec:
    return PhiSpec.create(Family.POWER, {"p": p}, dimension=dimension)


# =============================================================================
# Inverse
# =============================================================================


class TestInverse:

    @pytest.mark.parametrize("t", [1e-3, 0.3, 1.7, 250.0])
    def test_inverts_value(self, t):
        phi = double_phase()
        s = phi.value(X, t)
        assert inverse(phi, X, s) == pytest.approx(t, rel=1e-9)

    def test_zero_maps_to_zero(self):
        assert inverse(double_phase(), X, 0.0) == 0.0

    def test_vector_input(self):
        out = inverse(power(2.0), 0.0, np.array([1.0, 4.0, 9.0]))
        np.testing.assert_allclose(out, [1.0, 2.0, 3.0], rtol=1e-9)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            inverse(power(2.0), 0.0, -1.0)

    def test_left_continuous_on_plateau(self):
        # flat on [1, 2]: the inverse picks the left end
        step = lambda tau: np.minimum(tau, 1.0) + np.maximum(tau - 2.0, 0.0)  # noqa: E731
        assert float(monotone_inverse(step, 1.0)) == pytest.approx(1.0, abs=1e-9)


# =============================================================================
# Conjugate
# =============================================================================


class TestConjugate:

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_power_closed_form(self, p):
        s = np.array([0.5, 1.0, 4.0])
        p_dual = p / (p - 1)
        expected = (p - 1) * (s / p) ** p_dual
        np.testing.assert_allclose(conjugate(power(p), 0.0, s), expected, rtol=1e-12)

    def test_grid_search_matches_closed_form(self):
        phi = PhiSpec.create(Family.CUSTOM, {"p": 2.0, "q": 2.0}, {"phi": "t^2"})
        s = np.array([0.01, 1.0, 30.0])
        np.testing.assert_allclose(conjugate(phi, 0.0, s), s ** 2 / 4, rtol=1e-8)

    @pytest.mark.parametrize(
        "phi, x",
        [
            (PhiSpec.create(Family.ORLICZ_LOG, {"p": 2.0}), np.array([0.0])),
            (double_phase(), X),
        ],
        ids=["orlicz-log", "double-phase"],
    )
    def test_biconjugate(self, phi, x):
        t = np.array([0.25, 1.0, 3.0])
        twice = ConjugatePhi(ConjugatePhi(phi))
        np.testing.assert_allclose(twice.value(x, t), phi.value(x, t), rtol=1e-6)

    def test_conjugate_exponents(self):
        star = ConjugatePhi(double_phase(q=3.0))
        assert star.lower_exponent == pytest.approx(1.5)
        assert star.upper_exponent == pytest.approx(2.0)

    def test_conjugate_derivative_gap_nonnegative(self):
        gap = conjugate_derivative_gap(double_phase(), X, np.logspace(-2, 2, 25))
        assert np.all(gap >= -1e-9)

    def test_negative_argument(self):
        with pytest.raises(PhiError):
            conjugate(power(2.0), 0.0, -1.0)


# =============================================================================
# Young inequalities
# =============================================================================


class TestYoung:

    def test_gap_nonnegative_on_grid(self):
        t = np.logspace(-2, 2, 50)
        s = np.logspace(-2, 2, 50)
        gap = young_gap(double_phase(), X, t, s)
        assert gap.shape == (50, 50)
        assert np.all(gap >= -1e-9 * (1 + t[:, None] * s[None, :]))

    @settings(max_examples=50, deadline=None)
    @given(
        p=st.floats(1.1, 6.0),
        t=st.floats(1e-3, 1e3),
        s=st.floats(1e-3, 1e3),
    )
    def test_power_young(self, p, t, s):
        gap = young_gap(power(p), 0.0, np.array([t]), np.array([s]))
        assert gap[0, 0] >= -1e-9 * (1 + t * s)

    def test_kappa_forms(self):
        t = np.logspace(-1, 1, 12)
        s = np.logspace(-1, 1, 12)
        report = young_kappa_constants(double_phase(), X, t, s, [0.1, 0.5, 1.0])
        assert report.min_gap_lower >= -1e-8
        assert report.min_gap_upper >= -1e-8
        assert 0 < report.constant_lower < np.inf
        assert 0 < report.constant_upper < np.inf

    def test_kappa_power_is_exact(self):
        # for t^p both scaled forms hold with constant one
        report = young_kappa_constants(power(2.0), 0.0, [0.5, 2.0], [0.5, 2.0], [0.25, 1.0])
        assert report.constant_lower == pytest.approx(1.0)


# =============================================================================
# Derivative and vector inequalities
# =============================================================================


class TestComparability:

    def test_derivative_bounds_power(self):
        lo, hi = derivative_bounds(power(3.0), np.zeros(1), np.logspace(-3, 3, 20))
        assert lo == pytest.approx(1 / 3)
        assert hi == pytest.approx(1 / 3)

    def test_derivative_bounds_convex(self):
        lo, hi = derivative_bounds(double_phase(), X, np.logspace(-3, 3, 20))
        assert 1 / 2.2 - 1e-12 <= lo <= hi <= 0.5 + 1e-12

    def test_vector_quadratic_case_is_exact(self):
        rng = np.random.default_rng(0)
        u = rng.normal(size=(200, 2))
        v = rng.normal(size=(200, 2))
        lo, hi = vector_comparability(power(2.0, 2), u, v)
        assert lo == pytest.approx(1.0)
        assert hi == pytest.approx(1.0)

    def test_vector_power_three(self):
        rng = np.random.default_rng(1)
        u = rng.normal(size=(500, 2))
        v = rng.normal(size=(500, 2))
        lo, hi = vector_comparability(power(3.0, 2), u, v)
        assert 0.25 <= lo <= hi <= 2.0

    def test_vector_needs_autonomous(self):
        with pytest.raises(PhiError):
            vector_comparability(double_phase(), np.ones((1, 2)), np.zeros((1, 2)))


# =============================================================================
# ε-regularization
# =============================================================================


class TestEpsilonRegularization:

    def test_quadratic_is_fixed(self):
        # φ'(ε+s) s/(ε+s) = 2s for φ = t²
        phi_eps = epsilon_regularize(power(2.0), 0.1)
        t = np.array([0.0, 1e-3, 0.5, 2.0, 1e3])
        np.testing.assert_allclose(phi_eps.value(np.zeros(1), t), t ** 2, rtol=1e-8, atol=1e-14)

    def test_nondegenerate_ratio(self):
        phi_eps = epsilon_regularize(power(3.0), 0.5)
        ratio = phi_eps.derivative_ratio(np.zeros(1), np.array([0.0, 1.0]))
        np.testing.assert_allclose(ratio, [3 * 0.5, 3 * 1.5])
        assert phi_eps.lower_exponent == 2.0
        assert phi_eps.upper_exponent == 3.0

    def test_derivative_consistent_with_value(self):
        phi_eps = epsilon_regularize(PhiSpec.create(Family.ORLICZ_LOG, {"p": 2.5}), 0.2)
        t = np.array([0.3, 1.0, 5.0])
        h = 1e-5 * t
        x = np.zeros(1)
        fd = (phi_eps.value(x, t + h) - phi_eps.value(x, t - h)) / (2 * h)
        np.testing.assert_allclose(phi_eps.derivative(x, t), fd, rtol=1e-6)

    @pytest.mark.parametrize("eps", [0.0, -1.0])
    def test_eps_must_be_positive(self, eps):
        with pytest.raises(PhiError):
            epsilon_regularize(power(2.0), eps)

    def test_needs_autonomous(self):
        with pytest.raises(PhiError, match="autonomous"):
            epsilon_regularize(double_phase(), 0.1)


# =============================================================================
# Growth constants
# =============================================================================


class TestGrowth:

    def test_power(self):
        env = growth_constants(power(3.0), np.zeros((1, 1)), (1e-2, 1e2))
        assert env.p_hat == pytest.approx(3.0)
        assert env.q_hat == pytest.approx(3.0)
        assert env.a0_lo == env.a0_hi == pytest.approx(1.0)

    def test_double_phase(self):
        phi = double_phase()
        env = growth_constants(phi, domain_samples(SQUARE, 64), (1e-2, 1e2))
        assert env.p_hat == pytest.approx(2.0)
        assert env.q_hat == pytest.approx(2.2)

    def test_bad_range(self):
        with pytest.raises(ValueError):
            growth_constants(power(2.0), np.zeros((1, 1)), (1.0, 0.5))

"""Tests for the Campanato and Morrey fits, higher integrability and the threshold sweep."""

import numpy as np
import pytest

from orlicz_reg.analysis import (
    SWEEP_COLUMNS,
    FitError,
    PreconditionError,
    SweepOptions,
    campanato_fit,
    dyadic_radii,
    higher_integrability_ratio,
    morrey_decay,
    predicted_gamma0,
    threshold_sweep,
)
from orlicz_reg.expression import parse_expression
from orlicz_reg.geometry import Ball, Domain
from orlicz_reg.grid import Grid, GridField
from orlicz_reg.phi import Family, PhiSpec
from orlicz_reg.solver import SolverOptions

SQUARE = Domain.rect([(-1.0, 1.0), (-1.0, 1.0)])
ORIGIN = (0.0, 0.0)


def field_of(source: str, n: int = 128) -> GridField:
    return GridField.from_expression(Grid.for_domain(SQUARE, n), parse_expression(source))


# =============================================================================
# Radii
# =============================================================================


class TestRadii:

    def test_dyadic_down_to_four_cells(self):
        grid = Grid.for_domain(SQUARE, 128)
        assert dyadic_radii(grid, 0.5) == [0.5, 0.25, 0.125, 0.0625]

    def test_too_few_radii(self):
        with pytest.raises(FitError):
            campanato_fit(field_of("x1"), ORIGIN, [0.5, 0.25])

    def test_unresolved_radii_are_dropped(self):
        with pytest.raises(FitError):
            # 4h = 0.0625 on this grid
            campanato_fit(field_of("x1"), ORIGIN, [0.5, 0.03, 0.01])

    def test_needs_radii_or_rho_max(self):
        with pytest.raises(ValueError):
            campanato_fit(field_of("x1"), ORIGIN)


# =============================================================================
# Campanato fit
# =============================================================================


class TestCampanato:

    def test_linear_function(self):
        est = campanato_fit(field_of("x1"), ORIGIN, rho_max=0.5)
        assert est.alpha_hat == pytest.approx(1.0, abs=0.02)
        assert est.radii == [0.5, 0.25, 0.125, 0.0625]
        assert est.max_radius == 0.5
        assert len(est.rows) == 4

    def test_constant_function(self):
        est = campanato_fit(field_of("2"), ORIGIN, rho_max=0.5)
        assert est.alpha_hat == 1.0
        assert est.fit_residual == 0.0

    def test_affine_gradient(self):
        est = campanato_fit(field_of("3*x1 - x2"), ORIGIN, mode="gradient", rho_max=0.5)
        assert est.alpha_hat == 1.0
        assert est.mode == "gradient"

    def test_quadratic_gradient(self):
        est = campanato_fit(field_of("x1^2 + x2^2"), ORIGIN, mode="gradient", rho_max=0.5)
        assert est.alpha_hat == pytest.approx(1.0, abs=0.05)

    @pytest.mark.parametrize("alpha", [0.5])
    def test_radial_power(self, alpha):
        est = campanato_fit(field_of(f"(x1^2 + x2^2)^{alpha / 2}"), ORIGIN, rho_max=0.5)
        assert est.alpha_hat == pytest.approx(alpha, abs=0.1)

    @pytest.mark.heavy
    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7], ids=["0.3", "0.5", "0.7"])
    def test_radial_power_fine_grid(self, alpha):
        est = campanato_fit(field_of(f"(x1^2 + x2^2)^{alpha / 2}", 512), ORIGIN, rho_max=0.5)
        assert est.alpha_hat == pytest.approx(alpha, abs=0.05)

    def test_invariant_under_affine_change_of_values(self):
        base = campanato_fit(field_of("x1^2 + x2"), ORIGIN, rho_max=0.5)
        moved = campanato_fit(field_of("3*(x1^2 + x2) - 7"), ORIGIN, rho_max=0.5)
        assert moved.alpha_hat == pytest.approx(base.alpha_hat, rel=1e-9)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            campanato_fit(field_of("x1"), ORIGIN, mode="hessian", rho_max=0.5)


# =============================================================================
# Morrey decay
# =============================================================================


class TestMorrey:

    def test_linear(self):
        est = morrey_decay(field_of("x1"), ORIGIN, rho_max=0.5)
        assert est.slope == pytest.approx(2.0, abs=0.05)
        assert est.tau == pytest.approx(2.0 - est.slope)
        assert est.alpha == pytest.approx(1.0 - est.tau)

    def test_constant_has_no_gradient(self):
        with pytest.raises(FitError):
            morrey_decay(field_of("1"), ORIGIN, rho_max=0.5)


# =============================================================================
# Higher integrability
# =============================================================================


class TestHigherIntegrability:

    def test_constant_gradient(self):
        phi = PhiSpec.create(Family.POWER, {"p": 2.0}, domain=SQUARE)
        est = higher_integrability_ratio(field_of("0.1*x1"), phi, Ball.at(ORIGIN, 0.25), 0.5)
        assert est.ratio <= 1.0
        assert est.ratio == pytest.approx(0.01 / 1.01, rel=1e-9)
        assert est.reverse_holder == pytest.approx(0.01 / 1.01, rel=1e-6)
        assert est.mean_gradient_2r == pytest.approx(0.1)

    def test_energy_above_one(self):
        phi = PhiSpec.create(Family.POWER, {"p": 2.0}, domain=SQUARE)
        with pytest.raises(PreconditionError):
            higher_integrability_ratio(field_of("10*x1"), phi, Ball.at(ORIGIN, 0.25), 0.5)

    def test_sigma_positive(self):
        phi = PhiSpec.create(Family.POWER, {"p": 2.0}, domain=SQUARE)
        with pytest.raises(ValueError):
            higher_integrability_ratio(field_of("x1"), phi, Ball.at(ORIGIN, 0.25), 0.0)


# =============================================================================
# Threshold sweep
# =============================================================================


class TestSweep:

    @pytest.mark.parametrize(
        "p, q, beta, n, eps, expected",
        [
            (2.0, 2.2, 1.0, 2, 0.0, 0.8),
            (2.0, 3.0, 1.0, 2, 0.0, 0.0),
            (2.0, 4.0, 1.0, 2, 0.0, -1.0),
            (2.0, 2.2, 1.0, 2, 0.1, 0.82),
            (2.0, 2.5, 1.0, 1, 0.0, 0.75),
        ],
        ids=["below", "threshold", "above", "eps", "line"],
    )
    def test_predicted_gamma0(self, p, q, beta, n, eps, expected):
        assert predicted_gamma0(p, q, beta, n, eps) == pytest.approx(expected, abs=1e-12)

    def test_invalid_point_becomes_failed_row(self):
        rows = threshold_sweep([(2.0, 1.5, 1.0)])
        assert len(rows) == 1
        assert rows[0].status.startswith("failed:")
        assert len(rows[0].as_tuple()) == len(SWEEP_COLUMNS)

    @pytest.mark.heavy
    def test_across_threshold(self):
        opts = SweepOptions(
            grid_n=64,
            r_grid=(0.016, 0.008, 0.004),
            ball_count=16,
            t_points=24,
            solver=SolverOptions(tol_el=1e-6),
        )
        below, above = threshold_sweep([(2.0, 2.2, 1.0), (2.0, 4.0, 1.0)], opts)
        assert below.status == "ok" and above.status == "ok"
        assert below.predicted_gamma0 == pytest.approx(0.8)
        assert below.va1 == "holds"
        assert above.va1 == "fails"
        assert below.converged
        assert below.gradient_alpha is not None

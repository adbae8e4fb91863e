"""Regularity exponents and diagnostic ratios estimated from discrete fields."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from orlicz_reg.conditions import (
    DEFAULT_BALL_COUNT,
    DEFAULT_T_POINTS,
    check_wva1,
    closed_form_modulus,
    estimate_va1_modulus,
)
from orlicz_reg.envelope import ball_envelope
from orlicz_reg.expression import parse_expression
from orlicz_reg.geometry import Ball, Domain
from orlicz_reg.grid import Grid, GridField
from orlicz_reg.phi import Family, NumericalError, PhiFunction, PhiSpec
from orlicz_reg.solver import DiscreteProblem, SolverOptions, minimize

logger = logging.getLogger(__name__)

__all__ = [
    "FitError",
    "HigherIntegrability",
    "HolderEstimate",
    "MorreyEstimate",
    "PreconditionError",
    "SWEEP_COLUMNS",
    "SweepOptions",
    "SweepRow",
    "campanato_fit",
    "dyadic_radii",
    "higher_integrability_ratio",
    "morrey_decay",
    "predicted_gamma0",
    "threshold_sweep",
]

MIN_CELLS_PER_RADIUS = 4
MIN_RADII = 3
THREADS_ENV = "ORLICZ_REG_THREADS"


class FitError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Radii and fits
# ---------------------------------------------------------------------------


def dyadic_radii(grid: Grid, rho_max: float) -> list[float]:
    """ρ_k = ρ_max 2^{-k} down to 4h."""
    floor = MIN_CELLS_PER_RADIUS * grid.h
    radii = []
    rho = float(rho_max)
    while rho >= floor * (1 - 1e-12):
        radii.append(rho)
        rho /= 2
    return radii


def _usable_radii(grid: Grid, radii: Sequence[float] | None, rho_max: float | None):
    if radii is None:
        if rho_max is None:
            raise ValueError("Give either radii or rho_max")
        radii = dyadic_radii(grid, rho_max)
    floor = MIN_CELLS_PER_RADIUS * grid.h * (1 - 1e-12)
    usable = sorted((float(r) for r in radii if r >= floor), reverse=True)
    if len(usable) < MIN_RADII:
        raise FitError(
            f"Only {len(usable)} radii resolved by h={grid.h:.4g} (need {MIN_RADII}, each ≥ 4h)"
        )
    return usable


def _loglog_fit(radii: list[float], values: list[float]) -> tuple[float, float]:
    """Slope and RMS residual of log(values) against log(radii)."""
    x = np.log(radii)
    y = np.log(values)
    coeffs = np.polyfit(x, y, 1)
    residual = y - np.polyval(coeffs, x)
    return float(coeffs[0]), float(np.sqrt(np.mean(residual ** 2)))


@dataclass(frozen=True)
class HolderEstimate:
    alpha_hat: float
    fit_residual: float
    radii: list[float]
    center: tuple[float, ...]
    max_radius: float
    mode: str = "function"
    rows: list[tuple[float, float]] = field(default_factory=list)


def campanato_fit(
    field_: GridField,
    x0,
    radii: Sequence[float] | None = None,
    mode: str = "function",
    *,
    rho_max: float | None = None,
) -> HolderEstimate:
    """Slope of log ⨍_{B_ρ}|f − (f)_ρ| against log ρ.

    ``mode="function"`` uses the cell averages of u, ``mode="gradient"`` the
    cell gradients ∇_h u. Averages run over the cells whose centers lie in the
    ball.
    """
    if mode not in ("function", "gradient"):
        raise ValueError(f"mode must be 'function' or 'gradient', got {mode!r}")
    grid = field_.grid
    usable = _usable_radii(grid, radii, rho_max)
    center = tuple(float(v) for v in np.atleast_1d(x0))
    if mode == "function":
        values = field_.cell_values()[:, None]
    else:
        values = field_.gradient()
    rows = []
    for rho in usable:
        cells = grid.cells_in_ball(center, rho)
        if not cells.any():
            continue
        local = values[cells]
        osc = float(np.linalg.norm(local - local.mean(axis=0), axis=1).mean())
        rows.append((rho, osc))
    positive = [(r, o) for r, o in rows if o > 0]
    if rows and not positive:
        # constant (mode=function) or affine (mode=gradient) data
        alpha, residual = 1.0, 0.0
    elif len(positive) < MIN_RADII:
        raise FitError(f"Only {len(positive)} radii with nonzero oscillation")
    else:
        alpha, residual = _loglog_fit([r for r, _ in positive], [o for _, o in positive])
    logger.debug("Campanato fit at %s (%s): alpha=%.4g, rms=%.3g", center, mode, alpha, residual)
    return HolderEstimate(
        alpha_hat=alpha,
        fit_residual=residual,
        radii=[r for r, _ in rows],
        center=center,
        max_radius=usable[0],
        mode=mode,
        rows=rows,
    )


@dataclass(frozen=True)
class MorreyEstimate:
    """``slope`` of log ∫_{B_ρ}|∇u|; τ = n − slope, predicted α = 1 − τ."""

    slope: float
    tau: float
    alpha: float
    fit_residual: float
    radii: list[float]
    rows: list[tuple[float, float]] = field(default_factory=list)


def morrey_decay(
    field_: GridField,
    x0,
    radii: Sequence[float] | None = None,
    *,
    rho_max: float | None = None,
) -> MorreyEstimate:
    grid = field_.grid
    usable = _usable_radii(grid, radii, rho_max)
    norms = field_.gradient_norm()
    rows = []
    for rho in usable:
        cells = grid.cells_in_ball(x0, rho)
        total = float(norms[cells].sum() * grid.cell_volume)
        if total > 0:
            rows.append((rho, total))
    if len(rows) < MIN_RADII:
        raise FitError(f"Only {len(rows)} radii with nonzero gradient integral")
    slope, residual = _loglog_fit([r for r, _ in rows], [v for _, v in rows])
    tau = grid.dimension - slope
    return MorreyEstimate(
        slope=slope,
        tau=tau,
        alpha=1.0 - tau,
        fit_residual=residual,
        radii=[r for r, _ in rows],
        rows=rows,
    )


# ---------------------------------------------------------------------------
# Higher integrability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HigherIntegrability:
    """R(σ) against the energy average and against φ⁻_{B_2r}(⨍|Du|)."""

    sigma: float
    ratio: float
    reverse_holder: float
    energy_2r: float
    mean_gradient_2r: float


def higher_integrability_ratio(
    field_: GridField, phi: PhiFunction, ball: Ball, sigma: float
) -> HigherIntegrability:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    grid = field_.grid
    norms = field_.gradient_norm()
    centers = grid.cell_centers
    inner = grid.cells_in_ball(ball.center, ball.radius)
    outer = grid.cells_in_ball(ball.center, 2 * ball.radius)
    if not inner.any():
        raise FitError(f"No cell center inside {ball}")
    density = phi.value(centers[outer], norms[outer])
    energy_2r = float(density.sum() * grid.cell_volume)
    if energy_2r > 1:
        raise PreconditionError(f"∫_B2r φ(x,|Du|) = {energy_2r:.6g} exceeds 1")
    upper = phi.value(centers[inner], norms[inner])
    top = float(np.mean(upper ** (1 + sigma)) ** (1 / (1 + sigma)))
    mean_grad = float(norms[outer].mean())
    lower_env = ball_envelope(phi, Ball(ball.center, 2 * ball.radius), mean_grad, side="inf")
    return HigherIntegrability(
        sigma=float(sigma),
        ratio=top / (float(density.mean()) + 1.0),
        reverse_holder=top / (float(lower_env) + 1.0),
        energy_2r=energy_2r,
        mean_gradient_2r=mean_grad,
    )


# ---------------------------------------------------------------------------
# Threshold sweep
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = (
    "p",
    "q",
    "beta",
    "predicted_gamma0",
    "predicted_class",
    "va1",
    "va1_rate",
    "wva1",
    "gradient_alpha",
    "max_gradient",
    "energy",
    "converged",
    "status",
)


@dataclass
class SweepOptions:
    dimension: int = 2
    grid_n: int = 64
    boundary: str = "x1 + x2"
    r_grid: tuple[float, ...] = (0.016, 0.008, 0.004, 0.002)
    wva1_eps: float = 0.1
    ball_count: int = DEFAULT_BALL_COUNT
    t_points: int = DEFAULT_T_POINTS
    rho_max: float = 0.5
    seed: int | None = 0
    solver: SolverOptions = field(default_factory=SolverOptions)


@dataclass
class SweepRow:
    p: float
    q: float
    beta: float | None
    predicted_gamma0: float | None = None
    predicted_class: str = ""
    va1: str = ""
    va1_rate: float | None = None
    wva1: str = ""
    gradient_alpha: float | None = None
    max_gradient: float | None = None
    energy: float | None = None
    converged: bool | None = None
    status: str = "ok"
    modulus_table: list[tuple[float, float]] = field(default_factory=list)

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name in SWEEP_COLUMNS)


def _double_phase(p: float, q: float, beta: float | None, n: int) -> PhiSpec:
    domain = Domain.rect([(-1.0, 1.0)] * n)
    params = {"p": p, "q": q}
    if beta is None:
        coefficient = "1"
    else:
        params["beta"] = beta
        coefficient = f"abs(x1)^{beta!r}"
    return PhiSpec.create(Family.DOUBLE_PHASE, params, {"a": coefficient}, domain=domain)


def _sweep_point(point: tuple[float, float, float | None], opts: SweepOptions) -> SweepRow:
    p, q, beta = point
    row = SweepRow(p=float(p), q=float(q), beta=None if beta is None else float(beta))
    n = opts.dimension
    try:
        phi = _double_phase(row.p, row.q, row.beta, n)
        if row.beta is not None:
            row.predicted_gamma0 = predicted_gamma0(row.p, row.q, row.beta, n)
        row.predicted_class = closed_form_modulus(phi).regularity.value
        va1 = estimate_va1_modulus(
            phi, opts.r_grid, ball_count=opts.ball_count, t_points=opts.t_points, seed=opts.seed
        )
        wva1 = check_wva1(
            phi, opts.r_grid, opts.wva1_eps,
            ball_count=opts.ball_count, t_points=opts.t_points, seed=opts.seed,
        )
        row.va1, row.va1_rate, row.wva1 = va1.verdict.value, va1.holder_rate, wva1.verdict.value
        row.modulus_table = va1.modulus_table

        grid = Grid.for_domain(phi.domain, opts.grid_n)
        problem = DiscreteProblem.from_expression(grid, phi, parse_expression(opts.boundary))
        result = minimize(problem, opts.solver)
        row.energy, row.converged = result.energy, result.converged
        row.max_gradient = float(result.field.gradient_norm().max())
        center = np.zeros(n)
        row.gradient_alpha = campanato_fit(
            result.field, center, mode="gradient", rho_max=opts.rho_max
        ).alpha_hat
    except (NumericalError, ValueError) as e:
        row.status = f"failed: {e}"
        logger.warning("Sweep point p=%g q=%g beta=%s failed: %s", p, q, beta, e)
    return row


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("Ignoring %s=%r", THREADS_ENV, raw)
        return 1


def threshold_sweep(
    points: Sequence[tuple[float, float, float | None]],
    opts: SweepOptions | None = None,
) -> list[SweepRow]:
    """One row per (p, q, β) for t^p + |x1|^β t^q; β=None is the autonomous a ≡ 1."""
    opts = opts or SweepOptions()
    points = list(points)
    workers = min(_thread_count(), max(len(points), 1))
    logger.info("Sweeping %d parameter points with %d worker(s)", len(points), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda pt: _sweep_point(pt, opts), points))
    failed = sum(1 for r in rows if r.status != "ok")
    if failed:
        logger.warning("%d of %d sweep rows failed", failed, len(rows))
    return rows


def predicted_gamma0(p: float, q: float, beta: float, n: int, eps: float = 0.0) -> float:
    """β − n(q − p)(1 − ε)/p; positive exactly below the double phase threshold."""
    value = beta - n * (q - p) * (1 - eps) / p
    return 0.0 if math.isclose(value, 0.0, abs_tol=1e-14) else value

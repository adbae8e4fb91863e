"""Discrete φ-energies, their minimizer and the comparison problem on a ball.

E(u) = Σ_cells φ(x_c, |∇_h u|_c) hⁿ is minimized over interior nodal values
by gradient descent with two-point (Barzilai–Borwein) steps and Armijo
backtracking, warm-started from the discrete Laplace solve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import spsolve

from orlicz_reg.calculus import epsilon_regularize
from orlicz_reg.envelope import ball_envelope
from orlicz_reg.expression import Expression
from orlicz_reg.geometry import Ball, Domain
from orlicz_reg.grid import Grid, GridField, GridMismatchError
from orlicz_reg.phi import NumericalError, PhiError, PhiFunction

logger = logging.getLogger(__name__)

__all__ = [
    "ComparisonMetrics",
    "DiscreteProblem",
    "Energy",
    "ResolutionError",
    "SolveResult",
    "SolverError",
    "SolverOptions",
    "assemble_energy",
    "comparison_metrics",
    "lipschitz_proxy",
    "minimize",
    "oscillation_decay",
    "solve_comparison",
]

GRAD_FLOOR = 1e-10
MIN_CELLS_ACROSS = 8
SANDWICH_SLACK = 1e-6


class SolverError(NumericalError):
    pass


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiscreteProblem:
    """Dirichlet problem for the φ-energy on a masked grid.

    ``boundary`` holds nodal values; only the boundary nodes are read.
    """

    grid: Grid
    phi: PhiFunction
    boundary: np.ndarray
    eps: float = 0.0

    def __post_init__(self):
        if self.boundary.shape != (self.grid.node_count,):
            raise GridMismatchError("Boundary data does not match the grid")
        if not np.all(np.isfinite(self.boundary[self.grid.boundary_nodes])):
            raise ValueError("Boundary values must be finite")
        if self.eps < 0:
            raise ValueError(f"eps must be ≥ 0, got {self.eps}")
        if self.eps > 0 and not self.phi.is_autonomous:
            raise PhiError("ε-regularized energies need an autonomous φ")
        if self.grid.dimension != self.phi.dimension:
            raise ValueError("Grid and φ dimensions differ")
        if not self.grid.interior_nodes.any():
            raise ValueError("The grid has no interior node")

    @classmethod
    def from_expression(
        cls, grid: Grid, phi: PhiFunction, boundary: Expression, eps: float = 0.0
    ) -> DiscreteProblem:
        return cls(grid, phi, GridField.from_expression(grid, boundary).values, eps)

    @property
    def boundary_scale(self) -> float:
        return float(np.abs(self.boundary[self.grid.boundary_nodes]).max(initial=0.0))


class Energy:
    """E(u) and its gradient with respect to all nodal values."""

    def __init__(self, problem: DiscreteProblem):
        self.problem = problem
        self.grid = problem.grid
        self.D = self.grid.gradient_operator
        self.DT = self.D.T.tocsr()
        self.centers = self.grid.cell_centers
        self.volume = self.grid.cell_volume
        base = problem.phi
        self.base = base
        self.phi = epsilon_regularize(base, problem.eps) if problem.eps > 0 else base

    def _gradients(self, u: np.ndarray) -> np.ndarray:
        return (self.D @ u).reshape(self.grid.dimension, -1)

    def value(self, u: np.ndarray) -> float:
        g = self._gradients(u)
        norm = np.sqrt((g * g).sum(axis=0))
        return float(self.phi.value(self.centers, norm).sum() * self.volume)

    def flux(self, u: np.ndarray) -> np.ndarray:
        """(φ'(x,|g|)/|g|) g per cell, shape (n, C)."""
        g = self._gradients(u)
        norm = np.sqrt((g * g).sum(axis=0))
        small = norm < GRAD_FLOOR
        ratio = np.empty_like(norm)
        if np.any(~small):
            ratio[~small] = self.phi.derivative_ratio(self.centers[~small], norm[~small])
        if np.any(small):
            # φ'(ε+t)/(ε+t) with ε = GRAD_FLOOR
            shifted = GRAD_FLOOR + norm[small]
            ratio[small] = self.phi.derivative(self.centers[small], shifted) / shifted
        return ratio * g

    def divergence(self, u: np.ndarray) -> np.ndarray:
        """D^T flux, the discrete Euler–Lagrange operator at every node."""
        return self.DT @ self.flux(u).reshape(-1)

    def gradient(self, u: np.ndarray) -> np.ndarray:
        return self.divergence(u) * self.volume

    def __call__(self, u: np.ndarray) -> float:
        return self.value(u)


def assemble_energy(phi: PhiFunction, problem: DiscreteProblem) -> Energy:
    if phi is not problem.phi:
        problem = DiscreteProblem(problem.grid, phi, problem.boundary, problem.eps)
    return Energy(problem)


@dataclass
class SolverOptions:
    tol_e: float = 1e-12
    tol_el: float = 1e-8
    window: int = 10
    max_iterations: int = 200_000
    armijo: float = 1e-4
    max_backtracks: int = 60
    warm_start: bool = True


@dataclass
class SolveResult:
    field: GridField
    energy_trajectory: list[float]
    el_residual: float
    iterations: int
    converged: bool
    tol_el: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def energy(self) -> float:
        return self.energy_trajectory[-1]

    @property
    def grid(self) -> Grid:
        return self.field.grid


def _laplace_start(problem: DiscreteProblem) -> np.ndarray:
    """Harmonic-like interpolation: minimizer of Σ|∇_h u|² with the boundary data."""
    grid = problem.grid
    u = np.where(grid.boundary_nodes, problem.boundary, 0.0)
    interior = np.flatnonzero(grid.interior_nodes)
    D = grid.gradient_operator
    A = (D.T @ D).tocsr()
    A_ii = A[interior][:, interior].tocsc()
    rhs = -(A[interior] @ u)
    u[interior] = spsolve(A_ii, rhs)
    return u


def minimize(problem: DiscreteProblem, opts: SolverOptions | None = None) -> SolveResult:
    """BB steps with Armijo backtracking on the energy until both stopping tests pass."""
    opts = opts or SolverOptions()
    energy = Energy(problem)
    grid = problem.grid
    interior = grid.interior_nodes
    tol_el = opts.tol_el * (1.0 + problem.boundary_scale)

    if opts.warm_start:
        u = _laplace_start(problem)
    else:
        u = np.where(grid.boundary_nodes, problem.boundary, 0.0)
    e = energy(u)
    g = energy.gradient(u)[interior]
    residual = float(np.abs(g).max() / energy.volume)
    trajectory = [e]
    step = grid.h / max(float(np.abs(g).max()), 1e-300)
    converged = residual == 0.0
    iterations = 0
    notes: list[str] = []

    while not converged and iterations < opts.max_iterations:
        gg = float(g @ g)
        trial_step = step
        for _ in range(opts.max_backtracks):
            candidate = u.copy()
            candidate[interior] -= trial_step * g
            e_new = energy(candidate)
            if e_new <= e - opts.armijo * trial_step * gg:
                break
            trial_step *= 0.5
        else:
            # no step lowers the energy, so the decrease test holds trivially
            notes.append("line search stalled")
            logger.debug("Line search stalled at iteration %d", iterations)
            converged = residual <= tol_el
            break
        g_new = energy.gradient(candidate)[interior]
        s = candidate[interior] - u[interior]
        y = g_new - g
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0 else trial_step * 2.0
        u, e, g = candidate, e_new, g_new
        trajectory.append(e)
        iterations += 1
        residual = float(np.abs(g).max() / energy.volume)
        if len(trajectory) > opts.window:
            past = trajectory[-1 - opts.window]
            flat = (past - e) <= opts.tol_e * max(abs(e), 1e-300)
        else:
            flat = False
        converged = residual <= tol_el and (flat or residual == 0.0)
        if residual <= tol_el and not converged and iterations % 1000 == 0:
            logger.debug("Residual met, energy still moving at iteration %d", iterations)

    if converged:
        logger.info(
            "Converged after %d iterations: E=%.12g, residual=%.3g", iterations, e, residual
        )
    else:
        logger.warning(
            "Stopped without convergence after %d iterations: residual=%.3g (tol %.3g)",
            iterations, residual, tol_el,
        )
    return SolveResult(
        field=GridField(grid, u),
        energy_trajectory=trajectory,
        el_residual=residual,
        iterations=iterations,
        converged=converged,
        tol_el=tol_el,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Comparison problem
# ---------------------------------------------------------------------------


def _check_sandwich(phi: PhiFunction, reg: PhiFunction, ball: Ball) -> None:
    """φ⁻_B(1) ≤ φ̃(1) ≤ (q/p)(1+r)^q φ⁺_B(1) for any φ̃ built from φ on *ball*."""
    p, q = phi.lower_exponent, phi.upper_exponent
    lower = ball_envelope(phi, ball, 1.0, "inf")
    upper = ball_envelope(phi, ball, 1.0, "sup") * (q / p) * (1 + ball.radius) ** q
    value = float(reg.value(np.asarray(ball.center, dtype=float), 1.0))
    if not lower * (1 - SANDWICH_SLACK) <= value <= upper * (1 + SANDWICH_SLACK):
        raise PhiError(
            f"Comparison φ̃(1) = {value:.6g} lies outside [{lower:.6g}, {upper:.6g}],"
            f" it was not built from φ on B_{ball.radius:g}"
        )


def solve_comparison(
    phi: PhiFunction,
    reg: PhiFunction,
    u: SolveResult,
    ball: Ball,
    opts: SolverOptions | None = None,
) -> SolveResult:
    """Minimize the autonomous φ̃-energy on the discrete *ball* with trace u."""
    grid = u.grid
    if grid.cells_across(ball.radius) < MIN_CELLS_ACROSS:
        raise ResolutionError(
            f"Ball of radius {ball.radius} spans {grid.cells_across(ball.radius):.1f} cells,"
            f" need {MIN_CELLS_ACROSS}"
        )
    if not reg.is_autonomous:
        raise PhiError("The comparison energy must be autonomous")
    _check_sandwich(phi, reg, ball)
    sub = grid.restrict(Domain.disc(ball.center, ball.radius))
    trace = u.field.on(sub).values
    problem = DiscreteProblem(sub, reg, trace)
    logger.info(
        "Comparison problem on B_%g(%s): %d cells", ball.radius, ball.center, sub.cell_count
    )
    return minimize(problem, opts)


@dataclass(frozen=True)
class ComparisonMetrics:
    m2: float
    m1: float
    normalizer: float

    @property
    def relative(self) -> float:
        return self.m1 / self.normalizer


def comparison_metrics(
    u: SolveResult | GridField, v: SolveResult | GridField, reg: PhiFunction, ball: Ball
) -> ComparisonMetrics:
    """Averages over the cells of B of (φ̃'(s)/s)|Du−Dv|², |Du−Dv| and |Du| (+1)."""
    u_field = u.field if isinstance(u, SolveResult) else u
    v_field = v.field if isinstance(v, SolveResult) else v
    if not u_field.grid.same_lattice(v_field.grid):
        raise GridMismatchError("u and v live on different lattices")
    sub = v_field.grid
    du = u_field.on(sub).gradient()
    dv = v_field.gradient()
    cells = sub.cells_in_ball(ball.center, ball.radius)
    if not cells.any():
        raise ValueError("No cell of the comparison grid lies in the ball")
    du, dv = du[cells], dv[cells]
    diff = np.linalg.norm(du - dv, axis=1)
    s = np.linalg.norm(du, axis=1) + np.linalg.norm(dv, axis=1)
    weight = np.zeros_like(s)
    positive = s > 0
    if positive.any():
        center = np.asarray(ball.center, dtype=float)
        weight[positive] = reg.derivative_ratio(center, s[positive])
    return ComparisonMetrics(
        m2=float(np.mean(weight * diff ** 2)),
        m1=float(np.mean(diff)),
        normalizer=float(np.mean(np.linalg.norm(du, axis=1)) + 1.0),
    )


# ---------------------------------------------------------------------------
# Regularity proxies for autonomous solves
# ---------------------------------------------------------------------------


def lipschitz_proxy(field: GridField, center, rho: float) -> float:
    """sup_{B_{ρ/2}} |∇_h v| / ⨍_{B_ρ} |∇_h v|."""
    grid = field.grid
    norm = field.gradient_norm()
    inner = grid.cells_in_ball(center, rho / 2)
    outer = grid.cells_in_ball(center, rho)
    if not inner.any():
        raise ResolutionError(f"No cell center within ρ/2 = {rho / 2}")
    mean = float(norm[outer].mean())
    if mean == 0:
        return 0.0
    return float(norm[inner].max() / mean)


def oscillation_decay(
    field: GridField, center, rho: float, taus=(1.0, 0.5, 0.25, 0.125)
) -> tuple[float, list[tuple[float, float]]]:
    """Fitted α₀ in ⨍_{B_{τρ}}|Dv − (Dv)_{τρ}| ≤ C τ^{α₀} ⨍_{B_ρ}|Dv|."""
    grid = field.grid
    grad = field.gradient()
    scale = float(np.linalg.norm(grad[grid.cells_in_ball(center, rho)], axis=1).mean())
    rows = []
    for tau in taus:
        cells = grid.cells_in_ball(center, tau * rho)
        if cells.sum() < 4:
            continue
        local = grad[cells]
        osc = float(np.linalg.norm(local - local.mean(axis=0), axis=1).mean())
        rows.append((float(tau), osc / scale if scale > 0 else 0.0))
    usable = [(t, o) for t, o in rows if o > 0]
    if len(usable) < 2:
        return float("inf") if rows else float("nan"), rows
    slope = np.polyfit(np.log([t for t, _ in usable]), np.log([o for _, o in usable]), 1)[0]
    return float(slope), rows

"""Derived objects of a Φ-function: inverse, conjugate, φ_ε, growth constants.

Also holds the inequality suites (Young with κ, two-sided derivative bounds,
vector comparability) that return realized constants on samples.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.optimize.elementwise import find_minimum

from orlicz_reg.geometry import Domain, domain_samples
from orlicz_reg.phi import (
    Family,
    NumericalError,
    PhiError,
    PhiFunction,
    PhiSpec,
    _broadcast,
    _check_point,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ConjugateError",
    "ConjugatePhi",
    "EpsilonRegularizedPhi",
    "GrowthEnvelope",
    "GrowthError",
    "InverseError",
    "YoungKappaReport",
    "conjugate",
    "conjugate_derivative_gap",
    "derivative_bounds",
    "epsilon_regularize",
    "growth_constants",
    "inverse",
    "monotone_inverse",
    "rate_constants",
    "vector_comparability",
    "young_gap",
    "young_kappa_constants",
]

DEFAULT_INVERSE_ITERATIONS = 80
DEFAULT_BRACKET_GROWTH = 4.0
DEFAULT_MAX_GROWTH_STEPS = 64
INVERSE_TOL = 1e-10

# 64 points per decade over [1e-8, 1e8]
CONJUGATE_GRID = np.logspace(-8.0, 8.0, 16 * 64 + 1)


class InverseError(NumericalError):
    pass


class ConjugateError(NumericalError):
    pass


class GrowthError(NumericalError):
    pass


# ---------------------------------------------------------------------------
# Inverse
# ---------------------------------------------------------------------------


def monotone_inverse(
    func: Callable[[np.ndarray], np.ndarray],
    s,
    *,
    iterations: int = DEFAULT_INVERSE_ITERATIONS,
    growth: float = DEFAULT_BRACKET_GROWTH,
    max_growth_steps: int = DEFAULT_MAX_GROWTH_STEPS,
    initial_upper: float | np.ndarray = 1.0,
) -> np.ndarray:
    """Left-continuous inverse inf{τ ≥ 0 : func(τ) ≥ s}, elementwise.

    ``func`` must be nondecreasing and accept arrays shaped like ``s``.
    """
    s = np.asarray(s, dtype=float)
    if np.any(np.isnan(s)) or np.any(s < 0):
        raise ValueError("inverse needs s ≥ 0")
    lo = np.zeros_like(s)
    hi = np.broadcast_to(np.asarray(initial_upper, dtype=float), s.shape).copy()
    for _ in range(max_growth_steps):
        short = func(hi) < s
        if not np.any(short):
            break
        lo = np.where(short, hi, lo)
        hi = np.where(short, hi * growth, hi)
    else:
        if np.any(func(hi) < s):
            raise InverseError(
                f"Value not attained within {max_growth_steps} bracket expansions"
            )
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        above = func(mid) >= s
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return np.where(s > 0, hi, 0.0)


def inverse(phi: PhiFunction, x, s) -> float | np.ndarray:
    """φ^{-1}(x, s) by monotone bisection."""
    x = _check_point(phi, x)
    s_arr = np.asarray(s, dtype=float)
    out = monotone_inverse(lambda tau: phi.value(x, tau), s_arr)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Conjugate
# ---------------------------------------------------------------------------


def _power_conjugate(phi: PhiSpec, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = phi.params["p"]
    c = phi.params.get("scale", 1.0)
    tau = (s / (c * p)) ** (1.0 / (p - 1.0))
    return (p - 1.0) / p * s * tau, tau


def _conjugate_search(phi: PhiFunction, x: np.ndarray, s: np.ndarray):
    """Values and maximizers of τ ↦ sτ − φ(x, τ) for a single point x."""
    s = np.asarray(s, dtype=float)
    if isinstance(phi, PhiSpec) and phi.family is Family.POWER:
        return _power_conjugate(phi, s)
    flat = s.reshape(-1)
    grid = CONJUGATE_GRID
    values = phi.value(x, grid)
    objective = flat[:, None] * grid[None, :] - values[None, :]
    idx = np.argmax(objective, axis=1)
    rows = np.arange(flat.size)
    best = objective[rows, idx]
    tau = grid[idx].copy()
    last = grid.size - 1
    if np.any((idx == last) & (flat > 0)):
        raise ConjugateError(
            "Supremum of sτ − φ(τ) not bracketed on [1e-8, 1e8]; φ grows too slowly"
        )
    interior = (idx > 0) & (idx < last)
    if np.any(interior):
        i = idx[interior]
        res = find_minimum(
            lambda t, s_: phi.value(x, t) - s_ * t,
            (grid[i - 1], grid[i], grid[i + 1]),
            args=(flat[interior],),
        )
        refined = -np.asarray(res.f_x)
        better = refined > best[interior]
        sub_best = best[interior]
        sub_tau = tau[interior]
        sub_best[better] = refined[better]
        sub_tau[better] = np.asarray(res.x)[better]
        best[interior] = sub_best
        tau[interior] = sub_tau
    negative = best <= 0
    best[negative] = 0.0
    tau[negative] = 0.0
    return best.reshape(s.shape), tau.reshape(s.shape)


def conjugate(phi: PhiFunction, x, s) -> float | np.ndarray:
    """φ*(x, s) = sup_τ (sτ − φ(x, τ))."""
    x = _check_point(phi, x)
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise PhiError("conjugate needs s ≥ 0")
    value, _ = _conjugate_search(phi, x, s_arr)
    return float(value) if value.ndim == 0 else value


def _anchor(domain: Domain) -> np.ndarray:
    return domain_samples(domain, 1, seed=None)[0]


def _pointwise(x: np.ndarray, t: np.ndarray, kernel) -> np.ndarray:
    """Apply ``kernel(point, t_values)`` over the distinct points of *x*."""
    shape = np.broadcast_shapes(x.shape[:-1], t.shape)
    xs = np.broadcast_to(x, shape + x.shape[-1:]).reshape(-1, x.shape[-1])
    ts = np.broadcast_to(t, shape).reshape(-1)
    out = np.empty(ts.shape)
    unique, inverse_idx = np.unique(xs, axis=0, return_inverse=True)
    inverse_idx = inverse_idx.reshape(-1)
    for k, point in enumerate(unique):
        mask = inverse_idx == k
        out[mask] = kernel(point, ts[mask])
    return out.reshape(shape)


@dataclass(frozen=True, eq=False)
class ConjugatePhi(PhiFunction):
    """The conjugate φ* as a Φ-function in its own right."""

    base: PhiFunction

    @property
    def dimension(self) -> int:
        return self.base.dimension

    @property
    def domain(self) -> Domain:
        return self.base.domain

    @property
    def lower_exponent(self) -> float:
        q = self.base.upper_exponent
        return q / (q - 1.0)

    @property
    def upper_exponent(self) -> float:
        p = self.base.lower_exponent
        return p / (p - 1.0)

    @property
    def is_autonomous(self) -> bool:
        return self.base.is_autonomous

    @functools.cached_property
    def _point(self) -> np.ndarray:
        return _anchor(self.base.domain)

    def _evaluate(self, x, s, which: int) -> np.ndarray:
        x, s = _broadcast(x, s)
        if self.base.is_autonomous:
            out = _conjugate_search(self.base, self._point, s)[which]
            return np.broadcast_to(out, np.broadcast_shapes(x.shape[:-1], s.shape))
        return _pointwise(x, s, lambda pt, ss: _conjugate_search(self.base, pt, ss)[which])

    def value(self, x, t):
        return self._evaluate(x, t, 0)

    def derivative(self, x, t):
        # right-derivative of φ* is the maximizer of sτ − φ(τ)
        return self._evaluate(x, t, 1)

    def envelope_coefficients(self):
        return self.base.envelope_coefficients()


# ---------------------------------------------------------------------------
# ε-regularization
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EpsilonRegularizedPhi(PhiFunction):
    """φ_ε(t) = ∫_0^t φ'(ε+s) s/(ε+s) ds for autonomous φ."""

    base: PhiFunction
    eps: float

    TABLE_PER_DECADE = 32
    TABLE_DECADES = (-6, 8)
    GAUSS_ORDER = 8

    @property
    def dimension(self) -> int:
        return self.base.dimension

    @property
    def domain(self) -> Domain:
        return self.base.domain

    @property
    def lower_exponent(self) -> float:
        return min(2.0, self.base.lower_exponent)

    @property
    def upper_exponent(self) -> float:
        return max(2.0, self.base.upper_exponent)

    @property
    def is_autonomous(self) -> bool:
        return True

    @functools.cached_property
    def _point(self) -> np.ndarray:
        return _anchor(self.base.domain)

    def _integrand(self, s):
        s = np.asarray(s, dtype=float)
        return self.base.derivative(self._point, self.eps + s) * s / (self.eps + s)

    @functools.cached_property
    def _table(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.TABLE_DECADES
        nodes = self.eps * np.logspace(lo, hi, (hi - lo) * self.TABLE_PER_DECADE + 1)
        cumulative = np.empty_like(nodes)
        acc, _ = integrate.quad(lambda s: float(self._integrand(s)), 0.0, nodes[0])
        cumulative[0] = acc
        for k in range(1, nodes.size):
            piece, _ = integrate.quad(
                lambda s: float(self._integrand(s)), nodes[k - 1], nodes[k],
                epsabs=0.0, epsrel=1e-13,
            )
            acc += piece
            cumulative[k] = acc
        logger.debug("φ_ε table built: %d nodes, eps=%g", nodes.size, self.eps)
        return nodes, cumulative

    def _gauss(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        xi, w = np.polynomial.legendre.leggauss(self.GAUSS_ORDER)
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        points = mid[..., None] + half[..., None] * xi
        return half * (self._integrand(points) * w).sum(axis=-1)

    def value(self, x, t):
        x, t = _broadcast(x, t)
        if np.any(t < 0):
            raise PhiError("φ_ε(t) needs t ≥ 0")
        nodes, cumulative = self._table
        flat = t.reshape(-1)
        k = np.searchsorted(nodes, flat, side="right") - 1
        inside = k < nodes.size - 1
        start = np.where(k >= 0, nodes[np.clip(k, 0, None)], 0.0)
        base = np.where(k >= 0, cumulative[np.clip(k, 0, None)], 0.0)
        out = base + self._gauss(start, flat)
        for i in np.flatnonzero(~inside):
            extra, _ = integrate.quad(
                lambda s: float(self._integrand(s)), nodes[-1], flat[i], limit=200
            )
            out[i] = cumulative[-1] + extra
        out = out.reshape(t.shape)
        return np.broadcast_to(out, np.broadcast_shapes(x.shape[:-1], t.shape))

    def derivative(self, x, t):
        x, t = _broadcast(x, t)
        out = self._integrand(t)
        return np.broadcast_to(out, np.broadcast_shapes(x.shape[:-1], t.shape))

    def derivative_ratio(self, x, t):
        x, t = _broadcast(x, t)
        s = self.eps + t
        out = self.base.derivative(self._point, s) / s
        return np.broadcast_to(out, np.broadcast_shapes(x.shape[:-1], t.shape))


def epsilon_regularize(phi: PhiFunction, eps: float) -> EpsilonRegularizedPhi:
    """Non-degenerate approximation φ_ε with φ_ε'(t)/t = φ'(ε+t)/(ε+t)."""
    if not eps > 0:
        raise PhiError(f"eps must be positive, got {eps}")
    if not phi.is_autonomous:
        raise PhiError("ε-regularization is defined for autonomous φ only")
    return EpsilonRegularizedPhi(phi, float(eps))


# ---------------------------------------------------------------------------
# Growth constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthEnvelope:
    p_hat: float
    q_hat: float
    L_hat: float
    a0_lo: float
    a0_hi: float


DEFAULT_GAMMA_GRID = np.round(np.linspace(1.0, 10.0, 901), 10)
DEFAULT_GROWTH_L_CAP = 1.0 + 1e-9


def rate_constants(
    log_values: np.ndarray, log_t: np.ndarray, gammas: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Realized (aInc)_γ and (aDec)_γ constants for every γ.

    ``log_values`` has shape (m, T) over increasing ``log_t`` (T,). Returns two
    arrays of shape (G,): max over t<s of h(t)/h(s) and of h(s)/h(t), with
    h = φ/t^γ.
    """
    h = log_values[None, :, :] - gammas[:, None, None] * log_t[None, None, :]
    run_max = np.maximum.accumulate(h, axis=2)
    run_min = np.minimum.accumulate(h, axis=2)
    inc = (run_max[:, :, :-1] - h[:, :, 1:]).max(axis=(1, 2))
    dec = (h[:, :, 1:] - run_min[:, :, :-1]).max(axis=(1, 2))
    return np.exp(np.maximum(inc, 0.0)), np.exp(np.maximum(dec, 0.0))


def growth_constants(
    phi: PhiFunction,
    domain_points: np.ndarray,
    t_range: tuple[float, float],
    *,
    l_cap: float = DEFAULT_GROWTH_L_CAP,
    gamma_grid: np.ndarray = DEFAULT_GAMMA_GRID,
    t_count: int = 64,
) -> GrowthEnvelope:
    """Ratio scan for the largest p̂ and smallest q̂ with constants ≤ l_cap."""
    t_lo, t_hi = t_range
    if not 0 < t_lo < t_hi:
        raise ValueError(f"t_range must satisfy 0 < t_lo < t_hi, got {t_range}")
    points = np.atleast_2d(np.asarray(domain_points, dtype=float))
    if points.size == 0:
        raise ValueError("growth_constants needs at least one domain sample")
    t = np.logspace(np.log10(t_lo), np.log10(t_hi), t_count)
    values = phi.value(points[:, None, :], t[None, :])
    if np.any(values <= 0):
        raise GrowthError("φ vanishes at some positive t; no (aInc)_p with p > 1")
    inc, dec = rate_constants(np.log(values), np.log(t), gamma_grid)
    passing_inc = np.flatnonzero(inc <= l_cap)
    passing_dec = np.flatnonzero(dec <= l_cap)
    if passing_inc.size == 0 or gamma_grid[passing_inc.max()] <= 1.0:
        raise GrowthError("No γ > 1 passes (aInc)_γ; φ violates the standing growth assumptions")
    if passing_dec.size == 0:
        raise GrowthError(f"No γ ≤ {gamma_grid[-1]} passes (aDec)_γ")
    i_p = passing_inc.max()
    i_q = passing_dec.min()
    ones = phi.value(points, 1.0)
    envelope = GrowthEnvelope(
        p_hat=float(gamma_grid[i_p]),
        q_hat=float(max(gamma_grid[i_q], gamma_grid[i_p])),
        L_hat=float(max(inc[i_p], dec[i_q], 1.0)),
        a0_lo=float(ones.min()),
        a0_hi=float(ones.max()),
    )
    logger.info(
        "Growth envelope: p_hat=%.4g q_hat=%.4g L_hat=%.6g",
        envelope.p_hat, envelope.q_hat, envelope.L_hat,
    )
    return envelope


# ---------------------------------------------------------------------------
# Inequality suites
# ---------------------------------------------------------------------------


def young_gap(phi: PhiFunction, x, t, s) -> np.ndarray:
    """φ(x,t) + φ*(x,s) − ts on the grid t × s (nonnegative by Young)."""
    x = _check_point(phi, x)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    phi_t = phi.value(x, t)
    phi_star = _conjugate_search(phi, x, s)[0]
    return phi_t[:, None] + phi_star[None, :] - t[:, None] * s[None, :]


@dataclass(frozen=True)
class YoungKappaReport:
    min_gap_lower: float
    min_gap_upper: float
    constant_lower: float
    constant_upper: float


def young_kappa_constants(phi: PhiFunction, x, t, s, kappa) -> YoungKappaReport:
    """Both κ-refined Young inequalities on the grid t × s × κ.

    First form:  ts ≤ φ(κ^{1/p}t) + φ*(κ^{-1/p}s) ≲ κφ(t) + κ^{-1/(p-1)}φ*(s).
    Second form: ts ≤ φ(κ^{-1/q'}t) + φ*(κ^{1/q'}s) ≲ κ^{-(q-1)}φ(t) + κφ*(s).
    Gaps are the first inequalities (≥ 0), constants the realized "≲".
    """
    x = _check_point(phi, x)
    p, q = phi.lower_exponent, phi.upper_exponent
    q_dual = q / (q - 1.0)
    t = np.asarray(t, dtype=float)[:, None, None]
    s = np.asarray(s, dtype=float)[None, :, None]
    k = np.asarray(kappa, dtype=float)[None, None, :]

    def star(v):
        return _conjugate_search(phi, x, v)[0]

    ts = t * s
    phi_t = phi.value(x, t)
    star_s = star(s)

    mid_lower = phi.value(x, k ** (1 / p) * t) + star(k ** (-1 / p) * s)
    rhs_lower = k * phi_t + k ** (-1 / (p - 1)) * star_s
    mid_upper = phi.value(x, k ** (-1 / q_dual) * t) + star(k ** (1 / q_dual) * s)
    rhs_upper = k ** (-(q - 1)) * phi_t + k * star_s

    with np.errstate(divide="ignore", invalid="ignore"):
        c_lower = np.where(rhs_lower > 0, mid_lower / rhs_lower, 1.0)
        c_upper = np.where(rhs_upper > 0, mid_upper / rhs_upper, 1.0)
    return YoungKappaReport(
        min_gap_lower=float((mid_lower - ts).min()),
        min_gap_upper=float((mid_upper - ts).min()),
        constant_lower=float(c_lower.max()),
        constant_upper=float(c_upper.max()),
    )


def derivative_bounds(phi: PhiFunction, x, t) -> tuple[float, float]:
    """Extremes of φ(x,t) / (tφ'(x,t)) over samples with t > 0.

    The upper value is ≤ 1 for convex φ; the lower one is the realized
    constant of tφ'/(2^{γ+1}L) ≤ φ.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    ratio = phi.value(x, t) / (t * phi.derivative(x, t))
    return float(ratio.min()), float(ratio.max())


def conjugate_derivative_gap(phi: PhiFunction, x, t) -> np.ndarray:
    """tφ'(x,t) − φ*(x, φ'(x,t)); nonnegative for convex φ."""
    x = _check_point(phi, x)
    t = np.asarray(t, dtype=float)
    slope = phi.derivative(x, t)
    return t * slope - _conjugate_search(phi, x, slope)[0]


def vector_comparability(phi: PhiFunction, u: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    """Range of the ratio between the monotonicity form and its quadratic proxy.

    Ratio of (φ'(|u|)/|u| u − φ'(|v|)/|v| v)·(u − v) to
    φ'(|u|+|v|)/(|u|+|v|) |u − v|² over paired vector samples (rows of
    *u*, *v*); autonomous φ only.
    """
    if not phi.is_autonomous:
        raise PhiError("vector comparability is stated for autonomous φ")
    point = _anchor(phi.domain)
    u = np.atleast_2d(np.asarray(u, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    diff = u - v
    keep = (nu > 0) & (nv > 0) & (np.linalg.norm(diff, axis=1) > 0)
    u, v, nu, nv, diff = u[keep], v[keep], nu[keep], nv[keep], diff[keep]
    flux = (
        phi.derivative_ratio(point, nu)[:, None] * u
        - phi.derivative_ratio(point, nv)[:, None] * v
    )
    lhs = (flux * diff).sum(axis=1)
    rhs = phi.derivative_ratio(point, nu + nv) * (diff * diff).sum(axis=1)
    ratio = lhs / rhs
    return float(ratio.min()), float(ratio.max())

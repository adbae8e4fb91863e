"""Regularized autonomous approximation φ̃ on a ball and the transfer function θ.

Pipeline on B = B_{2r}(x₀)::

    thresholds      t₁ = (φ⁻)^{-1}(ω(2r)),  t₂ = (φ⁻)^{-1}(|B|^{-1})
    PsiPhiB         ψ_B = φ'(x₀,·) on [t₁,t₂], (p−1)-power tails, φ_B = ∫ψ_B
    mollify         φ̃(t) = ∫_0^1 φ_B(t(1+rs)) η(s) ds
    verify_approx   sandwich / closeness / growth checks with realized constants
    build_theta     θ(x,t) = φ(x, φ̃^{-1}(t))^{1+σ} with its condition reports
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

from orlicz_reg.calculus import monotone_inverse, rate_constants
from orlicz_reg.conditions import (
    ConditionReport,
    STRICT_SLACK,
    check_a0,
    check_a1,
    check_rate_condition,
)
from orlicz_reg.envelope import BallEnvelope
from orlicz_reg.geometry import Ball, Domain, domain_samples
from orlicz_reg.phi import NumericalError, PhiError, PhiFunction, _broadcast

logger = logging.getLogger(__name__)

__all__ = [
    "ApproxReport",
    "ConstructionError",
    "Mollifier",
    "PsiPhiB",
    "RadiusTooLargeError",
    "RegularizedPhi",
    "ThetaFunction",
    "build_psi_phi_B",
    "build_theta",
    "mollify",
    "regularize_on_ball",
    "thresholds",
    "verify_approx",
]

DEFAULT_TABLE_NODES = 512
DEFAULT_TABLE_SPAN = 100.0
DEFAULT_QUAD_RTOL = 1e-12
QUAD_ERROR_LIMIT = 1e-8
CONTINUITY_TOL = 1e-12
INVERSE_ITERATIONS = 60
# ω(2r) = 0 would put t₁ at the origin
OMEGA_FLOOR = 1e-12


class RadiusTooLargeError(ValueError):
    pass


class ConstructionError(NumericalError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


def _omega_value(omega, radius: float) -> float:
    return float(omega(radius)) if callable(omega) else float(omega)


# ---------------------------------------------------------------------------
# Thresholds and the piecewise profile
# ---------------------------------------------------------------------------


def thresholds(
    phi: PhiFunction, ball: Ball, omega, *, seed: int | None = 0
) -> tuple[float, float]:
    """t₁, t₂ from the infimum envelope over B_{2r}; *ball* is B_r.

    *omega* is a ModulusOfContinuity, any callable of r, or the number ω(2r).
    """
    big = ball.scaled(2.0)
    if ball.radius > 0.5:
        raise RadiusTooLargeError(f"r = {ball.radius} exceeds 1/2")
    omega_2r = _omega_value(omega, big.radius)
    env = BallEnvelope(phi, [ball.center], big.radius, seed=seed)
    at_one = env.evaluate(1.0)
    L = max(float(at_one.upper[0, 0]), 1.0 / float(at_one.lower[0, 0]), 1.0)
    if omega_2r > 1.0 / L:
        raise RadiusTooLargeError(f"ω(2r) = {omega_2r:.6g} exceeds 1/L = {1.0 / L:.6g}")
    if big.volume > 1.0 / (2.0 * L):
        raise RadiusTooLargeError(
            f"|B_2r| = {big.volume:.6g} exceeds 1/(2L) = {1.0 / (2.0 * L):.6g}"
        )
    t1, t2 = env.lower_inverse([max(omega_2r, OMEGA_FLOOR), 1.0 / big.volume])[0]
    assert t1 <= 1.0 <= t2, f"Thresholds out of order: t1={t1}, t2={t2}"
    logger.debug("Thresholds on B_%g(%s): t1=%.6g t2=%.6g", big.radius, ball.center, t1, t2)
    return float(t1), float(t2)


@dataclass(frozen=True, eq=False)
class PsiPhiB:
    """ψ_B and φ_B = ∫ψ_B: φ'(x₀,·) on [t₁,t₂] with (p−1)-power tails."""

    phi: PhiFunction
    center: np.ndarray
    t1: float
    t2: float
    p: float
    a1: float
    a2: float

    @functools.cached_property
    def _phi_t1(self) -> float:
        return float(self.phi.value(self.center, self.t1))

    @functools.cached_property
    def _phi_t2(self) -> float:
        return float(self.phi.value(self.center, self.t2))

    @property
    def value_t1(self) -> float:
        return self.a1 * self.t1 / self.p

    @property
    def value_t2(self) -> float:
        return self.value_t1 + self._phi_t2 - self._phi_t1

    @property
    def continuity_residuals(self) -> tuple[float, float]:
        inner = self.phi.derivative(self.center, np.array([self.t1, self.t2]))
        return (
            abs(self.a1 - inner[0]) / max(abs(inner[0]), 1e-300),
            abs(self.a2 - inner[1]) / max(abs(inner[1]), 1e-300),
        )

    def derivative(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        mid = np.clip(t, self.t1, self.t2)
        inner = self.phi.derivative(self.center, mid)
        low = self.a1 * (t / self.t1) ** (self.p - 1)
        high = self.a2 * (t / self.t2) ** (self.p - 1)
        return np.where(t < self.t1, low, np.where(t > self.t2, high, inner))

    def value(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        mid = np.clip(t, self.t1, self.t2)
        inner = self.value_t1 + self.phi.value(self.center, mid) - self._phi_t1
        low = self.value_t1 * (t / self.t1) ** self.p
        high = self.value_t2 + self.a2 * self.t2 / self.p * ((t / self.t2) ** self.p - 1.0)
        return np.where(t < self.t1, low, np.where(t > self.t2, high, inner))


def build_psi_phi_B(phi: PhiFunction, ball: Ball, t1: float, t2: float) -> PsiPhiB:
    center = np.asarray(ball.center, dtype=float)
    a1, a2 = phi.derivative(center, np.array([t1, t2]))
    profile = PsiPhiB(
        phi=phi, center=center, t1=t1, t2=t2, p=phi.lower_exponent, a1=float(a1), a2=float(a2)
    )
    worst = max(profile.continuity_residuals)
    if worst > CONTINUITY_TOL:
        raise ConstructionError(f"ψ_B discontinuous at the thresholds (residual {worst:.3g})")
    return profile


# ---------------------------------------------------------------------------
# Mollification
# ---------------------------------------------------------------------------


class Mollifier:
    """η(s) = exp(−1/(1 − (2s−1)²)) on (0, 1), normalised to unit mass."""

    @staticmethod
    def _raw(s):
        s = np.asarray(s, dtype=float)
        u = 2.0 * s - 1.0
        inside = np.abs(u) < 1.0
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(inside, np.exp(-1.0 / np.where(inside, 1.0 - u * u, 1.0)), 0.0)

    @functools.cached_property
    def mass(self) -> float:
        return integrate.quad(lambda s: float(self._raw(s)), 0.0, 1.0, epsabs=0.0, epsrel=1e-14)[0]

    def __call__(self, s):
        return self._raw(s) / self.mass

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        u = 2.0 * s - 1.0
        inside = np.abs(u) < 1.0
        denom = np.where(inside, 1.0 - u * u, 1.0)
        return np.where(inside, self(s) * (-4.0 * u / denom ** 2), 0.0)

    @functools.lru_cache(maxsize=64)
    def power_moment(self, r: float, power: float) -> float:
        """∫_0^1 (1 + rs)^power η(s) ds."""
        return integrate.quad(
            lambda s: (1.0 + r * s) ** power * float(self(s)), 0.0, 1.0, epsabs=0.0, epsrel=1e-14
        )[0]


def _quad_vec(func, label: str) -> np.ndarray:
    result, error = integrate.quad_vec(func, 0.0, 1.0, epsabs=0.0, epsrel=DEFAULT_QUAD_RTOL)
    if error > QUAD_ERROR_LIMIT:
        raise ConstructionError(f"Quadrature for {label} missed tolerance (error {error:.3g})")
    return result


@dataclass(frozen=True, eq=False)
class RegularizedPhi(PhiFunction):
    """φ̃ as an autonomous Φ-function, tabulated with exact power tails.

    Table values inside ``[t₁/100, 100·t₂]`` come from quadrature; between
    nodes a cubic Hermite spline in log-log coordinates is used.
    """

    base: PhiFunction
    ball: Ball
    omega_2r: float
    profile: PsiPhiB
    mollifier: Mollifier
    nodes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    derivs: np.ndarray = field(repr=False)
    second: np.ndarray = field(repr=False)

    @property
    def t1(self) -> float:
        return self.profile.t1

    @property
    def t2(self) -> float:
        return self.profile.t2

    @property
    def a1(self) -> float:
        return self.profile.a1

    @property
    def a2(self) -> float:
        return self.profile.a2

    @property
    def r(self) -> float:
        return self.ball.radius

    @property
    def dimension(self) -> int:
        return self.base.dimension

    @property
    def domain(self) -> Domain:
        return self.base.domain

    @property
    def lower_exponent(self) -> float:
        return self.base.lower_exponent

    @property
    def upper_exponent(self) -> float:
        return self.base.upper_exponent

    @property
    def is_autonomous(self) -> bool:
        return True

    @functools.cached_property
    def _moment(self) -> float:
        return self.mollifier.power_moment(self.r, self.profile.p)

    @functools.cached_property
    def _splines(self) -> tuple[CubicHermiteSpline, CubicHermiteSpline]:
        log_t = np.log(self.nodes)
        value = CubicHermiteSpline(
            log_t, np.log(self.values), self.nodes * self.derivs / self.values
        )
        slope = CubicHermiteSpline(
            log_t, np.log(self.derivs), self.nodes * self.second / self.derivs
        )
        return value, slope

    def _tails(self, t: np.ndarray):
        """Exact value, first and second derivative outside the table."""
        prof = self.profile
        m = self._moment
        psi = prof.derivative(t)
        high = t > self.nodes[-1]
        base_value = np.where(
            high,
            prof.value_t2 - prof.a2 * prof.t2 / prof.p
            + m * prof.a2 * prof.t2 / prof.p * (t / prof.t2) ** prof.p,
            prof.value(t) * m,
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            second = np.where(t > 0, (prof.p - 1.0) * psi * m / t, 0.0)
        return base_value, psi * m, second

    def _evaluate(self, t: np.ndarray, which: int) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        inside = (t >= self.nodes[0]) & (t <= self.nodes[-1])
        outside = (t > 0) & ~inside
        if np.any(inside):
            spline = self._splines[which]
            out[inside] = np.exp(spline(np.log(t[inside])))
        if np.any(outside):
            out[outside] = self._tails(t[outside])[which]
        return out

    def value(self, x, t):
        x, t = _broadcast(x, t)
        if np.any(t < 0):
            raise PhiError("φ̃(t) needs t ≥ 0")
        out = self._evaluate(t, 0)
        return np.broadcast_to(out, np.broadcast_shapes(x.shape[:-1], t.shape))

    def derivative(self, x, t):
        x, t = _broadcast(x, t)
        out = self._evaluate(t, 1)
        return np.broadcast_to(out, np.broadcast_shapes(x.shape[:-1], t.shape))

    def second_derivative(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inside = (t >= self.nodes[0]) & (t <= self.nodes[-1])
        out = np.zeros(t.shape)
        if np.any(inside):
            out[inside] = np.interp(np.log(t[inside]), np.log(self.nodes), self.second)
        outside = (t > 0) & ~inside
        if np.any(outside):
            out[outside] = self._tails(t[outside])[2]
        return out

    # ---- Direct quadrature ----

    def exact_value(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        prof, r, eta = self.profile, self.r, self.mollifier
        return _quad_vec(lambda s: prof.value(t * (1 + r * s)) * eta(s), "φ̃")

    def exact_derivative(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        prof, r, eta = self.profile, self.r, self.mollifier
        return _quad_vec(
            lambda s: (1 + r * s) * prof.derivative(t * (1 + r * s)) * eta(s), "φ̃'"
        )

    # ---- Inverse ----

    def inverse(self, s) -> np.ndarray:
        """φ̃^{-1}(s): log-log table guess, then bisection."""
        s = np.asarray(s, dtype=float)
        positive = np.maximum(s, np.finfo(float).tiny)
        guess = np.exp(np.interp(np.log(positive), np.log(self.values), np.log(self.nodes)))
        # outside the table the guess is clamped; growth of the bracket corrects it
        return monotone_inverse(
            lambda tau: self._evaluate(tau, 0),
            s,
            initial_upper=guess * 1.01,
            iterations=INVERSE_ITERATIONS,
            growth=16.0,
        )

    def table_rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.nodes.tolist(), self.values.tolist(), self.derivs.tolist()))


def mollify(
    profile: PsiPhiB,
    ball: Ball,
    *,
    base: PhiFunction | None = None,
    omega_2r: float = 0.0,
    eta: Mollifier | None = None,
    nodes: int = DEFAULT_TABLE_NODES,
    span: float = DEFAULT_TABLE_SPAN,
) -> RegularizedPhi:
    """φ̃(t) = ∫_0^1 φ_B(t(1+rs)) η(s) ds, tabulated with exact power tails.

    The second derivative follows from differentiating the φ̃' quadrature:
    φ̃''(t) = −(1/t)[2φ̃'(t) + (1/r)∫(1+rs)²ψ_B(t(1+rs))η'(s)ds].
    """
    eta = eta or Mollifier()
    r = ball.radius
    p = profile.p
    t = np.geomspace(profile.t1 / span, span * profile.t2, nodes)
    moment = eta.power_moment(r, p)
    value = np.empty_like(t)
    first = np.empty_like(t)
    second = np.empty_like(t)

    tail = (t * (1 + r) < profile.t1) | (t > profile.t2)
    mid = ~tail
    if np.any(tail):
        tt = t[tail]
        psi = profile.derivative(tt)
        high = tt > profile.t2
        low_value = profile.value(tt) * moment
        high_value = (
            profile.value_t2 - profile.a2 * profile.t2 / p
            + moment * profile.a2 * profile.t2 / p * (tt / profile.t2) ** p
        )
        value[tail] = np.where(high, high_value, low_value)
        first[tail] = psi * moment
        second[tail] = (p - 1.0) * psi * moment / tt
    if np.any(mid):
        tm = t[mid]
        phi_b = profile.value(tm)
        psi_b = profile.derivative(tm)
        value[mid] = phi_b * _quad_vec(
            lambda s: profile.value(tm * (1 + r * s)) / phi_b * eta(s), "φ̃"
        )
        first[mid] = psi_b * _quad_vec(
            lambda s: (1 + r * s) * profile.derivative(tm * (1 + r * s)) / psi_b * eta(s), "φ̃'"
        )
        curvature = psi_b * _quad_vec(
            lambda s: (1 + r * s) ** 2 * profile.derivative(tm * (1 + r * s)) / psi_b
            * eta.derivative(s),
            "φ̃''",
        )
        second[mid] = -(2.0 * first[mid] + curvature / r) / tm

    if np.any(np.diff(value) <= 0) or np.any(first <= 0):
        raise ConstructionError("φ̃ table is not strictly increasing")
    logger.info(
        "Mollified φ_B on %d nodes over [%.3g, %.3g] (r=%g)", nodes, t[0], t[-1], r
    )
    return RegularizedPhi(
        base=base if base is not None else profile.phi,
        ball=ball,
        omega_2r=float(omega_2r),
        profile=profile,
        mollifier=eta,
        nodes=t,
        values=value,
        derivs=first,
        second=second,
    )


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass
class ApproxReport:
    """Realized constants of the approximation checks; ``failures`` is empty on success."""

    sandwich_min: float
    sandwich_max: float
    sandwich_bound: float
    derivative_sandwich_min: float
    derivative_sandwich_max: float
    closeness_min_gap: float
    closeness_constant: float
    middle_offset_max: float
    middle_offset_bound: float
    a0_constant: float
    inc_constant: float
    dec_constant: float
    curvature_range: tuple[float, float]
    exponent_range: tuple[float, float]
    growth_constant: float
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        return [
            f"sandwich φ̃/φ_B ∈ [{self.sandwich_min:.6g}, {self.sandwich_max:.6g}]"
            f" (bound {self.sandwich_bound:.6g})",
            f"derivative sandwich φ̃'/ψ_B ∈ [{self.derivative_sandwich_min:.6g},"
            f" {self.derivative_sandwich_max:.6g}]",
            f"closeness on [t1, t2]: min gap {self.closeness_min_gap:.3g},"
            f" C = {self.closeness_constant:.6g}",
            f"φ_B − φ(x0,·) ≤ {self.middle_offset_max:.6g}"
            f" (bound {self.middle_offset_bound:.6g})",
            f"φ̃' (A0) L = {self.a0_constant:.6g}, Inc L = {self.inc_constant:.12g},"
            f" Dec L = {self.dec_constant:.12g}",
            f"t φ̃''/φ̃' ∈ [{self.curvature_range[0]:.6g}, {self.curvature_range[1]:.6g}]",
            f"t φ̃'/φ̃ ∈ [{self.exponent_range[0]:.12g}, {self.exponent_range[1]:.12g}]",
            f"φ̃ ≤ c(φ + 1) with c = {self.growth_constant:.6g}",
        ]


def verify_approx(
    reg: RegularizedPhi,
    phi: PhiFunction,
    *,
    x_samples: int = 64,
    seed: int | None = 0,
    tol: float = 1e-9,
) -> ApproxReport:
    """Sandwich, closeness and growth checks on the table samples."""
    t = reg.nodes
    prof = reg.profile
    p, q = reg.lower_exponent, reg.upper_exponent
    r = reg.r
    failures: list[str] = []

    phi_b = prof.value(t)
    psi_b = prof.derivative(t)
    ratio = reg.values / phi_b
    d_ratio = reg.derivs / psi_b
    bound = (1.0 + r) ** q
    if ratio.min() < 1 - tol or ratio.max() > bound * (1 + tol):
        failures.append("sandwich φ_B ≤ φ̃ ≤ (1+r)^q φ_B")
    if d_ratio.min() < 1 - tol or d_ratio.max() > bound * (1 + tol):
        failures.append("derivative sandwich ψ_B ≤ φ̃' ≤ (1+r)^q ψ_B")

    big = reg.ball.scaled(2.0)
    env = BallEnvelope(phi, [reg.ball.center], big.radius, seed=seed)
    middle = (t >= reg.t1) & (t <= reg.t2)
    tm = t[middle]
    phi_x0 = phi.value(prof.center, tm)
    gap = reg.values[middle] - phi_x0
    lower = env.lower(tm)[0]
    closeness = float(np.max(gap / (r * lower + reg.omega_2r))) if tm.size else 0.0
    min_gap = float(np.min(gap / np.maximum(phi_x0, 1e-300))) if tm.size else 0.0
    if min_gap < -tol:
        failures.append("closeness 0 ≤ φ̃ − φ(x0,·)")
    offset = prof.value(tm) - phi_x0
    offset_bound = (q / p - 1.0) * float(phi.value(prof.center, reg.t1))
    offset_max = float(offset.max()) if tm.size else 0.0
    slack = tol * max(1.0, offset_bound)
    if tm.size and (offset.min() < -slack or offset_max > offset_bound + slack):
        failures.append("middle offset 0 ≤ φ_B − φ(x0,·) ≤ (q/p − 1)φ(x0,t1)")

    one = float(reg.derivative(prof.center, 1.0))
    a0 = max(one, 1.0 / one)
    log_t = np.log(t)
    inc, _ = rate_constants(np.log(reg.derivs)[None, :], log_t, np.array([p - 1.0]))
    _, dec = rate_constants(np.log(reg.derivs)[None, :], log_t, np.array([q - 1.0]))
    inc_c, dec_c = float(inc[0]), float(dec[0])
    if inc_c > STRICT_SLACK:
        failures.append(f"(Inc)_{p - 1:g} of φ̃'")
    if dec_c > STRICT_SLACK:
        failures.append(f"(Dec)_{q - 1:g} of φ̃'")
    curvature = t * reg.second / reg.derivs
    exponent = t * reg.derivs / reg.values
    if exponent.min() < p * (1 - tol) or exponent.max() > q * (1 + tol):
        failures.append(f"t φ̃'/φ̃ ∈ [{p:g}, {q:g}]")

    points = domain_samples(Domain.disc(reg.ball.center, big.radius), x_samples, seed=seed)
    points = points[phi.domain.contains(points)]
    phi_xt = phi.value(points[:, None, :], t[None, :])
    growth = float(np.max(reg.values[None, :] / (phi_xt + 1.0)))

    report = ApproxReport(
        sandwich_min=float(ratio.min()),
        sandwich_max=float(ratio.max()),
        sandwich_bound=float(bound),
        derivative_sandwich_min=float(d_ratio.min()),
        derivative_sandwich_max=float(d_ratio.max()),
        closeness_min_gap=min_gap,
        closeness_constant=closeness,
        middle_offset_max=offset_max,
        middle_offset_bound=offset_bound,
        a0_constant=a0,
        inc_constant=inc_c,
        dec_constant=dec_c,
        curvature_range=(float(curvature.min()), float(curvature.max())),
        exponent_range=(float(exponent.min()), float(exponent.max())),
        growth_constant=growth,
        failures=failures,
    )
    if failures:
        raise ConstructionError("φ̃ rejected: " + "; ".join(failures), report)
    logger.info("φ̃ verified: closeness C=%.4g, growth c=%.4g", closeness, growth)
    return report


def regularize_on_ball(
    phi: PhiFunction,
    ball: Ball,
    omega,
    *,
    verify: bool = True,
    seed: int | None = 0,
    nodes: int = DEFAULT_TABLE_NODES,
) -> tuple[RegularizedPhi, ApproxReport | None]:
    """Thresholds, ψ_B/φ_B, mollification and (optionally) verification on *ball*."""
    omega_2r = _omega_value(omega, 2 * ball.radius)
    t1, t2 = thresholds(phi, ball, omega_2r, seed=seed)
    profile = build_psi_phi_B(phi, ball, t1, t2)
    reg = mollify(profile, ball, base=phi, omega_2r=omega_2r, nodes=nodes)
    report = verify_approx(reg, phi, seed=seed) if verify else None
    return reg, report


# ---------------------------------------------------------------------------
# Transfer function θ
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ThetaFunction(PhiFunction):
    """θ(x,t) = φ(x, φ̃^{-1}(t))^{1+σ} on B_r(x₀)."""

    phi: PhiFunction
    reg: RegularizedPhi
    sigma: float

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")

    @property
    def dimension(self) -> int:
        return self.phi.dimension

    @functools.cached_property
    def domain(self) -> Domain:
        return Domain.disc(self.reg.ball.center, self.reg.ball.radius)

    @property
    def lower_exponent(self) -> float:
        return 1.0 + self.sigma

    @property
    def upper_exponent(self) -> float:
        return self.phi.upper_exponent * (1.0 + self.sigma) / self.phi.lower_exponent

    @property
    def is_autonomous(self) -> bool:
        return self.phi.is_autonomous

    def value(self, x, t):
        x, t = _broadcast(x, t)
        tau = self.reg.inverse(t)
        return self.phi.value(x, tau) ** (1.0 + self.sigma)

    def derivative(self, x, t):
        x, t = _broadcast(x, t)
        tau = self.reg.inverse(t)
        inner = self.phi.value(x, tau)
        slope = self.phi.derivative(x, tau) / np.maximum(self.reg.derivative(x, tau), 1e-300)
        return (1.0 + self.sigma) * inner ** self.sigma * slope

    def envelope_coefficients(self):
        return self.phi.envelope_coefficients()


def build_theta(
    phi: PhiFunction,
    reg: RegularizedPhi,
    sigma: float,
    *,
    samples: int = 32,
    t_range: tuple[float, float] = (1e-3, 1e3),
    r_grid: Sequence[float] | None = None,
    ball_count: int = 16,
    seed: int | None = 0,
) -> tuple[ThetaFunction, list[ConditionReport]]:
    """θ and its (A0), (aInc)_{1+σ}, (aDec)_{q(1+σ)/p} and (A1) reports."""
    theta = ThetaFunction(phi, reg, float(sigma))
    if np.any(np.diff(reg.values) <= 0):
        raise ConstructionError("φ̃ table is not monotone; θ inverse ill-conditioned")
    points = domain_samples(theta.domain, samples, seed=seed)
    points = points[phi.domain.contains(points)]
    reports = [
        check_a0(theta, points),
        check_rate_condition(theta, "aInc", theta.lower_exponent, points, t_range=t_range),
        check_rate_condition(theta, "aDec", theta.upper_exponent, points, t_range=t_range),
    ]
    if r_grid is None:
        r_grid = [reg.r / 4, reg.r / 8]
    reports.append(
        check_a1(theta, r_grid, domain=theta.domain, ball_count=ball_count, seed=seed, r0=reg.r)
    )
    for rep in reports:
        logger.info("θ: %s", rep.summary())
    return theta, reports

"""Numerical verdicts for the structural conditions of generalized Φ-functions.

Every check is a ∀-statement tested on samples, so a verdict is one of
holds / fails / inconclusive and comes with the realized constant or modulus
table and, where it matters, a witness configuration that can be re-evaluated.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from orlicz_reg.calculus import rate_constants
from orlicz_reg.envelope import BallEnvelope
from orlicz_reg.expression import Expression, parse_expression
from orlicz_reg.geometry import Domain, ball_centers, unit_ball_volume
from orlicz_reg.phi import Family, PhiError, PhiFunction, PhiSpec

logger = logging.getLogger(__name__)

__all__ = [
    "ConditionKind",
    "ConditionReport",
    "InconsistentReportsError",
    "ModulusOfContinuity",
    "RegularityClass",
    "Verdict",
    "Witness",
    "check_a0",
    "check_a1",
    "check_derivative_rate",
    "check_implication_chain",
    "check_rate_condition",
    "check_wva1",
    "classify_regularity",
    "closed_form_modulus",
    "estimate_va1_modulus",
    "fit_holder_rate",
    "reproduce_witness",
]

DEFAULT_L_CAP = 10.0
STRICT_SLACK = 1.0 + 1e-9
DEFAULT_BALL_COUNT = 64
DEFAULT_T_POINTS = 48
DEFAULT_BISECTIONS = 40
DEFAULT_R0 = 0.5
DEFAULT_OMEGA_FLOOR = 1e-12
FAIL_LEVEL = 0.5
_PEAK_ROUNDS = 24
_ZERO_EXCESS = 1e-9


class InconsistentReportsError(ValueError):
    pass


class ConditionKind(enum.Enum):
    A0 = "A0"
    AINC = "aInc"
    ADEC = "aDec"
    INC = "Inc"
    DEC = "Dec"
    A1 = "A1"
    VA1 = "VA1"
    WVA1 = "wVA1"


class Verdict(enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


class RegularityClass(enum.Enum):
    C_ALPHA_ALL = "C^alpha_all"
    C_1_ALPHA = "C^1alpha"
    A1_ONLY = "A1_only"
    NONE = "none"


@dataclass(frozen=True)
class Witness:
    """Extremal configuration; ``ratio`` is what re-evaluation reproduces."""

    x: np.ndarray
    t: float
    ratio: float
    y: np.ndarray | None = None
    r: float | None = None
    s: float | None = None


@dataclass(frozen=True)
class ConditionReport:
    condition: ConditionKind
    verdict: Verdict
    parameter: float | None = None
    constant_estimate: float | None = None
    modulus_table: list[tuple[float, float]] = field(default_factory=list)
    raw_table: list[tuple[float, float]] = field(default_factory=list)
    holder_rate: float | None = None
    witness: Witness | None = None
    sampling_budget: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        if self.parameter is None:
            return self.condition.value
        return f"{self.condition.value}({self.parameter:g})"

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS

    def summary(self) -> str:
        parts = [f"{self.label} {self.verdict.value}"]
        if self.constant_estimate is not None:
            parts.append(f"L_hat={self.constant_estimate:.6g}")
        if self.modulus_table:
            if all(w == 0 for _, w in self.modulus_table):
                parts.append("omega ≡ 0")
            else:
                parts.append(f"omega(r_min)={self.modulus_table[0][1]:.6g}")
        if self.holder_rate is not None:
            parts.append(f"rate={self.holder_rate:.4g}")
        return ", ".join(parts)


# ---------------------------------------------------------------------------
# Rate conditions and (A0)
# ---------------------------------------------------------------------------

_RATE_KINDS = (ConditionKind.AINC, ConditionKind.ADEC, ConditionKind.INC, ConditionKind.DEC)


def _as_callable(phi, derivative: bool) -> Callable:
    if isinstance(phi, PhiFunction):
        return phi.derivative if derivative else phi.value
    if derivative:
        raise ValueError("derivative=True needs a PhiFunction")
    return phi


def check_rate_condition(
    phi: PhiFunction | Callable,
    kind: ConditionKind | str,
    gamma: float,
    samples,
    *,
    derivative: bool = False,
    t_range: tuple[float, float] = (1e-2, 1e2),
    t_count: int = 64,
    l_cap: float | None = None,
) -> ConditionReport:
    """(aInc)_γ / (aDec)_γ / (Inc)_γ / (Dec)_γ of φ (or of φ' with ``derivative``).

    The realized constant is the largest ratio of t ↦ f(x,t)/t^γ over sampled
    pairs t < s; strict variants compare it against ``1 + 1e-9``.
    """
    kind = ConditionKind(kind)
    if kind not in _RATE_KINDS:
        raise ValueError(f"{kind.value} is not a rate condition")
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    points = np.atleast_2d(np.asarray(samples, dtype=float))
    if points.size == 0:
        raise ValueError("Rate condition needs at least one sample point")
    if l_cap is None:
        l_cap = STRICT_SLACK if kind in (ConditionKind.INC, ConditionKind.DEC) else DEFAULT_L_CAP
    func = _as_callable(phi, derivative)
    t = np.logspace(np.log10(t_range[0]), np.log10(t_range[1]), t_count)
    values = np.asarray(func(points[:, None, :], t[None, :]), dtype=float)
    if np.any(values <= 0):
        raise ValueError("Rate conditions need positive values on the sampled range")
    log_t = np.log(t)
    inc, dec = rate_constants(np.log(values), log_t, np.array([float(gamma)]))
    increasing = kind in (ConditionKind.AINC, ConditionKind.INC)
    constant = float((inc if increasing else dec)[0])

    h = np.log(values) - gamma * log_t
    # pair (i < j) realizing the constant
    diff = h[:, :, None] - h[:, None, :] if increasing else h[:, None, :] - h[:, :, None]
    diff = np.where(np.triu(np.ones((t_count, t_count), dtype=bool), k=1), diff, -np.inf)
    row, i, j = np.unravel_index(np.argmax(diff), diff.shape)
    ratio = float(np.exp(diff[row, i, j]))
    witness = Witness(x=points[row], t=float(t[i]), s=float(t[j]), ratio=ratio)

    verdict = Verdict.HOLDS if constant <= l_cap else Verdict.FAILS
    logger.debug("%s(%g): L_hat=%.6g (%s)", kind.value, gamma, constant, verdict.value)
    return ConditionReport(
        condition=kind,
        verdict=verdict,
        parameter=float(gamma),
        constant_estimate=max(constant, 1.0),
        witness=witness,
        sampling_budget={
            "points": len(points),
            "t_count": t_count,
            "t_range": tuple(t_range),
            "l_cap": l_cap,
            "derivative": derivative,
        },
    )


def check_derivative_rate(
    phi: PhiFunction, gamma: float, samples, *, t_range=(1e-2, 1e2), t_count: int = 64
) -> ConditionReport:
    """(Inc)_γ through the pointwise form γφ(x,t) ≤ tφ'(x,t)."""
    points = np.atleast_2d(np.asarray(samples, dtype=float))
    if points.size == 0:
        raise ValueError("Rate condition needs at least one sample point")
    t = np.logspace(np.log10(t_range[0]), np.log10(t_range[1]), t_count)
    lhs = gamma * phi.value(points[:, None, :], t[None, :])
    rhs = t * phi.derivative(points[:, None, :], t[None, :])
    ratio = lhs / rhs
    row, col = np.unravel_index(np.argmax(ratio), ratio.shape)
    constant = float(ratio[row, col])
    return ConditionReport(
        condition=ConditionKind.INC,
        verdict=Verdict.HOLDS if constant <= STRICT_SLACK else Verdict.FAILS,
        parameter=float(gamma),
        constant_estimate=max(constant, 1.0),
        witness=Witness(x=points[row], t=float(t[col]), ratio=constant),
        sampling_budget={"points": len(points), "t_count": t_count, "pointwise": True},
    )


def check_a0(phi: PhiFunction, samples, *, l_cap: float = DEFAULT_L_CAP) -> ConditionReport:
    """(A0): L^{-1} ≤ φ(x, 1) ≤ L on samples."""
    points = np.atleast_2d(np.asarray(samples, dtype=float))
    if points.size == 0:
        raise ValueError("(A0) needs at least one sample point")
    ones = phi.value(points, 1.0)
    with np.errstate(divide="ignore"):
        spread = np.maximum(ones, 1.0 / ones)
    k = int(np.argmax(spread))
    constant = float(spread[k])
    return ConditionReport(
        condition=ConditionKind.A0,
        verdict=Verdict.HOLDS if constant <= l_cap else Verdict.FAILS,
        constant_estimate=constant,
        witness=Witness(x=points[k], t=1.0, ratio=constant),
        sampling_budget={"points": len(points), "l_cap": l_cap},
    )


# ---------------------------------------------------------------------------
# Ball conditions
# ---------------------------------------------------------------------------


def _check_radii(r_grid: Sequence[float], dimension: int, r0: float) -> np.ndarray:
    radii = np.asarray(sorted(set(float(r) for r in r_grid), reverse=True))
    if radii.size == 0:
        raise ValueError("r_grid is empty")
    if radii[0] > r0:
        raise ValueError(f"Radius {radii[0]} exceeds r0={r0}")
    if radii[-1] <= 0:
        raise ValueError("Radii must be positive")
    if unit_ball_volume(dimension) * radii[0] ** dimension >= 1.0:
        raise ValueError(f"|B_r| must be < 1, violated at r={radii[0]}")
    return radii


def _peak(excess_fn, t_grid: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Zoom on the per-ball argmax of a sampled curve in log t."""
    last = t_grid.shape[1] - 1
    j = np.argmax(values, axis=1)
    rows = np.arange(len(t_grid))
    lo = np.log(t_grid[rows, np.maximum(j - 1, 0)])
    hi = np.log(t_grid[rows, np.minimum(j + 1, last)])
    best_t = t_grid[rows, j]
    best = values[rows, j]
    frac = np.linspace(0.0, 1.0, 5)
    for _ in range(_PEAK_ROUNDS):
        pts = lo[:, None] + (hi - lo)[:, None] * frac
        vals = excess_fn(np.exp(pts))
        k = np.argmax(vals, axis=1)
        top = vals[rows, k]
        better = top > best
        best = np.where(better, top, best)
        best_t = np.where(better, np.exp(pts[rows, k]), best_t)
        lo = pts[rows, np.maximum(k - 1, 0)]
        hi = pts[rows, np.minimum(k + 1, 4)]
    return best_t, best


def _log_grid(lo: np.ndarray, hi: np.ndarray, count: int) -> np.ndarray:
    frac = np.linspace(0.0, 1.0, count)
    return np.exp(np.log(lo) + (np.log(hi) - np.log(lo)) * frac)


def check_a1(
    phi: PhiFunction,
    r_grid: Sequence[float],
    *,
    domain: Domain | None = None,
    l_cap: float = DEFAULT_L_CAP,
    ball_count: int = DEFAULT_BALL_COUNT,
    t_points: int = DEFAULT_T_POINTS,
    seed: int | None = 0,
    r0: float = DEFAULT_R0,
) -> ConditionReport:
    """(A1): φ⁺_B(t) ≤ L φ⁻_B(t) whenever φ⁻_B(t) ∈ [1, |B|^{-1}]."""
    domain = domain or phi.domain
    radii = _check_radii(r_grid, phi.dimension, r0)
    worst = None
    rows = []
    for r in radii:
        env = BallEnvelope(phi, ball_centers(domain, r, ball_count), r, seed=seed)
        volume = unit_ball_volume(phi.dimension) * r ** phi.dimension
        t_lo = env.lower_inverse(1.0)[:, 0]
        t_hi = env.lower_inverse(1.0 / volume)[:, 0]
        t_grid = _log_grid(t_lo[:, None], t_hi[:, None], t_points)

        def ratio_fn(t):
            values = env.evaluate(t)
            return values.upper / values.lower

        grid_ratio = ratio_fn(t_grid)
        peak_t, peak_ratio = _peak(ratio_fn, t_grid, grid_ratio)
        b = int(np.argmax(peak_ratio))
        rows.append((float(r), float(peak_ratio[b])))
        logger.debug("A1 r=%g: max ratio %.6g over %d balls", r, peak_ratio[b], len(t_lo))
        if worst is None or peak_ratio[b] > worst[0]:
            at = env.evaluate(np.full((len(t_lo), 1), peak_t[b]))
            x, y = at.upper_at[b, 0], at.lower_at[b, 0]
            worst = (float(peak_ratio[b]), x, y, float(peak_t[b]), float(r))
    constant, x, y, t, r = worst
    ratio = float(phi.value(x, t) / phi.value(y, t))
    verdict = Verdict.HOLDS if constant <= l_cap * STRICT_SLACK else Verdict.FAILS
    logger.info("A1 %s with L_hat=%.6g", verdict.value, constant)
    return ConditionReport(
        condition=ConditionKind.A1,
        verdict=verdict,
        constant_estimate=max(constant, 1.0),
        modulus_table=sorted(rows),
        witness=Witness(x=x, y=y, t=t, r=r, ratio=ratio),
        sampling_budget={
            "ball_count": ball_count,
            "t_points": t_points,
            "radii": [float(v) for v in radii],
            "l_cap": l_cap,
        },
    )


def _va1_excess(upper, lower):
    return upper / lower - 1.0


def _wva1_excess(upper, lower):
    return (upper - lower) / (lower + 1.0)


@dataclass
class _RadiusResult:
    r: float
    omega: float
    witness: Witness | None


def _fixed_point_at_radius(
    phi: PhiFunction,
    domain: Domain,
    r: float,
    excess: Callable,
    upper_power: float,
    *,
    ball_count: int,
    t_points: int,
    bisections: int,
    seed: int | None,
) -> _RadiusResult:
    """max over balls of the fixed point ω_B = g_B(ω_B).

    g_B(ω) is the sup of the excess over t with φ⁻_B(t) ∈ [ω, |B|^{-upper_power}],
    clamped to [0, 1]; it is nonincreasing in ω so bisection converges.
    """
    env = BallEnvelope(phi, ball_centers(domain, r, ball_count), r, seed=seed)
    count = len(env.centers)
    volume = unit_ball_volume(phi.dimension) * r ** phi.dimension
    t_hi = env.lower_inverse(volume ** (-upper_power))[:, 0]
    t_min = env.lower_inverse(DEFAULT_OMEGA_FLOOR)[:, 0]
    t_min = np.minimum(t_min, t_hi)

    def excess_fn(t):
        values = env.evaluate(t)
        return excess(values.upper, values.lower)

    grid = _log_grid(np.maximum(t_min, 1e-300)[:, None], t_hi[:, None], t_points)
    grid_excess = excess_fn(grid)
    peak_t, peak_excess = _peak(excess_fn, grid, grid_excess)
    hi_excess = excess_fn(t_hi[:, None])[:, 0]
    fixed_t = np.concatenate([grid, peak_t[:, None], t_hi[:, None]], axis=1)
    fixed_excess = np.concatenate(
        [grid_excess, peak_excess[:, None], hi_excess[:, None]], axis=1
    )

    def g(omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t_lo = env.lower_inverse(omega[:, None])[:, 0]
        lo_excess = excess_fn(t_lo[:, None])[:, 0]
        admissible = fixed_t >= t_lo[:, None] * (1 - 1e-12)
        cand_t = np.concatenate([t_lo[:, None], fixed_t], axis=1)
        cand = np.concatenate(
            [lo_excess[:, None], np.where(admissible, fixed_excess, -np.inf)], axis=1
        )
        k = np.argmax(cand, axis=1)
        rows = np.arange(count)
        return np.clip(cand[rows, k], 0.0, 1.0), cand_t[rows, k]

    g0, _ = g(np.full(count, DEFAULT_OMEGA_FLOOR))
    lo = np.zeros(count)
    hi = np.ones(count)
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        above = g(mid)[0] > mid
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    omega = np.where(g0 <= _ZERO_EXCESS, 0.0, hi)
    b = int(np.argmax(omega))
    if omega[b] == 0.0:
        return _RadiusResult(r=r, omega=0.0, witness=None)
    _, t_at = g(omega)
    at = env.evaluate(np.full((count, 1), t_at[b]))
    x, y = at.upper_at[b, 0], at.lower_at[b, 0]
    ratio = float(phi.value(x, t_at[b]) / phi.value(y, t_at[b]))
    return _RadiusResult(
        r=r, omega=float(omega[b]), witness=Witness(x=x, y=y, t=float(t_at[b]), r=r, ratio=ratio)
    )


def fit_holder_rate(table: Sequence[tuple[float, float]]) -> float | None:
    """Certified Hölder rate β̂ of a modulus table, or None.

    Identically zero tables certify β = 1. Otherwise the log-log slope must
    exceed 0.05 and the slope over the small-radius half must be at least half
    the slope over the large-radius half.
    """
    rs = np.array([r for r, _ in table], dtype=float)
    ws = np.array([w for _, w in table], dtype=float)
    if ws.size and np.all(ws == 0):
        return 1.0
    keep = ws > 0
    rs, ws = rs[keep], ws[keep]
    if rs.size < 3:
        return None
    order = np.argsort(rs)
    log_r, log_w = np.log(rs[order]), np.log(ws[order])
    slope = float(np.polyfit(log_r, log_w, 1)[0])
    half = (rs.size + 1) // 2
    small = float(np.polyfit(log_r[:half], log_w[:half], 1)[0]) if half >= 2 else slope
    large = float(np.polyfit(log_r[-half:], log_w[-half:], 1)[0]) if half >= 2 else slope
    if slope > 0.05 and small >= 0.5 * large:
        return slope
    return None


def _modulus_report(
    kind: ConditionKind,
    parameter: float | None,
    results: list[_RadiusResult],
    budget: dict,
) -> ConditionReport:
    by_r = sorted(results, key=lambda res: res.r)
    raw = [(res.r, res.omega) for res in by_r]
    hull = np.maximum.accumulate([w for _, w in raw])
    table = [(r, float(w)) for (r, _), w in zip(raw, hull)]
    smallest = [w for _, w in raw[:3]]
    decays = all(w == 0 for _, w in table) or table[0][1] < table[-1][1]
    if len(smallest) == 3 and all(w >= FAIL_LEVEL for w in smallest):
        verdict = Verdict.FAILS
    elif all(w < 1 for _, w in raw) and decays:
        verdict = Verdict.HOLDS
    else:
        verdict = Verdict.INCONCLUSIVE
        logger.warning("%s inconclusive on radii %s", kind.value, [r for r, _ in raw])
    witness = by_r[0].witness
    if witness is None:
        witness = next((res.witness for res in by_r if res.witness is not None), None)
    rate = fit_holder_rate(table) if verdict is Verdict.HOLDS else None
    logger.info("%s %s; omega_hat(r_min)=%.6g", kind.value, verdict.value, table[0][1])
    return ConditionReport(
        condition=kind,
        verdict=verdict,
        parameter=parameter,
        modulus_table=table,
        raw_table=raw,
        holder_rate=rate,
        witness=witness,
        sampling_budget=budget,
    )


def _modulus_check(
    kind, phi, r_grid, excess, upper_power, parameter, *, domain, ball_count, t_points,
    bisections, seed, r0,
) -> ConditionReport:
    domain = domain or phi.domain
    radii = _check_radii(r_grid, phi.dimension, r0)
    results = []
    for r in radii:
        res = _fixed_point_at_radius(
            phi, domain, float(r), excess, upper_power,
            ball_count=ball_count, t_points=t_points, bisections=bisections, seed=seed,
        )
        logger.debug("%s r=%g: omega=%.6g", kind.value, r, res.omega)
        results.append(res)
    budget = {
        "ball_count": ball_count,
        "t_points": t_points,
        "bisections": bisections,
        "radii": [float(v) for v in radii],
    }
    return _modulus_report(kind, parameter, results, budget)


def estimate_va1_modulus(
    phi: PhiFunction,
    r_grid: Sequence[float],
    *,
    domain: Domain | None = None,
    ball_count: int = DEFAULT_BALL_COUNT,
    t_points: int = DEFAULT_T_POINTS,
    bisections: int = DEFAULT_BISECTIONS,
    seed: int | None = 0,
    r0: float = DEFAULT_R0,
) -> ConditionReport:
    """(VA1) fixed-point modulus: φ⁺ ≤ (1+ω)φ⁻ on φ⁻ ∈ [ω, |B|^{-1}]."""
    return _modulus_check(
        ConditionKind.VA1, phi, r_grid, _va1_excess, 1.0, None,
        domain=domain, ball_count=ball_count, t_points=t_points,
        bisections=bisections, seed=seed, r0=r0,
    )


def check_wva1(
    phi: PhiFunction,
    r_grid: Sequence[float],
    eps: float,
    *,
    domain: Domain | None = None,
    ball_count: int = DEFAULT_BALL_COUNT,
    t_points: int = DEFAULT_T_POINTS,
    bisections: int = DEFAULT_BISECTIONS,
    seed: int | None = 0,
    r0: float = DEFAULT_R0,
) -> ConditionReport:
    """(wVA1): φ⁺ ≤ (1+ω)φ⁻ + ω on φ⁻ ∈ [ω, |B|^{-1+ε}]."""
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return _modulus_check(
        ConditionKind.WVA1, phi, r_grid, _wva1_excess, 1.0 - eps, float(eps),
        domain=domain, ball_count=ball_count, t_points=t_points,
        bisections=bisections, seed=seed, r0=r0,
    )


def reproduce_witness(phi: PhiFunction, report: ConditionReport) -> float:
    """Re-evaluate the witness of *report* on *phi*."""
    w = report.witness
    if w is None:
        raise ValueError(f"{report.label} carries no witness")
    if w.y is not None:
        return float(phi.value(w.x, w.t) / phi.value(w.y, w.t))
    if report.condition is ConditionKind.A0:
        v = float(phi.value(w.x, 1.0))
        return max(v, 1.0 / v)
    gamma = report.parameter
    if report.sampling_budget.get("pointwise"):
        return float(gamma * phi.value(w.x, w.t) / (w.t * phi.derivative(w.x, w.t)))
    func = phi.derivative if report.sampling_budget.get("derivative") else phi.value
    h_t = float(func(w.x, w.t)) / w.t ** gamma
    h_s = float(func(w.x, w.s)) / w.s ** gamma
    if report.condition in (ConditionKind.AINC, ConditionKind.INC):
        return h_t / h_s
    return h_s / h_t


# ---------------------------------------------------------------------------
# Moduli of continuity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModulusOfContinuity:
    """ω: [0, ∞) → [0, 1], nondecreasing, given by an expression in ``r`` or a table."""

    expression: Expression | None = None
    table: tuple[tuple[float, float], ...] | None = None
    vanishing: bool = False
    holder_rate: float | None = None
    # ω(r) = O(r^γ) for every γ < holder_rate but not for holder_rate itself
    rate_is_strict: bool = False
    regularity: RegularityClass | None = None

    def __post_init__(self):
        if (self.expression is None) == (self.table is None):
            raise ValueError("A modulus needs exactly one of expression or table")

    @classmethod
    def from_expression(cls, source: str, **kwargs) -> ModulusOfContinuity:
        expr = parse_expression(source)
        if expr.variables - {"r"}:
            raise ValueError(f"Modulus expression may only use r, got {sorted(expr.variables)}")
        return cls(expression=expr, **kwargs)

    @classmethod
    def from_report(cls, report: ConditionReport) -> ModulusOfContinuity:
        if not report.modulus_table:
            raise ValueError(f"{report.label} has no modulus table")
        vanishing = report.holds
        return cls(
            table=tuple(report.modulus_table),
            vanishing=vanishing,
            holder_rate=report.holder_rate,
        )

    @property
    def rate_text(self) -> str:
        if self.holder_rate is None:
            return "none"
        return f"{'<' if self.rate_is_strict else ''}{self.holder_rate:g}"

    @property
    def is_zero(self) -> bool:
        if self.table is not None:
            return all(w == 0 for _, w in self.table)
        return self.expression.is_constant and float(self.expression.evaluate()) == 0.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.expression is not None:
            with np.errstate(all="ignore"):
                out = np.broadcast_to(self.expression.evaluate(r=r), r.shape)
            out = np.where(r > 0, out, 0.0 if self.vanishing else np.nan_to_num(out, nan=1.0))
        else:
            out = self._interpolate(r)
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def _interpolate(self, r: np.ndarray) -> np.ndarray:
        rs = np.array([p[0] for p in self.table])
        ws = np.array([p[1] for p in self.table])
        if rs.size == 1:
            return np.full(r.shape, ws[0])
        inner = PchipInterpolator(rs, ws, extrapolate=False)(np.clip(r, rs[0], rs[-1]))
        below = r < rs[0]
        if self.vanishing and self.holder_rate is not None:
            tail = ws[0] * (np.maximum(r, 0.0) / rs[0]) ** self.holder_rate
        else:
            tail = np.full(r.shape, ws[0])
        out = np.where(below, tail, inner)
        return np.where(r > rs[-1], ws[-1], out)


def _num(v: float) -> str:
    return repr(float(v))


def closed_form_modulus(phi: PhiSpec, eps: float = 0.0) -> ModulusOfContinuity:
    """The modulus predicted for recognised structures, with its regularity class.

    Coefficient regularity enters through ``params["beta"]`` (Hölder
    exponent) and ``params["holder_const"]`` (seminorm, default 1).
    """
    if not 0 <= eps < 1:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    if not isinstance(phi, PhiSpec) or phi.family is Family.CUSTOM:
        raise PhiError("No closed-form modulus for custom expressions")
    if phi.is_autonomous:
        return ModulusOfContinuity.from_expression(
            "0", vanishing=True, holder_rate=1.0, regularity=RegularityClass.C_1_ALPHA
        )
    if "beta" not in phi.params:
        raise PhiError(f"{phi.family.value} needs params.beta for a closed-form modulus")
    n = phi.dimension
    beta = phi.params["beta"]
    c = phi.params.get("holder_const", 1.0)
    family = phi.family
    strong = RegularityClass.C_1_ALPHA if eps == 0 else RegularityClass.C_ALPHA_ALL

    if family is Family.PERTURBED:
        return ModulusOfContinuity.from_expression(
            f"{_num(c)}*(2*r)^{_num(beta)}", vanishing=True, holder_rate=beta, regularity=strong
        )
    if family in (Family.VARIABLE_EXPONENT, Family.RADULESCU):
        w = f"({_num(c)}*(2*r)^{_num(beta)})"
        source = f"{n}*exp({n}*{w}*log(1/r))*{w}*log(1/r)"
        # the log factor keeps ω above r^beta, so every rate below beta is attained
        return ModulusOfContinuity.from_expression(
            source, vanishing=True, holder_rate=beta, rate_is_strict=True, regularity=strong
        )

    p = phi.params["p"]
    shrink = n * (1.0 - eps) / p
    if family is Family.DOUBLE_PHASE:
        terms = [(c, beta - shrink * (phi.params["q"] - p))]
    elif family is Family.TRIPLE_PHASE:
        terms = []
        for coeff, exponent in (("a", phi.params["q"]), ("b", phi.params["s"])):
            if not phi.coeff_exprs[coeff].is_constant:
                terms.append((c, beta - shrink * (exponent - p)))
    else:
        # general double phase a(x)t^p + b(x)t^q
        terms = []
        if not phi.coeff_exprs["a"].is_constant:
            terms.append((c, beta))
        if not phi.coeff_exprs["b"].is_constant:
            terms.append((c, beta - shrink * (phi.params["q"] - p)))

    rates = [g for _, g in terms]
    source = " + ".join(f"{_num(k)}*r^{_num(g)}" for k, g in terms)
    if min(rates) > 0:
        return ModulusOfContinuity.from_expression(
            source, vanishing=True, holder_rate=min(rates), regularity=strong
        )
    regularity = RegularityClass.A1_ONLY if min(rates) == 0 else RegularityClass.NONE
    return ModulusOfContinuity.from_expression(
        "1", vanishing=False, holder_rate=None, regularity=regularity
    )


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def _find(reports: Iterable[ConditionReport], kind: ConditionKind) -> ConditionReport | None:
    return next((rep for rep in reports if rep.condition is kind), None)


def check_implication_chain(reports: Sequence[ConditionReport]) -> None:
    """Raise when VA1 ⇒ wVA1 ⇒ A1 is broken at verdict level."""
    va1 = _find(reports, ConditionKind.VA1)
    wva1 = _find(reports, ConditionKind.WVA1)
    a1 = _find(reports, ConditionKind.A1)
    if va1 is not None and va1.holds:
        for other in (wva1, a1):
            if other is not None and other.verdict is Verdict.FAILS:
                raise InconsistentReportsError(f"VA1 holds but {other.label} fails")
    if wva1 is not None and wva1.holds and a1 is not None and a1.verdict is Verdict.FAILS:
        raise InconsistentReportsError(f"{wva1.label} holds but A1 fails")


def classify_regularity(reports: Sequence[ConditionReport]) -> RegularityClass:
    """Predicted regularity of minimizers from a set of condition reports."""
    check_implication_chain(reports)
    va1 = _find(reports, ConditionKind.VA1)
    wva1 = _find(reports, ConditionKind.WVA1)
    a1 = _find(reports, ConditionKind.A1)
    if va1 is None and wva1 is None and a1 is None:
        raise ValueError("classify_regularity needs a VA1, wVA1 or A1 report")
    if va1 is not None and va1.holds and va1.holder_rate is not None:
        return RegularityClass.C_1_ALPHA
    if (va1 is not None and va1.holds) or (wva1 is not None and wva1.holds):
        return RegularityClass.C_ALPHA_ALL
    if a1 is not None and a1.holds:
        return RegularityClass.A1_ONLY
    return RegularityClass.NONE

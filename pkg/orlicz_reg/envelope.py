"""Ball envelopes φ⁺_B(t) = sup_{B∩Ω} φ(·, t) and φ⁻_B(t) = inf_{B∩Ω} φ(·, t).

When the x-dependence of φ runs through monotone scalar coefficients the
extrema sit at the extremisers of those coefficients, which are located once
per ball by a zoom search and reused for every t. Otherwise the envelopes
are sampled on scrambled Sobol points with a doubling budget.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np

from orlicz_reg.calculus import monotone_inverse
from orlicz_reg.geometry import Ball, Domain, unit_ball_offsets
from orlicz_reg.phi import NumericalError, PhiFunction

logger = logging.getLogger(__name__)

__all__ = ["BallEnvelope", "EnvelopeError", "EnvelopeValues", "ball_envelope"]


class EnvelopeError(NumericalError):
    pass


@dataclass(frozen=True)
class EnvelopeValues:
    """Envelopes of shape (B, T) and the points realising them, (B, T, n)."""

    upper: np.ndarray
    lower: np.ndarray
    upper_at: np.ndarray
    lower_at: np.ndarray


class BallEnvelope:
    """Envelopes of φ over a batch of equal-radius balls.

    Parameters
    ----------
    phi : PhiFunction
        The function whose envelopes are taken.
    centers : array_like, shape (B, n)
        Ball centers; each must lie in the domain of ``phi``.
    radius : float
        Common radius r > 0.
    seed : int or None
        Seed of the scrambled Sobol points of the sampled path.
    mode : {"auto", "sampled"}
        ``"sampled"`` ignores the coefficient shortcut.
    """

    DEFAULT_ZOOM_POINTS = 64
    DEFAULT_ZOOM_ROUNDS = 30
    DEFAULT_MIN_LOG2_BUDGET = 5
    DEFAULT_MAX_LOG2_BUDGET = 16
    DEFAULT_REL_TOL = 1e-6

    def __init__(
        self,
        phi: PhiFunction,
        centers,
        radius: float,
        *,
        seed: int | None = 0,
        mode: str = "auto",
        zoom_points: int = DEFAULT_ZOOM_POINTS,
        zoom_rounds: int = DEFAULT_ZOOM_ROUNDS,
        min_log2_budget: int = DEFAULT_MIN_LOG2_BUDGET,
        max_log2_budget: int = DEFAULT_MAX_LOG2_BUDGET,
        rel_tol: float = DEFAULT_REL_TOL,
    ):
        if mode not in ("auto", "sampled"):
            raise ValueError(f"Unknown envelope mode {mode!r}")
        if not radius > 0:
            raise ValueError(f"Ball radius must be positive, got {radius}")
        self.phi = phi
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        if self.centers.shape[1] != phi.dimension:
            raise ValueError(
                f"Centers have dimension {self.centers.shape[1]}, expected {phi.dimension}"
            )
        if not np.all(phi.domain.contains(self.centers)):
            raise ValueError("Every ball center must lie in the domain")
        self.radius = float(radius)
        self.seed = seed
        self.zoom_points = zoom_points
        self.zoom_rounds = zoom_rounds
        self.min_log2_budget = min_log2_budget
        self.max_log2_budget = max_log2_budget
        self.rel_tol = rel_tol
        self.coefficients = None if mode == "sampled" else phi.envelope_coefficients()

    @property
    def domain(self) -> Domain:
        return self.phi.domain

    @property
    def closed_form(self) -> bool:
        return self.coefficients is not None

    # ---- Public API ----

    def evaluate(self, t) -> EnvelopeValues:
        """Envelopes at *t*, broadcastable to (B, T)."""
        t = _batch(t, len(self.centers))
        if self.closed_form:
            return self._evaluate_candidates(t)
        return self._evaluate_sampled(t)

    def upper(self, t) -> np.ndarray:
        return self.evaluate(t).upper

    def lower(self, t) -> np.ndarray:
        return self.evaluate(t).lower

    def lower_inverse(self, s) -> np.ndarray:
        """(φ⁻_B)^{-1}(s) per ball; *s* broadcastable to (B, S)."""
        s = _batch(s, len(self.centers))
        return monotone_inverse(lambda tau: self.evaluate(tau).lower, s)

    # ---- Closed-form path ----

    @functools.cached_property
    def candidates(self) -> np.ndarray:
        """Points (B, C, n) among which both envelopes are attained."""
        points = [self.centers[:, None, :]]
        for coeff in self.coefficients:
            for sign in (1.0, -1.0):
                best = self._zoom(lambda x, c=coeff, s=sign: s * c(x))
                points.append(best[:, None, :])
        out = np.concatenate(points, axis=1)
        logger.debug(
            "Envelope candidates: %d balls, %d points each, r=%g", *out.shape[:2], self.radius
        )
        return out

    def _evaluate_candidates(self, t: np.ndarray) -> EnvelopeValues:
        cand = self.candidates
        values = self.phi.value(cand[:, :, None, :], t[:, None, :])
        i_up = np.argmax(values, axis=1)
        i_lo = np.argmin(values, axis=1)
        rows = np.arange(len(cand))[:, None]
        return EnvelopeValues(
            upper=np.take_along_axis(values, i_up[:, None, :], axis=1)[:, 0, :],
            lower=np.take_along_axis(values, i_lo[:, None, :], axis=1)[:, 0, :],
            upper_at=cand[rows, i_up],
            lower_at=cand[rows, i_lo],
        )

    # ---- Zoom search ----

    @functools.cached_property
    def _offsets(self) -> np.ndarray:
        return unit_ball_offsets(self.phi.dimension, self.zoom_points)

    def _project(self, points: np.ndarray, centers: np.ndarray) -> np.ndarray:
        d = points - centers
        norm = np.linalg.norm(d, axis=-1, keepdims=True)
        scale = np.where(norm > self.radius, self.radius / np.maximum(norm, 1e-300), 1.0)
        points = centers + d * scale
        if self.domain.is_box:
            points = np.clip(points, self.domain.lower, self.domain.upper)
        return points

    def _zoom(self, objective, start: np.ndarray | None = None) -> np.ndarray:
        """Maximiser of *objective* over each ball ∩ Ω.

        *objective* maps points (..., K, n) to (..., K); *start* has the
        leading shape of the batch and defaults to the centers.
        """
        best = self.centers if start is None else start
        lead = (len(self.centers),) + (1,) * (best.ndim - 2)
        centers = np.broadcast_to(self.centers.reshape(lead + (-1,)), best.shape)
        best_val = objective(best[..., None, :])[..., 0]
        step = 1.0
        for _ in range(self.zoom_rounds):
            trial = best[..., None, :] + step * self.radius * self._offsets
            trial = self._project(trial, centers[..., None, :])
            inside = self.domain.contains(trial)
            trial = np.where(inside[..., None], trial, best[..., None, :])
            vals = np.where(inside, objective(trial), -np.inf)
            k = np.argmax(vals, axis=-1)
            top = np.take_along_axis(vals, k[..., None], axis=-1)[..., 0]
            better = top > best_val
            picked = np.take_along_axis(trial, k[..., None, None], axis=-2)[..., 0, :]
            best = np.where(better[..., None], picked, best)
            best_val = np.where(better, top, best_val)
            step *= 0.5
        return best

    # ---- Sampled path ----

    def _sample_ball(self, b: int, t: np.ndarray, m: int) -> tuple[np.ndarray, ...]:
        offsets = unit_ball_offsets(self.phi.dimension, 2 ** m, seed=self.seed)
        points = self.centers[b] + self.radius * offsets
        points = points[self.domain.contains(points)]
        values = self.phi.value(points[:, None, :], t[None, :])
        i_up = np.argmax(values, axis=0)
        i_lo = np.argmin(values, axis=0)
        return points[i_up], points[i_lo]

    def _refine(self, t: np.ndarray, start_up: np.ndarray, start_lo: np.ndarray):
        def signed(sign):
            def objective(x):
                return sign * self.phi.value(x, t[..., None])
            return objective

        up = self._zoom(signed(1.0), start_up)
        lo = self._zoom(signed(-1.0), start_lo)
        return up, lo

    def _evaluate_sampled(self, t: np.ndarray) -> EnvelopeValues:
        previous = None
        for m in range(self.min_log2_budget, self.max_log2_budget + 1):
            starts = [self._sample_ball(b, t[b], m) for b in range(len(self.centers))]
            start_up = np.stack([s[0] for s in starts])
            start_lo = np.stack([s[1] for s in starts])
            up_at, lo_at = self._refine(t, start_up, start_lo)
            current = EnvelopeValues(
                upper=self.phi.value(up_at, t),
                lower=self.phi.value(lo_at, t),
                upper_at=up_at,
                lower_at=lo_at,
            )
            if previous is not None:
                change = max(
                    _relative_change(current.upper, previous.upper),
                    _relative_change(current.lower, previous.lower),
                )
                if change < self.rel_tol:
                    logger.debug("Sampled envelope stable at budget 2^%d", m)
                    return current
            previous = current
        raise EnvelopeError(
            f"Sampled envelope not stable within 2^{self.max_log2_budget} points"
        )


def _batch(values, count: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim < 2:
        values = np.atleast_1d(values)[None, :]
    return np.broadcast_to(values, (count, values.shape[-1]))


def _relative_change(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(np.abs(a), np.abs(b))
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > 0, np.abs(a - b) / scale, 0.0)
    return float(rel.max(initial=0.0))


def ball_envelope(phi: PhiFunction, ball: Ball, t, side: str = "sup", **kwargs):
    """φ⁺_B(t) (``side="sup"``) or φ⁻_B(t) (``side="inf"``)."""
    if side not in ("sup", "inf"):
        raise ValueError(f"side must be 'sup' or 'inf', got {side!r}")
    env = BallEnvelope(phi, [ball.center], ball.radius, **kwargs)
    t_arr = np.asarray(t, dtype=float)
    values = env.evaluate(np.atleast_1d(t_arr))
    out = (values.upper if side == "sup" else values.lower)[0]
    return float(out[0]) if t_arr.ndim == 0 else out

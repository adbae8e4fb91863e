"""Domains, balls and low-discrepancy point sets."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

logger = logging.getLogger(__name__)

__all__ = [
    "Ball",
    "Domain",
    "DomainKind",
    "ball_centers",
    "domain_samples",
    "unit_ball_offsets",
]

# relative margin keeping ball centers strictly inside the shrunken region
_CENTER_MARGIN = 1e-9


class DomainKind(enum.Enum):
    INTERVAL = "interval"
    RECT = "rect"
    DISC = "disc"
    ANNULUS = "annulus"


@dataclass(frozen=True)
class Domain:
    """Bounded domain Ω: an axis-aligned box, a disc or an annulus."""

    kind: DomainKind
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    center: tuple[float, ...] | None = None
    radius: float | None = None
    inner_radius: float = 0.0

    @classmethod
    def interval(cls, a: float, b: float) -> Domain:
        if not a < b:
            raise ValueError(f"Empty interval [{a}, {b}]")
        return cls(DomainKind.INTERVAL, (float(a),), (float(b),))

    @classmethod
    def rect(cls, bounds: list[tuple[float, float]]) -> Domain:
        if any(not lo < hi for lo, hi in bounds):
            raise ValueError(f"Degenerate rectangle {bounds}")
        lower = tuple(float(lo) for lo, _ in bounds)
        upper = tuple(float(hi) for _, hi in bounds)
        kind = DomainKind.INTERVAL if len(bounds) == 1 else DomainKind.RECT
        return cls(kind, lower, upper)

    @classmethod
    def disc(cls, center: tuple[float, ...], radius: float) -> Domain:
        if radius <= 0:
            raise ValueError(f"Disc radius must be positive, got {radius}")
        c = tuple(float(v) for v in center)
        return cls(
            DomainKind.DISC,
            tuple(v - radius for v in c),
            tuple(v + radius for v in c),
            center=c,
            radius=float(radius),
        )

    @classmethod
    def annulus(
        cls, center: tuple[float, ...], inner_radius: float, radius: float
    ) -> Domain:
        if not 0 < inner_radius < radius:
            raise ValueError(
                f"Annulus needs 0 < inner radius < radius, got {inner_radius}, {radius}"
            )
        c = tuple(float(v) for v in center)
        return cls(
            DomainKind.ANNULUS,
            tuple(v - radius for v in c),
            tuple(v + radius for v in c),
            center=c,
            radius=float(radius),
            inner_radius=float(inner_radius),
        )

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def is_box(self) -> bool:
        return self.kind in (DomainKind.INTERVAL, DomainKind.RECT)

    @property
    def volume(self) -> float:
        if self.is_box:
            return float(np.prod(np.subtract(self.upper, self.lower)))
        outer = unit_ball_volume(self.dimension) * self.radius ** self.dimension
        inner = unit_ball_volume(self.dimension) * self.inner_radius ** self.dimension
        return outer - inner

    def distance_to_boundary(self, x: np.ndarray) -> np.ndarray:
        """Signed distance to ∂Ω, positive inside."""
        x = np.asarray(x, dtype=float)
        if self.is_box:
            lo = np.asarray(self.lower)
            hi = np.asarray(self.upper)
            return np.minimum(x - lo, hi - x).min(axis=-1)
        rho = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        dist = self.radius - rho
        if self.kind is DomainKind.ANNULUS:
            dist = np.minimum(dist, rho - self.inner_radius)
        return dist

    def contains(self, x: np.ndarray, *, tol: float = 1e-12) -> np.ndarray:
        return self.distance_to_boundary(x) >= -tol


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True)
class Ball:
    """Ball B_r(x0); evaluation routines clip it to the declared domain."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"Ball radius must be positive, got {self.radius}")

    @classmethod
    def at(cls, center, radius: float) -> Ball:
        return cls(tuple(float(v) for v in np.atleast_1d(center)), float(radius))

    @property
    def dimension(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.dimension) * self.radius ** self.dimension

    def scaled(self, factor: float) -> Ball:
        return Ball(self.center, self.radius * factor)

    def contains(self, x: np.ndarray, *, tol: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        dist = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        return dist <= self.radius * (1 + tol)

    def check_in(self, domain: Domain) -> None:
        if not bool(domain.contains(np.asarray(self.center))):
            raise ValueError(f"Ball center {self.center} lies outside the domain")


# ----- Point sets -----


def _sobol(d: int, m: int, *, seed: int | None) -> np.ndarray:
    sampler = qmc.Sobol(d=d, scramble=seed is not None, seed=seed)
    return sampler.random_base2(m)


def unit_ball_offsets(n: int, count: int, *, seed: int | None = None) -> np.ndarray:
    """*count* points of the closed unit ball, the origin first."""
    m = max(1, math.ceil(math.log2(max(count, 2))))
    while True:
        cube = 2.0 * _sobol(n, m, seed=seed) - 1.0
        inside = cube[np.linalg.norm(cube, axis=1) <= 1.0]
        if len(inside) >= count - 1:
            break
        m += 1
    return np.vstack([np.zeros((1, n)), inside[: count - 1]])


def ball_centers(domain: Domain, radius: float, count: int) -> np.ndarray:
    """Quasi-uniform centers x with dist(x, ∂Ω) > radius.

    Unscrambled Sobol points mapped around the midpoint of the bounding box, so
    the family is deterministic and contains the midpoint itself.
    """
    mid = 0.5 * (np.asarray(domain.lower) + np.asarray(domain.upper))
    margin = radius * (1 + _CENTER_MARGIN)
    half = 0.5 * (np.asarray(domain.upper) - np.asarray(domain.lower))
    if domain.is_box:
        half = half - margin
        if np.any(half < 0):
            raise ValueError(
                f"No ball of radius {radius} fits in the domain {domain.lower}..{domain.upper}"
            )
    m = max(1, math.ceil(math.log2(max(count, 2))))
    for _ in range(12):
        u = _sobol(domain.dimension, m, seed=None)
        points = mid + (2.0 * u - 1.0) * half
        points = points[domain.distance_to_boundary(points) > margin]
        if len(points) >= count:
            return points[:count]
        m += 1
    if len(points) == 0:
        raise ValueError(f"No ball of radius {radius} fits in the domain")
    logger.debug("Only %d centers fit for radius %g", len(points), radius)
    return points


def domain_samples(domain: Domain, count: int, *, seed: int | None = 0) -> np.ndarray:
    """Quasi-uniform sample of *count* points of Ω (closed)."""
    lo = np.asarray(domain.lower)
    hi = np.asarray(domain.upper)
    m = max(1, math.ceil(math.log2(max(count, 2))))
    for _ in range(12):
        points = lo + _sobol(domain.dimension, m, seed=seed) * (hi - lo)
        points = points[domain.contains(points)]
        if len(points) >= count:
            return points[:count]
        m += 1
    return points

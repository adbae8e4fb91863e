"""Generalized Φ-functions φ(x, t) and their direct evaluation.

Every object that behaves like φ(x, t) implements :class:`PhiFunction`;
:class:`PhiSpec` is the symbolic, user-facing one (family tag + parameters +
coefficient expressions). Evaluation is vectorised: ``x`` has shape
``(..., n)``, ``t`` broadcasts against ``x.shape[:-1]``.
"""

from __future__ import annotations

import abc
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from orlicz_reg.expression import Expression, ExpressionError, parse_expression
from orlicz_reg.geometry import Domain, domain_samples

logger = logging.getLogger(__name__)

__all__ = [
    "Family",
    "MonotonicityError",
    "NumericalError",
    "PhiError",
    "PhiFunction",
    "PhiSpec",
    "ScaledPhi",
    "deriv",
    "evaluate",
]


class PhiError(ValueError):
    pass


class NumericalError(RuntimeError):
    """Base class of numeric failures (exit code 3 in the CLI)."""


class MonotonicityError(NumericalError):
    pass


class Family(enum.Enum):
    POWER = "power"
    ORLICZ_LOG = "orlicz_log"
    PERTURBED = "perturbed"
    VARIABLE_EXPONENT = "variable_exponent"
    DOUBLE_PHASE = "double_phase"
    GENERAL_DOUBLE_PHASE = "general_double_phase"
    RADULESCU = "radulescu"
    TRIPLE_PHASE = "triple_phase"
    CUSTOM = "custom_expression"


_REQUIRED_PARAMS: dict[Family, tuple[str, ...]] = {
    Family.POWER: ("p",),
    Family.ORLICZ_LOG: ("p",),
    Family.PERTURBED: ("p",),
    Family.VARIABLE_EXPONENT: ("p", "q"),
    Family.DOUBLE_PHASE: ("p", "q"),
    Family.GENERAL_DOUBLE_PHASE: ("p", "q"),
    Family.RADULESCU: ("p", "q"),
    Family.TRIPLE_PHASE: ("p", "q", "s"),
    Family.CUSTOM: ("p", "q"),
}

_OPTIONAL_PARAMS = ("scale", "beta", "holder_const", "nu", "Lambda")

_REQUIRED_COEFFICIENTS: dict[Family, tuple[str, ...]] = {
    Family.POWER: (),
    Family.ORLICZ_LOG: (),
    Family.PERTURBED: ("a",),
    Family.VARIABLE_EXPONENT: ("p",),
    Family.DOUBLE_PHASE: ("a",),
    Family.GENERAL_DOUBLE_PHASE: ("a", "b"),
    Family.RADULESCU: ("p", "q"),
    Family.TRIPLE_PHASE: ("a", "b"),
    Family.CUSTOM: ("phi",),
}

_OPTIONAL_COEFFICIENTS: dict[Family, tuple[str, ...]] = {Family.CUSTOM: ("dphi",)}

# sup_t t/((e+t) log(e+t)) < 1/3, so t^p log(e+t) satisfies (Dec)_{p+1/3}
_ORLICZ_LOG_EXCESS = 1.0 / 3.0

# one-sided difference step for expression families without an exact derivative
_DIFF_ABS = 1e-8
_DIFF_REL = 1e-6
_MONOTONE_TOL = 1e-9


def _broadcast(x, t) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    return x, t


class PhiFunction(abc.ABC):
    """Interface of everything that can be evaluated as φ(x, t)."""

    dimension: int
    domain: Domain

    @property
    @abc.abstractmethod
    def lower_exponent(self) -> float:
        """Declared p with (aInc)_p."""

    @property
    @abc.abstractmethod
    def upper_exponent(self) -> float:
        """Declared q with (aDec)_q."""

    @property
    @abc.abstractmethod
    def is_autonomous(self) -> bool: ...

    @abc.abstractmethod
    def value(self, x, t) -> np.ndarray: ...

    @abc.abstractmethod
    def derivative(self, x, t) -> np.ndarray: ...

    def derivative_ratio(self, x, t) -> np.ndarray:
        """φ'(x, t)/t for t > 0."""
        x, t = _broadcast(x, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.derivative(x, t) / t

    def envelope_coefficients(self) -> list[Callable[[np.ndarray], np.ndarray]] | None:
        """Scalar coefficients whose extrema over a set realise the envelopes.

        ``[]`` for autonomous functions, ``None`` when the x-dependence is not
        through a single monotone coefficient (envelopes are then sampled).
        """
        return [] if self.is_autonomous else None


@dataclass(frozen=True, eq=False)
class PhiSpec(PhiFunction):
    """Symbolic description of φ(x, t).

    Parameters
    ----------
    family : Family
        Structural family tag.
    params : Mapping[str, float]
        Real parameters (``p``, ``q``, ``s``, ``scale``, ``beta``,
        ``holder_const``, ``nu``, ``Lambda``).
    coeff_exprs : Mapping[str, Expression]
        Coefficient / exponent expressions in ``x1..xn`` (``a``, ``b``, ``p``,
        ``q``) or, for the custom family, ``phi``/``dphi`` in ``x1..xn, t``.
    dimension : int
        Space dimension n.
    domain : Domain
        Declared domain Ω.
    """

    family: Family
    params: Mapping[str, float]
    coeff_exprs: Mapping[str, Expression]
    dimension: int
    domain: Domain
    validation_samples: int = field(default=64, repr=False)

    def __post_init__(self):
        self._validate_structure()
        if self.validation_samples > 0:
            self._validate_on_samples(domain_samples(self.domain, self.validation_samples))

    @classmethod
    def create(
        cls,
        family: Family | str,
        params: Mapping[str, float],
        coefficients: Mapping[str, str] | None = None,
        *,
        dimension: int | None = None,
        domain: Domain | None = None,
        validation_samples: int = 64,
    ) -> PhiSpec:
        """Parse coefficient strings and build a validated PhiSpec."""
        try:
            family = Family(family)
        except ValueError:
            raise PhiError(f"Unknown family {family!r}") from None
        if domain is None:
            n = dimension or 1
            domain = Domain.rect([(-1.0, 1.0)] * n)
        if dimension is None:
            dimension = domain.dimension
        exprs = {}
        for name, source in (coefficients or {}).items():
            try:
                exprs[name] = parse_expression(str(source))
            except ExpressionError as e:
                raise PhiError(f"Coefficient {name!r}: {e}") from e
        return cls(
            family=family,
            params={k: float(v) for k, v in params.items()},
            coeff_exprs=exprs,
            dimension=int(dimension),
            domain=domain,
            validation_samples=validation_samples,
        )

    # ---- Declared structure ----

    @property
    def lower_exponent(self) -> float:
        return self.params["p"]

    @property
    def upper_exponent(self) -> float:
        p = self.params["p"]
        if self.family in (Family.POWER, Family.PERTURBED):
            return p
        if self.family is Family.ORLICZ_LOG:
            return p + _ORLICZ_LOG_EXCESS
        if self.family is Family.TRIPLE_PHASE:
            return max(self.params["q"], self.params["s"])
        return self.params["q"]

    @property
    def is_autonomous(self) -> bool:
        if self.family in (Family.POWER, Family.ORLICZ_LOG):
            return True
        return not any(
            v.startswith("x") for e in self.coeff_exprs.values() for v in e.variables
        )

    def coefficient(self, name: str, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        value = np.asarray(self.coeff_exprs[name].at_points(x), dtype=float)
        if not np.all(np.isfinite(value)) or np.any(value < 0):
            raise PhiError(
                f"Coefficient {name}={self.coeff_exprs[name]} is NaN or negative"
                " on the given points"
            )
        return value

    def envelope_coefficients(self):
        if self.is_autonomous:
            return []
        f = self.family
        exprs = self.coeff_exprs
        single = {
            Family.PERTURBED: "a",
            Family.DOUBLE_PHASE: "a",
            Family.VARIABLE_EXPONENT: "p",
        }
        name = single.get(f)
        if name is None and f in (
            Family.GENERAL_DOUBLE_PHASE,
            Family.TRIPLE_PHASE,
            Family.RADULESCU,
        ):
            first, second = ("p", "q") if f is Family.RADULESCU else ("a", "b")
            if exprs[second].is_constant:
                name = first
            elif exprs[first].is_constant:
                name = second
        if name is None:
            return None
        return [lambda x, _n=name: self.coefficient(_n, x)]

    # ---- Evaluation ----

    def value(self, x, t) -> np.ndarray:
        x, t = _broadcast(x, t)
        if np.any(t < 0):
            raise PhiError("φ(x, t) needs t ≥ 0")
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = self._value(x, t)
        out = np.broadcast_to(out, np.broadcast_shapes(x.shape[:-1], t.shape))
        if np.any(np.isinf(out)):
            raise NumericalError(f"Overflow evaluating {self.family.value} at large t")
        return out

    def derivative(self, x, t) -> np.ndarray:
        x, t = _broadcast(x, t)
        if np.any(t < 0):
            raise PhiError("φ'(x, t) needs t ≥ 0")
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = self._derivative(x, t)
        out = np.broadcast_to(out, np.broadcast_shapes(x.shape[:-1], t.shape))
        if np.any(out < -_MONOTONE_TOL * (1 + np.abs(out))):
            raise MonotonicityError(
                f"Negative derivative detected for {self.family.value}; φ is not nondecreasing"
            )
        return np.maximum(out, 0.0)

    def _value(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        f = self.family
        prm = self.params
        p = prm["p"]
        if f is Family.POWER:
            return prm.get("scale", 1.0) * t ** p
        if f is Family.ORLICZ_LOG:
            return t ** p * np.log(math.e + t)
        if f is Family.PERTURBED:
            return self.coefficient("a", x) * t ** p
        if f is Family.VARIABLE_EXPONENT:
            return t ** self.coefficient("p", x)
        if f is Family.DOUBLE_PHASE:
            return t ** p + self.coefficient("a", x) * t ** prm["q"]
        if f is Family.GENERAL_DOUBLE_PHASE:
            return self.coefficient("a", x) * t ** p + self.coefficient("b", x) * t ** prm["q"]
        if f is Family.RADULESCU:
            return t ** self.coefficient("p", x) + t ** self.coefficient("q", x)
        if f is Family.TRIPLE_PHASE:
            return (
                t ** p
                + self.coefficient("a", x) * t ** prm["q"]
                + self.coefficient("b", x) * t ** prm["s"]
            )
        return self._custom("phi", x, t)

    def _derivative(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        f = self.family
        prm = self.params
        p = prm["p"]
        if f is Family.POWER:
            return prm.get("scale", 1.0) * p * t ** (p - 1)
        if f is Family.ORLICZ_LOG:
            return p * t ** (p - 1) * np.log(math.e + t) + t ** p / (math.e + t)
        if f is Family.PERTURBED:
            return self.coefficient("a", x) * p * t ** (p - 1)
        if f is Family.VARIABLE_EXPONENT:
            px = self.coefficient("p", x)
            return px * t ** (px - 1)
        if f is Family.DOUBLE_PHASE:
            q = prm["q"]
            return p * t ** (p - 1) + self.coefficient("a", x) * q * t ** (q - 1)
        if f is Family.GENERAL_DOUBLE_PHASE:
            q = prm["q"]
            return (
                self.coefficient("a", x) * p * t ** (p - 1)
                + self.coefficient("b", x) * q * t ** (q - 1)
            )
        if f is Family.RADULESCU:
            px = self.coefficient("p", x)
            qx = self.coefficient("q", x)
            return px * t ** (px - 1) + qx * t ** (qx - 1)
        if f is Family.TRIPLE_PHASE:
            q, s = prm["q"], prm["s"]
            return (
                p * t ** (p - 1)
                + self.coefficient("a", x) * q * t ** (q - 1)
                + self.coefficient("b", x) * s * t ** (s - 1)
            )
        if "dphi" in self.coeff_exprs:
            return self._custom("dphi", x, t)
        h = np.maximum(_DIFF_ABS, _DIFF_REL * t)
        return (self._custom("phi", x, t + h) - self._custom("phi", x, t)) / h

    def _custom(self, name: str, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        expr = self.coeff_exprs[name]
        env = {f"x{i + 1}": x[..., i] for i in range(x.shape[-1])}
        out = np.asarray(expr.evaluate(t=t, **env), dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], t.shape)
        out = np.broadcast_to(out, shape)
        if np.any(np.isnan(out)):
            raise PhiError(f"Expression {expr} evaluated to NaN")
        return out

    # ---- Validation ----

    def _validate_structure(self) -> None:
        f = self.family
        missing = [k for k in _REQUIRED_PARAMS[f] if k not in self.params]
        if missing:
            raise PhiError(f"Family {f.value} needs parameters {missing}")
        allowed = set(_REQUIRED_PARAMS[f]) | set(_OPTIONAL_PARAMS)
        unknown = sorted(set(self.params) - allowed)
        if unknown:
            raise PhiError(f"Unknown parameters {unknown} for family {f.value}")
        p = self.params["p"]
        if not p > 1:
            raise PhiError(f"Lower exponent p must exceed 1, got {p}")
        if self.upper_exponent < p:
            raise PhiError(f"Need p ≤ q, got p={p}, q={self.upper_exponent}")
        if f is Family.TRIPLE_PHASE and min(self.params["q"], self.params["s"]) < p:
            raise PhiError("Triple phase needs p ≤ q and p ≤ s")
        if self.params.get("scale", 1.0) <= 0:
            raise PhiError("scale must be positive")
        need = _REQUIRED_COEFFICIENTS[f]
        allowed_c = set(need) | set(_OPTIONAL_COEFFICIENTS.get(f, ()))
        missing_c = [k for k in need if k not in self.coeff_exprs]
        if missing_c:
            raise PhiError(f"Family {f.value} needs coefficient expressions {missing_c}")
        unknown_c = sorted(set(self.coeff_exprs) - allowed_c)
        if unknown_c:
            raise PhiError(f"Unknown coefficients {unknown_c} for family {f.value}")
        if self.domain.dimension != self.dimension:
            raise PhiError(
                f"Domain dimension {self.domain.dimension} != declared dimension {self.dimension}"
            )
        for name, expr in self.coeff_exprs.items():
            if expr.max_coordinate > self.dimension:
                raise PhiError(
                    f"Coefficient {name}={expr} uses x{expr.max_coordinate}"
                    f" in dimension {self.dimension}"
                )
            if "r" in expr.variables or (f is not Family.CUSTOM and "t" in expr.variables):
                raise PhiError(
                    f"Coefficient {name}={expr} may only depend on x1..x{self.dimension}"
                )

    def _validate_on_samples(self, samples: np.ndarray) -> None:
        f = self.family
        for name in self.coeff_exprs:
            if f is not Family.CUSTOM:
                self.coefficient(name, samples)
        if f in (Family.VARIABLE_EXPONENT, Family.RADULESCU):
            lo, hi = self.params["p"], self.params["q"]
            for name in ("p", "q") if f is Family.RADULESCU else ("p",):
                values = self.coefficient(name, samples)
                if values.min() < lo - 1e-12 or values.max() > hi + 1e-12:
                    raise PhiError(
                        f"Exponent {name}(x) ranges over [{values.min():.6g}, {values.max():.6g}],"
                        f" outside the declared [{lo}, {hi}]"
                    )
        if f in (Family.PERTURBED, Family.GENERAL_DOUBLE_PHASE):
            total = self.coefficient("a", samples)
            if f is Family.GENERAL_DOUBLE_PHASE:
                total = total + self.coefficient("b", samples)
            nu = self.params.get("nu")
            big = self.params.get("Lambda")
            if nu is not None and total.min() < nu - 1e-12:
                raise PhiError(f"Coefficient sum drops to {total.min():.6g} < nu={nu}")
            if big is not None and total.max() > big + 1e-12:
                raise PhiError(f"Coefficient sum reaches {total.max():.6g} > Lambda={big}")
        t = np.concatenate([[0.0], np.logspace(-4, 4, 33)])
        values = self.value(samples[:, None, :], t[None, :])
        if np.any(np.abs(values[:, 0]) > 0):
            raise PhiError("φ(x, 0) must vanish")
        if np.any(np.diff(values, axis=1) < -_MONOTONE_TOL * (1 + np.abs(values[:, 1:]))):
            raise PhiError("t ↦ φ(x, t) is not nondecreasing on samples")


@dataclass(frozen=True, eq=False)
class ScaledPhi(PhiFunction):
    """c·φ(x, t) for c > 0."""

    base: PhiFunction
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise PhiError(f"Scale factor must be positive, got {self.factor}")

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
        return self.base.is_autonomous

    def value(self, x, t):
        return self.factor * self.base.value(x, t)

    def derivative(self, x, t):
        return self.factor * self.base.derivative(x, t)

    def envelope_coefficients(self):
        return self.base.envelope_coefficients()


def _check_point(phi: PhiFunction, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[-1] != phi.dimension:
        raise PhiError(f"Point {x} has dimension {x.shape[-1]}, expected {phi.dimension}")
    if not np.all(phi.domain.contains(x)):
        raise PhiError(f"Point {x} lies outside the domain")
    return x


def evaluate(phi: PhiFunction, x, t) -> float | np.ndarray:
    """φ(x, t) at a point of the domain; scalar in, scalar out."""
    x = _check_point(phi, x)
    out = phi.value(x, t)
    return float(out) if np.ndim(out) == 0 else out


def deriv(phi: PhiFunction, x, t) -> float | np.ndarray:
    """Right-derivative φ'(x, t)."""
    x = _check_point(phi, x)
    out = phi.derivative(x, t)
    return float(out) if np.ndim(out) == 0 else out

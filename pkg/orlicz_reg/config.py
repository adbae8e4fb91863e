"""Run configuration: YAML files with a strict per-section schema.

Every section maps onto a frozen dataclass; unknown keys, missing required
sections and values of the wrong type raise :class:`ConfigError`.
"""

from __future__ import annotations

import dataclasses
import logging
import pathlib
from dataclasses import dataclass, field
from typing import Any

import yaml

from orlicz_reg.expression import Expression, ExpressionError, parse_expression
from orlicz_reg.geometry import Domain
from orlicz_reg.phi import PhiSpec

logger = logging.getLogger(__name__)

__all__ = [
    "COMMANDS",
    "CheckSection",
    "CompareSection",
    "ConfigError",
    "DomainSection",
    "HolderSection",
    "PhiSection",
    "RegularizeSection",
    "RunConfig",
    "SolveSection",
    "SweepSection",
    "load_config",
    "parse_config",
]

MIN_GRID = 16

COMMANDS = ("check", "regularize", "solve", "compare", "holder", "sweep")

_REQUIRED: dict[str, tuple[str, ...]] = {
    "check": ("phi", "domain"),
    "regularize": ("phi", "domain"),
    "solve": ("phi", "domain", "grid", "boundary"),
    "compare": ("phi", "domain", "grid", "boundary"),
    "holder": ("phi", "domain", "grid", "boundary"),
    "sweep": ("sweep",),
}


class ConfigError(ValueError):
    pass


# ---- Helpers ----


def _mapping(raw: Any, where: str) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(raw).__name__}")
    return raw


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _integer(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def _numbers(value: Any, where: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{where}: expected a list of numbers, got {value!r}")
    return tuple(_number(v, f"{where}[{i}]") for i, v in enumerate(value))


def _convert(value: Any, default: Any, where: str) -> Any:
    """Coerce *value* to the type of the field default."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        return _integer(value, where)
    if isinstance(default, float):
        return _number(value, where)
    if isinstance(default, tuple):
        return _numbers(value, where)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(default, dict) and not isinstance(value, dict):
        raise ConfigError(f"{where}: expected a mapping, got {value!r}")
    if isinstance(default, list) and not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list, got {value!r}")
    return value


def _section(cls, raw: Any, where: str):
    """Instantiate the dataclass *cls* from a mapping, rejecting unknown keys."""
    raw = _mapping(raw, where)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - set(fields))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    kwargs = {}
    for name, value in raw.items():
        f = fields[name]
        if f.default is not dataclasses.MISSING:
            default = f.default
        elif f.default_factory is not dataclasses.MISSING:
            default = f.default_factory()
        else:
            default = None
        if value is None:
            kwargs[name] = None
        else:
            kwargs[name] = _convert(value, default, f"{where}.{name}")
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigError(f"{where}: {e}") from None


# ---- Sections ----


@dataclass(frozen=True)
class PhiSection:
    family: str = ""
    params: dict = field(default_factory=dict)
    coefficients: dict = field(default_factory=dict)
    dimension: int = 0


@dataclass(frozen=True)
class DomainSection:
    kind: str = ""
    bounds: Any = None
    center: tuple[float, ...] = ()
    radius: float = 0.0
    inner_radius: float = 0.0

    def build(self) -> Domain:
        where = "domain"
        if self.kind == "interval":
            lo, hi = _numbers(self.bounds, f"{where}.bounds")
            return Domain.interval(lo, hi)
        if self.kind == "rect":
            if not isinstance(self.bounds, (list, tuple)):
                raise ConfigError(f"{where}.bounds: expected [[a, b], [c, d]]")
            pairs = [_numbers(b, f"{where}.bounds[{i}]") for i, b in enumerate(self.bounds)]
            if any(len(pair) != 2 for pair in pairs):
                raise ConfigError(f"{where}.bounds: every axis needs [lower, upper]")
            return Domain.rect(pairs)
        if self.kind == "disc":
            return Domain.disc(self.center, self.radius)
        if self.kind == "annulus":
            return Domain.annulus(self.center, self.inner_radius, self.radius)
        raise ConfigError(f"{where}.kind: unknown domain kind {self.kind!r}")


@dataclass(frozen=True)
class CheckSection:
    r_grid: tuple[float, ...] = (0.016, 0.008, 0.004, 0.002)
    eps: float = 0.0
    samples: int = 64
    t_range: tuple[float, ...] = (1e-2, 1e2)
    ball_count: int = 64
    t_points: int = 48
    l_cap: float = 10.0
    r0: float = 0.5


@dataclass(frozen=True)
class RegularizeSection:
    r: float = 0.0
    center: tuple[float, ...] = ()
    sigma: float = 0.25
    nodes: int = 512
    verify: bool = True
    modulus: str = ""


@dataclass(frozen=True)
class SolveSection:
    eps: float = 0.0
    tol_e: float = 1e-12
    tol_el: float = 1e-8
    window: int = 10
    max_iterations: int = 200_000


@dataclass(frozen=True)
class CompareSection:
    r: float = 0.0
    center: tuple[float, ...] = ()
    modulus: str = ""


@dataclass(frozen=True)
class HolderSection:
    center: tuple[float, ...] = ()
    mode: str = "gradient"
    rho_max: float = 0.5
    radii: tuple[float, ...] = ()
    sigma: float = 0.2
    r: float = 0.0


@dataclass(frozen=True)
class SweepSection:
    points: list = field(default_factory=list)
    dimension: int = 2
    grid_n: int = 64
    boundary: str = "x1 + x2"
    r_grid: tuple[float, ...] = (0.016, 0.008, 0.004, 0.002)
    wva1_eps: float = 0.1
    rho_max: float = 0.5

    def parsed_points(self) -> list[tuple[float, float, float | None]]:
        out = []
        for i, point in enumerate(self.points):
            where = f"sweep.points[{i}]"
            if not isinstance(point, (list, tuple)) or len(point) != 3:
                raise ConfigError(f"{where}: expected [p, q, beta] (beta may be null)")
            p, q, beta = point
            out.append((
                _number(p, f"{where}.p"),
                _number(q, f"{where}.q"),
                None if beta is None else _number(beta, f"{where}.beta"),
            ))
        return out


_TOP_LEVEL = {
    "phi", "domain", "grid", "boundary", "seed", "output_dir", "svg",
    "check", "regularize", "solve", "compare", "holder", "sweep",
}


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration file."""

    phi: PhiSection | None
    domain: DomainSection | None
    grid_n: int | None
    boundary: str | None
    seed: int
    output_dir: pathlib.Path
    svg: bool
    check: CheckSection = field(default_factory=CheckSection)
    regularize: RegularizeSection = field(default_factory=RegularizeSection)
    solve: SolveSection = field(default_factory=SolveSection)
    compare: CompareSection = field(default_factory=CompareSection)
    holder: HolderSection = field(default_factory=HolderSection)
    sweep: SweepSection | None = None
    present: frozenset = frozenset()

    def require(self, command: str) -> None:
        if command not in _REQUIRED:
            raise ConfigError(f"Unknown command {command!r}")
        missing = [name for name in _REQUIRED[command] if name not in self.present]
        if missing:
            raise ConfigError(f"{command} needs config sections {missing}")

    def build_domain(self) -> Domain:
        if self.domain is None:
            raise ConfigError("No domain section")
        try:
            return self.domain.build()
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(f"domain: {e}") from e

    def build_phi(self) -> PhiSpec:
        if self.phi is None:
            raise ConfigError("No phi section")
        domain = self.build_domain()
        if self.phi.dimension and self.phi.dimension != domain.dimension:
            raise ConfigError(
                f"phi.dimension={self.phi.dimension} but the domain has"
                f" dimension {domain.dimension}"
            )
        for key, value in self.phi.params.items():
            _number(value, f"phi.params.{key}")
        return PhiSpec.create(
            self.phi.family,
            self.phi.params,
            {k: str(v) for k, v in self.phi.coefficients.items()},
            domain=domain,
        )

    def boundary_expression(self) -> Expression:
        if self.boundary is None:
            raise ConfigError("No boundary expression")
        try:
            return parse_expression(self.boundary)
        except ExpressionError as e:
            raise ConfigError(f"boundary: {e}") from e

    def domain_center(self) -> tuple[float, ...]:
        domain = self.build_domain()
        if domain.center is not None:
            return domain.center
        return tuple(0.5 * (lo + hi) for lo, hi in zip(domain.lower, domain.upper))


def parse_config(raw: Any, *, source: str = "<config>") -> RunConfig:
    raw = _mapping(raw, source)
    unknown = sorted(set(raw) - _TOP_LEVEL)
    if unknown:
        raise ConfigError(f"{source}: unknown top-level keys {unknown}")
    present = frozenset(k for k, v in raw.items() if v is not None)

    grid_n = None
    if "grid" in raw:
        grid = _mapping(raw["grid"], "grid")
        extra = sorted(set(grid) - {"n"})
        if extra or "n" not in grid:
            raise ConfigError(f"grid: expected exactly the key 'n', got {sorted(grid)}")
        grid_n = _integer(grid["n"], "grid.n")
        if grid_n < MIN_GRID:
            raise ConfigError(f"grid.n must be ≥ {MIN_GRID}, got {grid_n}")

    boundary = raw.get("boundary")
    if boundary is not None and not isinstance(boundary, (str, int, float)):
        raise ConfigError("boundary: expected an expression string")

    seed = raw.get("seed", 0)
    seed = _integer(seed, "seed")
    svg = raw.get("svg", False)
    if not isinstance(svg, bool):
        raise ConfigError("svg: expected true/false")

    config = RunConfig(
        phi=_section(PhiSection, raw["phi"], "phi") if "phi" in raw else None,
        domain=_section(DomainSection, raw["domain"], "domain") if "domain" in raw else None,
        grid_n=grid_n,
        boundary=None if boundary is None else str(boundary),
        seed=seed,
        output_dir=pathlib.Path(str(raw.get("output_dir", "out"))),
        svg=svg,
        check=_section(CheckSection, raw.get("check"), "check"),
        regularize=_section(RegularizeSection, raw.get("regularize"), "regularize"),
        solve=_section(SolveSection, raw.get("solve"), "solve"),
        compare=_section(CompareSection, raw.get("compare"), "compare"),
        holder=_section(HolderSection, raw.get("holder"), "holder"),
        sweep=_section(SweepSection, raw["sweep"], "sweep") if "sweep" in raw else None,
        present=present,
    )
    _validate(config)
    return config


def _validate(config: RunConfig) -> None:
    """Cross-section checks: expressions parse and radii fit the domain."""
    if config.boundary is not None:
        config.boundary_expression()
    if config.phi is not None:
        if not config.phi.family:
            raise ConfigError("phi.family is required")
        config.build_phi()
    if config.domain is not None:
        domain = config.build_domain()
        extent = min(hi - lo for lo, hi in zip(domain.lower, domain.upper))
        for r in config.check.r_grid:
            if not 0 < r < extent / 2:
                raise ConfigError(f"check.r_grid value {r} does not fit in the domain")
            if r > config.check.r0:
                raise ConfigError(f"check.r_grid value {r} exceeds r0={config.check.r0}")
    if config.check.eps and not 0 < config.check.eps < 1:
        raise ConfigError(f"check.eps must lie in (0, 1), got {config.check.eps}")
    if config.holder.mode not in ("function", "gradient"):
        raise ConfigError(f"holder.mode must be function or gradient, got {config.holder.mode!r}")
    if config.sweep is not None:
        if not config.sweep.points:
            raise ConfigError("sweep.points must list at least one [p, q, beta]")
        config.sweep.parsed_points()
        if config.sweep.grid_n < MIN_GRID:
            raise ConfigError(f"sweep.grid_n must be ≥ {MIN_GRID}")
        try:
            parse_expression(config.sweep.boundary)
        except ExpressionError as e:
            raise ConfigError(f"sweep.boundary: {e}") from e


def load_config(path: str | pathlib.Path) -> RunConfig:
    path = pathlib.Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from e
    config = parse_config(raw, source=str(path))
    logger.debug("Loaded config %s", path)
    return config

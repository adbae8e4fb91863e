"""Batch front end: check, regularize, solve, compare, holder and sweep.

Usage::

    orlicz-reg check --config configs/check_double_phase.yaml
    orlicz-reg regularize --config configs/regularize.yaml --r 0.1
    orlicz-reg solve --config configs/solve_1d.yaml
    orlicz-reg compare --config configs/compare.yaml --r 0.1 0.08
    orlicz-reg holder --config configs/holder.yaml --center 0,0 --mode gradient
    orlicz-reg sweep --config configs/sweep.yaml

Exit codes: 0 on success, 2 on invalid input, 3 on numeric failure (artifacts
produced before the failure are kept).
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from orlicz_reg.analysis import (
    SWEEP_COLUMNS,
    PreconditionError,
    SweepOptions,
    campanato_fit,
    higher_integrability_ratio,
    morrey_decay,
    threshold_sweep,
)
from orlicz_reg.calculus import GrowthError, growth_constants
from orlicz_reg.conditions import (
    InconsistentReportsError,
    ModulusOfContinuity,
    check_a0,
    check_a1,
    check_rate_condition,
    check_wva1,
    classify_regularity,
    closed_form_modulus,
    estimate_va1_modulus,
)
from orlicz_reg.config import COMMANDS, ConfigError, RunConfig, load_config
from orlicz_reg.geometry import Ball, domain_samples
from orlicz_reg.grid import Grid
from orlicz_reg.phi import NumericalError, PhiError, PhiSpec
from orlicz_reg.regularize import ConstructionError, build_theta, regularize_on_ball
from orlicz_reg.reporting import plot_loglog, write_csv, write_report
from orlicz_reg.solver import (
    DiscreteProblem,
    SolveResult,
    SolverError,
    SolverOptions,
    comparison_metrics,
    lipschitz_proxy,
    minimize,
    oscillation_decay,
    solve_comparison,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------


def _coords_header(n: int) -> list[str]:
    return ["x", "y"][:n]


def _parse_point(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"Cannot parse point {text!r}; expected comma-separated numbers")


def _modulus(config: RunConfig, phi: PhiSpec, source: str) -> ModulusOfContinuity:
    """Configured expression, else the closed form, else the estimated VA1 table."""
    if source:
        return ModulusOfContinuity.from_expression(source)
    try:
        return closed_form_modulus(phi)
    except PhiError:
        logger.info("No closed-form modulus; estimating the VA1 modulus")
    report = estimate_va1_modulus(
        phi, config.check.r_grid, ball_count=config.check.ball_count,
        t_points=config.check.t_points, seed=config.seed, r0=config.check.r0,
    )
    return ModulusOfContinuity.from_report(report)


def _solver_options(config: RunConfig) -> SolverOptions:
    s = config.solve
    return SolverOptions(
        tol_e=s.tol_e, tol_el=s.tol_el, window=s.window, max_iterations=s.max_iterations
    )


def _solve(config: RunConfig, phi: PhiSpec) -> SolveResult:
    grid = Grid.for_domain(phi.domain, config.grid_n)
    problem = DiscreteProblem.from_expression(
        grid, phi, config.boundary_expression(), eps=config.solve.eps
    )
    logger.info("Solving on %d cells (h=%.4g)", grid.cell_count, grid.h)
    return minimize(problem, _solver_options(config))


def _write_field(config: RunConfig, result: SolveResult, stem: str) -> None:
    out = config.output_dir
    header = _coords_header(result.grid.dimension)
    write_csv(out / f"{stem}.csv", header + ["u"], result.field.rows())
    write_csv(out / f"{stem}_gradient.csv", header + ["grad_norm"], result.field.gradient_rows())
    write_csv(
        out / f"{stem}_energy.csv",
        ["iteration", "energy"],
        enumerate(result.energy_trajectory),
    )


def _solve_lines(result: SolveResult) -> list[str]:
    return [
        f"energy: {result.energy:.12g}",
        f"iterations: {result.iterations}",
        f"EL residual: {result.el_residual:.3g} (tol {result.tol_el:.3g})",
        f"converged: {'yes' if result.converged else 'no'}",
        *(f"note: {n}" for n in result.notes),
    ]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_check(config: RunConfig, args: argparse.Namespace) -> None:
    phi = config.build_phi()
    c = config.check
    eps = args.eps if args.eps is not None else c.eps
    samples = domain_samples(phi.domain, c.samples, seed=config.seed)

    reports = [
        check_a0(phi, samples, l_cap=c.l_cap),
        check_rate_condition(phi, "aInc", phi.lower_exponent, samples, t_range=c.t_range),
        check_rate_condition(phi, "aDec", phi.upper_exponent, samples, t_range=c.t_range),
        check_a1(
            phi, c.r_grid, l_cap=c.l_cap, ball_count=c.ball_count, t_points=c.t_points,
            seed=config.seed, r0=c.r0,
        ),
        estimate_va1_modulus(
            phi, c.r_grid, ball_count=c.ball_count, t_points=c.t_points,
            seed=config.seed, r0=c.r0,
        ),
    ]
    if eps:
        reports.append(
            check_wva1(
                phi, c.r_grid, eps, ball_count=c.ball_count, t_points=c.t_points,
                seed=config.seed, r0=c.r0,
            )
        )
    regularity = classify_regularity(reports)

    lines = [
        f"family: {phi.family.value}",
        f"declared p={phi.lower_exponent:g} q={phi.upper_exponent:g}",
    ]
    try:
        growth = growth_constants(phi, samples, c.t_range)
        lines.append(
            f"growth: p_hat={growth.p_hat:g} q_hat={growth.q_hat:g} L_hat={growth.L_hat:.6g}"
        )
    except GrowthError as e:
        lines.append(f"growth: {e}")
    lines += [rep.summary() for rep in reports]
    for rep in reports:
        if rep.witness is not None and not rep.holds:
            w = rep.witness
            lines.append(
                f"witness {rep.label}: x={np.round(w.x, 12).tolist()}"
                f" t={w.t:.6g} ratio={w.ratio:.6g}"
            )
    lines.append(f"predicted regularity: {regularity.value}")
    try:
        predicted = closed_form_modulus(phi, eps)
        lines.append(
            f"closed-form modulus: {predicted.expression}"
            f" (rate {predicted.rate_text}, class {predicted.regularity.value})"
        )
    except PhiError as e:
        lines.append(f"closed-form modulus: unavailable ({e})")

    out = config.output_dir
    write_csv(
        out / "conditions.csv",
        ["condition", "parameter", "verdict", "constant", "holder_rate"],
        [
            (rep.condition.value, rep.parameter, rep.verdict.value,
             rep.constant_estimate, rep.holder_rate)
            for rep in reports
        ],
    )
    modulus_rows = []
    for rep in reports:
        for (r, w), (_, raw) in zip(rep.modulus_table, rep.raw_table):
            modulus_rows.append((rep.label, r, w, raw))
    write_csv(out / "modulus.csv", ["condition", "r", "omega_hat", "omega_raw"], modulus_rows)
    write_report(out / "report.txt", "Condition check", lines)
    if config.svg:
        plot_loglog(
            out / "modulus.svg",
            {rep.label: rep.modulus_table for rep in reports if rep.modulus_table},
            title="Fixed-point moduli",
            xlabel="r",
            ylabel="omega_hat(r)",
            slopes={rep.label: rep.holder_rate for rep in reports},
        )


def cmd_regularize(config: RunConfig, args: argparse.Namespace) -> None:
    phi = config.build_phi()
    rc = config.regularize
    r = args.r if args.r is not None else rc.r
    if not r > 0:
        raise ConfigError("regularize needs a positive radius (--r or regularize.r)")
    ball = Ball.at(rc.center or config.domain_center(), r)
    ball.check_in(phi.domain)
    omega = _modulus(config, phi, rc.modulus)
    out = config.output_dir
    lines = [f"ball: B_{r:g}({', '.join(f'{v:g}' for v in ball.center)})"]
    try:
        reg, report = regularize_on_ball(
            phi, ball, omega, verify=rc.verify, seed=config.seed, nodes=rc.nodes
        )
    except ConstructionError as e:
        if e.report is not None:
            lines += e.report.lines()
        lines.append(f"FAILED: {e}")
        write_report(out / "report.txt", "Regularization", lines)
        raise
    lines += [
        f"omega(2r) = {reg.omega_2r:.6g}",
        f"t1 = {reg.t1:.12g}, t2 = {reg.t2:.12g}",
        f"a1 = {reg.a1:.12g}, a2 = {reg.a2:.12g}",
    ]
    residuals = reg.profile.continuity_residuals
    lines.append(f"continuity residuals: {residuals[0]:.3g}, {residuals[1]:.3g}")
    if report is not None:
        lines += report.lines()
    write_csv(out / "phi_tilde.csv", ["t", "phi_tilde", "dphi_tilde"], reg.table_rows())

    try:
        _, theta_reports = build_theta(phi, reg, rc.sigma, seed=config.seed)
        lines += [f"theta: {rep.summary()}" for rep in theta_reports]
    finally:
        write_report(out / "report.txt", "Regularization", lines)


def cmd_solve(config: RunConfig, args: argparse.Namespace) -> None:
    phi = config.build_phi()
    result = _solve(config, phi)
    _write_field(config, result, "solution")
    write_report(config.output_dir / "report.txt", "Solve", _solve_lines(result))
    if not result.converged:
        raise SolverError(f"No convergence within {result.iterations} iterations")


def cmd_compare(config: RunConfig, args: argparse.Namespace) -> None:
    phi = config.build_phi()
    cc = config.compare
    radii = args.r if args.r else ([cc.r] if cc.r > 0 else [])
    if not radii:
        raise ConfigError("compare needs at least one radius (--r or compare.r)")
    center = cc.center or config.domain_center()
    omega = _modulus(config, phi, cc.modulus)

    u = _solve(config, phi)
    _write_field(config, u, "solution")
    lines = ["u:", *(f"  {line}" for line in _solve_lines(u))]
    rows = []
    out = config.output_dir
    try:
        for r in radii:
            ball = Ball.at(center, r)
            reg, _ = regularize_on_ball(phi, ball, omega, verify=False, seed=config.seed)
            v = solve_comparison(phi, reg, u, ball, _solver_options(config))
            metrics = comparison_metrics(u, v, reg, ball)
            lip = lipschitz_proxy(v.field, center, r)
            alpha0, _ = oscillation_decay(v.field, center, r)
            rows.append((r, metrics.m2, metrics.m1, metrics.normalizer, metrics.relative,
                         lip, alpha0, v.converged))
            lines.append(
                f"r={r:g}: M2={metrics.m2:.6g} M1={metrics.m1:.6g}"
                f" M1/(mean|Du|+1)={metrics.relative:.6g} lip={lip:.4g} alpha0={alpha0:.4g}"
            )
    finally:
        write_csv(
            out / "comparison.csv",
            ["r", "m2", "m1", "normalizer", "relative", "lipschitz_proxy", "alpha0",
             "converged"],
            rows,
        )
        write_report(out / "report.txt", "Comparison", lines)


def cmd_holder(config: RunConfig, args: argparse.Namespace) -> None:
    phi = config.build_phi()
    hc = config.holder
    center = _parse_point(args.center) if args.center else (hc.center or config.domain_center())
    mode = args.mode or hc.mode
    u = _solve(config, phi)
    radii = list(hc.radii) or None
    fit = campanato_fit(u.field, center, radii, mode, rho_max=hc.rho_max)
    morrey = morrey_decay(u.field, center, radii, rho_max=hc.rho_max)
    lines = [
        *_solve_lines(u),
        f"campanato ({mode}): alpha_hat={fit.alpha_hat:.6g} rms={fit.fit_residual:.3g}",
        f"morrey: slope={morrey.slope:.6g} tau={morrey.tau:.6g} alpha={morrey.alpha:.6g}",
        f"max |grad u| = {float(u.field.gradient_norm().max()):.6g}",
    ]
    if hc.r > 0:
        try:
            hi = higher_integrability_ratio(u.field, phi, Ball.at(center, hc.r), hc.sigma)
            lines.append(
                f"higher integrability sigma={hi.sigma:g}: R={hi.ratio:.6g}"
                f" reverse={hi.reverse_holder:.6g}"
            )
        except PreconditionError as e:
            lines.append(f"higher integrability skipped: {e}")

    out = config.output_dir
    write_csv(out / "campanato.csv", ["rho", "oscillation"], fit.rows)
    write_csv(out / "morrey.csv", ["rho", "gradient_integral"], morrey.rows)
    write_report(out / "report.txt", "Holder estimates", lines)
    if config.svg:
        plot_loglog(
            out / "decay.svg",
            {"oscillation": fit.rows, "gradient integral": morrey.rows},
            title="Decay over shrinking balls",
            xlabel="rho",
            ylabel="value",
            slopes={"oscillation": fit.alpha_hat, "gradient integral": morrey.slope},
        )


def cmd_sweep(config: RunConfig, args: argparse.Namespace) -> None:
    sc = config.sweep
    opts = SweepOptions(
        dimension=sc.dimension,
        grid_n=sc.grid_n,
        boundary=sc.boundary,
        r_grid=sc.r_grid,
        wva1_eps=sc.wva1_eps,
        ball_count=config.check.ball_count,
        t_points=config.check.t_points,
        rho_max=sc.rho_max,
        seed=config.seed,
        solver=_solver_options(config),
    )
    rows = threshold_sweep(sc.parsed_points(), opts)
    out = config.output_dir
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, [row.as_tuple() for row in rows])
    write_report(
        out / "report.txt",
        "Threshold sweep",
        [
            f"p={row.p:g} q={row.q:g} beta={row.beta}: VA1 {row.va1 or '-'},"
            f" predicted {row.predicted_class or '-'}, {row.status}"
            for row in rows
        ],
    )
    if config.svg:
        plot_loglog(
            out / "sweep_modulus.svg",
            {f"q={row.q:g} beta={row.beta}": row.modulus_table for row in rows},
            title="VA1 modulus per sweep point",
            xlabel="r",
            ylabel="omega_hat(r)",
        )


_HANDLERS = {
    "check": cmd_check,
    "regularize": cmd_regularize,
    "solve": cmd_solve,
    "compare": cmd_compare,
    "holder": cmd_holder,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orlicz-reg",
        description="Φ-function conditions, regularization and φ-energy experiments",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Only log warnings")
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log debug detail")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", required=True, help="Path to the YAML config")
        return p

    p = add("check", "Verify A0/aInc/aDec/A1/VA1 (and wVA1 with --eps)")
    p.add_argument("--eps", type=float, default=None, help="wVA1 parameter in (0, 1)")
    p = add("regularize", "Build the autonomous approximation on a ball")
    p.add_argument("--r", type=float, default=None, help="Ball radius")
    add("solve", "Minimize the φ-energy with Dirichlet data")
    p = add("compare", "Solve the comparison problem on balls around the center")
    p.add_argument("--r", type=float, nargs="+", default=None, help="Ball radii")
    p = add("holder", "Campanato/Morrey exponents of the discrete minimizer")
    p.add_argument("--center", type=str, default=None, help="Ball center, e.g. 0,0")
    p.add_argument("--mode", choices=("function", "gradient"), default=None)
    add("sweep", "Double phase threshold sweep")
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    assert args.command in COMMANDS, f"Unhandled command {args.command}"
    try:
        config = load_config(args.config)
        config.require(args.command)
        config.output_dir.mkdir(parents=True, exist_ok=True)
        _HANDLERS[args.command](config, args)
    except (NumericalError, InconsistentReportsError) as e:
        logger.error("Numeric failure: %s", e)
        return 3
    except ValueError as e:
        logger.error("Invalid input: %s", e)
        return 2
    logger.info("Artifacts written to %s", config.output_dir)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

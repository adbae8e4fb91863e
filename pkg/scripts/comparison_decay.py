#!/usr/bin/env python3
"""Comparison decay over shrinking balls at a fixed cells-per-radius ratio.

For each radius r the φ-energy is minimized on the square of half-width
``box * r`` around the center, the autonomous φ̃-problem is solved on B_r with
the trace of u, and M1 / (mean|Du| + 1) is reported.

Usage::

    python scripts/comparison_decay.py --q 2.2 --beta 1 --radii 0.1 0.05 0.025
    python scripts/comparison_decay.py --q 2.2 --cells-per-radius 32 -o decay.csv
"""

import argparse
import logging
import pathlib

from orlicz_reg.conditions import closed_form_modulus
from orlicz_reg.expression import parse_expression
from orlicz_reg.geometry import Ball, Domain
from orlicz_reg.grid import Grid
from orlicz_reg.phi import Family, PhiSpec
from orlicz_reg.regularize import regularize_on_ball
from orlicz_reg.reporting import write_csv
from orlicz_reg.solver import DiscreteProblem, comparison_metrics, minimize, solve_comparison


def main() -> None:
    parser = argparse.ArgumentParser(description="Comparison decay for t^p + |x1|^beta t^q")
    parser.add_argument("--p", type=float, default=2.0, help="Lower exponent (default: 2)")
    parser.add_argument("--q", type=float, default=2.2, help="Upper exponent (default: 2.2)")
    parser.add_argument("--beta", type=float, default=1.0, help="Exponent of a (default: 1)")
    parser.add_argument("--radii", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    parser.add_argument("--cells-per-radius", type=int, default=16, help="r/h (default: 16)")
    parser.add_argument("--box", type=float, default=2.0, help="Solve box half-width in units of r")
    parser.add_argument("--boundary", default="x1 + 0.5*x2^2", help="Dirichlet data")
    parser.add_argument("-o", "--output", default=None, help="Write CSV results here")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    boundary = parse_expression(args.boundary)
    rows = []
    for r in args.radii:
        half = args.box * r
        domain = Domain.rect([(-half, half), (-half, half)])
        phi = PhiSpec.create(
            Family.DOUBLE_PHASE,
            {"p": args.p, "q": args.q, "beta": args.beta},
            {"a": f"abs(x1)^{args.beta!r}"},
            domain=domain,
        )
        n = int(round(2 * args.box * args.cells_per_radius))
        grid = Grid.for_domain(domain, n)
        u = minimize(DiscreteProblem.from_expression(grid, phi, boundary))
        ball = Ball.at((0.0, 0.0), r)
        reg, _ = regularize_on_ball(phi, ball, closed_form_modulus(phi), verify=False)
        v = solve_comparison(phi, reg, u, ball)
        m = comparison_metrics(u, v, reg, ball)
        rows.append((r, n, m.m2, m.m1, m.normalizer, m.relative))
        print(f"  r={r:<8g} n={n:<5d} M2={m.m2:.6g}  M1/(mean|Du|+1)={m.relative:.6g}")

    if args.output:
        write_csv(
            pathlib.Path(args.output),
            ["r", "n", "m2", "m1", "normalizer", "relative"],
            rows,
        )
        print(f"Results written to {args.output}")


if __name__ == "__main__":
    main()

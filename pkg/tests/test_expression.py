"""Unit tests for the coefficient expression parser."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_reg.expression import ExpressionError, parse_expression


def _value(source: str, **env) -> float:
    return float(parse_expression(source).evaluate(**env))


# =============================================================================
# Precedence and associativity
# =============================================================================


class TestPrecedence:

    @pytest.mark.parametrize(
        "source, expected",
        [
            ("1 + 2*3", 7.0),
            ("1 + 2*3^2", 19.0),
            ("(1 + 2)*3", 9.0),
            ("2^3^2", 512.0),
            ("2**3**2", 512.0),
            ("-2^2", -4.0),
            ("(-2)^2", 4.0),
            ("2^-1", 0.5),
            ("8/4/2", 1.0),
            ("1 - 2 - 3", -4.0),
            ("1.5e1 + .5", 15.5),
        ],
        ids=[
            "mul-before-add", "pow-before-mul", "parens", "pow-right-assoc",
            "double-star", "unary-minus-weaker", "paren-negative", "negative-exponent",
            "div-left-assoc", "sub-left-assoc", "scientific",
        ],
    )
    def test_constant_arithmetic(self, source, expected):
        assert _value(source) == pytest.approx(expected)

    def test_constants_and_functions(self):
        assert _value("pi") == pytest.approx(math.pi)
        assert _value("log(e)") == pytest.approx(1.0)
        assert _value("sqrt(abs(-16))") == pytest.approx(4.0)
        assert _value("exp(0) + min(3, 1, 2) + max(1, 5)") == pytest.approx(7.0)


# =============================================================================
# Variables and vectorised evaluation
# =============================================================================


class TestVariables:

    def test_variable_set(self):
        expr = parse_expression("abs(x1)^0.5 + x3*t - r")
        assert expr.variables == frozenset({"x1", "x3", "t", "r"})
        assert expr.max_coordinate == 3
        assert not expr.is_constant

    def test_constant_expression(self):
        expr = parse_expression("2*pi")
        assert expr.is_constant
        assert expr.max_coordinate == 0

    def test_at_points_binds_last_axis(self):
        expr = parse_expression("x1 + 10*x2")
        x = np.array([[1.0, 2.0], [3.0, 4.0], [0.0, -1.0]])
        np.testing.assert_allclose(expr.at_points(x), [21.0, 43.0, -10.0])

    def test_at_points_broadcasts_constant(self):
        expr = parse_expression("3")
        out = expr.at_points(np.zeros((5, 2)))
        assert out.shape == (5,)
        np.testing.assert_allclose(out, 3.0)

    def test_extra_bindings(self):
        expr = parse_expression("min(t, 1)^3/3 + (max(t, 1)^2 - 1)/2")
        t = np.array([0.5, 1.0, 2.0])
        out = expr.evaluate(t=t)
        np.testing.assert_allclose(out, [0.125 / 3, 1 / 3, 1 / 3 + 1.5])

    def test_unbound_variable(self):
        with pytest.raises(ExpressionError, match="x2"):
            parse_expression("x1 + x2").evaluate(x1=1.0)

    @given(
        a=st.floats(-100, 100, allow_nan=False),
        b=st.floats(-100, 100, allow_nan=False),
        x=st.floats(-10, 10, allow_nan=False),
    )
    def test_affine_matches_python(self, a, b, x):
        expr = parse_expression(f"({a!r})*x1 + ({b!r})")
        assert float(expr.evaluate(x1=x)) == pytest.approx(a * x + b, rel=1e-12, abs=1e-9)


# =============================================================================
# Errors
# =============================================================================


class TestErrors:

    @pytest.mark.parametrize(
        "source",
        ["", "   ", "1 +", "(1 + 2", "1 + 2)", "foo(1)", "y", "x0", "2 $ 3", "abs(1, 2)", "min(1)"],
        ids=[
            "empty", "blank", "dangling-op", "open-paren", "close-paren", "unknown-func",
            "unknown-name", "x0", "bad-char", "abs-arity", "min-arity",
        ],
    )
    def test_rejected(self, source):
        with pytest.raises(ExpressionError):
            parse_expression(source)

    def test_is_value_error(self):
        with pytest.raises(ValueError):
            parse_expression("1 +* 2")

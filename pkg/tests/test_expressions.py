"""The arithmetic expression grammar used by run configurations."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpkit.expressions import FUNCTIONS, VARIABLES, parse_expression


def test_precedence_and_associativity():
    e = parse_expression("2 + 3 * 4", ())
    assert e() == pytest.approx(14.0)
    assert parse_expression("2 * 3 ^ 2", ())() == pytest.approx(18.0)
    # power is right-associative
    assert parse_expression("2 ^ 3 ^ 2", ())() == pytest.approx(512.0)
    assert parse_expression("(2 + 3) * 4", ())() == pytest.approx(20.0)


def test_unary_minus_binds_below_power():
    assert parse_expression("-2^2", ())() == pytest.approx(-4.0)
    assert parse_expression("2^-2", ())() == pytest.approx(0.25)
    assert parse_expression("--3", ())() == pytest.approx(3.0)


def test_division_left_associative():
    assert parse_expression("8 / 4 / 2", ())() == pytest.approx(1.0)


def test_variables_broadcast(interval_mesh):
    e = parse_expression("sin(pi * x) + 1", ("x",))
    x = np.linspace(0.0, 1.0, 11)
    np.testing.assert_allclose(e(x=x), np.sin(np.pi * x) + 1.0, atol=1e-15)


def test_scalar_environment_broadcasts_against_arrays():
    e = parse_expression("s * xi1 + y", ("y", "s", "xi1"))
    xi = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(e(n=3, y=0.5, s=2.0, xi1=xi), 2.0 * xi + 0.5)


def test_all_functions_evaluate():
    for name in FUNCTIONS:
        e = parse_expression(f"{name}(0.5)", ())
        assert np.isfinite(e())


def test_pi_constant():
    assert parse_expression("cos(pi)", ())() == pytest.approx(-1.0)


def test_unknown_variable_rejected():
    with pytest.raises(ValueError, match="x"):
        parse_expression("x + 1", ())
    with pytest.raises(ValueError):
        parse_expression("z + 1", VARIABLES)


def test_unknown_function_rejected():
    with pytest.raises(ValueError):
        parse_expression("tan(x)", ("x",))


def test_syntax_errors_carry_position():
    with pytest.raises(ValueError, match=r"position"):
        parse_expression("1 + * 2", ())
    with pytest.raises(ValueError):
        parse_expression("(1 + 2", ())
    with pytest.raises(ValueError):
        parse_expression("", ())
    with pytest.raises(ValueError):
        parse_expression("1 2", ())


def test_source_round_trip_attribute():
    e = parse_expression("x ^ 2", ("x",))
    assert e.source == "x ^ 2"
    assert set(e.variables) == {"x"}


@given(
    st.floats(min_value=-5, max_value=5),
    st.floats(min_value=-5, max_value=5),
    st.floats(min_value=0.1, max_value=3.0),
)
@settings(max_examples=50, deadline=None)
def test_matches_reference_evaluation(a, b, c):
    e = parse_expression("a0 * sin(x) + exp(-x^2) / c0", ("x", "a0", "c0"))
    got = e(x=b, a0=a, c0=c)
    want = a * np.sin(b) + np.exp(-(b**2)) / c
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

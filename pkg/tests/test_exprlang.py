import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hs

from dedonder import exprlang as ex
from dedonder import scalar_taylor as st

from oracles import random_expression


def value(text, **env):
    return ex.eval_generic(ex.parse(text), env)


class TestParser:
    def test_precedence(self):
        assert value("1 + 2*3") == 7.0
        assert value("(1 + 2)*3") == 9.0
        assert value("2*3^2") == 18.0
        assert value("8/4/2") == 1.0
        assert value("1 - 2 - 3") == -4.0

    def test_unary_minus_binds_looser_than_power(self):
        assert value("-x1^2", x1=3.0) == -9.0
        assert value("(-x1)^2", x1=3.0) == 9.0

    def test_negative_exponent(self):
        assert value("x1^(-2)", x1=2.0) == 0.25
        assert value("x1^-1", x1=4.0) == 0.25

    def test_functions(self):
        assert value("ln(exp(1.5))") == pytest.approx(1.5)
        assert value("sqrt(x2)", x2=9.0) == 3.0
        assert value("sin(0) + cos(0)") == 1.0

    def test_scientific_constants(self):
        assert value("1.5e-3 * 2E2") == pytest.approx(0.3)

    def test_unknown_identifier(self):
        with pytest.raises(ex.UnknownIdentifierError) as info:
            ex.parse("x1 + y7")
        assert info.value.offset == 5

    def test_syntax_error_offset(self):
        with pytest.raises(ex.ExprSyntaxError) as info:
            ex.parse("-(1 - 2/x2")
        assert info.value.offset == 10

    def test_bad_character(self):
        with pytest.raises(ex.ExprSyntaxError) as info:
            ex.parse("x1 $ 2")
        assert info.value.offset == 3

    def test_exponent_must_be_integer_literal(self):
        for text in ("x1^x2", "x1^1.5", "x1^12"):
            with pytest.raises(ex.ExprSyntaxError):
                ex.parse(text)

    def test_trailing_tokens(self):
        with pytest.raises(ex.ExprSyntaxError):
            ex.parse("x1 x2")

    def test_unbound_variable(self):
        with pytest.raises(ex.UnboundVariableError):
            ex.eval_generic(ex.parse("x1 + t"), {"x1": 1.0})

    def test_restricted_variables(self):
        with pytest.raises(ex.UnknownIdentifierError):
            ex.parse("x1", variables=("t",))

    def test_variables_of(self):
        assert ex.variables_of(ex.parse("sin(x1)*t + x1^2")) == {"x1", "t"}


class TestEvaluation:
    def test_generic_matches_float(self):
        node = ex.parse("exp(0.5*x1)*sin(x2) / (1 + x3^2) - ln(2 + x4)")
        x = np.array([0.1, -0.3, 0.7, 0.2])
        t = st.taylor_lift(lambda v: ex.eval_generic(node, ex.coordinate_env(v)), x, 2)
        assert float(t.const) == pytest.approx(ex.eval_generic(node, ex.coordinate_env(x)))

    @given(hs.integers(min_value=0, max_value=2**31))
    def test_order_zero_lift_is_exact(self, seed):
        rng = np.random.default_rng(seed)
        node = ex.parse(random_expression(rng))
        x = rng.uniform(-0.5, 0.5, 4)
        lifted = st.taylor_lift(lambda v: v[0] * 0.0 + ex.eval_generic(node, ex.coordinate_env(v)),
                                x, 0)
        assert float(lifted.const) == ex.eval_generic(node, ex.coordinate_env(x))

    def test_coordinate_env_is_one_based(self):
        env = ex.coordinate_env([10.0, 20.0, 30.0, 40.0])
        assert env == {"x1": 10.0, "x2": 20.0, "x3": 30.0, "x4": 40.0}


class TestRoundTrip:
    @given(hs.integers(min_value=0, max_value=2**31))
    def test_to_text_round_trips(self, seed):
        rng = np.random.default_rng(seed)
        node = ex.parse(random_expression(rng))
        assert ex.parse(ex.to_text(node)) == node

    @given(hs.integers(min_value=0, max_value=2**31))
    def test_round_trip_preserves_value(self, seed):
        rng = np.random.default_rng(seed)
        node = ex.parse(random_expression(rng))
        env = ex.coordinate_env(rng.uniform(-0.5, 0.5, 4))
        again = ex.parse(ex.to_text(node))
        assert ex.eval_generic(again, env) == ex.eval_generic(node, env)

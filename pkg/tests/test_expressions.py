import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamindex.errors import EvalError, ParseError
from hamindex.expressions import (
    Bin,
    Call,
    Neg,
    Num,
    Var,
    evaluate,
    parse_expression,
    to_text,
)


def ev(text, **env):
    return float(evaluate(parse_expression(text), env))


def test_single_token_variable():
    assert parse_expression("lambda") == Var("lambda")


def test_precedence_shape():
    tree = parse_expression("sin(t)*lambda + 1")
    assert tree == Bin("+", Bin("*", Call("sin", Var("t")), Var("lambda")), Num(1.0))


def test_power_right_associative():
    assert ev("2^3^2") == 512.0


def test_power_binds_tighter_than_unary_minus():
    assert ev("-2^2") == -4.0
    assert ev("(-2)^2") == 4.0
    assert ev("2^-2") == 0.25


@pytest.mark.parametrize(
    "text,value",
    [
        ("1 + 2*3", 7.0),
        ("(1 + 2)*3", 9.0),
        ("6/3/2", 1.0),
        ("2 - 3 - 4", -5.0),
        ("pi", math.pi),
        ("cos(pi)", -1.0),
        ("sqrt(4)", 2.0),
        ("tanh(0)", 0.0),
        ("exp(0)", 1.0),
        ("1.5e2", 150.0),
    ],
)
def test_evaluation_table(text, value):
    assert ev(text) == pytest.approx(value, abs=1e-14)


def test_syntax_error_carries_offset():
    with pytest.raises(ParseError) as err:
        parse_expression("1 + * 2")
    assert err.value.offset == 4


def test_unknown_identifier():
    with pytest.raises(ParseError, match="unknown identifier 'mu'"):
        parse_expression("mu + 1")


def test_unknown_function():
    with pytest.raises(ParseError, match="unknown function"):
        parse_expression("cot(t)")


def test_empty_input():
    with pytest.raises(ParseError):
        parse_expression("   ")


def test_extended_variable_set():
    tree = parse_expression("u1*u2", ("u1", "u2"))
    assert float(evaluate(tree, {"u1": 3.0, "u2": 4.0})) == 12.0


def test_division_by_zero_raises():
    with pytest.raises(EvalError):
        ev("1/(lambda - 1)", **{"lambda": 1.0})


def test_sqrt_of_negative_raises():
    with pytest.raises(EvalError):
        ev("sqrt(0 - 2)")


def test_array_broadcasting():
    tree = parse_expression("lambda*cos(t)")
    out = evaluate(tree, {"lambda": np.array([[1.0], [2.0]]), "t": np.array([[0.0, np.pi]])})
    assert out.shape == (2, 2)
    np.testing.assert_allclose(out, [[1.0, -1.0], [2.0, -2.0]])


# ---------------------------------------------------------------------------
# print/reparse round trip

_leaf = st.one_of(
    st.floats(min_value=0.0, max_value=8.0, allow_nan=False).map(lambda x: Num(round(x, 3))),
    st.sampled_from([Var("t"), Var("lambda"), Num(math.pi)]),
)


def _ast(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*/"), children, children).map(lambda t: Bin(*t)),
        st.tuples(st.sampled_from(["sin", "cos", "tanh"]), children).map(lambda t: Call(*t)),
        children.map(Neg),
        children.map(lambda a: Bin("^", a, Num(2.0))),
    )


_expr_trees = st.recursive(_leaf, _ast, max_leaves=25)


@given(_expr_trees)
def test_print_reparse_identical_tree(tree):
    assert parse_expression(to_text(tree)) == tree


def test_roundtrip_value_agreement_bulk():
    # 1000 random trees, compared at 100 random points to 1e-12
    rng = np.random.default_rng(20240517)
    ops = "+-*/"
    fns = ["sin", "cos", "exp", "tanh"]

    def random_tree(depth):
        if depth == 0 or rng.random() < 0.3:
            if rng.random() < 0.5:
                return Num(round(float(rng.uniform(0, 4)), 4))
            return Var(str(rng.choice(["t", "lambda"])))
        r = rng.random()
        if r < 0.6:
            return Bin(str(rng.choice(list(ops))), random_tree(depth - 1), random_tree(depth - 1))
        if r < 0.85:
            return Call(str(rng.choice(fns)), random_tree(depth - 1))
        return Bin("^", random_tree(depth - 1), Num(float(rng.integers(0, 3))))

    pts = {"t": rng.uniform(-3, 3, 100), "lambda": rng.uniform(-3, 3, 100)}
    for _ in range(1000):
        tree = random_tree(4)
        reparsed = parse_expression(to_text(tree))
        try:
            a = np.asarray(evaluate(tree, pts), dtype=float)
        except EvalError:
            with pytest.raises(EvalError):
                evaluate(reparsed, pts)
            continue
        b = np.asarray(evaluate(reparsed, pts), dtype=float)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)

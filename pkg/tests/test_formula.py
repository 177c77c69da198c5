import hashlib
import random

import pytest

import liftcount as lc
from liftcount.formula import (And, Atom, CardComparison, CardOr, CountExists,
                               Exists, Forall, Implies, Neq, ParseError,
                               Signature, Top, format_formula, format_problem,
                               free_vars, ground_atoms, parse_problem)
from liftcount.weights import StatTableWeights, SymmetricWeights, Unweighted

from conftest import RUNNING_EXAMPLE, random_kernel


def test_parse_running_example():
    p = parse_problem(RUNNING_EXAMPLE)
    assert p.domain_size == 3
    assert p.signature == Signature(("A",), ("R",))
    expected = Forall("x", Forall("y", Implies(
        And(And(Atom("A", ("x",)), Atom("R", ("x", "y"))), Neq("x", "y")),
        Atom("A", ("y",)))))
    assert p.sentence == expected
    assert p.constraints == ()
    assert isinstance(p.weights, Unweighted)


def test_parse_trivial_empty_signature():
    p = parse_problem("domain: 1\nformula: true\n")
    assert p.signature == Signature((), ())
    assert p.sentence == Top()
    assert p.domain_size == 1


def test_third_variable_rejected():
    with pytest.raises(ParseError, match="third variable"):
        parse_problem("formula: forall x exists z P(x,z)\n")
    with pytest.raises(ParseError, match="third variable"):
        parse_problem("domain: 1\nbinary: R\nformula: forall x forall y R(x,z)\n")


def test_parse_errors():
    with pytest.raises(ParseError, match="undeclared"):
        parse_problem("domain: 1\nformula: forall x P(x)\n")
    with pytest.raises(ParseError, match="arity"):
        parse_problem("domain: 1\nunary: A\nformula: forall x forall y A(x,y)\n")
    with pytest.raises(ParseError, match="unbound"):
        parse_problem("domain: 1\nunary: A\nformula: A(x)\n")
    with pytest.raises(ParseError, match="missing domain"):
        parse_problem("unary: A\nformula: forall x A(x)\n")
    with pytest.raises(ParseError, match="missing formula"):
        parse_problem("domain: 2\nunary: A\n")
    with pytest.raises(ParseError, match="may not start"):
        parse_problem("domain: 1\nunary: $A\nformula: true\n")
    with pytest.raises(ParseError, match="duplicate"):
        parse_problem("domain: 1\nunary: A\nbinary: A\nformula: true\n")
    with pytest.raises(ParseError, match="domain size"):
        parse_problem("domain: 0\nformula: true\n")


def test_parse_error_location():
    err = None
    try:
        parse_problem("domain: 2\nunary: A\nformula: forall x A(x) &\n")
    except ParseError as exc:
        err = exc
    assert err is not None and err.line == 3


def test_counting_quantifier_syntax():
    p = parse_problem("domain: 2\nbinary: R\n"
                      "formula: forall x exists[<=2] y R(x,y)\n")
    body = p.sentence.body
    assert body == CountExists("<=", 2, "y", Atom("R", ("x", "y")))


def test_constraint_parsing():
    p = parse_problem(
        "domain: 4\nunary: A\nbinary: R\nformula: true\n"
        "constraint: 2*|A| + |R| <= 7\n"
        "constraint: (|A| = 2) | (|A| = 3)\n")
    first, second = p.constraints
    assert first == CardComparison(((2, "A"), (1, "R")), "<=", 7)
    assert isinstance(second, CardOr)
    assert second.left == CardComparison(((1, "A"),), "=", 2)


def test_weight_lines():
    p = parse_problem("domain: 2\nunary: A\nbinary: R\nformula: true\n"
                      "weight: A 2 3\nweight: R 1/2 -1\n")
    assert isinstance(p.weights, SymmetricWeights)
    entries = {pred: (w, wb) for pred, _a, w, wb in p.weights.entries}
    assert entries["A"] == (2, 3)
    assert entries["R"] == (lc.weights.Fraction(1, 2), -1)


def test_statweight_line():
    p = parse_problem(
        "domain: 4\nunary: H\nformula: true\n"
        "statweight: H { (0) -> 2; (2) -> 2; (4) -> 2; default -> 0 }\n")
    assert isinstance(p.weights, StatTableWeights)
    assert p.weights.table[(2,)] == 2
    assert p.weights.default == 0


def test_mixed_weight_styles_rejected():
    with pytest.raises(ParseError, match="cannot be mixed"):
        parse_problem("domain: 2\nunary: A\nformula: true\n"
                      "weight: A 2 3\nstatweight: A { (0) -> 1 }\n")


def test_free_vars():
    assert free_vars(Atom("A", ("x",))) == {"x"}
    assert free_vars(Forall("x", Forall("y", Atom("R", ("x", "y"))))) == set()
    assert free_vars(Exists("y", Atom("R", ("x", "y")))) == {"x"}


def test_ground_atoms_order():
    sig = Signature(("A",), ("R",))
    assert [str(a) for a in ground_atoms(sig, 1)] == ["A(0)", "R(0,0)"]
    assert [str(a) for a in ground_atoms(Signature(("A",), ()), 3)] == \
        ["A(0)", "A(1)", "A(2)"]
    assert [str(a) for a in ground_atoms(Signature((), ("R",)), 2)] == \
        ["R(0,0)", "R(0,1)", "R(1,0)", "R(1,1)"]


def test_ground_atoms_stable_hash():
    sig = Signature(("A", "B"), ("R", "S"))
    text = ";".join(str(a) for a in ground_atoms(sig, 3))
    digest = hashlib.sha256(text.encode()).hexdigest()
    assert digest == hashlib.sha256(text.encode()).hexdigest()
    assert text.startswith("A(0);A(1);A(2);B(0);B(1);B(2);R(0,0)")
    assert text.endswith("S(2,2)")


ROUND_TRIP_TEXTS = [
    RUNNING_EXAMPLE,
    "domain: 1\nformula: true\n",
    "domain: 2\nbinary: R\nformula: forall x exists[>=2] y (R(x,y) & x != y)\n",
    "domain: 3\nunary: A, B\nformula: exists x (A(x) <-> ~B(x))\n",
    "domain: 4\nunary: A\nbinary: R\nformula: true\n"
    "constraint: 2*|A| - |R| >= -3\nweight: A 2 3\n",
]


@pytest.mark.parametrize("text", ROUND_TRIP_TEXTS)
def test_problem_round_trip(text):
    p = parse_problem(text)
    assert parse_problem(format_problem(p)) == p


def test_formula_round_trip_random():
    rng = random.Random(7)
    sig = Signature(("A", "B"), ("R",))
    for _ in range(200):
        kern = random_kernel(rng, depth=4)
        sentence = Forall("x", Forall("y", kern))
        text = f"domain: 2\nunary: A, B\nbinary: R\nformula: {format_formula(sentence)}\n"
        p = parse_problem(text)
        assert p.sentence == sentence
        assert parse_problem(format_problem(p)) == p

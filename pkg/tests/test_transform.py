import pytest

import liftcount as lc
from liftcount.formula import (And, Atom, CountExists, Exists, Forall, Iff,
                               Implies, Not, Or, Top, format_formula)
from liftcount.transform import expand_counting, extract_counting, to_snf

from conftest import RUNNING_EXAMPLE, brute_count, closed_count, compiled

R_XY = Atom("R", ("x", "y"))


def test_expand_at_most():
    out = expand_counting(CountExists("<=", 2, "y", R_XY))
    assert out == Or(Or(Forall("y", Not(R_XY)),
                        CountExists("=", 1, "y", R_XY)),
                     CountExists("=", 2, "y", R_XY))


def test_expand_at_least():
    out = expand_counting(CountExists(">=", 2, "y", R_XY))
    assert out == Not(Or(Forall("y", Not(R_XY)),
                         CountExists("=", 1, "y", R_XY)))
    assert expand_counting(CountExists(">=", 0, "y", R_XY)) == Top()
    assert expand_counting(CountExists(">=", 1, "y", R_XY)) == Exists("y", R_XY)


def test_expand_exactly_zero():
    assert expand_counting(CountExists("=", 0, "y", R_XY)) == \
        Forall("y", Not(R_XY))


def test_extract_direct_atom():
    f0, triples, axioms = extract_counting(
        Forall("x", CountExists("=", 1, "y", R_XY)))
    assert f0 == Forall("x", Atom("$A1", ("x",)))
    assert [(t.pred, t.count, t.relation) for t in triples] == [("$A1", 1, "R")]
    assert axioms == ()


def test_extract_under_biconditional():
    f0, triples, _ = extract_counting(
        Forall("x", Iff(Atom("B", ("x",)), CountExists("=", 2, "y", R_XY))))
    assert f0 == Forall("x", Iff(Atom("B", ("x",)), Atom("$A1", ("x",))))
    assert [(t.pred, t.count, t.relation) for t in triples] == [("$A1", 2, "R")]


def test_extract_compound_body():
    body = And(R_XY, Atom("A", ("y",)))
    f0, triples, axioms = extract_counting(
        Forall("x", CountExists("=", 1, "y", body)))
    assert f0 == Forall("x", Atom("$A1", ("x",)))
    (t,) = triples
    assert (t.pred, t.count, t.relation) == ("$A1", 1, "$R1")
    assert axioms == (Forall("x", Forall("y", Iff(Atom("$R1", ("x", "y")), body))),)


def test_snf_already_normal():
    snf = to_snf(Forall("x", Exists("y", R_XY)))
    assert snf.phi == Top()
    assert snf.psis == (R_XY,)
    assert snf.fresh_ledger == {}


def test_snf_bare_existential():
    snf = to_snf(Exists("x", Atom("A", ("x",))))
    assert snf.phi == Top()
    assert snf.psis == (Atom("A", ("y",)),)


def test_snf_guarded_existential():
    snf = to_snf(Forall("x", Or(Atom("A", ("x",)), Exists("y", R_XY))))
    d = Atom("$D1", ("x",))
    assert snf.psis == (Implies(d, R_XY),)
    assert list(lc.formula.conjuncts(snf.phi)) == \
        [Implies(R_XY, d), Or(Atom("A", ("x",)), d)]
    assert "$D1" in snf.fresh_ledger


def test_snf_rejects_counting():
    with pytest.raises(ValueError):
        to_snf(Forall("x", CountExists("=", 1, "y", R_XY)))


@pytest.mark.parametrize("text", [
    "domain: 3\nunary: A\nbinary: R\nformula: forall x (A(x) | exists y R(x,y))\n",
    "domain: 3\nbinary: R\nformula: exists x exists y R(x,y)\n",
    "domain: 3\nbinary: R\nformula: exists y forall x R(x,y)\n",
    "domain: 3\nunary: A\nbinary: R\nformula: exists y A(y) | forall x exists y R(x,y)\n",
    "domain: 3\nunary: A\nbinary: R\n"
    "formula: forall x (A(x) -> ~ exists y (R(x,y) & x != y))\n",
    "domain: 3\nunary: A\nbinary: R\nformula: forall y exists x R(x,y)\n",
])
def test_snf_preserves_counts(text):
    for n in (1, 2, 3):
        assert closed_count(text, n) == brute_count(text, n), (text, n)


def test_compile_pure_universal_is_identity():
    problem, program, _tables = compiled(RUNNING_EXAMPLE)
    assert program.sign_preds == ()
    assert program.divisors == ()
    assert program.constraints == ()
    # the kernel is exactly the input's quantifier-free matrix
    assert program.kernel == problem.sentence.body.body
    assert program.signature == problem.signature


def test_compile_existential():
    _problem, program, _tables = compiled(
        "domain: 2\nbinary: R\nformula: forall x exists y R(x,y)\n")
    assert program.sign_preds == ("$P1",)
    assert program.divisors == ()
    assert program.kernel == Implies(Atom("$P1", ("x",)), Not(R_XY))
    assert program.signature.unary == ("$P1",)


def test_compile_counting_block():
    _problem, program, tables = compiled(
        "domain: 3\nbinary: R\nformula: forall x exists[=1] y R(x,y)\n")
    assert program.sign_preds == ("$B1", "$P1_1")
    assert program.divisors == (("$A1", 1),)
    rendered = [lc.formula.format_constraint(c) for c in program.constraints]
    assert rendered == ["|$A1| + |$B1| - |$f1_1| = 0", "|$f1_1| - |$M1| = 0"]
    kernel_parts = [format_formula(c) for c in lc.formula.conjuncts(program.kernel)]
    assert "$A1(x)" in kernel_parts  # the rewritten sentence survives in the kernel
    assert "($f1_1(x,y) -> R(x,y))" in kernel_parts
    assert "($B1(x) -> ~$A1(x))" in kernel_parts
    # end to end this program counts functions
    for n in (1, 2, 3, 4):
        assert lc.evaluate(program, tables, n) == n ** n


def test_counting_pairwise_exclusions_generated():
    _problem, program, _tables = compiled(
        "domain: 2\nbinary: R\nformula: forall x exists[=3] y R(x,y)\n")
    parts = [format_formula(c) for c in lc.formula.conjuncts(program.kernel)]
    exclusions = [s for s in parts if "-> ~$f" in s and s.startswith("($f")]
    assert len(exclusions) == 3  # all unordered slot pairs for m = 3


def test_user_constraints_appended():
    _problem, program, _tables = compiled(
        RUNNING_EXAMPLE + "constraint: |A| = 2\n")
    assert [lc.formula.format_constraint(c) for c in program.constraints] == \
        ["|A| = 2"]


@pytest.mark.parametrize("text,ns", [
    ("domain: 2\nbinary: R, S\n"
     "formula: forall x exists y R(x,y) & forall x exists[=1] y S(x,y)\n", (1, 2)),
    ("domain: 2\nunary: A\nbinary: R\n"
     "formula: forall x (A(x) <-> exists[=1] y R(x,y))\n", (1, 2)),
    ("domain: 3\nunary: A\nformula: exists[=2] x A(x)\n", (1, 2, 3)),
    ("domain: 2\nbinary: R\n"
     "formula: forall x exists[=1] y (R(x,y) & x != y)\n", (1, 2, 3)),
    # quantifiers nested inside counted bodies, and counting over x
    ("domain: 2\nbinary: R, S\n"
     "formula: forall x exists[=1] y (R(x,y) & exists x S(y,x))\n", (1, 2)),
    ("domain: 2\nbinary: R, S\n"
     "formula: forall x exists[=1] y (R(x,y) | forall x S(y,x))\n", (1, 2)),
    ("domain: 2\nbinary: R, S\n"
     "formula: forall x exists[=1] y (R(x,y) & exists[=1] x S(y,x))\n", (1, 2)),
    ("domain: 2\nunary: A\nbinary: R\n"
     "formula: forall x (A(x) <-> ~ exists[=1] y R(x,y))\n", (1, 2)),
    ("domain: 2\nunary: A\nbinary: R\n"
     "formula: forall y (A(y) -> exists[=1] x R(x,y))\n", (1, 2)),
])
def test_compile_counting_against_oracle(text, ns):
    for n in ns:
        assert closed_count(text, n) == brute_count(text, n), (text, n)


def test_fresh_names_deterministic():
    text = ("domain: 2\nunary: A\nbinary: R\n"
            "formula: forall x (A(x) | exists y R(x,y)) & forall x exists[=2] y R(x,y)\n")
    _p1, prog1, _t1 = compiled(text)
    _p2, prog2, _t2 = compiled(text)
    assert prog1 == prog2

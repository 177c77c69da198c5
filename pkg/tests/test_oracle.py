import random
from fractions import Fraction

import pytest

import liftcount as lc
from liftcount import oracle
from liftcount.celltypes import CapacityError
from liftcount.formula import (Forall, GroundAtom, Problem, Signature,
                               ground_atoms, parse_problem)
from liftcount.oracle import (Interpretation, eval_sentence,
                              interpretation_stats, oracle_count)

from conftest import KERNEL_SIG, RUNNING_EXAMPLE, random_kernel


def interp(sig, n, atoms):
    return Interpretation.from_true_atoms(
        sig, n, [GroundAtom(p, a) for p, a in atoms])


def test_eval_sentence_examples():
    sig = Signature((), ("R",))
    p = parse_problem("domain: 2\nbinary: R\nformula: forall x exists y R(x,y)\n")
    omega = interp(sig, 2, [("R", (0, 1)), ("R", (1, 0))])
    assert eval_sentence(p.sentence, omega, 2) is True

    p = parse_problem("domain: 2\nbinary: R\nformula: forall x exists[=1] y R(x,y)\n")
    omega = interp(sig, 2, [("R", (0, 0)), ("R", (0, 1))])
    assert eval_sentence(p.sentence, omega, 2) is False

    p = parse_problem("domain: 2\nformula: true\n")
    empty = Interpretation(Signature((), ()), 2, 0)
    assert eval_sentence(p.sentence, empty, 2) is True


def test_oracle_count_examples():
    assert oracle_count(parse_problem(
        RUNNING_EXAMPLE).with_domain_size(2)) == 48
    assert oracle_count(parse_problem(
        "domain: 2\nbinary: R\nformula: forall x exists y R(x,y)\n")) == 9
    assert oracle_count(parse_problem(
        "domain: 4\nunary: A\nformula: true\nconstraint: |A| = 2\n")) == 6


def test_oracle_atom_limit():
    p = parse_problem("domain: 5\nbinary: R\nformula: true\n")
    with pytest.raises(CapacityError):
        oracle_count(p)
    assert oracle_count(p, limit=25) == 2 ** 25


def test_backends_agree_with_recursive_evaluator():
    # exhaustively compare both vectorized paths with the slow evaluator
    rng = random.Random(3)
    texts = [
        "domain: 2\nunary: A\nbinary: R\nformula: forall x (A(x) | exists y R(x,y))\n",
        "domain: 2\nbinary: R\nformula: forall x exists[<=1] y R(x,y)\n",
        "domain: 2\nunary: A\nbinary: R\n"
        "formula: exists[>=2] x (A(x) & exists y R(x,y))\n",
    ]
    for text in texts:
        p = parse_problem(text)
        atoms = ground_atoms(p.signature, p.domain_size)
        slow = sum(
            1 for bits in range(1 << len(atoms))
            if eval_sentence(p.sentence,
                             Interpretation(p.signature, p.domain_size, bits),
                             p.domain_size))
        assert oracle_count(p) == slow, text
        # the statistics backend counts the same models
        constrained = parse_problem(text + "constraint: |R| >= 0\n")
        assert oracle_count(constrained) == slow, text


def test_weighted_oracle_by_direct_product():
    text = ("domain: 2\nunary: A\nformula: true\nweight: A 2 3\n")
    p = parse_problem(text)
    # (2 + 3)^2 by the per-literal product definition
    total = Fraction(0)
    for bits in range(4):
        omega = Interpretation(p.signature, 2, bits)
        w = Fraction(1)
        for atom in ground_atoms(p.signature, 2):
            w *= 2 if omega.holds(atom.pred, atom.args) else 3
        total += w
    assert oracle_count(p) == total == 25


def test_interpretation_stats_examples():
    sig1 = Signature(("A",), ())
    omega = Interpretation(sig1, 1, 0)
    order = lc.AtomOrder.from_signature(sig1)
    k, h = interpretation_stats(omega, order, 1)
    assert k == (1, 0) and h == {}

    sig = Signature(("A",), ("R",))
    order = lc.AtomOrder.from_signature(sig)
    omega = interp(sig, 2, [("A", (0,))])
    k, h = interpretation_stats(omega, order, 2)
    assert k == (1, 0, 1, 0)
    assert h == {(0, 2): {0: 1}}


def test_interpretation_stats_recover_cardinalities():
    sig = Signature(("A",), ("R",))
    order = lc.AtomOrder.from_signature(sig)
    rng = random.Random(42)
    n = 3
    atoms = ground_atoms(sig, n)
    for _ in range(1000):
        bits = rng.getrandbits(len(atoms))
        omega = Interpretation(sig, n, bits)
        k, h = interpretation_stats(omega, order, n)
        assert sum(k) == n
        for (i, j), cell in h.items():
            assert i <= j
            expected_pairs = (k[i] * (k[i] - 1) // 2) if i == j else k[i] * k[j]
            assert sum(cell.values()) <= expected_pairs
        for pred, arity in (("A", 1), ("R", 2)):
            direct = sum(1 for atom in atoms
                         if atom.pred == pred and omega.holds(pred, atom.args))
            assert oracle.cardinality_from_stats(k, h, order, pred, arity) == direct


def test_stats_pair_totals():
    # every unordered pair lands in exactly one (i, j) bucket
    sig = Signature(("A",), ("R",))
    order = lc.AtomOrder.from_signature(sig)
    rng = random.Random(8)
    n = 4
    atoms = ground_atoms(sig, n)
    for _ in range(100):
        omega = Interpretation(sig, n, rng.getrandbits(len(atoms)))
        k, h = interpretation_stats(omega, order, n)
        assert sum(sum(cell.values()) for cell in h.values()) == n * (n - 1) // 2


def test_model_partition_is_exhaustive():
    # summing witness multiplicity over distinct (k, h) cells of the
    # kernel's models reproduces the plain model count
    rng = random.Random(77)
    sig = KERNEL_SIG
    order = lc.AtomOrder.from_signature(sig)
    n = 2
    atoms = ground_atoms(sig, n)
    for _ in range(5):
        kernel = random_kernel(rng)
        sentence = Forall("x", Forall("y", kernel))
        problem = Problem(sig, sentence, n)
        count = oracle_count(problem)
        cells = {}
        for bits in range(1 << len(atoms)):
            omega = Interpretation(sig, n, bits)
            if eval_sentence(sentence, omega, n):
                k, h = interpretation_stats(omega, order, n)
                key = (k, tuple(sorted((ij, tuple(sorted(c.items())))
                                       for ij, c in h.items())))
                cells[key] = cells.get(key, 0) + 1
        assert sum(cells.values()) == count


def test_oracle_distribution_matches_enumeration():
    p = parse_problem("domain: 2\nunary: A\nformula: true\n")
    dist = oracle.oracle_distribution(p, lc.DistributionQuery(("A",)))
    assert dist == {(0,): Fraction(1, 4), (1,): Fraction(1, 2),
                    (2,): Fraction(1, 4)}


def test_oracle_workers_agree():
    # contiguous-block splitting cannot change exact sums
    p = parse_problem(RUNNING_EXAMPLE).with_domain_size(3)
    assert oracle_count(p) == oracle_count(p, threads=2)
    from liftcount.oracle import _count_models, _enumerate_stats
    assert _count_models(p, 24, chunk_atoms=8, threads=2) == \
        _count_models(p, 24, chunk_atoms=12, threads=1)
    weighted = parse_problem(
        "domain: 3\nunary: S\nbinary: F\n"
        "formula: forall x forall y (S(x) & F(x,y) -> S(y))\n"
        "weight: S 2 1\nweight: F 3 2\n")
    assert _enumerate_stats(weighted, 24, chunk_atoms=6, threads=2) == \
        _enumerate_stats(weighted, 24, chunk_atoms=10, threads=1)

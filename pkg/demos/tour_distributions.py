"""Weights and count distributions.

Symmetric per-predicate weights multiply a factor per ground literal.
Tables keyed on predicate cardinalities are strictly more expressive: the
coin-toss distribution below puts zero mass on odd head counts, which no
symmetric weighting can do.
"""

from fractions import Fraction

import liftcount as lc
from liftcount import weights

SMOKERS = """
domain: 3
unary: S
binary: F
formula: forall x forall y (S(x) & F(x,y) -> S(y))
weight: S 2 1
weight: F 3 2
"""

problem = lc.parse_problem(SMOKERS)
program = lc.compile_problem(problem)
tables = lc.build_tables(program.kernel, program.signature)
print("weighted count:", lc.evaluate(program, tables, 3, problem.weights))
dist = weights.count_distribution(problem, weights.DistributionQuery(("S",)))
print("distribution of |S|:")
for key, p in dist.items():
    print(f"  |S|={key[0]}: {p}")
print()

COINS = """
domain: 4
unary: H
formula: true
statweight: H { (0) -> 2; (2) -> 2; (4) -> 2; default -> 0 }
"""

problem = lc.parse_problem(COINS)
dist = weights.count_distribution(problem, weights.DistributionQuery(("!H", "H")))
print("four coin tosses, even head counts uniform, odd impossible:")
for key, p in dist.items():
    print(f"  (tails, heads) = {key}: {p}")
assert sum(dist.values(), Fraction(0)) == 1

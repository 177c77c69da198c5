"""Existential and counting quantifiers through the compiler.

Both reduce to a purely universal kernel: plain existentials via fresh
blocking predicates whose per-type counts drive an inclusion-exclusion
sign, exact counts via auxiliary successor-slot relations, cardinality
constraints, and a factorial divisor.
"""

import liftcount as lc
from liftcount import oracle, transform

EXISTS = "domain: 3\nbinary: R\nformula: forall x exists y R(x,y)\n"
EXACTLY_ONE = "domain: 3\nbinary: R\nformula: forall x exists[=1] y R(x,y)\n"

for text, closed_form in ((EXISTS, lambda n: (2 ** n - 1) ** n),
                          (EXACTLY_ONE, lambda n: n ** n)):
    problem = lc.parse_problem(text)
    program = lc.compile_problem(problem)
    tables = lc.build_tables(program.kernel, program.signature)
    print(text.strip().splitlines()[-1])
    print(transform.format_program(program))
    for n in (1, 2, 3, 4, 5):
        value = lc.evaluate(program, tables, n)
        check = f"= {closed_form(n)} expected"
        if n <= 3:
            check += f", {oracle.oracle_count(problem.with_domain_size(n))} brute force"
        print(f"  n={n}: {value}  ({check})")
    print()

print("Bounded counts expand into exact counts before compilation:")
AT_MOST = "domain: 3\nbinary: R\nformula: forall x exists[<=1] y R(x,y)\n"
problem = lc.parse_problem(AT_MOST)
print(" ", lc.format_formula(transform.expand_counting(problem.sentence)))
program = lc.compile_problem(problem)
tables = lc.build_tables(program.kernel, program.signature)
for n in (1, 2, 3):
    print(f"  n={n}: {lc.evaluate(program, tables, n)} "
          f"(brute force {oracle.oracle_count(problem.with_domain_size(n))})")

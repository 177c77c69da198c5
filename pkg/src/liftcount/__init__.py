"""Exact, domain-polynomial model counting for two-variable logic with
equality, cardinality constraints, existential and counting quantifiers,
plus a brute-force oracle for verification."""

from .celltypes import AtomOrder, CapacityError, TypeTables, build_tables, eval_lifted
from .engine import (Counters, enumerate_kh, evaluate, evaluate_grouped,
                     fomc_universal, multinomial, term_value)
from .formula import (ParseError, Problem, Signature, format_formula,
                      format_problem, free_vars, ground_atoms, parse_problem)
from .oracle import (Interpretation, eval_sentence, interpretation_stats,
                     oracle_count, oracle_distribution)
from .transform import (SNF, CountingProgram, compile_problem,
                        expand_counting, extract_counting, to_snf)
from .weights import (CallableStatWeight, DistributionQuery,
                      EmptyDistributionError, StatTableWeights,
                      SymmetricWeights, Unweighted, count_distribution,
                      weight_of)

__version__ = "0.1.0"

__all__ = [
    "AtomOrder", "CapacityError", "TypeTables", "build_tables", "eval_lifted",
    "Counters", "enumerate_kh", "evaluate", "evaluate_grouped",
    "fomc_universal", "multinomial", "term_value",
    "ParseError", "Problem", "Signature", "format_formula", "format_problem",
    "free_vars", "ground_atoms", "parse_problem",
    "Interpretation", "eval_sentence", "interpretation_stats",
    "oracle_count", "oracle_distribution",
    "SNF", "CountingProgram", "compile_problem", "expand_counting",
    "extract_counting", "to_snf",
    "CallableStatWeight", "DistributionQuery", "EmptyDistributionError",
    "StatTableWeights", "SymmetricWeights", "Unweighted",
    "count_distribution", "weight_of",
    "__version__",
]

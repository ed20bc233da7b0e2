"""funeq: solve functional equations over the reals and prove the answer complete.

The package synthesizes the class of polynomial-template solutions for a
specification of an unknown f : R -> R, then dispatches the claim that no
other solutions exist to a portfolio of SMT solvers, enriched with generated
instantiations and proven lemmas.
"""

__version__ = "0.1.0"

from .poly import FApp, Monomial, Poly, Var, VarsUnderF  # noqa: F401
from .formula import (  # noqa: F401
    And,
    Cmp,
    Exists,
    FALSE,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Rel,
    TRUE,
)

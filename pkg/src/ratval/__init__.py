"""Answer validation by defeasible specificity, deontic checks and case-based ranking."""

from .kb import KnowledgeBase, Literal, Rule, Term, ground_instances, parse_kb, parse_literal, print_kb, strict_closure
from .derivation import Argument, DerivationTree, conflicts, defeasible_leaf_literals, derivable, derive
from .specificity import (
    activates,
    more_specific_poole,
    relevant_universe,
    specificity_preorder,
    warranted,
)
from .deontic import KripkeModel, kd_satisfiable, kd_valid, norm_status, parse_modal, satisfies

__version__ = "0.1.0"

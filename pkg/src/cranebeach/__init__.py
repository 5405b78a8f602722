"""Executable constructions around first-order logic with finite-degree numerical predicates."""
from .formula import parse_formula, print_formula, to_prenex, constant_fold, free_variables
from .words import Alphabet, Word, PaddedWord
from .evaluator import EvalEnv, evaluate, equivalent_up_to, check_neutral_letter

__version__ = "0.1.0"

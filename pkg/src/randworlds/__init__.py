"""Degrees of belief by the random-worlds method.

A knowledge base of first-order facts and approximate statistics is turned
into a constraint region over atom proportions; degrees of belief are read
off its maximum-entropy points, with an exact finite-N counting oracle to
check them against.
"""
__version__ = "0.1.0"

from .syntax import RandWorldsError, SyntaxRestrictionError, ToleranceVector, Vocabulary  # noqa: E402
from .parser import ParseError, parse, parse_formula, parse_kb  # noqa: E402
from .semantics import count_worlds, pr_n, pr_sequence, closed_form_count  # noqa: E402
from .canonical import CanonicalForm, to_canonical  # noqa: E402
from .constraints import gamma, solution_space, weakened_space, is_essentially_positive  # noqa: E402
from .maxent import MaxEntConfig, maximize, bound_statistic  # noqa: E402
from .engine import BeliefConfig, BeliefResult, believe, classify, probe_tau  # noqa: E402
from .embeddings import (  # noqa: E402
    DefaultRuleSet, PropConstraintSet, defaults_translate, me_plausible, nilsson_believe,
    nilsson_translate,
)

__all__ = [
    "RandWorldsError", "SyntaxRestrictionError", "ToleranceVector", "Vocabulary",
    "ParseError", "parse", "parse_formula", "parse_kb",
    "count_worlds", "pr_n", "pr_sequence", "closed_form_count",
    "CanonicalForm", "to_canonical",
    "gamma", "solution_space", "weakened_space", "is_essentially_positive",
    "MaxEntConfig", "maximize", "bound_statistic",
    "BeliefConfig", "BeliefResult", "believe", "classify", "probe_tau",
    "DefaultRuleSet", "PropConstraintSet", "defaults_translate", "me_plausible",
    "nilsson_believe", "nilsson_translate",
]

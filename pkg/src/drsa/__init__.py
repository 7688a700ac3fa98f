"""Dominance-based rough set analysis: approximations, certain rule induction,
classification and cross-segment rule comparison."""

from .classify import ClassificationResult, classify, classify_many, covering_rules
from .dominance import (
    ApproximationResult,
    ClassUnion,
    UnionKind,
    approximate,
    dominated_set,
    dominating_set,
    downward_union,
    lower_approximation,
    quality_gamma,
    upper_approximation,
    upward_union,
)
from .domlem import induce
from .rules import (
    DecisionRule,
    ElementaryCondition,
    InductionParams,
    RuleSet,
    filter_rules,
    read_rls,
    rule_metrics,
    write_rls,
)
from .table import (
    Criterion,
    DecisionAttribute,
    InformationTable,
    Observation,
    ParseError,
    TableError,
    load_isf,
    make_table,
    write_isf,
)

__version__ = "0.1.0"

__all__ = [
    "ApproximationResult",
    "ClassUnion",
    "ClassificationResult",
    "Criterion",
    "DecisionAttribute",
    "DecisionRule",
    "ElementaryCondition",
    "InductionParams",
    "InformationTable",
    "Observation",
    "ParseError",
    "RuleSet",
    "TableError",
    "UnionKind",
    "approximate",
    "classify",
    "classify_many",
    "covering_rules",
    "dominated_set",
    "dominating_set",
    "downward_union",
    "filter_rules",
    "induce",
    "load_isf",
    "lower_approximation",
    "make_table",
    "quality_gamma",
    "read_rls",
    "rule_metrics",
    "upper_approximation",
    "upward_union",
    "write_isf",
    "write_rls",
]

from .prep import (
    ClassificationFacet,
    TrialPrepError,
    classify_criterion,
    generate_guidelines,
    generate_relevance_criterion,
    prep_trial,
    split_criteria,
)
from .templates import PromptTemplate, TemplateError, load_template

__all__ = [
    "ClassificationFacet",
    "PromptTemplate",
    "TemplateError",
    "TrialPrepError",
    "classify_criterion",
    "generate_guidelines",
    "generate_relevance_criterion",
    "load_template",
    "prep_trial",
    "split_criteria",
]

"""Prompt templates shipped as versioned text assets.

Templates carry two placeholder styles, double-brace ``{{name}}`` and
single-brace ``{name}``; rendering fails if any placeholder is left unbound.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

_DOUBLE = re.compile(r"\{\{(\w+)\}\}")
_SINGLE = re.compile(r"(?<!\{)\{(\w+)\}(?!\})")


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    text: str

    def placeholders(self) -> set[str]:
        return set(_DOUBLE.findall(self.text)) | set(_SINGLE.findall(self.text))

    def render(self, **bindings: str) -> str:
        missing = self.placeholders() - set(bindings)
        if missing:
            raise TemplateError(
                f"template {self.template_id!r}: unbound placeholders {sorted(missing)}"
            )
        rendered = _DOUBLE.sub(lambda m: str(bindings[m.group(1)]), self.text)
        rendered = _SINGLE.sub(lambda m: str(bindings[m.group(1)]), rendered)
        return rendered


def load_template(template_id: str) -> PromptTemplate:
    """Load a template from the packaged prompt assets by id (file stem)."""
    try:
        text = (
            resources.files("trialmatch.prompts").joinpath(f"{template_id}.txt").read_text("utf-8")
        )
    except FileNotFoundError:
        raise TemplateError(f"unknown prompt template {template_id!r}")
    return PromptTemplate(template_id=template_id, text=text)


SPLIT_CRITERIA = "split_criteria"
GUIDELINES = "guidelines"
RELEVANCE_CRITERION = "relevance_criterion"
ASSESS_CRITERION = "assess_criterion"
CLASSIFY_DOMAIN = "classify_domain"
CLASSIFY_DATA_FORMAT = "classify_data_format"
CLASSIFY_TEMPORAL = "classify_temporal"
RELEVANCE_CHECK = "relevance_check"
RECORD_TYPE = "record_type"
VISUAL_ELEMENTS = "visual_elements"

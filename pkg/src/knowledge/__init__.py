"""Code knowledge and guideline synthesis."""

from src.knowledge.guideline import (
    Guideline,
    GuidelineError,
    GuidelineOptions,
    GuidelineSynthesizer,
    guideline_rng,
    positive_codes,
    synthesize_guideline,
)
from src.knowledge.knowledge_base import (
    CodeEntry,
    CodeKind,
    IcdCode,
    KnowledgeBase,
    KnowledgeBaseError,
    hierarchy_descriptions,
    load_knowledge_base,
    normalize_description,
    sample_synonym,
    save_knowledge_base,
)

__all__ = [
    "CodeEntry",
    "CodeKind",
    "IcdCode",
    "KnowledgeBase",
    "KnowledgeBaseError",
    "hierarchy_descriptions",
    "load_knowledge_base",
    "normalize_description",
    "sample_synonym",
    "save_knowledge_base",
    "Guideline",
    "GuidelineError",
    "GuidelineOptions",
    "GuidelineSynthesizer",
    "guideline_rng",
    "positive_codes",
    "synthesize_guideline",
]

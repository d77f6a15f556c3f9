"""Guideline synthesis from the positive codes of a training sample."""

import hashlib
import logging
import random
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from src.knowledge.knowledge_base import (
    IcdCode,
    KnowledgeBase,
    KnowledgeBaseError,
    hierarchy_descriptions,
    sample_synonym,
)

logger = logging.getLogger(__name__)

HIERARCHY_JOINER = ", "


class GuidelineError(Exception):
    """Exception for guideline synthesis errors."""

    def __init__(self, message: str, code: Optional[str] = None):
        self.message = message
        self.code = code
        super().__init__(message)


@dataclass(frozen=True)
class GuidelineOptions:
    """Which kinds of knowledge go into a guideline."""

    use_synonyms: bool = True
    use_hierarchy: bool = True
    segment_separator: str = "; "
    seed: int = 0

    def __post_init__(self):
        if not self.segment_separator:
            raise GuidelineError("segment_separator must be non-empty")


@dataclass(frozen=True)
class Guideline:
    """Synthetic knowledge text with per-code segment provenance."""

    text: str
    segments: Tuple[Tuple[IcdCode, str], ...] = ()
    source_codes: FrozenSet[IcdCode] = field(default_factory=frozenset)

    @property
    def is_empty(self) -> bool:
        return not self.segments


def positive_codes(labels: Sequence[int], label_space: Sequence[IcdCode]) -> Set[IcdCode]:
    """Codes whose label is 1."""
    values = np.asarray(labels)
    if values.ndim != 1 or values.shape[0] != len(label_space):
        raise GuidelineError(
            f"Label vector of shape {values.shape} does not match label space of size {len(label_space)}"
        )
    if not np.isin(values, (0, 1)).all():
        raise GuidelineError("Label vector must be binary")
    return {label_space[i] for i in np.flatnonzero(values)}


def guideline_rng(global_seed: int, sample_id: str, epoch: int) -> random.Random:
    """Per-sample, per-epoch random source independent of process hash seeding."""
    digest = hashlib.sha256(f"{global_seed}:{sample_id}:{epoch}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _segment_text(code: IcdCode, kb: KnowledgeBase, opts: GuidelineOptions, rng: random.Random) -> str:
    entry = kb.entry(code)
    head = sample_synonym(entry, rng) if opts.use_synonyms else entry.description
    if not opts.use_hierarchy:
        return head
    return HIERARCHY_JOINER.join([head, *hierarchy_descriptions(entry)])


def synthesize_guideline(
    codes: Iterable[IcdCode],
    kb: KnowledgeBase,
    opts: GuidelineOptions,
    rng: random.Random,
) -> Guideline:
    """Build a guideline: one knowledge segment per code, shuffled, concatenated.

    Args:
        codes: Positive code set of the sample
        kb: Knowledge base every code resolves in
        opts: Knowledge toggles and separator
        rng: Random source for synonym sampling and shuffling

    Returns:
        Guideline whose text is the separator-joined segments
    """
    source = frozenset(codes)
    try:
        # label-space order first so draws do not depend on set iteration order
        ordered = sorted(source, key=kb.index_of)
        segments: List[Tuple[IcdCode, str]] = [
            (code, _segment_text(code, kb, opts, rng)) for code in ordered
        ]
    except KnowledgeBaseError as e:
        raise GuidelineError(f"Cannot synthesize guideline: {e.message}", code=e.code) from None

    rng.shuffle(segments)
    text = opts.segment_separator.join(segment for _, segment in segments)
    return Guideline(text=text, segments=tuple(segments), source_codes=source)


class GuidelineSynthesizer:
    """Draws a fresh guideline per sample and epoch."""

    def __init__(self, kb: KnowledgeBase, opts: GuidelineOptions):
        self.kb = kb
        self.opts = opts

    def synthesize(self, sample_id: str, codes: Iterable[IcdCode], epoch: int) -> Guideline:
        """Guideline for one sample at one epoch."""
        rng = guideline_rng(self.opts.seed, sample_id, epoch)
        return synthesize_guideline(codes, self.kb, self.opts, rng)

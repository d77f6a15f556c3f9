"""Attention inspection: which tokens each predicted code attends to."""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from src.data.corpus import Document, encode
from src.data.tokenizer import Tokenizer
from src.evaluation.predict import predict
from src.knowledge.knowledge_base import IcdCode, KnowledgeBase, KnowledgeBaseError
from src.model.coding_model import IcdCodingModel

logger = logging.getLogger(__name__)

DEFAULT_TOP_M = 5


@dataclass(frozen=True)
class AttendedToken:
    position: int
    token: str
    start: int
    end: int
    weight: float


@dataclass(frozen=True)
class CodeEvidence:
    code: str
    probability: float
    is_true: bool
    tokens: List[AttendedToken]


@dataclass(frozen=True)
class Inspection:
    """Evidence listing of one document."""

    doc_id: str
    num_tokens: int
    codes: List[CodeEvidence]


@dataclass(frozen=True)
class EvidenceHits:
    hits: int
    total: int

    @property
    def rate(self) -> Optional[float]:
        return self.hits / self.total if self.total else None


def top_attended(weights: np.ndarray, m: int) -> List[int]:
    """Positions of the ``m`` largest weights (clamped to N), earliest first on ties."""
    m = min(m, weights.shape[0])
    return np.argsort(-weights, kind="stable")[:m].tolist()


def inspect_document(
    model: IcdCodingModel,
    tokenizer: Tokenizer,
    document: Document,
    kb: KnowledgeBase,
    top_m: int = DEFAULT_TOP_M,
    threshold: float = 0.5,
    max_tokens: int = 8192,
) -> Inspection:
    """Probability and top-m attended tokens for every code predicted positive."""
    if top_m < 1:
        raise ValueError("top_m must be at least 1")
    example = encode(document, tokenizer, kb, max_tokens)
    spans = tokenizer.tokenize_with_offsets(document.text)[: len(example.token_ids)]
    predictions = predict(model, [example], pad_id=tokenizer.pad_id, keep_attention=True)
    scores, attention = predictions.scores[0], predictions.attention[0]

    codes: List[CodeEvidence] = []
    for i in np.flatnonzero(scores >= threshold):
        tokens = [
            AttendedToken(position=p, token=spans[p][0], start=spans[p][1], end=spans[p][2], weight=float(attention[i, p]))
            for p in top_attended(attention[i], top_m)
        ]
        codes.append(
            CodeEvidence(
                code=kb.label_space[i].value,
                probability=float(scores[i]),
                is_true=bool(example.labels[i]),
                tokens=tokens,
            )
        )
    codes.sort(key=lambda c: -c.probability)
    return Inspection(doc_id=document.id, num_tokens=len(example.token_ids), codes=codes)


def render_inspection(inspection: Inspection) -> str:
    """Aligned text listing of an inspection."""
    lines = [f"Document {inspection.doc_id} ({inspection.num_tokens} tokens)"]
    if not inspection.codes:
        lines.append("  no code predicted positive")
    for evidence in inspection.codes:
        mark = "*" if evidence.is_true else " "
        lines.append(f"{mark} {evidence.code:<8} p={evidence.probability:.4f}")
        for token in evidence.tokens:
            lines.append(f"      {token.position:>6}  {token.weight:.4f}  {token.token}")
    return "\n".join(lines)


def evidence_hit_rate(
    model: IcdCodingModel,
    tokenizer: Tokenizer,
    documents: Sequence[Document],
    kb: KnowledgeBase,
    codes: Optional[Iterable[IcdCode]] = None,
    max_tokens: int = 8192,
    batch_size: int = 16,
) -> EvidenceHits:
    """How often a code's most attended token lies inside its annotated evidence span.

    Args:
        model: Trained coding network
        tokenizer: Tokenizer the model was trained with
        documents: Documents carrying ``evidence`` spans
        kb: Label space of the model
        codes: Only score these codes (e.g. the rare bucket); all annotated codes when omitted
        max_tokens: Truncation length used in training
        batch_size: Documents per forward pass

    Returns:
        Hit and total counts over (document, code) pairs
    """
    wanted = None if codes is None else {code.value for code in codes}
    annotated = [d for d in documents if d.evidence]
    examples = [encode(d, tokenizer, kb, max_tokens) for d in annotated]
    predictions = predict(model, examples, pad_id=tokenizer.pad_id, batch_size=batch_size, keep_attention=True)

    hits = total = 0
    for document, attention in zip(annotated, predictions.attention):
        spans = tokenizer.tokenize_with_offsets(document.text)[: attention.shape[1]]
        for value, (start, end) in document.evidence.items():
            if wanted is not None and value not in wanted:
                continue
            try:
                row = kb.index_of(kb.resolve(value))
            except KnowledgeBaseError:
                logger.debug(f"Evidence code {value} of {document.id} is outside the label space")
                continue
            total += 1
            position = top_attended(attention[row], 1)[0]
            _, token_start, token_end = spans[position]
            if start <= token_start and token_end <= end:
                hits += 1

    logger.info(f"Evidence hits: {hits}/{total}")
    return EvidenceHits(hits=hits, total=total)

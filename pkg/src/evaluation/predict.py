"""Batched raw-text inference."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import torch

from src.data.corpus import Document, EncodedExample, multi_hot
from src.evaluation.metrics import EvalBatch, MetricError
from src.knowledge.knowledge_base import KnowledgeBase, KnowledgeBaseError
from src.model.coding_model import IcdCodingModel, pad_batch

logger = logging.getLogger(__name__)


@dataclass
class Predictions:
    """Per-document code probabilities, aligned with the input examples."""

    ids: List[str]
    scores: np.ndarray  # [M, C]
    labels: np.ndarray  # [M, C]
    # [C, N_i] per document, only when requested
    attention: List[np.ndarray] = field(default_factory=list)

    def to_eval_batch(self, train_code_frequencies: Optional[np.ndarray] = None) -> EvalBatch:
        return EvalBatch(
            scores=self.scores,
            labels=self.labels,
            train_code_frequencies=train_code_frequencies,
        )


@torch.no_grad()
def predict(
    model: IcdCodingModel,
    examples: Sequence[EncodedExample],
    pad_id: int = 0,
    batch_size: int = 16,
    device: str = "cpu",
    keep_attention: bool = False,
) -> Predictions:
    """Run the raw-text pass over ``examples`` in eval mode.

    Args:
        model: Trained coding network
        examples: Encoded documents
        pad_id: Padding token id of the tokenizer
        batch_size: Documents per forward pass
        device: Torch device
        keep_attention: Also return each document's attention matrix, trimmed to its length

    Returns:
        Predictions in input order
    """
    was_training = model.training
    model.eval()
    num_codes = model.num_codes
    scores: List[np.ndarray] = []
    attention: List[np.ndarray] = []
    try:
        for start in range(0, len(examples), batch_size):
            chunk = examples[start : start + batch_size]
            ids, mask = pad_batch([e.token_ids for e in chunk], pad_id)
            output = model(ids.to(device), mask.to(device))
            scores.append(output.probs.double().cpu().numpy())
            if keep_attention:
                for row, example in enumerate(chunk):
                    attention.append(output.attention[row, :, : len(example.token_ids)].cpu().numpy())
    finally:
        model.train(was_training)

    labels = (
        np.stack([e.labels for e in examples]).astype(np.int64)
        if examples
        else np.zeros((0, num_codes), dtype=np.int64)
    )
    return Predictions(
        ids=[e.id for e in examples],
        scores=np.concatenate(scores) if scores else np.zeros((0, num_codes)),
        labels=labels,
        attention=attention,
    )


def load_score_file(path: Path, documents: Sequence[Document], kb: KnowledgeBase) -> Predictions:
    """Read externally produced scores: JSONL of ``{"id": ..., "scores": {code: probability}}``.

    Codes missing from a record score 0; every document of the split must have a record.
    """
    path = Path(path)
    if not path.is_file():
        raise MetricError(f"Score file not found: {path}")
    by_id: Dict[str, np.ndarray] = {}
    with path.open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            record = json.loads(line)
            row = np.zeros(len(kb))
            for value, score in record.get("scores", {}).items():
                try:
                    row[kb.index_of(kb.resolve(value))] = float(score)
                except KnowledgeBaseError:
                    raise MetricError(f"Line {line_no}: code {value!r} is not in the label space") from None
            by_id[str(record["id"])] = row

    missing = [d.id for d in documents if d.id not in by_id]
    if missing:
        raise MetricError(f"Score file lacks {len(missing)} documents, e.g. {missing[0]}")
    scores = np.stack([by_id[d.id] for d in documents]) if documents else np.zeros((0, len(kb)))
    labels = (
        np.stack([multi_hot(d.codes, kb) for d in documents]).astype(np.int64)
        if documents
        else np.zeros((0, len(kb)), dtype=np.int64)
    )
    return Predictions(ids=[d.id for d in documents], scores=scores, labels=labels)

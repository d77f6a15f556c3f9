"""ICD coding network: chunked encoder, label cross-attention, per-code classifiers."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import torch
import torch.nn.functional as F
from torch import nn
from torch.nn.init import xavier_uniform_, zeros_

from src.config import ModelConfig
from src.data.tokenizer import Tokenizer
from src.knowledge.knowledge_base import KnowledgeBase
from src.model.encoder import build_encoder, encode_chunked

logger = logging.getLogger(__name__)


class ModelError(Exception):
    """Exception for model construction and initialisation errors."""

    def __init__(self, message: str, code: Optional[str] = None):
        self.message = message
        self.code = code
        super().__init__(message)


@dataclass
class CodingOutput:
    """Forward-pass results for a batch."""

    probs: torch.Tensor  # [B, C]
    evidence: torch.Tensor  # [B, C, D]
    attention: torch.Tensor  # [B, C, N]


def label_cross_attention(
    hidden: torch.Tensor,
    queries: torch.Tensor,
    w_k: torch.Tensor,
    w_v: torch.Tensor,
    layer_norm: Optional[nn.LayerNorm] = None,
    attention_mask: Optional[torch.Tensor] = None,
    scale: bool = False,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Per-code attention over tokens and the layer-normalised evidence it gathers.

    Args:
        hidden: ``[N, D]`` or ``[B, N, D]`` token representations H
        queries: ``[C, D]`` code queries Q
        w_k: ``[D, D]`` key projection
        w_v: ``[D, D]`` value projection
        layer_norm: Affine layer norm; a plain one is used when omitted
        attention_mask: Boolean mask of real tokens, ``[N]`` or ``[B, N]``
        scale: Divide scores by sqrt(D)

    Returns:
        Tuple of evidence E ``[.., C, D]`` and attention A ``[.., C, N]``
    """
    keys = hidden @ w_k
    values = hidden @ w_v
    scores = queries @ keys.transpose(-1, -2)
    if scale:
        scores = scores / math.sqrt(hidden.shape[-1])
    if attention_mask is not None:
        scores = scores.masked_fill(~attention_mask.unsqueeze(-2), float("-inf"))
    attention = torch.softmax(scores, dim=-1)
    evidence = attention @ values
    if layer_norm is not None:
        evidence = layer_norm(evidence)
    else:
        evidence = F.layer_norm(evidence, (evidence.shape[-1],))
    return evidence, attention


def classify(evidence: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """Independent sigmoid classifier per code: ``p_i = sigmoid(E_i . W_i)``."""
    return torch.sigmoid((evidence * weights).sum(dim=-1))


class IcdCodingModel(nn.Module):
    """Encoder + label cross-attention + per-code linear classifiers."""

    def __init__(
        self,
        encoder: nn.Module,
        num_codes: int,
        chunk_size: int,
        dropout: float = 0.1,
        scale_attention: bool = False,
    ):
        super().__init__()
        hidden_dim = encoder.hidden_dim
        self.encoder = encoder
        self.chunk_size = chunk_size
        self.scale_attention = scale_attention
        self.dropout = nn.Dropout(dropout)
        self.queries = nn.Parameter(torch.empty(num_codes, hidden_dim))
        self.w_k = nn.Parameter(torch.empty(hidden_dim, hidden_dim))
        self.w_v = nn.Parameter(torch.empty(hidden_dim, hidden_dim))
        self.evidence_norm = nn.LayerNorm(hidden_dim)
        self.classifier = nn.Parameter(torch.empty(num_codes, hidden_dim))
        for parameter in (self.queries, self.w_v, self.classifier):
            xavier_uniform_(parameter)
        # zero keys: every code starts with uniform attention over the tokens
        zeros_(self.w_k)

    @property
    def num_codes(self) -> int:
        return self.queries.shape[0]

    def encode(self, token_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        """Token representations H for a padded batch."""
        return encode_chunked(token_ids, self.encoder, self.chunk_size, attention_mask)

    def forward(self, token_ids: torch.Tensor, attention_mask: torch.Tensor) -> CodingOutput:
        hidden = self.dropout(self.encode(token_ids, attention_mask))
        evidence, attention = label_cross_attention(
            hidden,
            self.queries,
            self.w_k,
            self.w_v,
            layer_norm=self.evidence_norm,
            attention_mask=attention_mask,
            scale=self.scale_attention,
        )
        return CodingOutput(probs=classify(evidence, self.classifier), evidence=evidence, attention=attention)

    @torch.no_grad()
    def set_queries(self, queries: torch.Tensor) -> None:
        """Overwrite the code queries; they stay trainable."""
        if queries.shape != self.queries.shape:
            raise ModelError(f"Query shape {tuple(queries.shape)} != {tuple(self.queries.shape)}")
        self.queries.copy_(queries)


def build_model(config: ModelConfig, vocab_size: int, num_codes: int, pad_id: int = 0) -> IcdCodingModel:
    """Instantiate the coding network for a label space."""
    if num_codes < 1:
        raise ModelError("Cannot build a coding model over an empty label space")
    encoder = build_encoder(config, vocab_size=vocab_size, pad_id=pad_id)
    model = IcdCodingModel(
        encoder,
        num_codes=num_codes,
        chunk_size=config.chunk_size,
        dropout=config.dropout,
        scale_attention=config.scale_attention,
    )
    logger.debug(
        f"Built coding model: C={num_codes}, D={encoder.hidden_dim}, "
        f"params={sum(p.numel() for p in model.parameters())}"
    )
    return model


@torch.no_grad()
def init_code_queries(
    kb: KnowledgeBase,
    encoder: nn.Module,
    tokenizer: Tokenizer,
    chunk_size: int,
) -> torch.Tensor:
    """Max-pool the encoded canonical description of every code into its query.

    Returns:
        ``[C, D]`` tensor in label-space order
    """
    was_training = encoder.training
    encoder.eval()
    try:
        rows = []
        device = next(encoder.parameters()).device
        for code, description in zip(kb.label_space, kb.descriptions()):
            token_ids = tokenizer.encode(description)
            if not token_ids:
                raise ModelError(f"Description of {code} has no tokens", code=code.value)
            hidden = encode_chunked(torch.tensor(token_ids, device=device), encoder, chunk_size)
            rows.append(hidden.max(dim=0).values)
    finally:
        encoder.train(was_training)
    return torch.stack(rows)


def pad_batch(sequences: Sequence[Sequence[int]], pad_id: int = 0) -> Tuple[torch.Tensor, torch.Tensor]:
    """Right-pad token id lists into ``[B, N]`` ids and a boolean real-token mask."""
    if not sequences:
        raise ModelError("Cannot pad an empty batch")
    width = max(len(s) for s in sequences)
    ids = torch.full((len(sequences), width), pad_id, dtype=torch.long)
    mask = torch.zeros((len(sequences), width), dtype=torch.bool)
    for row, sequence in enumerate(sequences):
        ids[row, : len(sequence)] = torch.as_tensor(list(sequence), dtype=torch.long)
        mask[row, : len(sequence)] = True
    return ids, mask

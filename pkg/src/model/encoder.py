"""Text encoders and chunked encoding of long documents."""

import logging
import math
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn

from src.config import ModelConfig

logger = logging.getLogger(__name__)


class TinyTransformerEncoder(nn.Module):
    """Small trainable transformer; positions restart at 0 for every input row."""

    def __init__(
        self,
        vocab_size: int,
        hidden_dim: int,
        max_positions: int,
        layers: int = 2,
        heads: int = 4,
        ffn_dim: int = 256,
        dropout: float = 0.1,
        pad_id: int = 0,
    ):
        super().__init__()
        self.hidden_dim = hidden_dim
        self.pad_id = pad_id
        self.max_positions = max_positions
        self.token_embedding = nn.Embedding(vocab_size, hidden_dim, padding_idx=pad_id)
        self.position_embedding = nn.Embedding(max_positions, hidden_dim)
        nn.init.normal_(self.position_embedding.weight, std=0.02)
        self.embedding_norm = nn.LayerNorm(hidden_dim)
        self.dropout = nn.Dropout(dropout)
        layer = nn.TransformerEncoderLayer(
            d_model=hidden_dim,
            nhead=heads,
            dim_feedforward=ffn_dim,
            dropout=dropout,
            batch_first=True,
        )
        self.layers = nn.TransformerEncoder(layer, num_layers=layers, enable_nested_tensor=False)

    def forward(self, token_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        """Encode ``[B, L]`` ids (``L <= max_positions``) into ``[B, L, D]``."""
        length = token_ids.shape[1]
        positions = torch.arange(length, device=token_ids.device)
        x = self.token_embedding(token_ids) + self.position_embedding(positions)[None]
        x = self.dropout(self.embedding_norm(x))
        return self.layers(x, src_key_padding_mask=~attention_mask)


class PretrainedEncoder(nn.Module):
    """Hugging Face encoder behind the same interface (loaded lazily)."""

    def __init__(self, name: str):
        super().__init__()
        try:
            from transformers import AutoModel
        except ImportError as e:
            raise ImportError("transformers is required for pretrained encoders") from e
        self.model = AutoModel.from_pretrained(name)
        self.hidden_dim = self.model.config.hidden_size
        self.pad_id = self.model.config.pad_token_id or 0

    def forward(self, token_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        output = self.model(input_ids=token_ids, attention_mask=attention_mask.long())
        return output.last_hidden_state


def build_encoder(config: ModelConfig, vocab_size: int, pad_id: int = 0) -> nn.Module:
    """Instantiate the encoder named by the model config."""
    if config.encoder == "pretrained":
        logger.info(f"Loading pretrained encoder {config.pretrained_name}")
        return PretrainedEncoder(config.pretrained_name)
    return TinyTransformerEncoder(
        vocab_size=vocab_size,
        hidden_dim=config.hidden_dim,
        max_positions=config.chunk_size,
        layers=config.layers,
        heads=config.heads,
        ffn_dim=config.ffn_dim,
        dropout=config.dropout,
        pad_id=pad_id,
    )


def encode_chunked(
    token_ids: torch.Tensor,
    encoder: nn.Module,
    chunk_size: int,
    attention_mask: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Split into consecutive chunks, encode each independently, concatenate.

    Args:
        token_ids: ``[N]`` or ``[B, N]`` token ids
        encoder: Module mapping ``[b, L]`` ids and mask to ``[b, L, D]``
        chunk_size: Maximum chunk length
        attention_mask: Boolean mask of real tokens, same shape as ``token_ids``

    Returns:
        ``[N, D]`` or ``[B, N, D]`` token representations
    """
    unbatched = token_ids.dim() == 1
    if unbatched:
        token_ids = token_ids.unsqueeze(0)
        attention_mask = None if attention_mask is None else attention_mask.unsqueeze(0)
    if attention_mask is None:
        attention_mask = torch.ones_like(token_ids, dtype=torch.bool)

    batch, length = token_ids.shape
    span = min(chunk_size, length)
    n_chunks = math.ceil(length / span)
    pad = n_chunks * span - length
    pad_id = getattr(encoder, "pad_id", 0)

    ids = F.pad(token_ids, (0, pad), value=pad_id).reshape(batch * n_chunks, span)
    mask = F.pad(attention_mask, (0, pad), value=False).reshape(batch * n_chunks, span)

    # chunks without a single real token are never encoded (an all-masked row has no softmax)
    live = mask.any(dim=1)
    encoded = encoder(ids[live], mask[live])
    hidden = encoded.new_zeros(batch * n_chunks, span, encoded.shape[-1])
    hidden[live] = encoded
    hidden = hidden.reshape(batch, n_chunks * span, -1)[:, :length]

    return hidden.squeeze(0) if unbatched else hidden

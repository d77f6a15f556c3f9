"""ICD coding network and checkpoints."""

from src.model.checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from src.model.coding_model import (
    CodingOutput,
    IcdCodingModel,
    ModelError,
    build_model,
    classify,
    init_code_queries,
    label_cross_attention,
    pad_batch,
)
from src.model.encoder import TinyTransformerEncoder, build_encoder, encode_chunked

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "load_checkpoint",
    "save_checkpoint",
    "CodingOutput",
    "IcdCodingModel",
    "ModelError",
    "build_model",
    "classify",
    "init_code_queries",
    "label_cross_attention",
    "pad_batch",
    "TinyTransformerEncoder",
    "build_encoder",
    "encode_chunked",
]

"""Self-describing checkpoint container."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import torch

from src.config import CorpusPaths, ModelConfig, TrainingConfig
from src.data.tokenizer import Tokenizer, tokenizer_from_dict
from src.knowledge.knowledge_base import KnowledgeBase
from src.model.coding_model import IcdCodingModel, build_model

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class CheckpointError(Exception):
    """Exception for checkpoint save/load errors."""

    def __init__(self, message: str, path: Optional[Path] = None):
        self.message = message
        self.path = path
        super().__init__(message)


@dataclass
class Checkpoint:
    """A restored model with everything needed to run it."""

    model: IcdCodingModel
    tokenizer: Tokenizer
    label_space: List[str]
    model_config: ModelConfig
    training_config: TrainingConfig
    code_frequencies: np.ndarray
    corpus: Optional[CorpusPaths] = None
    top_k_codes: Optional[int] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def check_label_space(self, kb: KnowledgeBase) -> None:
        """Fail unless ``kb`` has exactly the label space the model was trained on."""
        expected = [code.value for code in kb.label_space]
        if expected != self.label_space:
            raise CheckpointError(
                f"Label space mismatch: checkpoint has {len(self.label_space)} codes, "
                f"knowledge base has {len(expected)} (or a different order)"
            )


def save_checkpoint(
    path: Path,
    model: IcdCodingModel,
    model_config: ModelConfig,
    training_config: TrainingConfig,
    label_space: Sequence[str],
    tokenizer: Tokenizer,
    code_frequencies: np.ndarray,
    corpus: Optional[CorpusPaths] = None,
    top_k_codes: Optional[int] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write model parameters together with config echo, label space and vocabulary."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        "model_config": model_config.model_dump(),
        "training_config": training_config.model_dump(),
        "label_space": list(label_space),
        "tokenizer": tokenizer.to_dict(),
        "code_frequencies": [int(x) for x in code_frequencies],
        "corpus": None if corpus is None else {k: str(v) for k, v in corpus.model_dump().items()},
        "top_k_codes": top_k_codes,
        "extra": dict(extra or {}),
        "state_dict": {k: v.detach().cpu() for k, v in model.state_dict().items()},
    }
    torch.save(payload, path)
    logger.info(f"Saved checkpoint to {path}")
    return path


def load_checkpoint(path: Path, device: str = "cpu") -> Checkpoint:
    """Restore a checkpoint written by ``save_checkpoint``."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}", path=path)
    try:
        payload = torch.load(path, map_location=device, weights_only=True)
    except Exception as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}", path=path) from e

    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint format version {version!r}", path=path)

    model_config = ModelConfig.model_validate(payload["model_config"])
    tokenizer = tokenizer_from_dict(payload["tokenizer"])
    label_space = list(payload["label_space"])
    model = build_model(model_config, tokenizer.vocab_size, len(label_space), pad_id=tokenizer.pad_id)
    model.load_state_dict(payload["state_dict"])
    model.to(device)
    model.eval()

    corpus = payload.get("corpus")
    return Checkpoint(
        model=model,
        tokenizer=tokenizer,
        label_space=label_space,
        model_config=model_config,
        training_config=TrainingConfig.model_validate(payload["training_config"]),
        code_frequencies=np.asarray(payload["code_frequencies"], dtype=np.int64),
        corpus=None if corpus is None else CorpusPaths.model_validate(corpus),
        top_k_codes=payload.get("top_k_codes"),
        extra=dict(payload.get("extra") or {}),
    )

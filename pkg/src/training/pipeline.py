"""End-to-end training run: data preparation, model setup, fitting, checkpointing."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from src.config import RunConfig
from src.data.corpus import (
    SPLITS,
    Document,
    EncodedExample,
    code_frequencies,
    encode_corpus,
    load_corpus,
    restrict_to_top_codes,
)
from src.data.tokenizer import Tokenizer, build_tokenizer
from src.knowledge.knowledge_base import KnowledgeBase, load_knowledge_base
from src.model.checkpoint import save_checkpoint
from src.model.coding_model import IcdCodingModel, build_model, init_code_queries
from src.training.trainer import EpochResult, Trainer, TrainingResult, seed_everything

logger = logging.getLogger(__name__)

CHECKPOINT_FILE = "model.pt"
LOSS_LOG_FILE = "losses.jsonl"


@dataclass
class PreparedData:
    """Knowledge base, documents and encoded splits of one run."""

    kb: KnowledgeBase
    documents: Dict[str, List[Document]]
    tokenizer: Tokenizer
    encoded: Dict[str, List[EncodedExample]]
    train_frequencies: np.ndarray


@dataclass
class TrainingArtifacts:
    model: IcdCodingModel
    data: PreparedData
    result: TrainingResult
    checkpoint: Path
    loss_log: Path


def prepare_data(config: RunConfig) -> PreparedData:
    """Load the KB and splits, apply the Top-K restriction, fit the tokenizer and encode."""
    kb = load_knowledge_base(config.corpus.kb)
    documents = {name: load_corpus(config.corpus.split(name), kb) for name in SPLITS}
    if config.top_k_codes is not None:
        kb, documents = restrict_to_top_codes(kb, documents, config.top_k_codes)

    for name, docs in documents.items():
        if not docs:
            logger.warning(f"Split {name} is empty")

    # knowledge texts share the vocabulary so guidelines are not all <unk>
    tokenizer = build_tokenizer(
        [d.text for d in documents["train"]] + kb.knowledge_texts(),
        min_freq=config.training.min_token_freq,
        pretrained_name=config.model.pretrained_name if config.model.encoder == "pretrained" else None,
    )
    max_tokens = config.training.max_tokens
    encoded = {name: encode_corpus(docs, tokenizer, kb, max_tokens) for name, docs in documents.items()}

    frequencies = code_frequencies(documents["train"], kb)
    unseen = int((frequencies == 0).sum())
    if unseen:
        logger.warning(f"{unseen} of {len(kb)} codes never occur in the training split")
    return PreparedData(kb=kb, documents=documents, tokenizer=tokenizer, encoded=encoded, train_frequencies=frequencies)


def build_initialized_model(config: RunConfig, data: PreparedData) -> IcdCodingModel:
    """Coding model with queries taken from encoded descriptions when enabled."""
    model = build_model(config.model, data.tokenizer.vocab_size, len(data.kb), pad_id=data.tokenizer.pad_id)
    if config.training.init_queries:
        queries = init_code_queries(data.kb, model.encoder, data.tokenizer, config.model.chunk_size)
        model.set_queries(queries)
        logger.info("Initialised code queries from code descriptions")
    return model


def train_run(
    config: RunConfig,
    out_dir: Path,
    data: Optional[PreparedData] = None,
    progress: bool = True,
    on_epoch_end: Optional[Callable[[EpochResult], None]] = None,
) -> TrainingArtifacts:
    """Train one configuration and write its checkpoint and loss log under ``out_dir``.

    Args:
        config: Validated run configuration (seed overrides already applied)
        out_dir: Output directory, created if needed
        data: Prepared splits to reuse across runs; loaded from ``config`` when omitted
        progress: Show progress bars
        on_epoch_end: Callback after each epoch's dev evaluation

    Returns:
        TrainingArtifacts with the best-dev model
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed_everything(config.training.seed)
    data = data or prepare_data(config)
    model = build_initialized_model(config, data)

    trainer = Trainer(
        model,
        data.kb,
        data.tokenizer,
        config.training,
        data.encoded["train"],
        dev_examples=data.encoded["dev"],
        train_code_frequencies=data.train_frequencies,
        loss_log=out_dir / LOSS_LOG_FILE,
        progress=progress,
    )
    result = trainer.fit(on_epoch_end=on_epoch_end)

    checkpoint = save_checkpoint(
        out_dir / CHECKPOINT_FILE,
        model,
        model_config=config.model,
        training_config=config.training,
        label_space=[code.value for code in data.kb.label_space],
        tokenizer=data.tokenizer,
        code_frequencies=data.train_frequencies,
        corpus=config.corpus,
        top_k_codes=config.top_k_codes,
        extra={"best_epoch": result.best_epoch, "steps": result.steps},
    )
    return TrainingArtifacts(
        model=model, data=data, result=result, checkpoint=checkpoint, loss_log=out_dir / LOSS_LOG_FILE
    )

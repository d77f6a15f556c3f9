"""Helpers shared by the command handlers."""

import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from sqlalchemy.exc import SQLAlchemyError

from src.config import RunConfig, TrainingConfig
from src.data.corpus import CorpusError, Document, load_corpus, restrict_documents
from src.database.repository import RunRepository
from src.knowledge.knowledge_base import KnowledgeBase, KnowledgeBaseError, load_knowledge_base
from src.model.checkpoint import Checkpoint, CheckpointError
from src.training.trainer import EpochResult

logger = logging.getLogger(__name__)


def show_progress(disabled: bool = False) -> bool:
    """Progress bars only on an interactive terminal."""
    return not disabled and sys.stderr.isatty()


def resolve_seed(config_seed: int, env_seed: Optional[int], flag_seed: Optional[int]) -> int:
    """Seed precedence: config file < GKI_SEED < --seed."""
    if flag_seed is not None:
        return flag_seed
    if env_seed is not None:
        return env_seed
    return config_seed


def apply_overrides(
    config: RunConfig,
    training: Dict[str, Any],
    knowledge: Optional[str] = None,
    top_k_codes: Optional[int] = None,
) -> RunConfig:
    """Return ``config`` with training fields, knowledge mode and Top-K replaced.

    Overrides with value None are ignored; the result is re-validated.
    """
    updates = {name: value for name, value in training.items() if value is not None}
    training_config = TrainingConfig.model_validate({**config.training.model_dump(), **updates})
    if knowledge is not None:
        training_config = training_config.with_knowledge_mode(knowledge)
    return RunConfig.model_validate(
        {
            "corpus": config.corpus.model_dump(),
            "model": config.model.model_dump(),
            "training": training_config.model_dump(),
            "top_k_codes": top_k_codes if top_k_codes is not None else config.top_k_codes,
        }
    )


@dataclass
class SplitContext:
    """A checkpoint's label space and one split restricted to it."""

    kb: KnowledgeBase
    documents: List[Document]


def load_split_for_checkpoint(
    checkpoint: Checkpoint,
    split: str,
    kb_path: Optional[Path] = None,
    split_path: Optional[Path] = None,
) -> SplitContext:
    """Load the KB and a split referenced by (or given alongside) a checkpoint.

    Raises CheckpointError when the resulting label space differs from the checkpoint's.
    """
    if kb_path is None or split_path is None:
        if checkpoint.corpus is None:
            raise CheckpointError("Checkpoint records no corpus; pass --kb and --corpus")
        kb_path = kb_path or checkpoint.corpus.kb
        split_path = split_path or checkpoint.corpus.split(split)

    full_kb = load_knowledge_base(Path(kb_path))
    documents = load_corpus(Path(split_path), full_kb)
    kb = full_kb
    if checkpoint.top_k_codes is not None:
        try:
            kb = full_kb.subset(full_kb.resolve(value) for value in checkpoint.label_space)
        except KnowledgeBaseError as e:
            raise CheckpointError(f"Checkpoint label space does not fit {kb_path}: {e.message}") from None
        documents = restrict_documents(documents, kb)
    checkpoint.check_label_space(kb)
    return SplitContext(kb=kb, documents=documents)


def find_document(documents: List[Document], doc_id: str) -> Document:
    for document in documents:
        if document.id == doc_id:
            return document
    raise CorpusError(f"Unknown document id {doc_id}", doc_id=doc_id)


class RunTracker:
    """Registry bookkeeping for one command; registry failures only warn."""

    def __init__(self, repository: Optional[RunRepository]):
        self.repository = repository
        self.run_id: Optional[int] = None

    def start(self, command: str, **fields: Any) -> None:
        if self.repository is None:
            return
        try:
            self.run_id = self.repository.start_run(command, **fields)
        except SQLAlchemyError as e:
            logger.warning(f"Run registry unavailable: {e}")

    def epoch(self, result: EpochResult) -> None:
        if self.repository is None or self.run_id is None:
            return
        report = result.dev_report
        try:
            self.repository.record_epoch(
                self.run_id,
                result.epoch,
                {
                    "l_raw": result.losses.l_raw,
                    "l_guide": result.losses.l_guide,
                    "l_sim": result.losses.l_sim,
                    "l_rdrop": result.losses.l_rdrop,
                    "total": result.losses.total,
                },
                dev_micro_f1=None if report is None else report.micro_f1,
                dev_macro_f1=None if report is None else report.macro_f1,
            )
        except SQLAlchemyError as e:
            logger.warning(f"Could not record epoch {result.epoch}: {e}")

    def finish(self, status: str, manifest_path: Optional[Path] = None, summary: Optional[Dict[str, Any]] = None) -> None:
        if self.repository is None or self.run_id is None:
            return
        try:
            self.repository.finish_run(
                self.run_id,
                status=status,
                manifest_path=None if manifest_path is None else str(manifest_path),
                summary=summary,
            )
        except SQLAlchemyError as e:
            logger.warning(f"Could not close run {self.run_id}: {e}")

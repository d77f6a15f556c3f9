"""Attention inspection command."""

import argparse
import logging
from pathlib import Path
from typing import Optional

from src.cli.common import find_document, load_split_for_checkpoint
from src.database.repository import RunRepository
from src.evaluation.inspection import inspect_document, render_inspection
from src.model.checkpoint import load_checkpoint

logger = logging.getLogger(__name__)


class InspectHandler:
    """Handles ``inspect --checkpoint F --id ID --top-m M``."""

    def __init__(self, repository: Optional[RunRepository] = None):
        self.repository = repository

    def run(self, args: argparse.Namespace) -> int:
        checkpoint = load_checkpoint(Path(args.checkpoint))
        context = load_split_for_checkpoint(checkpoint, args.split, kb_path=args.kb, split_path=args.corpus)
        document = find_document(context.documents, args.id)
        training = checkpoint.training_config
        inspection = inspect_document(
            checkpoint.model,
            checkpoint.tokenizer,
            document,
            context.kb,
            top_m=args.top_m,
            threshold=args.threshold if args.threshold is not None else training.threshold,
            max_tokens=training.max_tokens,
        )
        print(render_inspection(inspection))
        return 0

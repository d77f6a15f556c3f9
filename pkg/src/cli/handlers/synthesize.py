"""Guideline dumping."""

import argparse
import json
import logging
from pathlib import Path
from typing import Optional

from src.config import KNOWLEDGE_MODES
from src.data.corpus import load_corpus
from src.database.repository import RunRepository
from src.knowledge.guideline import GuidelineOptions, GuidelineSynthesizer
from src.knowledge.knowledge_base import load_knowledge_base

logger = logging.getLogger(__name__)


class SynthesizeHandler:
    """Handles ``synthesize --corpus F --kb F --seed S --out F``."""

    def __init__(self, repository: Optional[RunRepository] = None):
        self.repository = repository

    def run(self, args: argparse.Namespace) -> int:
        _, use_synonyms, use_hierarchy = KNOWLEDGE_MODES[args.knowledge]
        kb = load_knowledge_base(Path(args.kb))
        documents = load_corpus(Path(args.corpus), kb)
        synthesizer = GuidelineSynthesizer(
            kb, GuidelineOptions(use_synonyms=use_synonyms, use_hierarchy=use_hierarchy, seed=args.seed)
        )

        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", encoding="utf-8", newline="\n") as f:
            for document in documents:
                guideline = synthesizer.synthesize(document.id, document.codes, args.epoch)
                record = {
                    "id": document.id,
                    "codes": [code.value for code in document.codes],
                    "guideline": guideline.text,
                    "segments": [{"code": code.value, "text": text} for code, text in guideline.segments],
                }
                f.write(json.dumps(record, ensure_ascii=False) + "\n")

        logger.info(f"Wrote {len(documents)} guidelines to {out}")
        return 0

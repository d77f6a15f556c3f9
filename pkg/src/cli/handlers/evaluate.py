"""Evaluation command."""

import argparse
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from src.cli.common import RunTracker, load_split_for_checkpoint
from src.cli.manifest import RunManifest
from src.data.corpus import code_frequencies, encode_corpus, load_corpus
from src.database.repository import RunRepository
from src.evaluation.metrics import MetricError
from src.evaluation.predict import Predictions, load_score_file, predict
from src.evaluation.report import evaluate_batch, format_report, write_report
from src.knowledge.knowledge_base import load_knowledge_base
from src.model.checkpoint import load_checkpoint

logger = logging.getLogger(__name__)


class EvaluateHandler:
    """Handles ``evaluate --checkpoint F --split {dev,test} --report F``.

    With ``--scores`` an external score file is evaluated instead of a checkpoint.
    """

    def __init__(self, repository: Optional[RunRepository] = None):
        self.tracker = RunTracker(repository)

    def run(self, args: argparse.Namespace) -> int:
        report_path = Path(args.report)
        self.tracker.start(
            "evaluate",
            config={"checkpoint": args.checkpoint, "scores": args.scores, "split": args.split, "report": str(report_path)},
        )
        try:
            if args.scores:
                predictions, frequencies, threshold, kb_path = self._from_scores(args)
                checkpoint_path = None
            else:
                predictions, frequencies, threshold, kb_path = self._from_checkpoint(args)
                checkpoint_path = str(args.checkpoint)

            report = evaluate_batch(predictions.to_eval_batch(frequencies), threshold=threshold)
            write_report(report, report_path)
            print(format_report(report))

            manifest = RunManifest(
                command="evaluate",
                config={"split": args.split, "threshold": threshold},
                kb=kb_path,
                checkpoint=checkpoint_path,
                report=str(report_path),
            )
            manifest_path = manifest.write(report_path.with_suffix(".manifest.json"))
        except Exception:
            self.tracker.finish("failed")
            raise

        self.tracker.finish(
            "finished",
            manifest_path=manifest_path,
            summary={"micro_f1": report.micro_f1, "macro_f1": report.macro_f1},
        )
        return 0

    def _from_checkpoint(self, args: argparse.Namespace):
        if not args.checkpoint:
            raise MetricError("evaluate needs --checkpoint or --scores")
        checkpoint = load_checkpoint(Path(args.checkpoint))
        context = load_split_for_checkpoint(checkpoint, args.split, kb_path=args.kb, split_path=args.corpus)
        training = checkpoint.training_config
        examples = encode_corpus(context.documents, checkpoint.tokenizer, context.kb, training.max_tokens)
        predictions = predict(
            checkpoint.model, examples, pad_id=checkpoint.tokenizer.pad_id, batch_size=training.eval_batch_size
        )
        threshold = args.threshold if args.threshold is not None else training.threshold
        kb_path = str(args.kb or (checkpoint.corpus.kb if checkpoint.corpus else ""))
        return predictions, checkpoint.code_frequencies, threshold, kb_path

    def _from_scores(self, args: argparse.Namespace):
        if not (args.kb and args.corpus):
            raise MetricError("--scores requires --kb and --corpus")
        kb = load_knowledge_base(Path(args.kb))
        documents = load_corpus(Path(args.corpus), kb)
        predictions: Predictions = load_score_file(Path(args.scores), documents, kb)
        frequencies: Optional[np.ndarray] = None
        if args.train_corpus:
            frequencies = code_frequencies(load_corpus(Path(args.train_corpus), kb), kb)
        threshold = args.threshold if args.threshold is not None else 0.5
        return predictions, frequencies, threshold, str(args.kb)

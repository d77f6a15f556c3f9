"""Training command."""

import argparse
import json
import logging
from pathlib import Path
from typing import Optional

from src.cli.common import RunTracker, apply_overrides, resolve_seed, show_progress
from src.cli.manifest import MANIFEST_FILE, RunManifest
from src.config import RunConfig, get_settings, load_run_config
from src.database.repository import RunRepository
from src.evaluation.predict import predict
from src.evaluation.report import evaluate_batch, write_report
from src.training.pipeline import train_run

logger = logging.getLogger(__name__)

CONFIG_ECHO_FILE = "config.json"
DEV_REPORT_FILE = "dev_report.json"


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    """Config file with GKI_SEED and command-line overrides applied."""
    config = load_run_config(Path(args.config))
    seed = resolve_seed(config.training.seed, get_settings().seed, args.seed)
    return apply_overrides(
        config,
        {
            "seed": seed,
            "epochs": args.epochs,
            "learning_rate": args.learning_rate,
            "warmup_steps": args.warmup_steps,
            "batch_size": args.batch_size,
            "lambda_sim": args.lambda_sim,
            "rdrop_alpha": args.rdrop_alpha,
        },
        knowledge=args.knowledge,
        top_k_codes=args.top_k,
    )


class TrainHandler:
    """Handles ``train --config F --out DIR``."""

    def __init__(self, repository: Optional[RunRepository] = None):
        self.tracker = RunTracker(repository)

    def run(self, args: argparse.Namespace) -> int:
        config = run_config_from_args(args)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        training = config.training
        self.tracker.start(
            "train",
            config=config.model_dump(mode="json"),
            seed=training.seed,
            knowledge_mode=training.knowledge_mode,
            output_dir=str(out_dir),
        )

        try:
            config_path = out_dir / CONFIG_ECHO_FILE
            config_path.write_text(json.dumps(config.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")

            artifacts = train_run(
                config,
                out_dir,
                progress=show_progress(args.no_progress),
                on_epoch_end=self.tracker.epoch,
            )

            report_path = None
            dev = artifacts.data.encoded["dev"]
            if dev:
                predictions = predict(
                    artifacts.model, dev, pad_id=artifacts.data.tokenizer.pad_id, batch_size=training.eval_batch_size
                )
                report = evaluate_batch(
                    predictions.to_eval_batch(artifacts.data.train_frequencies), threshold=training.threshold
                )
                report_path = write_report(report, out_dir / DEV_REPORT_FILE)

            manifest = RunManifest(
                command="train",
                config=config.model_dump(mode="json"),
                corpus={name: str(config.corpus.split(name)) for name in ("train", "dev", "test")},
                kb=str(config.corpus.kb),
                seed=training.seed,
                knowledge_mode=training.knowledge_mode,
                checkpoint=str(artifacts.checkpoint),
                report=None if report_path is None else str(report_path),
            )
            manifest.add_artifact("config", config_path)
            manifest.add_artifact("loss_log", artifacts.loss_log)
            manifest_path = manifest.write(out_dir / MANIFEST_FILE)
        except Exception:
            self.tracker.finish("failed")
            raise

        self.tracker.finish(
            "finished",
            manifest_path=manifest_path,
            summary={"best_epoch": artifacts.result.best_epoch, "steps": artifacts.result.steps},
        )
        logger.info(f"Training finished; checkpoint at {artifacts.checkpoint}")
        return 0

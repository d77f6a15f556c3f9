"""Main entry point for GKI-ICD."""

import argparse
import json
import logging
import sys
from typing import List, Optional

import torch
from pydantic import ValidationError
from sqlalchemy.exc import SQLAlchemyError

from src.cli.handlers import (
    AblateHandler,
    EvaluateHandler,
    GenerateHandler,
    InspectHandler,
    RunsHandler,
    SynthesizeHandler,
    TrainHandler,
)
from src.cli.manifest import ManifestError
from src.config import KNOWLEDGE_MODES, get_settings
from src.data.corpus import CorpusError
from src.database.repository import close_repository, get_repository
from src.evaluation.metrics import MetricError
from src.knowledge.guideline import GuidelineError
from src.knowledge.knowledge_base import KnowledgeBaseError
from src.model.checkpoint import CheckpointError
from src.model.coding_model import ModelError
from src.training.trainer import TrainingError

EXIT_FAILURE = 1
EXIT_INVALID = 2

DOMAIN_ERRORS = (
    KnowledgeBaseError,
    GuidelineError,
    CorpusError,
    ModelError,
    CheckpointError,
    TrainingError,
    MetricError,
    ManifestError,
)

HANDLERS = {
    "generate": GenerateHandler,
    "train": TrainHandler,
    "evaluate": EvaluateHandler,
    "synthesize": SynthesizeHandler,
    "inspect": InspectHandler,
    "ablate": AblateHandler,
    "runs": RunsHandler,
}


def setup_logging() -> None:
    """Configure logging for the application."""
    settings = get_settings()

    logging.basicConfig(
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        handlers=[
            logging.StreamHandler(sys.stdout),
        ],
        force=True,
    )

    logging.getLogger("sqlalchemy").setLevel(logging.WARNING)
    logging.getLogger("transformers").setLevel(logging.WARNING)


def _add_training_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="Run config JSON")
    parser.add_argument("--out", required=True, help="Output directory")
    parser.add_argument("--seed", type=int, help="Overrides the config seed and GKI_SEED")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--learning-rate", type=float)
    parser.add_argument("--warmup-steps", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--lambda-sim", type=float)
    parser.add_argument("--rdrop-alpha", type=float)
    parser.add_argument("--knowledge", choices=list(KNOWLEDGE_MODES), help="Knowledge injection mode")
    parser.add_argument("--top-k", type=int, help="Restrict to the K most frequent training codes")
    parser.add_argument("--no-progress", action="store_true", help="Disable progress bars")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gki-icd", description="Knowledge-injected ICD coding")
    sub = parser.add_subparsers(dest="command", required=True)

    generate = sub.add_parser("generate", help="Write a synthetic corpus and knowledge base")
    generate.add_argument("--spec", required=True, help="Synthetic spec JSON")
    generate.add_argument("--out", required=True, help="Output directory")

    train = sub.add_parser("train", help="Train a coding model")
    _add_training_overrides(train)

    evaluate = sub.add_parser("evaluate", help="Evaluate a checkpoint or a score file")
    evaluate.add_argument("--checkpoint", help="Checkpoint file")
    evaluate.add_argument("--split", choices=["dev", "test"], default="test")
    evaluate.add_argument("--report", required=True, help="Metric report JSON to write")
    evaluate.add_argument("--kb", help="Knowledge base (default: the checkpoint's)")
    evaluate.add_argument("--corpus", help="Split JSONL (default: the checkpoint's)")
    evaluate.add_argument("--scores", help="JSONL of externally produced scores")
    evaluate.add_argument("--train-corpus", help="Train split for bucket frequencies with --scores")
    evaluate.add_argument("--threshold", type=float)

    synthesize = sub.add_parser("synthesize", help="Dump the guidelines of a corpus")
    synthesize.add_argument("--corpus", required=True)
    synthesize.add_argument("--kb", required=True)
    synthesize.add_argument("--seed", type=int, default=0)
    synthesize.add_argument("--epoch", type=int, default=0)
    synthesize.add_argument("--knowledge", choices=[m for m in KNOWLEDGE_MODES if m != "none"], default="desc+syn+hie")
    synthesize.add_argument("--out", required=True)

    inspect = sub.add_parser("inspect", help="List the tokens each predicted code attends to")
    inspect.add_argument("--checkpoint", required=True)
    inspect.add_argument("--id", required=True, help="Document id")
    inspect.add_argument("--top-m", type=int, default=5)
    inspect.add_argument("--split", choices=["train", "dev", "test"], default="test")
    inspect.add_argument("--kb")
    inspect.add_argument("--corpus")
    inspect.add_argument("--threshold", type=float)

    ablate = sub.add_parser("ablate", help="Train every knowledge mode over several seeds")
    _add_training_overrides(ablate)
    ablate.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ablate.add_argument("--modes", nargs="+", choices=list(KNOWLEDGE_MODES))

    runs = sub.add_parser("runs", help="List recorded runs")
    runs.add_argument("--command", dest="run_command", help="Only runs of this command")
    runs.add_argument("--limit", type=int, default=20)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code."""
    args = build_parser().parse_args(argv)
    setup_logging()
    logger = logging.getLogger(__name__)

    settings = get_settings()
    if settings.num_threads:
        torch.set_num_threads(settings.num_threads)

    repository = None
    if args.command not in ("synthesize", "inspect"):
        try:
            repository = get_repository()
        except SQLAlchemyError as e:
            logger.warning(f"Run registry disabled: {e}")

    handler = HANDLERS[args.command](repository)
    try:
        return handler.run(args)
    except ValidationError as e:
        logger.error(f"Invalid {args.command} input: {e}")
        return EXIT_INVALID
    except json.JSONDecodeError as e:
        logger.error(f"Malformed JSON: {e}")
        return EXIT_INVALID
    except DOMAIN_ERRORS as e:
        logger.error(e.message)
        return EXIT_FAILURE
    except (OSError, ValueError) as e:
        logger.error(str(e))
        return EXIT_FAILURE
    finally:
        close_repository()


if __name__ == "__main__":
    sys.exit(main())

"""Synthetic corpus generation."""

import argparse
import logging
from pathlib import Path
from typing import Optional

from src.cli.common import RunTracker
from src.cli.manifest import MANIFEST_FILE, RunManifest
from src.data.synthetic import SyntheticSpec, generate_synthetic_corpus, write_synthetic_corpus
from src.database.repository import RunRepository

logger = logging.getLogger(__name__)


class GenerateHandler:
    """Handles ``generate --spec F --out DIR``."""

    def __init__(self, repository: Optional[RunRepository] = None):
        self.tracker = RunTracker(repository)

    def run(self, args: argparse.Namespace) -> int:
        spec = SyntheticSpec.model_validate_json(Path(args.spec).read_text(encoding="utf-8"))
        out_dir = Path(args.out)
        self.tracker.start("generate", config=spec.model_dump(), seed=spec.seed, output_dir=str(out_dir))

        try:
            corpus = generate_synthetic_corpus(spec)
            paths = write_synthetic_corpus(corpus, out_dir)

            manifest = RunManifest(
                command="generate",
                config=spec.model_dump(mode="json"),
                corpus={name: str(paths[name]) for name in ("train", "dev", "test")},
                kb=str(paths["kb"]),
                seed=spec.seed,
            )
            for name, path in paths.items():
                manifest.add_artifact(name, path)
            manifest_path = manifest.write(out_dir / MANIFEST_FILE)
        except Exception:
            self.tracker.finish("failed")
            raise

        self.tracker.finish("finished", manifest_path=manifest_path)
        logger.info(f"Synthetic corpus written to {out_dir}")
        return 0

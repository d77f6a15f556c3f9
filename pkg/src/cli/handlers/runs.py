"""Run registry listing."""

import argparse
import logging
from typing import Optional

from src.database.repository import RunRepository

logger = logging.getLogger(__name__)


class RunsHandler:
    """Handles ``runs [--command C] [--limit N]``."""

    def __init__(self, repository: Optional[RunRepository] = None):
        self.repository = repository

    def run(self, args: argparse.Namespace) -> int:
        if self.repository is None:
            logger.warning("Run tracking is disabled (GKI_TRACK_RUNS=false)")
            return 0
        runs = self.repository.list_runs(command=args.run_command, limit=args.limit)
        if not runs:
            print("No runs recorded")
            return 0
        print(f"{'id':>5}  {'command':<10}{'status':<10}{'knowledge':<14}{'seed':>6}  {'started':<26}output")
        for run in runs:
            started = run.started_at.isoformat(timespec="seconds") if run.started_at else ""
            print(
                f"{run.id:>5}  {run.command:<10}{run.status:<10}{run.knowledge_mode or '-':<14}"
                f"{'' if run.seed is None else run.seed:>6}  {started:<26}{run.output_dir or ''}"
            )
        return 0

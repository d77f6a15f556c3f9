"""Run registry repository."""

import json
import logging
from contextlib import contextmanager
from datetime import datetime, timezone
from typing import Any, Dict, Generator, List, Optional

from sqlalchemy import create_engine, select
from sqlalchemy.orm import Session, selectinload, sessionmaker

from src.config import get_settings
from src.database.models import Base, EpochRecord, Run

logger = logging.getLogger(__name__)


class RunRepository:
    """Database repository for run bookkeeping."""

    def __init__(self, database_url: str):
        self.engine = create_engine(database_url, echo=False)
        self.session_factory = sessionmaker(self.engine, class_=Session, expire_on_commit=False)

    def init_db(self) -> None:
        """Initialize database tables."""
        Base.metadata.create_all(self.engine)
        logger.debug("Run registry tables initialized")

    def close(self) -> None:
        """Close database connections."""
        self.engine.dispose()

    @contextmanager
    def session(self) -> Generator[Session, None, None]:
        """Get database session context manager."""
        with self.session_factory() as session:
            try:
                yield session
                session.commit()
            except Exception:
                session.rollback()
                raise

    def start_run(
        self,
        command: str,
        config: Optional[Dict[str, Any]] = None,
        seed: Optional[int] = None,
        knowledge_mode: Optional[str] = None,
        output_dir: Optional[str] = None,
    ) -> int:
        """Register a new running command and return its id."""
        with self.session() as session:
            run = Run(
                command=command,
                seed=seed,
                knowledge_mode=knowledge_mode,
                config_json=json.dumps(config, sort_keys=True, default=str) if config is not None else None,
                output_dir=output_dir,
            )
            session.add(run)
            session.flush()
            return run.id

    def record_epoch(
        self,
        run_id: int,
        epoch: int,
        losses: Dict[str, float],
        dev_micro_f1: Optional[float] = None,
        dev_macro_f1: Optional[float] = None,
    ) -> None:
        """Store the mean losses and dev scores of an epoch."""
        with self.session() as session:
            session.add(
                EpochRecord(
                    run_id=run_id,
                    epoch=epoch,
                    l_raw=losses["l_raw"],
                    l_guide=losses["l_guide"],
                    l_sim=losses["l_sim"],
                    l_rdrop=losses["l_rdrop"],
                    total=losses["total"],
                    dev_micro_f1=dev_micro_f1,
                    dev_macro_f1=dev_macro_f1,
                )
            )

    def finish_run(
        self,
        run_id: int,
        status: str = "finished",
        manifest_path: Optional[str] = None,
        summary: Optional[Dict[str, Any]] = None,
    ) -> None:
        """Close a run with its final status."""
        with self.session() as session:
            run = session.get(Run, run_id)
            if run is None:
                raise ValueError(f"Run {run_id} not found")
            run.status = status
            run.finished_at = datetime.now(timezone.utc)
            if manifest_path is not None:
                run.manifest_path = manifest_path
            if summary is not None:
                run.summary = json.dumps(summary, sort_keys=True)

    def get_run(self, run_id: int) -> Optional[Run]:
        """Get a run with its epoch records."""
        with self.session() as session:
            result = session.execute(
                select(Run).where(Run.id == run_id).options(selectinload(Run.epochs))
            )
            return result.scalar_one_or_none()

    def list_runs(self, command: Optional[str] = None, limit: int = 20) -> List[Run]:
        """Most recent runs first."""
        with self.session() as session:
            query = select(Run).order_by(Run.id.desc()).limit(limit)
            if command:
                query = query.where(Run.command == command)
            result = session.execute(query)
            return list(result.scalars().all())


_repository: Optional[RunRepository] = None


def get_repository() -> Optional[RunRepository]:
    """Get or create the repository; None when run tracking is disabled."""
    global _repository
    settings = get_settings()
    if not settings.track_runs:
        return None
    if _repository is None:
        _repository = RunRepository(settings.database_url)
        _repository.init_db()
    return _repository


def close_repository() -> None:
    """Close repository connections."""
    global _repository
    if _repository:
        _repository.close()
        _repository = None

"""Run manifests: what a command was given and which artifacts it wrote."""

import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"


class ManifestError(Exception):
    """Exception for a declared artifact that is missing or unreadable."""

    def __init__(self, message: str, artifact: Optional[str] = None):
        self.message = message
        self.artifact = artifact
        super().__init__(message)


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class RunManifest(BaseModel):
    """Config echo, inputs and artifact paths of one command invocation."""

    command: str
    config: Dict[str, Any] = Field(default_factory=dict)
    corpus: Dict[str, str] = Field(default_factory=dict)
    kb: Optional[str] = None
    seed: Optional[int] = None
    knowledge_mode: Optional[str] = None
    checkpoint: Optional[str] = None
    report: Optional[str] = None
    artifacts: Dict[str, str] = Field(default_factory=dict)
    started_at: str = Field(default_factory=utc_now)
    finished_at: Optional[str] = None

    def add_artifact(self, name: str, path: Path) -> None:
        self.artifacts[name] = str(Path(path))

    def declared_paths(self) -> Dict[str, str]:
        paths = dict(self.artifacts)
        if self.checkpoint:
            paths["checkpoint"] = self.checkpoint
        if self.report:
            paths["report"] = self.report
        return paths

    def validate_artifacts(self) -> None:
        """Fail unless every declared artifact exists."""
        for name, path in self.declared_paths().items():
            if not Path(path).exists():
                raise ManifestError(f"Declared artifact {name} is missing: {path}", artifact=name)

    def write(self, path: Path) -> Path:
        """Validate artifacts, stamp the finish time and write the manifest as JSON."""
        self.validate_artifacts()
        self.finished_at = utc_now()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.info(f"Wrote manifest {path}")
        return path


def load_manifest(path: Path) -> RunManifest:
    return RunManifest.model_validate_json(Path(path).read_text(encoding="utf-8"))

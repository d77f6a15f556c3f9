"""Run registry."""

from src.database.models import Base, EpochRecord, Run
from src.database.repository import RunRepository, close_repository, get_repository

__all__ = [
    "Base",
    "Run",
    "EpochRecord",
    "RunRepository",
    "get_repository",
    "close_repository",
]

"""SQLAlchemy models of the run registry."""

from datetime import datetime
from typing import List, Optional

from sqlalchemy import DateTime, Float, ForeignKey, Integer, String, Text, func
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship


class Base(DeclarativeBase):
    """Base class for all models."""

    pass


class Run(Base):
    """One CLI invocation that produced artifacts."""

    __tablename__ = "runs"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    command: Mapped[str] = mapped_column(String(32), nullable=False, index=True)
    status: Mapped[str] = mapped_column(String(16), default="running")  # running / finished / failed
    knowledge_mode: Mapped[Optional[str]] = mapped_column(String(32), nullable=True)
    seed: Mapped[Optional[int]] = mapped_column(Integer, nullable=True)
    config_json: Mapped[Optional[str]] = mapped_column(Text, nullable=True)
    output_dir: Mapped[Optional[str]] = mapped_column(String(1024), nullable=True)
    manifest_path: Mapped[Optional[str]] = mapped_column(String(1024), nullable=True)
    summary: Mapped[Optional[str]] = mapped_column(Text, nullable=True)
    started_at: Mapped[datetime] = mapped_column(DateTime(timezone=True), server_default=func.now())
    finished_at: Mapped[Optional[datetime]] = mapped_column(DateTime(timezone=True), nullable=True)

    # Relationships
    epochs: Mapped[List["EpochRecord"]] = relationship(
        "EpochRecord", back_populates="run", cascade="all, delete-orphan", order_by="EpochRecord.epoch"
    )

    def __repr__(self) -> str:
        return f"<Run(id={self.id}, command={self.command}, status={self.status})>"


class EpochRecord(Base):
    """Mean losses and dev scores of one training epoch."""

    __tablename__ = "epoch_records"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    run_id: Mapped[int] = mapped_column(Integer, ForeignKey("runs.id", ondelete="CASCADE"), nullable=False)
    epoch: Mapped[int] = mapped_column(Integer, nullable=False)
    l_raw: Mapped[float] = mapped_column(Float, nullable=False)
    l_guide: Mapped[float] = mapped_column(Float, nullable=False)
    l_sim: Mapped[float] = mapped_column(Float, nullable=False)
    l_rdrop: Mapped[float] = mapped_column(Float, nullable=False)
    total: Mapped[float] = mapped_column(Float, nullable=False)
    dev_micro_f1: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    dev_macro_f1: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    created_at: Mapped[datetime] = mapped_column(DateTime(timezone=True), server_default=func.now())

    # Relationships
    run: Mapped["Run"] = relationship("Run", back_populates="epochs")

    def __repr__(self) -> str:
        return f"<EpochRecord(run_id={self.run_id}, epoch={self.epoch}, total={self.total:.4f})>"

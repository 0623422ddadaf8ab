"""SQLAlchemy ORM models for the results ledger."""

from __future__ import annotations

from datetime import datetime, timezone

UTC = timezone.utc

from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import DeclarativeBase, relationship


class Base(DeclarativeBase):
    pass


class RunLog(Base):
    """One CLI invocation and its outcome."""

    __tablename__ = "run_log"

    id = Column(Integer, primary_key=True, autoincrement=True)
    command = Column(String(20), nullable=False, index=True)
    argv = Column(Text, nullable=True)
    status = Column(String(20), nullable=False, default="running")  # "running" | "success" | "error"
    error_message = Column(Text, nullable=True)
    started_at = Column(DateTime, default=lambda: datetime.now(UTC))
    finished_at = Column(DateTime, nullable=True)
    results = relationship("ResultRow", back_populates="run", cascade="all, delete-orphan", order_by="ResultRow.id")

    def __repr__(self) -> str:
        return f"<RunLog id={self.id} command={self.command} status={self.status}>"


class ResultRow(Base):
    """One emitted result record."""

    __tablename__ = "result_rows"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("run_log.id"), nullable=False, index=True)
    command = Column(String(20), nullable=False)
    lambda_frozen = Column(Integer, nullable=False)
    drop_prob = Column(Float, nullable=False)
    passes = Column(Integer, nullable=False)
    # Derived sweep seeds use the full unsigned 64-bit range
    seed = Column(String(20), nullable=False)
    mode = Column(String(20), nullable=False)
    scale_mode = Column(String(20), nullable=False)
    batch_size = Column(Integer, nullable=True)
    accuracy = Column(Float, nullable=True)
    nll = Column(Float, nullable=True)
    mean_entropy = Column(Float, nullable=True)
    baseline_accuracy = Column(Float, nullable=True)
    relative_accuracy = Column(Float, nullable=True)
    flops_total = Column(Integer, nullable=True)
    gflops = Column(Float, nullable=True)
    wall_time_ms = Column(Float, nullable=True)
    id_mean_entropy = Column(Float, nullable=True)
    ood_mean_entropy = Column(Float, nullable=True)
    auroc = Column(Float, nullable=True)
    model = Column(Text, nullable=True)
    dataset = Column(Text, nullable=True)
    run = relationship("RunLog", back_populates="results")

    def __repr__(self) -> str:
        return f"<ResultRow {self.command} λ={self.lambda_frozen} p={self.drop_prob} K={self.passes}>"

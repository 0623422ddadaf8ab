"""Database repository: read/write operations for the results ledger."""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import asdict
from datetime import datetime, timezone

UTC = timezone.utc
from typing import Generator, Sequence

from sqlalchemy import create_engine
from sqlalchemy.orm import Session, sessionmaker

from ..harness.experiment import ResultRecord
from .models import Base, ResultRow, RunLog

logger = logging.getLogger(__name__)


class Repository:
    """Handles all ledger operations using SQLAlchemy."""

    def __init__(self, database_path: str) -> None:
        self._engine = create_engine(f"sqlite:///{database_path}", connect_args={"check_same_thread": False})
        # expire_on_commit=False lets ORM objects be used after session.close()
        self._Session = sessionmaker(bind=self._engine, expire_on_commit=False)

    def init_database(self) -> None:
        """Create all tables if they don't already exist."""
        Base.metadata.create_all(self._engine)
        logger.info("Results ledger initialised at %s", self._engine.url)

    def dispose(self) -> None:
        self._engine.dispose()

    @contextmanager
    def _session(self) -> Generator[Session, None, None]:
        session = self._Session()
        try:
            yield session
            session.commit()
        except Exception:
            session.rollback()
            raise
        finally:
            session.close()

    # ------------------------------------------------------------------ #
    # Write operations                                                      #
    # ------------------------------------------------------------------ #

    def start_run(self, command: str, argv: Sequence[str] | None = None) -> int:
        """Open a RunLog row and return its id."""
        with self._session() as session:
            run = RunLog(command=command, argv=" ".join(argv) if argv else None, status="running")
            session.add(run)
            session.flush()
            return run.id

    def finish_run(self, run_id: int, status: str, error_message: str | None = None) -> None:
        """Close a run.

        Args:
            status: "success" or "error".
            error_message: Optional description of the failure.
        """
        with self._session() as session:
            run = session.get(RunLog, run_id)
            if run is None:
                logger.warning("finish_run: no run with id %d", run_id)
                return
            run.status = status
            run.error_message = error_message
            run.finished_at = datetime.now(UTC)

    def save_records(self, run_id: int, records: Sequence[ResultRecord]) -> int:
        with self._session() as session:
            for record in records:
                values = asdict(record)
                values["seed"] = str(record.seed)
                session.add(ResultRow(run_id=run_id, **values))
        logger.debug("Ledger: stored %d record(s) for run %d", len(records), run_id)
        return len(records)

    # ------------------------------------------------------------------ #
    # Read operations                                                       #
    # ------------------------------------------------------------------ #

    def get_runs(self, command: str | None = None) -> list[RunLog]:
        with self._session() as session:
            query = session.query(RunLog)
            if command:
                query = query.filter_by(command=command)
            return query.order_by(RunLog.id).all()

    def get_records(self, run_id: int) -> list[ResultRecord]:
        """Rebuild the ResultRecords stored for a run, in emission order."""
        with self._session() as session:
            rows = session.query(ResultRow).filter_by(run_id=run_id).order_by(ResultRow.id).all()
        names = [name for name in ResultRecord.__dataclass_fields__]
        records = []
        for row in rows:
            values = {name: getattr(row, name) for name in names}
            values["seed"] = int(values["seed"])
            records.append(ResultRecord(**values))
        return records

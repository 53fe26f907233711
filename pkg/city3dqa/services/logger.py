"""Logging setup and the run ledger for CLI invocations."""

import logging
import time
import traceback
from datetime import datetime, timedelta

from sqlalchemy import JSON, Column, DateTime, Float, Index, Integer, String, Text, create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import declarative_base, sessionmaker

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

logger = logging.getLogger(__name__)


def configure_logging(level: str | int = "WARNING") -> None:
    """Configure the root logger to write to standard error.

    Args:
        level (str | int): Logging level name or number.
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


"""
SQL ledger of CLI runs. Any SQLAlchemy URL works; sqlite is the usual choice.
"""

Base = declarative_base()
_engines: dict[str, Engine] = {}


def get_engine(url: str) -> Engine:
    """Return a cached engine for `url`, creating the ledger table on first use."""
    engine = _engines.get(url)
    if engine is None:
        engine = create_engine(url, pool_pre_ping=True)
        Base.metadata.create_all(bind=engine)
        _engines[url] = engine
    return engine


class RunLog(Base):
    """One CLI subcommand invocation."""

    __tablename__ = "runs"
    __table_args__ = (Index("ix_runs_command_timestamp", "command", "timestamp"),)

    id = Column(Integer, primary_key=True)
    timestamp = Column(DateTime, default=datetime.utcnow, index=True, nullable=False)
    command = Column(String(64), index=True, nullable=False)
    parameters = Column(JSON, default=dict, nullable=False)
    status = Column(Integer, index=True, nullable=False)
    error = Column(Text)
    duration = Column(Float, nullable=False)

    @staticmethod
    def add_run(url: str, command: str, parameters: dict, status: int, start_time: float, error: str = "",
                retention_days: int = 90) -> None:
        """Add a ledger entry; failures are logged and never propagate.

        Args:
            url (str): SQLAlchemy database URL.
            command (str): Subcommand name.
            parameters (dict): JSON-serializable flags of the run.
            status (int): Exit code.
            start_time (float): `time.time()` when the run started.
            error (str, optional): Error message, if any. Defaults to "".
            retention_days (int, optional): Rows older than this are pruned. Defaults to 90.
        """
        try:
            session_factory = sessionmaker(bind=get_engine(url), expire_on_commit=False)
        except Exception:
            logger.warning("run ledger unavailable at %s", url)
            traceback.print_exc()
            return

        with session_factory() as session:
            try:
                RunLog.prune_old_runs(session, retention_days)
                session.add(
                    RunLog(
                        command=command[:64],
                        parameters=parameters,
                        status=status,
                        error=error,
                        duration=time.time() - start_time,
                    )
                )
                session.commit()
            except Exception:
                session.rollback()
                traceback.print_exc()

    @staticmethod
    def prune_old_runs(session, days: int = 90) -> int:
        """Delete ledger rows older than `days`.

        Args:
            session: Open SQLAlchemy session.
            days (int, optional): Age threshold in days. Defaults to 90.

        Returns:
            int: Number of deleted rows.
        """
        cutoff_date = datetime.utcnow() - timedelta(days=days)
        return session.query(RunLog).filter(RunLog.timestamp < cutoff_date).delete(synchronize_session=False)

"""Unit tests for logging setup and the SQL run ledger."""

import logging
import time
from datetime import datetime, timedelta

import pytest
from sqlalchemy.orm import sessionmaker

from city3dqa.services.logger import RunLog, configure_logging, get_engine


@pytest.fixture
def ledger_url(tmp_path):
    """A fresh sqlite ledger."""
    return f"sqlite:///{tmp_path / 'runs.db'}"


def _rows(url):
    with sessionmaker(bind=get_engine(url))() as session:
        return session.query(RunLog).order_by(RunLog.id).all()


def test_configure_logging_sets_root_level():
    """Validate level names, numbers and the fallback for unknown names."""
    root = logging.getLogger()
    configure_logging("debug")
    assert root.level == logging.DEBUG
    configure_logging(logging.ERROR)
    assert root.level == logging.ERROR
    configure_logging("bogus")
    assert root.level == logging.WARNING


def test_add_run_records_a_row(ledger_url):
    """Validate one invocation becomes one ledger row."""
    RunLog.add_run(ledger_url, "generate", {"seed": 0, "inputs": ["a.graph.json"]}, 0, time.time() - 1.5)
    (row,) = _rows(ledger_url)
    assert row.command == "generate"
    assert row.parameters == {"seed": 0, "inputs": ["a.graph.json"]}
    assert row.status == 0
    assert row.error == ""
    assert row.duration >= 1.5


def test_add_run_prunes_old_rows(ledger_url):
    """Validate rows past the retention window are deleted on the next write."""
    with sessionmaker(bind=get_engine(ledger_url))() as session:
        session.add(
            RunLog(
                timestamp=datetime.utcnow() - timedelta(days=100),
                command="ingest",
                parameters={},
                status=2,
                error="old",
                duration=0.1,
            )
        )
        session.commit()
    RunLog.add_run(ledger_url, "split", {}, 0, time.time(), retention_days=30)
    assert [r.command for r in _rows(ledger_url)] == ["split"]


def test_add_run_never_raises(caplog):
    """Validate an unusable ledger URL is logged and swallowed."""
    RunLog.add_run("nosuchdialect://nowhere", "eval", {}, 0, time.time())
    assert "run ledger unavailable" in caplog.text

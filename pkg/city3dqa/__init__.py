"""Package exports for the City-3DQA toolkit."""

__version__ = "0.1.0"

__all__ = ["dispatch", "Settings", "CliConfig"]


def __getattr__(name: str):
    if name == "dispatch":
        from .main import dispatch

        return dispatch
    if name in {"Settings", "CliConfig"}:
        from .config import CliConfig, Settings

        return {"Settings": Settings, "CliConfig": CliConfig}[name]
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

"""Service-layer exports and lazy imports."""

from .scene import Instance, SceneGraph

__all__ = ["Instance", "SceneGraph", "SceneIndex", "answer", "load_registry", "RunLog", "configure_logging"]


def __getattr__(name: str):
    if name == "SceneIndex":
        from .lookup import SceneIndex

        return SceneIndex
    if name == "answer":
        from .oracle import answer

        return answer
    if name == "load_registry":
        from .templates import load_registry

        return load_registry
    if name in {"RunLog", "configure_logging"}:
        from .logger import RunLog, configure_logging

        return {"RunLog": RunLog, "configure_logging": configure_logging}[name]
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

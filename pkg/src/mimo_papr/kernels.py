"""E-step backend selection: compiled extension if available, numpy otherwise."""
from __future__ import annotations

from . import _estep_py

try:
    from . import _estep as _compiled
except ImportError:  # pragma: no cover - depends on the build environment
    _compiled = None

HAVE_COMPILED = _compiled is not None


def resolve_backend(backend: str = "auto") -> str:
    if backend == "auto":
        return "compiled" if HAVE_COMPILED else "python"
    if backend == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled E-step kernel is not available")
        return "compiled"
    if backend == "python":
        return "python"
    raise ValueError(f"unknown backend {backend!r}")


def get_estep(backend: str = "auto"):
    """Return the fused E-step update callable for the given backend."""
    name = resolve_backend(backend)
    return _compiled.estep_update if name == "compiled" else _estep_py.estep_update

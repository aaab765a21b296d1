"""Beam-search kernel backends.

The compiled Cython kernel is preferred when the extension built; a pure
numpy implementation of the identical search semantics is the fallback.
Selection happens at import time and can be overridden per call or globally
with MBMSIM_FORCE_PYTHON=1.
"""

from __future__ import annotations

import os

from . import pyref

try:
    from . import _beamsearch as _compiled
except ImportError:  # pragma: no cover - depends on build environment
    _compiled = None

_FORCE_PYTHON = os.environ.get("MBMSIM_FORCE_PYTHON") == "1"


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _compiled is not None else ("python",)


def default_backend() -> str:
    if _compiled is not None and not _FORCE_PYTHON:
        return "cython"
    return "python"


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (default: best available)."""
    if name is None:
        name = default_backend()
    if name == "python":
        return pyref
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel not available; build the extension "
                               "or use backend='python'")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")

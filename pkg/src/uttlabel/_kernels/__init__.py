"""Kernel backend selection.

Two interchangeable implementations of the hot kernels exist: ``_core`` (a
compiled Cython extension) and ``_pyfallback`` (pure numpy).  At import time
the compiled one is preferred when present; ``UTTLABEL_BACKEND`` overrides
the choice (``compiled``, ``python``, or ``auto``).  Callers fetch the active
module through :func:`active` on every use, so :func:`use_backend` can swap
implementations mid-process (the benchmark relies on this).
"""

from __future__ import annotations

import os
from types import ModuleType

from uttlabel._kernels import _pyfallback

_BACKENDS: dict[str, ModuleType | None] = {"python": _pyfallback, "compiled": None}

try:
    from uttlabel._kernels import _core  # type: ignore[attr-defined]

    _BACKENDS["compiled"] = _core
except ImportError:
    pass


def available_backends() -> dict[str, bool]:
    """Map backend name to whether it can be activated."""
    return {name: mod is not None for name, mod in _BACKENDS.items()}


def _resolve(name: str) -> ModuleType:
    if name == "auto":
        compiled = _BACKENDS["compiled"]
        return compiled if compiled is not None else _pyfallback
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}")
    mod = _BACKENDS[name]
    if mod is None:
        raise RuntimeError(f"kernel backend {name!r} is not available")
    return mod


_active: ModuleType = _resolve(os.environ.get("UTTLABEL_BACKEND", "auto"))


def active() -> ModuleType:
    """The kernel module currently in use."""
    return _active


def backend_name() -> str:
    return _active.NAME


class _BackendSwitch:
    """Result of use_backend: the switch is already applied; entering the
    object as a context manager restores the previous backend on exit."""

    def __init__(self, previous: ModuleType, current: ModuleType) -> None:
        self._previous = previous
        self.module = current

    def __enter__(self) -> ModuleType:
        return self.module

    def __exit__(self, *exc_info) -> None:
        global _active
        _active = self._previous


def use_backend(name: str) -> _BackendSwitch:
    """Activate a backend by name ('python', 'compiled', or 'auto').

    The switch takes effect immediately; using the returned object as a
    context manager restores the previously active backend afterwards.
    """
    global _active
    previous = _active
    _active = _resolve(name)
    return _BackendSwitch(previous, _active)

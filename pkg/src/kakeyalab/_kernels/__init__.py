"""Kernel backend selection.

The compiled extension is used when it imported cleanly; setting the
environment variable KAKEYALAB_NO_EXT (to anything non-empty) forces the
numpy fallback, which the benchmark and the backend-equivalence tests use.
"""
import os

from . import fallback

if os.environ.get("KAKEYALAB_NO_EXT"):
    _impl = fallback
else:
    try:
        from . import _rastercore as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = fallback

BACKEND = _impl.BACKEND
tube_cells = _impl.tube_cells


def get_backend(name: str | None = None):
    """Return a kernel module by name ('cython' or 'python'); default active."""
    if name is None:
        return _impl
    if name == "python":
        return fallback
    if name == "cython":
        from . import _rastercore  # noqa: F811

        return _rastercore
    raise ValueError(f"unknown kernel backend {name!r}")

"""Kernel backend selection.

The hot loops exist twice: a numba ``@njit`` version and a vectorised numpy
version.  ``FHD_BACKEND=numpy`` forces the fallback; the default is numba
when it imports cleanly.
"""

import contextlib
import os

# TBB in this image is too old and warns on every import; prefer OpenMP
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp tbb workqueue")

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

_VALID = ("numba", "numpy")


def _initial_backend():
    name = os.environ.get("FHD_BACKEND", "numba").strip().lower()
    if name not in _VALID:
        raise ValueError(f"FHD_BACKEND must be one of {_VALID}, got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        return "numpy"
    return name


_state = {"backend": _initial_backend()}


def get_backend():
    return _state["backend"]


def set_backend(name):
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    _state["backend"] = name


@contextlib.contextmanager
def use_backend(name):
    """Temporarily switch backend (benchmarks and cross-backend tests)."""
    old = get_backend()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(old)


def set_threads(n=None):
    """Set the numba worker count; ``None`` reads FHD_THREADS, else all cores."""
    if n is None:
        env = os.environ.get("FHD_THREADS")
        n = int(env) if env else None
    if n is None or not HAS_NUMBA:
        return
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)

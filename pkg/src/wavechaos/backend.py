"""Kernel backend selection.

Hot inner loops (wavelet row filtering, Chua integration, convolution,
max pooling) exist twice: a numba ``@njit`` implementation and a pure-numpy
fallback with identical signatures. The active backend is chosen once, from
the ``WAVECHAOS_BACKEND`` environment variable:

    WAVECHAOS_BACKEND=numba   force the jitted kernels (error if numba missing)
    WAVECHAOS_BACKEND=numpy   force the pure-numpy kernels
    unset                     numba when importable, numpy otherwise

Both backends are deterministic run-to-run; they may differ from each other
in the last few ulps because summation order differs.
"""

import importlib
import os

_VALID = ("numba", "numpy")
_modules: dict[str, object] = {}
_active: str | None = None


def backend_name() -> str:
    """Resolve (and cache) the active backend name."""
    global _active
    if _active is None:
        env = os.environ.get("WAVECHAOS_BACKEND", "").strip().lower()
        if env:
            if env not in _VALID:
                raise ValueError(
                    f"WAVECHAOS_BACKEND must be one of {_VALID}, got {env!r}"
                )
            _active = env
        else:
            try:
                importlib.import_module("numba")
                _active = "numba"
            except ImportError:
                _active = "numpy"
    return _active


def kernels(name: str | None = None):
    """Return the kernel module for ``name`` (default: active backend)."""
    if name is None:
        name = backend_name()
    if name not in _modules:
        _modules[name] = importlib.import_module(f"wavechaos._kernels_{name}")
    return _modules[name]

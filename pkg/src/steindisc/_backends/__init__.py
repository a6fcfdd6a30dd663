"""Backend selection for the numeric hot paths.

Two interchangeable implementations exist: a numba-jitted one and a pure
numpy one.  ``STEINDISC_BACKEND`` picks one explicitly ("numba" or
"numpy"); by default numba is used when it imports cleanly and numpy
otherwise.
"""

import os
import warnings

KIND_IMQ = 0
KIND_SECH = 1

_FUNCTIONS = (
    "stein_feature_sums",
    "stein_feature_block",
    "stein_kernel_total",
    "rbm_gibbs",
)


def _load(name):
    if name == "numpy":
        from . import _numpy as impl
        return impl
    from . import _numba as impl
    return impl


_requested = os.environ.get("STEINDISC_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"STEINDISC_BACKEND={_requested!r} not understood; use 'numba' or 'numpy'"
    )

if _requested == "numpy":
    _impl = _load("numpy")
    _active = "numpy"
elif _requested == "numba":
    _impl = _load("numba")
    _active = "numba"
else:
    try:
        _impl = _load("numba")
        _active = "numba"
    except ImportError:  # pragma: no cover - depends on environment
        warnings.warn("numba unavailable, falling back to the numpy backend")
        _impl = _load("numpy")
        _active = "numpy"


def backend_name() -> str:
    """Name of the active backend ("numba" or "numpy")."""
    return _active


def get_backend(name=None):
    """Return the module implementing the hot kernels.

    ``name`` forces a specific implementation (used by the benchmark);
    None returns the active one.
    """
    if name is None:
        return _impl
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    return _load(name)


def __getattr__(name):
    if name in _FUNCTIONS:
        return getattr(_impl, name)
    raise AttributeError(name)

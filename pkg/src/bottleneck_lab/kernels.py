"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when importable; otherwise the
numpy implementations in ``_pykernels`` are used.  Set
``BOTTLENECK_LAB_PURE=1`` to force the numpy path.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("BOTTLENECK_LAB_PURE"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels

project_simplex = _impl.project_simplex
project_columns = _impl.project_columns
phi_value_grad = _impl.phi_value_grad
phi_descent = _impl.phi_descent
channel_rates = _impl.channel_rates
channel_objective = _impl.channel_objective
channel_descent = _impl.channel_descent


def backends():
    """Return the available kernel modules keyed by name."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:  # pragma: no cover
        pass
    return found

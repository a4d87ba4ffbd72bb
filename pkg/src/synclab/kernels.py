"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``SYNCLAB_PURE`` is set to a non-empty value other than
``0``, the pure-Python module is used. Both expose identical functions.
"""

import os

from . import _kernels_py

_force_pure = os.environ.get("SYNCLAB_PURE", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure backend requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

radial_poly = _impl.radial_poly
alpha = _impl.alpha
alpha_inverse = _impl.alpha_inverse
radial_orbit = _impl.radial_orbit
polar_iterate = _impl.polar_iterate
lorenz_rk4 = _impl.lorenz_rk4
lorenz_response_rk4 = _impl.lorenz_response_rk4


def backends():
    """Return ``{name: module}`` for every importable backend."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out

"""Kernel backend selection.

The compiled extension ``urq._kernels`` is used when it imports; otherwise the
numpy twins in ``urq._kernels_py`` are used.  Set ``URQ_PURE_PYTHON=1`` to force
the fallback.  Both backends return identical integers for identical inputs.
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("URQ_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def _impl(backend):
    if backend is None:
        backend = BACKEND
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled
    if backend == "python":
        return _kernels_py
    raise ValueError(f"unknown backend {backend!r}")


def _prep(points, phi, dither, delta):
    points = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    dither = np.ascontiguousarray(dither, dtype=np.float64)
    delta = np.ascontiguousarray(np.broadcast_to(np.asarray(delta, dtype=np.float64), dither.shape[-1:]))
    return points, phi, dither, delta


def codes(points, phi, dither, delta, bits, backend=None):
    """Codes of each row of ``points`` under (phi, dither, delta, bits)."""
    points, phi, dither, delta = _prep(points, phi, dither, delta)
    return _impl(backend).codes(points, phi, dither, delta, int(bits))


def first_mismatch(points, phi, dither, delta, bits, code, backend=None):
    """Number of leading symbols each point shares with ``code``."""
    points, phi, dither, delta = _prep(points, phi, dither, delta)
    code = np.ascontiguousarray(code, dtype=np.int64)
    return _impl(backend).first_mismatch(points, phi, dither, delta, int(bits), code)


def pair_first_mismatch(proj_a, proj_b, dither, delta, bits, backend=None):
    """Leading agreement length per row for pairs measured by per-row ensembles."""
    proj_a = np.ascontiguousarray(proj_a, dtype=np.float64)
    proj_b = np.ascontiguousarray(proj_b, dtype=np.float64)
    dither = np.ascontiguousarray(dither, dtype=np.float64)
    delta = np.ascontiguousarray(np.broadcast_to(np.asarray(delta, dtype=np.float64), proj_a.shape[1:]))
    return _impl(backend).pair_first_mismatch(proj_a, proj_b, dither, delta, int(bits))

"""Pure-Python (numpy) kernels, used when the compiled extension is unavailable.

The arithmetic mirrors ``_kernels.pyx`` operation for operation: projections
accumulate ``phi[m, 0] * x[0]`` first and add the remaining coordinates left
to right, the dither is added last, and the symbol is ``v - L * floor(v / L)``
with ``v = ceil(y / delta)``.  Keep the two files in step.
"""
import numpy as np

# measurements examined per vectorized step of the early-exit scans
_BLOCK = 8


def _symbols(y, delta, levels):
    v = np.ceil(y / delta)
    return (v - levels * np.floor(v / levels)).astype(np.int64)


def _project(points, phi_rows):
    # points (n, K), phi_rows (m, K) -> (n, m), fixed accumulation order
    s = points[:, 0:1] * phi_rows[:, 0]
    for k in range(1, points.shape[1]):
        s = s + points[:, k:k + 1] * phi_rows[:, k]
    return s


def codes(points, phi, dither, delta, bits):
    points = np.ascontiguousarray(points, dtype=np.float64)
    levels = float(1 << bits)
    if phi.shape[0] == 0:
        return np.empty((points.shape[0], 0), dtype=np.int64)
    return _symbols(_project(points, phi) + dither, delta, levels)


def first_mismatch(points, phi, dither, delta, bits, code):
    points = np.ascontiguousarray(points, dtype=np.float64)
    n, M = points.shape[0], phi.shape[0]
    levels = float(1 << bits)
    out = np.full(n, M, dtype=np.int64)
    alive = np.arange(n)
    for start in range(0, M, _BLOCK):
        if alive.size == 0:
            break
        stop = min(start + _BLOCK, M)
        sym = _symbols(
            _project(points[alive], phi[start:stop]) + dither[start:stop],
            delta[start:stop],
            levels,
        )
        bad = sym != code[start:stop]
        hit = bad.any(axis=1)
        out[alive[hit]] = start + bad[hit].argmax(axis=1)
        alive = alive[~hit]
    return out


def pair_first_mismatch(proj_a, proj_b, dither, delta, bits):
    levels = float(1 << bits)
    n, M = proj_a.shape
    if M == 0:
        return np.zeros(n, dtype=np.int64)
    bad = _symbols(proj_a + dither, delta, levels) != _symbols(proj_b + dither, delta, levels)
    return np.where(bad.any(axis=1), bad.argmax(axis=1), M).astype(np.int64)

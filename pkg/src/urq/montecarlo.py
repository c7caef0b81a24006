"""Monte Carlo estimators for the analytic consistency laws and bounds.

Every estimator is a Bernoulli frequency.  Trials are split into
``partitions`` contiguous chunks; chunk ``i`` draws from the substream
``(seed, i)``, so the result depends only on (arguments, seed, partitions)
and not on how many workers run the chunks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._seeding import check_seed, partition_sizes, substream
from .core import quantize_values
from .errors import DomainError, ParameterError

# trials drawn per vectorized batch inside a partition
_BATCH = 1 << 16


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    trials: int
    seed: int

    def z_score(self, target: float) -> float:
        """(mean - target) / stderr; 0 when both agree exactly and stderr is 0."""
        diff = self.mean - target
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / self.stderr


def _count(name, v, minimum=1):
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {v!r}")
    return int(v)


def _real(name, v, positive=False):
    v = float(v)
    if not math.isfinite(v) or v < 0 or (positive and v == 0):
        raise DomainError(f"{name} must be a finite {'positive' if positive else 'nonnegative'} real, got {v!r}")
    return v


def _run(count_fn, trials, seed, partitions, workers, batch=_BATCH):
    """Sum ``count_fn(rng, n)`` over the partitions and wrap it as an estimate."""
    trials = _count("trials", trials)
    seed = check_seed(seed)
    partitions = _count("partitions", partitions)
    sizes = partition_sizes(trials, partitions)

    def one(i):
        rng = substream(seed, i)
        n, hits = sizes[i], 0
        while n > 0:
            b = min(n, batch)
            hits += int(count_fn(rng, b))
            n -= b
        return hits

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(one, range(partitions)))
    else:
        hits = sum(one(i) for i in range(partitions))
    p = hits / trials
    return McEstimate(p, math.sqrt(p * (1.0 - p) / trials), trials, seed)


def mc_consistency(d, sigma, delta, K, bits=1, trials=100_000, seed=0, measurements=1,
                   partitions=1, workers=1) -> McEstimate:
    """Frequency with which x = 0 and x' = d e_1 get equal codes.

    Each trial draws a fresh ``measurements`` x K Gaussian matrix and dither;
    a trial succeeds when all ``measurements`` symbols agree.
    """
    d = _real("d", d)
    sigma = _real("sigma", sigma, positive=True)
    delta = _real("delta", delta, positive=True)
    K = _count("K", K)
    bits = _count("bits", bits)
    M = _count("measurements", measurements)

    def count(rng, n):
        phi = sigma * rng.standard_normal((n, M, K))
        w = rng.random((n, M)) * delta
        # <x, phi> = 0 and <x', phi> = d phi[..., 0]
        qa = quantize_values(w / delta, bits)
        qb = quantize_values((d * phi[:, :, 0] + w) / delta, bits)
        return np.count_nonzero(np.all(qa == qb, axis=1))

    # keep each batch's Gaussian block near 2**21 entries
    return _run(count, trials, seed, partitions, workers, batch=max(1024, (1 << 21) // (M * K)))


def mc_norm_tail(K, sigma, c_p, trials=100_000, seed=0, partitions=1, workers=1) -> McEstimate:
    """Frequency of ``||phi||_2 >= c_p`` for phi with i.i.d. Normal(0, sigma^2) entries."""
    K = _count("K", K)
    sigma = _real("sigma", sigma, positive=True)
    c_p = _real("c_p", c_p)

    def count(rng, n):
        phi = rng.standard_normal((n, K))
        return np.count_nonzero(sigma * np.sqrt(np.einsum("ij,ij->i", phi, phi)) >= c_p)

    return _run(count, trials, seed, partitions, workers)


def _straddles(y, r, delta):
    return np.ceil((y - r) / delta) != np.ceil((y + r) / delta)


def mc_ball_guarantee(d, epsilon, c_p, sigma, delta, K, trials=100_000, seed=0,
                      partitions=1, workers=1) -> McEstimate:
    """Frequency with which one measurement cannot certify two epsilon-balls inconsistent.

    Centers at 0 and d e_1.  A trial fails when ``||phi|| >= c_p``, when the
    projection of either ball (an interval of half-width ``c_p epsilon``
    around its center's measurement) crosses a quantization threshold, or
    when the two centers quantize to the same bit.  Otherwise every point of
    one ball quantizes differently from every point of the other.
    """
    d = _real("d", d)
    epsilon = _real("epsilon", epsilon)
    c_p = _real("c_p", c_p, positive=True)
    sigma = _real("sigma", sigma, positive=True)
    delta = _real("delta", delta, positive=True)
    K = _count("K", K)
    if not 2 * c_p * epsilon < delta:
        raise ParameterError(f"need 2 c_p epsilon < delta, got {2 * c_p * epsilon!r} >= {delta!r}")
    r = c_p * epsilon

    def count(rng, n):
        phi = sigma * rng.standard_normal((n, K))
        w = rng.random(n) * delta
        ya, yb = w, d * phi[:, 0] + w
        fail = np.sqrt(np.einsum("ij,ij->i", phi, phi)) >= c_p
        fail |= _straddles(ya, r, delta) | _straddles(yb, r, delta)
        fail |= quantize_values(ya / delta) == quantize_values(yb / delta)
        return np.count_nonzero(fail)

    return _run(count, trials, seed, partitions, workers)

"""Randomized measurement ensembles, the modulo scalar quantizer, and consistency.

A signal ``x`` in R^K is measured as ``y = Phi x + w`` and each measurement is
quantized independently with the non-monotonic quantizer
``Q(v) = ceil(v) mod 2**B`` applied to ``y / delta``.  Two signals are
consistent when they produce the same code.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from ._seeding import check_seed, substream
from .errors import DomainError, ParameterError

ENSEMBLE_FORMAT = "urq-ensemble"
ENSEMBLE_FORMAT_VERSION = 1

# substream indices under the ensemble seed
_PHI_STREAM = 0
_DITHER_STREAM = 1


def _count(name, value, minimum=1):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _positive(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be a positive real, got {value!r}") from None
    if not math.isfinite(value) or value <= 0:
        raise ParameterError(f"{name} must be a positive real, got {value!r}")
    return value


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def as_signal(x, K=None):
    """Validate ``x`` as a finite length-K real vector and return it as float64."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ParameterError(f"signal must be a non-empty 1-D vector, got shape {x.shape}")
    if K is not None and x.size != K:
        raise ParameterError(f"signal length {x.size} does not match ensemble dimension K={K}")
    if not np.all(np.isfinite(x)):
        raise DomainError("signal entries must be finite")
    return x


@dataclass(frozen=True, eq=False)
class MeasurementEnsemble:
    """The randomized acquisition system (Phi, dither, delta, bits).

    ``delta`` is a scalar for the uniform-precision system used throughout the
    analysis; an M-vector of per-measurement precisions is also accepted.
    ``seed`` is ``None`` for ensembles not generated from a seed (hand-built
    ones); those cannot be serialized.
    """

    phi: np.ndarray
    dither: np.ndarray
    delta: float | np.ndarray
    bits: int = 1
    sigma: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        phi = _frozen(self.phi)
        dither = _frozen(self.dither)
        if phi.ndim != 2 or phi.shape[1] < 1:
            raise ParameterError(f"phi must be an M x K matrix with K >= 1, got shape {phi.shape}")
        if dither.shape != (phi.shape[0],):
            raise ParameterError(f"dither must have length M={phi.shape[0]}, got shape {dither.shape}")
        if np.ndim(self.delta) == 0:
            delta = _positive("delta", self.delta)
            upper = np.full(phi.shape[0], delta)
        else:
            delta = _frozen(self.delta)
            if delta.shape != (phi.shape[0],) or not np.all(np.isfinite(delta)) or np.any(delta <= 0):
                raise ParameterError("per-measurement delta must be a positive M-vector")
            upper = delta
        if not np.all(np.isfinite(phi)):
            raise ParameterError("phi must be finite")
        if np.any(dither < 0) or np.any(dither > upper):
            raise ParameterError("every dither entry must lie in [0, delta]")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "dither", dither)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "bits", _count("bits", self.bits))
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))
        if self.seed is not None:
            object.__setattr__(self, "seed", check_seed(self.seed))

    @property
    def M(self) -> int:
        return self.phi.shape[0]

    @property
    def K(self) -> int:
        return self.phi.shape[1]

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def uniform_delta(self) -> bool:
        return np.ndim(self.delta) == 0

    def truncate(self, M: int) -> MeasurementEnsemble:
        """The first ``M`` measurements (``0 <= M <= self.M``).

        Seeded ensembles are prefix-stable, so this equals ``make_ensemble``
        with the smaller M and the same seed.
        """
        M = _count("M", M, minimum=0)
        if M > self.M:
            raise ParameterError(f"cannot truncate an ensemble of {self.M} measurements to {M}")
        delta = self.delta if self.uniform_delta else self.delta[:M]
        return MeasurementEnsemble(self.phi[:M], self.dither[:M], delta, self.bits, self.sigma, self.seed)

    def with_delta(self, delta) -> MeasurementEnsemble:
        """Same Phi and unit dither, rescaled to a new precision ``delta``.

        The dither is stored as ``u * delta`` with ``u`` uniform on [0, 1), so
        changing delta keeps ``u`` and therefore the dither's relative position.
        """
        if not self.uniform_delta:
            raise ParameterError("with_delta requires a uniform-precision ensemble")
        delta = _positive("delta", delta)
        unit = self.dither / self.delta
        return MeasurementEnsemble(self.phi, unit * delta, delta, self.bits, self.sigma, self.seed)

    def __eq__(self, other):
        if not isinstance(other, MeasurementEnsemble):
            return NotImplemented
        return (
            self.bits == other.bits
            and self.sigma == other.sigma
            and self.seed == other.seed
            and np.array_equal(self.phi, other.phi)
            and np.array_equal(self.dither, other.dither)
            and np.array_equal(np.asarray(self.delta), np.asarray(other.delta))
        )

    __hash__ = None

    # -- serialization: parameters only, the matrices are regenerated --

    def to_dict(self) -> dict:
        if self.seed is None:
            raise ParameterError("only seeded ensembles can be serialized")
        if not self.uniform_delta:
            raise ParameterError("per-measurement precision ensembles cannot be serialized")
        return {
            "format": ENSEMBLE_FORMAT,
            "version": ENSEMBLE_FORMAT_VERSION,
            "M": self.M,
            "K": self.K,
            "sigma": self.sigma,
            "delta": self.delta,
            "bits": self.bits,
            "seed": self.seed,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, d: dict) -> MeasurementEnsemble:
        if d.get("format") != ENSEMBLE_FORMAT:
            raise ParameterError(f"not an ensemble file (format={d.get('format')!r})")
        if d.get("version") != ENSEMBLE_FORMAT_VERSION:
            raise ParameterError(f"unsupported ensemble file version {d.get('version')!r}")
        try:
            return make_ensemble(d["M"], d["K"], d["sigma"], d["delta"], d["bits"], d["seed"])
        except KeyError as exc:
            raise ParameterError(f"ensemble file is missing field {exc.args[0]!r}") from None

    @classmethod
    def load(cls, path) -> MeasurementEnsemble:
        return cls.from_dict(json.loads(Path(path).read_text()))


def make_ensemble(M, K, sigma, delta, bits=1, seed=0) -> MeasurementEnsemble:
    """Draw a measurement ensemble from ``seed``.

    Phi has i.i.d. Normal(0, sigma^2) entries and the dither is i.i.d. uniform
    on [0, delta].  Phi and the dither come from two independent substreams of
    the seed, each filled measurement by measurement, so the first M rows do
    not depend on how many rows are drawn.

    ``delta`` may be an M-vector of per-measurement precisions; the dither is
    then uniform on [0, delta_m] for each m.
    """
    M = _count("M", M)
    K = _count("K", K)
    sigma = _positive("sigma", sigma)
    bits = _count("bits", bits)
    seed = check_seed(seed)
    if np.ndim(delta) == 0:
        delta = _positive("delta", delta)
    else:
        delta = np.asarray(delta, dtype=np.float64)
        if delta.shape != (M,):
            raise ParameterError(f"per-measurement delta must have length M={M}")
    phi = sigma * substream(seed, _PHI_STREAM).standard_normal((M, K))
    dither = substream(seed, _DITHER_STREAM).random(M) * delta
    return MeasurementEnsemble(phi, dither, delta, bits, sigma, seed)


def quantize_values(v, bits=1):
    """Vectorized ``ceil(v) mod 2**bits`` with results in {0, ..., 2**bits - 1}."""
    v = np.asarray(v, dtype=np.float64)
    bits = _count("bits", bits)
    if not np.all(np.isfinite(v)):
        raise DomainError("quantizer input must be finite")
    levels = float(1 << bits)
    c = np.ceil(v)
    return (c - levels * np.floor(c / levels)).astype(np.int64)


def quantize_scalar(v, bits=1) -> int:
    """``ceil(v) mod 2**bits``; exact integers map to ``v mod 2**bits``."""
    v = float(v)
    if not math.isfinite(v):
        raise DomainError(f"quantizer input must be finite, got {v!r}")
    return int(quantize_values(v, bits))


def measure(ens: MeasurementEnsemble, x) -> np.ndarray:
    """Dithered measurements ``y_m = <x, phi_m> + w_m``."""
    x = as_signal(x, ens.K)
    s = ens.phi[:, 0] * x[0]
    for k in range(1, ens.K):
        s = s + ens.phi[:, k] * x[k]
    return s + ens.dither


@dataclass(frozen=True, eq=False)
class QuantizedCode:
    """An M-vector of quantizer symbols in {0, ..., 2**bits - 1}."""

    symbols: np.ndarray
    bits: int = 1

    def __post_init__(self):
        bits = _count("bits", self.bits)
        s = np.array(self.symbols, dtype=np.int64, copy=True).reshape(-1)
        if np.any(s < 0) or np.any(s >= (1 << bits)):
            raise ParameterError(f"symbols must lie in [0, {(1 << bits) - 1}]")
        s.setflags(write=False)
        object.__setattr__(self, "symbols", s)
        object.__setattr__(self, "bits", bits)

    def __len__(self):
        return self.symbols.size

    def __eq__(self, other):
        if not isinstance(other, QuantizedCode):
            return NotImplemented
        return self.bits == other.bits and np.array_equal(self.symbols, other.symbols)

    __hash__ = None


def quantize(ens: MeasurementEnsemble, x) -> QuantizedCode:
    """Code of ``x``: ``Q(measure(ens, x) / delta)`` symbol by symbol."""
    y = measure(ens, x)
    return QuantizedCode(quantize_values(y / np.asarray(ens.delta), ens.bits), ens.bits)


def quantize_many(ens: MeasurementEnsemble, points) -> np.ndarray:
    """Codes of every row of ``points`` as an (n, M) int64 array."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != ens.K:
        raise ParameterError(f"points have dimension {points.shape[1]}, ensemble expects K={ens.K}")
    return kernels.codes(points, ens.phi, ens.dither, ens.delta, ens.bits)


def consistency(q: QuantizedCode, q2: QuantizedCode) -> tuple[bool, int]:
    """(codes equal, Hamming distance in symbols)."""
    if len(q) != len(q2) or q.bits != q2.bits:
        raise ParameterError("codes must have equal length and bit depth")
    hamming = int(np.count_nonzero(q.symbols != q2.symbols))
    return hamming == 0, hamming


# -- signal models ----------------------------------------------------------


def _uniform_ball(rng, n, dim, radius=1.0):
    v = rng.standard_normal((n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (radius * rng.random(n) ** (1.0 / dim))[:, None]


@dataclass(frozen=True)
class UnitBall:
    """All x in R^K with ||x||_2 <= 1."""

    K: int

    def __post_init__(self):
        _count("K", self.K)

    @property
    def ambient_dim(self) -> int:
        return self.K

    def contains(self, x, tol=1e-12) -> bool:
        return bool(np.linalg.norm(x) <= 1 + tol)

    def sample(self, rng, n) -> np.ndarray:
        return _uniform_ball(rng, n, self.K)


@dataclass(frozen=True)
class Sparse:
    """K-sparse vectors in R^N with ||x||_2 <= 1."""

    N: int
    K: int

    def __post_init__(self):
        _count("N", self.N)
        _count("K", self.K)
        if self.K > self.N:
            raise ParameterError(f"sparsity K={self.K} exceeds ambient dimension N={self.N}")

    @property
    def ambient_dim(self) -> int:
        return self.N

    def contains(self, x, tol=1e-12) -> bool:
        return bool(np.count_nonzero(x) <= self.K and np.linalg.norm(x) <= 1 + tol)

    def sample(self, rng, n) -> np.ndarray:
        out = np.zeros((n, self.N))
        coeffs = _uniform_ball(rng, n, self.K)
        for i in range(n):
            out[i, rng.choice(self.N, self.K, replace=False)] = coeffs[i]
        return out


@dataclass(frozen=True, eq=False)
class UnionOfSubspaces:
    """Signals in one of L K-dimensional subspaces of R^N, ||x||_2 <= 1.

    ``bases`` holds L orthonormal N x K matrices.  Planning only needs L, so
    ``bases`` may be omitted; sampling requires it.
    """

    N: int
    K: int
    L: int
    bases: tuple | None = None

    def __post_init__(self):
        _count("N", self.N)
        _count("K", self.K)
        _count("L", self.L)
        if self.K > self.N:
            raise ParameterError(f"subspace dimension K={self.K} exceeds N={self.N}")
        if self.bases is not None:
            bases = tuple(_frozen(b) for b in self.bases)
            if len(bases) != self.L:
                raise ParameterError(f"expected {self.L} bases, got {len(bases)}")
            for b in bases:
                if b.shape != (self.N, self.K) or not np.allclose(b.T @ b, np.eye(self.K), atol=1e-10):
                    raise ParameterError("each basis must be an orthonormal N x K matrix")
            object.__setattr__(self, "bases", bases)

    @property
    def ambient_dim(self) -> int:
        return self.N

    def contains(self, x, tol=1e-9) -> bool:
        if self.bases is None:
            raise ParameterError("membership needs the subspace bases")
        x = np.asarray(x, dtype=np.float64)
        if np.linalg.norm(x) > 1 + tol:
            return False
        return any(np.linalg.norm(x - b @ (b.T @ x)) <= tol for b in self.bases)

    def sample(self, rng, n) -> np.ndarray:
        if self.bases is None:
            raise ParameterError("sampling needs the subspace bases")
        which = rng.integers(self.L, size=n)
        coeffs = _uniform_ball(rng, n, self.K)
        return np.stack([self.bases[j] @ c for j, c in zip(which, coeffs)])


@dataclass(frozen=True, eq=False)
class SimilarSignal:
    """Signals within distance D of a known signal ``center``."""

    center: np.ndarray
    D: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(as_signal(self.center)))
        object.__setattr__(self, "D", _positive("D", self.D))

    @property
    def K(self) -> int:
        return self.center.size

    @property
    def ambient_dim(self) -> int:
        return self.K

    def contains(self, x, tol=1e-12) -> bool:
        return bool(np.linalg.norm(np.asarray(x) - self.center) <= self.D + tol)

    def sample(self, rng, n) -> np.ndarray:
        return self.center + _uniform_ball(rng, n, self.K, self.D)


SignalModel = UnitBall | Sparse | UnionOfSubspaces | SimilarSignal

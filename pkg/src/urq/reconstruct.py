"""Brute-force consistent reconstruction and the worst-case error decay experiment.

Reconstruction here is exhaustive search over a finite candidate set: any
candidate whose code equals the observed code is a consistent estimate.  The
search cost is the candidate count, so grids are only practical for K <= 3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import kernels
from ._seeding import check_seed, derive_seed, substream
from .analytics import TheoremParams, corollary_distance
from .core import (
    MeasurementEnsemble,
    QuantizedCode,
    UnitBall,
    _count,
    _positive,
    make_ensemble,
    quantize,
    quantize_many,
)
from .errors import ParameterError

# substream indices under an experiment seed
_SIGNAL_STREAM = 0
_ENSEMBLE_STREAM = 1
_CLOUD_STREAM = 2
_PAIR_STREAM = 3


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """A finite set of candidate signals, one per row of ``points``.

    ``kind`` is ``"grid"`` (all points of the lattice ``h Z^K`` in the unit
    ball) or ``"cloud"`` (``n`` uniform draws from a signal model).
    """

    points: np.ndarray
    kind: str
    h: float | None = None
    seed: int | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ParameterError("a candidate set needs at least one K-dimensional point")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def K(self) -> int:
        return self.points.shape[1]

    @classmethod
    def grid(cls, K, h) -> CandidateSet:
        """Lattice points ``h Z^K`` inside the closed unit ball."""
        K = _count("K", K)
        h = _positive("h", h)
        n = int(math.floor(1.0 / h + 1e-9))
        if (2 * n + 1) ** K > 50_000_000:
            raise ParameterError(f"grid of spacing {h} in {K} dimensions is too large")
        axis = h * np.arange(-n, n + 1)
        pts = np.stack(np.meshgrid(*([axis] * K), indexing="ij"), axis=-1).reshape(-1, K)
        pts = pts[np.einsum("ij,ij->i", pts, pts) <= 1.0 + 1e-12]
        return cls(pts, "grid", h=h)

    @classmethod
    def cloud(cls, model, n, seed) -> CandidateSet:
        """``n`` independent uniform draws from ``model``."""
        n = _count("n", n)
        seed = check_seed(seed)
        return cls(model.sample(substream(seed, _CLOUD_STREAM), n), "cloud", seed=seed)


def consistent_reconstruct(ens: MeasurementEnsemble, q: QuantizedCode, candidates: CandidateSet):
    """(first candidate whose code equals ``q`` or None, number of consistent candidates)."""
    if candidates.K != ens.K:
        raise ParameterError(f"candidates have dimension {candidates.K}, ensemble expects K={ens.K}")
    if len(q) != ens.M or q.bits != ens.bits:
        raise ParameterError("code length and bit depth must match the ensemble")
    agree = kernels.first_mismatch(candidates.points, ens.phi, ens.dither, ens.delta, ens.bits, q.symbols)
    ok = np.flatnonzero(agree >= ens.M)
    if ok.size == 0:
        return None, 0
    return candidates.points[ok[0]].copy(), int(ok.size)


# -- worst consistent distance over random pairs ---------------------------


@dataclass(frozen=True)
class WorstCase:
    """Sampled worst and mean distance over consistent pairs.

    ``consistent_pairs == 0`` flags that no pair was consistent; worst and
    mean are then reported as 0.
    """

    M: int
    worst: float
    mean: float
    consistent_pairs: int
    pairs_tested: int

    @property
    def any_consistent(self) -> bool:
        return self.consistent_pairs > 0


def _pair_agreement(K, sigma, delta, bits, M, a, b, seed, shared):
    if M == 0:
        return np.zeros(a.shape[0], dtype=np.int64)
    if shared:
        ens = make_ensemble(M, K, sigma, delta, bits, derive_seed(seed, _ENSEMBLE_STREAM))
        ca, cb = quantize_many(ens, a), quantize_many(ens, b)
        bad = ca != cb
        return np.where(bad.any(axis=1), bad.argmax(axis=1), M)
    rng = substream(seed, _ENSEMBLE_STREAM)
    out = np.empty(a.shape[0], dtype=np.int64)
    step = max(1, (1 << 20) // (M * K))
    for s in range(0, a.shape[0], step):
        e = min(s + step, a.shape[0])
        phi = sigma * rng.standard_normal((e - s, M, K))
        w = rng.random((e - s, M)) * delta
        pa = np.einsum("nmk,nk->nm", phi, a[s:e])
        pb = np.einsum("nmk,nk->nm", phi, b[s:e])
        out[s:e] = kernels.pair_first_mismatch(pa, pb, w, delta, bits)
    return out


def worst_consistent_curve(K, sigma, delta, bits, M_list, model, n_pairs, seed, shared=False):
    """``worst_consistent_distance`` for every M in ``M_list`` on one set of pairs.

    Each pair is measured once with ``max(M_list)`` measurements and is
    consistent at M when its first M symbols agree, so the consistent sets
    are nested in M.
    """
    K = _count("K", K)
    sigma = _positive("sigma", sigma)
    delta = _positive("delta", delta)
    bits = _count("bits", bits)
    n_pairs = _count("n_pairs", n_pairs)
    seed = check_seed(seed)
    M_list = [_count("M", m, minimum=0) for m in np.atleast_1d(M_list)]
    if model.ambient_dim != K:
        raise ParameterError(f"model dimension {model.ambient_dim} does not match K={K}")
    rng = substream(seed, _PAIR_STREAM)
    a, b = model.sample(rng, n_pairs), model.sample(rng, n_pairs)
    dist = np.linalg.norm(a - b, axis=1)
    agree = _pair_agreement(K, sigma, delta, bits, max(M_list), a, b, seed, shared)
    out = []
    for M in M_list:
        dm = dist[agree >= M]
        if dm.size == 0:
            out.append(WorstCase(M, 0.0, 0.0, 0, n_pairs))
        else:
            out.append(WorstCase(M, float(dm.max()), float(dm.mean()), int(dm.size), n_pairs))
    return out


def worst_consistent_distance(K, sigma, delta, bits, M, model, n_pairs, seed, shared=False) -> WorstCase:
    """Largest and mean distance among sampled model pairs that share a code.

    ``shared=False`` measures each pair with its own fresh ensemble;
    ``shared=True`` uses one ensemble for all pairs.
    """
    return worst_consistent_curve(K, sigma, delta, bits, [M], model, n_pairs, seed, shared)[0]


# -- decay experiment ------------------------------------------------------


@dataclass(frozen=True)
class DecayRow:
    M: int
    worst: float
    mean: float
    quantile: float
    guarantee_d: float
    pairs_tested: int
    resolved_fraction: float


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of ln(worst) = intercept + slope * M over the pre-floor rows."""

    points: int
    slope: float = math.nan
    intercept: float = math.nan
    r2: float = math.nan
    decay_ratio: float = math.nan  # exp(2K slope): shrink factor per 2K measurements

    @property
    def ok(self) -> bool:
        return self.points >= 3


@dataclass(frozen=True)
class DecayReport:
    K: int
    P0: float
    delta_rule: str
    rows: list[DecayRow] = field(default_factory=list)
    fit: DecayFit | None = None

    @property
    def floor_index(self) -> int:
        """Index of the first row where fewer than half the trials found a consistent candidate."""
        for i, r in enumerate(self.rows):
            if r.resolved_fraction < 0.5:
                return i
        return len(self.rows)

    @property
    def dominance_fraction(self) -> float:
        """Fraction of rows whose (1 - P0)-quantile lies at or below the guarantee."""
        return float(np.mean([r.quantile <= r.guarantee_d for r in self.rows]))

    @property
    def max_dominance_fraction(self) -> float:
        """Fraction of rows whose sampled maximum lies at or below the guarantee."""
        return float(np.mean([r.worst <= r.guarantee_d for r in self.rows]))


def fit_decay(rows, K) -> DecayFit:
    """Fit ln(worst) against M over rows with a positive worst; needs >= 3 points."""
    pts = [(r.M, r.worst) for r in rows if r.worst > 0]
    if len(pts) < 3:
        return DecayFit(len(pts))
    m, w = np.array(pts, dtype=np.float64).T
    res = stats.linregress(m, np.log(w))
    return DecayFit(len(pts), float(res.slope), float(res.intercept), float(res.rvalue**2),
                    float(math.exp(2 * K * res.slope)))


def _delta_rule(rule):
    """('fixed', delta) or ('corollary', None) from a float or a string."""
    if isinstance(rule, str):
        if rule == "corollary":
            return "corollary", None
        if rule.startswith("fixed:"):
            return "fixed", _positive("delta", rule[6:])
        raise ParameterError(f"unknown delta rule {rule!r}; use 'fixed:<delta>' or 'corollary'")
    return "fixed", _positive("delta", rule)


def decay_experiment(K, M_list, trials, seed, delta_rule, model=None, h=0.01, P0=0.05,
                     params: TheoremParams | None = None, bits=1, sigma=None) -> DecayReport:
    """Worst consistent reconstruction error against M.

    Each trial draws a signal x from ``model`` (the unit ball by default) and
    a fresh ensemble, and scans the grid ``CandidateSet.grid(K, h)``; its
    error at M is the largest distance from x to a candidate whose first M
    symbols match x's.  Rows report the maximum over trials (``worst``), the
    mean over trials that found a consistent candidate, and the (1 - P0)
    quantile over all trials, with trials that found none counted as 0 (the
    sampled supremum is a lower estimate).  ``guarantee_d`` is the distance
    beyond which all pairs are inconsistent with probability 1 - P0.

    ``delta_rule`` is a fixed precision (``0.2`` or ``"fixed:0.2"``, with
    sigma = 1 unless given) or ``"corollary"``: at each M the precision is
    ``d(M) r2 / sqrt(K)`` with sigma = 1/sqrt(K), the design the guarantee
    assumes.

    The fit of ln(worst) against M uses the rows before the resolution
    floor, the first row where under half the trials found a consistent
    candidate.
    """
    K = _count("K", K)
    trials = _count("trials", trials)
    seed = check_seed(seed)
    M_list = [_count("M", m) for m in M_list]
    if not M_list or any(b <= a for a, b in zip(M_list, M_list[1:])):
        raise ParameterError("M_list must be non-empty and strictly increasing")
    model = UnitBall(K) if model is None else model
    if model.ambient_dim != K:
        raise ParameterError(f"model dimension {model.ambient_dim} does not match K={K}")
    params = TheoremParams.concrete(K) if params is None else params
    kind, fixed_delta = _delta_rule(delta_rule)
    guarantee = [corollary_distance(K, M, P0, params.c_o, params.c_r) for M in M_list]
    if kind == "fixed":
        sigma = 1.0 if sigma is None else _positive("sigma", sigma)
        deltas = None
    else:
        sigma = 1.0 / math.sqrt(K)
        deltas = [g * params.r2 / math.sqrt(K) for g in guarantee]

    cands = CandidateSet.grid(K, h)
    pts = cands.points
    Mmax = M_list[-1]
    rng = substream(seed, _SIGNAL_STREAM)
    xs = model.sample(rng, trials)
    err = np.zeros((trials, len(M_list)))
    resolved = np.zeros((trials, len(M_list)), dtype=bool)
    for t in range(trials):
        base = make_ensemble(Mmax, K, sigma, 1.0, bits, derive_seed(seed, _ENSEMBLE_STREAM, t))
        dist = np.linalg.norm(pts - xs[t], axis=1)
        if deltas is None:
            ens = base.with_delta(fixed_delta)
            code = quantize(ens, xs[t])
            agree = kernels.first_mismatch(pts, ens.phi, ens.dither, ens.delta, bits, code.symbols)
            for j, M in enumerate(M_list):
                ok = agree >= M
                if ok.any():
                    resolved[t, j] = True
                    err[t, j] = dist[ok].max()
        else:
            for j, M in enumerate(M_list):
                ens = base.truncate(M).with_delta(deltas[j])
                code = quantize(ens, xs[t])
                agree = kernels.first_mismatch(pts, ens.phi, ens.dither, ens.delta, bits, code.symbols)
                ok = agree >= M
                if ok.any():
                    resolved[t, j] = True
                    err[t, j] = dist[ok].max()

    rows = []
    for j, M in enumerate(M_list):
        col, res = err[:, j], resolved[:, j]
        rows.append(DecayRow(
            M=M,
            worst=float(col.max()),
            mean=float(col[res].mean()) if res.any() else 0.0,
            quantile=float(np.quantile(col, 1.0 - P0)),
            guarantee_d=guarantee[j],
            pairs_tested=trials * cands.count,
            resolved_fraction=float(res.mean()),
        ))
    report = DecayReport(K, P0, "corollary" if kind == "corollary" else f"fixed:{fixed_delta!r}", rows)
    fit = fit_decay(rows[: report.floor_index], K)
    return DecayReport(K, P0, report.delta_rule, rows, fit)

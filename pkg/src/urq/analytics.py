"""Closed-form consistency probabilities, failure bounds, and rate planners.

Notation: ``d`` is the distance between two signals, ``sigma`` the standard
deviation of the measurement entries, ``delta`` the quantizer precision and
``bits`` its depth.  The projected distance ``l = |<x - x', phi>|`` is
half-normal with scale ``sigma * d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc, gammaln, ndtr

from .core import SimilarSignal, Sparse, UnionOfSubspaces, UnitBall
from .errors import DomainError, ParameterError, VacuousBoundError

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
# sigma * d / period below which the real-space sum replaces the Fourier series
_FOURIER_MIN_RATIO = 0.1


def _nonneg(name, v):
    v = float(v)
    if not v >= 0 or not math.isfinite(v):
        raise DomainError(f"{name} must be a finite nonnegative real, got {v!r}")
    return v


def _pos(name, v):
    v = float(v)
    if not v > 0 or not math.isfinite(v):
        raise DomainError(f"{name} must be a finite positive real, got {v!r}")
    return v


def _bits(bits):
    if isinstance(bits, bool) or int(bits) != bits or bits < 1:
        raise DomainError(f"bits must be an integer >= 1, got {bits!r}")
    return int(bits)


def _prob(name, p):
    p = float(p)
    if not 0 < p < 1:
        raise DomainError(f"{name} must lie in (0, 1), got {p!r}")
    return p


def _decay_base(c_r):
    c_r = float(c_r)
    if not 0.5 < c_r < 1:
        raise DomainError(f"c_r must lie in (1/2, 1), got {c_r!r}")
    return c_r


# -- single-measurement consistency given the projected distance ------------


def triangle_consistency(l, delta):
    """P(q = q' | l) for the binary quantizer: a triangle wave of period 2*delta."""
    return triangle_consistency_multibit(l, delta, 1)


def triangle_consistency_multibit(l, delta, bits):
    """P(q = q' | l) for the 2**bits-level modulo quantizer.

    Period ``2**bits * delta``: a unit-height triangle of half-width delta
    around each multiple of the period, zero elsewhere.  Accepts arrays.
    """
    delta = _pos("delta", delta)
    bits = _bits(bits)
    l_arr = np.asarray(l, dtype=np.float64)
    if np.any(~(l_arr >= 0)):
        raise DomainError("projected distance must be nonnegative")
    period = (1 << bits) * delta
    r = np.mod(l_arr, period)
    dist = np.minimum(r, period - r)
    out = np.clip(1.0 - dist / delta, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def projected_distance_pdf(l, d, sigma):
    """Half-normal density of ``l`` with scale ``sigma * d`` (variance (sigma d)^2)."""
    s = _pos("sigma", sigma) * _pos("d", d)
    l = np.asarray(l, dtype=np.float64)
    return np.where(l >= 0, SQRT_2_OVER_PI * np.exp(-0.5 * (l / s) ** 2) / s, 0.0)


# -- consistency probability given the signal distance ----------------------


def _upper_partial(b, s):
    # E[(X - b)_+] for X ~ Normal(0, s^2)
    z = b / s
    return s * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) - b * float(ndtr(-z))


def _series_direct(s, delta, period):
    # Real-space form: the hat functions at multiples of the period averaged
    # against the (mirrored) Gaussian; each hat is a second difference of ramps.
    kmax = int(math.ceil((delta + 40.0 * s) / period)) + 1
    total = 0.0
    for k in range(-kmax, kmax + 1):
        c = k * period
        total += _upper_partial(c - delta, s) - 2.0 * _upper_partial(c, s) + _upper_partial(c + delta, s)
    return total / delta


def _series_fourier(s, delta, bits, tol):
    levels = 1 << bits
    if bits == 1:
        # 1/2 + sum_i exp(-(pi (2i+1) s / (sqrt2 delta))^2) / (pi (i + 1/2))^2
        a = math.pi * s / (math.sqrt(2.0) * delta)
        total, i = 0.5, 0
        while True:
            term = math.exp(-(a * (2 * i + 1)) ** 2) / (math.pi * (i + 0.5)) ** 2
            total += term
            if term < tol:
                return total
            i += 1
    # general depth: mean 1/L plus cosine harmonics of the period L*delta
    a = math.sqrt(2.0) * math.pi * s / (levels * delta)
    total, n = 1.0 / levels, 1
    while True:
        x = n / levels
        sinc2 = (math.sin(math.pi * x) / (math.pi * x)) ** 2
        term = 2.0 / levels * sinc2 * math.exp(-(a * n) ** 2)
        total += term
        if math.exp(-(a * n) ** 2) * 2.0 / levels < tol:
            return total
        n += 1


def consistency_prob_series(d, sigma, delta, tol=1e-15, bits=1):
    """P(q = q' | d): probability one measurement of two signals at distance d agrees.

    For ``bits=1`` this is ``1/2 + sum_i exp(-(pi(2i+1) sigma d / (sqrt2 delta))^2)
    / (pi(i+1/2))^2``, summed until a term drops below ``tol``.  When
    ``sigma*d`` is small against the quantizer period that series needs many
    terms, so the equivalent real-space sum (its Poisson dual) is used
    instead; both are exact.  ``d = 0`` returns exactly 1.
    """
    d = _nonneg("d", d)
    sigma = _pos("sigma", sigma)
    delta = _pos("delta", delta)
    bits = _bits(bits)
    tol = _pos("tol", tol)
    if d == 0:
        return 1.0
    s = sigma * d
    period = (1 << bits) * delta
    if s < 1e-6 * delta:
        # only the first flank 1 - l/delta carries mass; the rest is below exp(-5e11)
        return 1.0 - SQRT_2_OVER_PI * s / delta
    if s / period < _FOURIER_MIN_RATIO:
        return _series_direct(s, delta, period)
    return _series_fourier(s, delta, bits, tol)


def _gauss_exponent(d, sigma, delta):
    return (math.pi * sigma * d / (math.sqrt(2.0) * delta)) ** 2


@dataclass(frozen=True)
class ConsistencyBounds:
    """Exact single-measurement consistency and its three closed-form bounds.

    ``lower_linear`` is the raw ``1 - sqrt(2/pi) sigma d / delta`` and goes
    below 1/2 (even negative) for large d; it is still a valid lower bound.
    """

    exact_series: float
    lower_first_term: float
    lower_linear: float
    upper: float


def consistency_bounds(d, sigma, delta) -> ConsistencyBounds:
    d = _nonneg("d", d)
    sigma = _pos("sigma", sigma)
    delta = _pos("delta", delta)
    g = math.exp(-_gauss_exponent(d, sigma, delta))
    return ConsistencyBounds(
        exact_series=consistency_prob_series(d, sigma, delta),
        lower_first_term=0.5 + 4.0 / math.pi**2 * g,
        lower_linear=1.0 - SQRT_2_OVER_PI * sigma * d / delta,
        upper=0.5 + 0.5 * g,
    )


# -- epsilon-ball pairs ----------------------------------------------------


def norm_tail(K, sigma, c_p):
    """P(||phi||_2 >= c_p) for phi in R^K with i.i.d. Normal(0, sigma^2) entries.

    This is the regularized upper incomplete gamma ``Q(K/2, c_p^2 / (2 sigma^2))``,
    the chi-square tail with K degrees of freedom at ``(c_p/sigma)^2``.
    """
    if isinstance(K, bool) or int(K) != K or K < 1:
        raise DomainError(f"K must be a positive integer, got {K!r}")
    sigma = _pos("sigma", sigma)
    c_p = _pos("c_p", c_p)
    return float(gammaincc(K / 2.0, c_p**2 / (2.0 * sigma**2)))


def ball_pair_failure_bound(d, epsilon, c_p, sigma, delta, K):
    """Upper bound on P(some points of the two epsilon-balls agree on one measurement).

    ``min(1, P(q=q'|d) + 2 c_p epsilon / delta + P(||phi|| >= c_p))``, valid
    when ``2 c_p epsilon < delta``.
    """
    d = _nonneg("d", d)
    epsilon = _nonneg("epsilon", epsilon)
    c_p = _pos("c_p", c_p)
    delta = _pos("delta", delta)
    if not 2 * c_p * epsilon < delta:
        raise ParameterError(f"need 2 c_p epsilon < delta, got {2 * c_p * epsilon!r} >= {delta!r}")
    total = consistency_prob_series(d, sigma, delta) + 2 * c_p * epsilon / delta + norm_tail(K, sigma, c_p)
    return min(1.0, total)


# -- the all-pairs guarantee ------------------------------------------------


@dataclass(frozen=True)
class TheoremParams:
    """Design constants of the all-pairs guarantee on the unit ball.

    The design picks ``sigma = 1/sqrt(K)``, ``epsilon = delta r1 / (2 c_p)`` and
    ``delta = d r2 / sqrt(K)``.  Then ``c_o = 6 c_p / (r1 r2)`` and the
    per-measurement decay base is bounded by the sum of
    ``1/2 + exp(-pi^2 / (2 r2^2)) / 2``, ``r1`` and the norm tail
    ``Q(K/2, c_p^2 K / 2)``.

    ``c_r`` may be declared explicitly (e.g. a round 3/4); it must not be
    smaller than that sum.
    """

    K: int
    c_p: float = 2.0
    r1: float = 0.2
    r2: float = 1.0
    declared_c_r: float | None = None

    def __post_init__(self):
        if isinstance(self.K, bool) or int(self.K) != self.K or self.K < 1:
            raise ParameterError(f"K must be a positive integer, got {self.K!r}")
        for name in ("c_p", "r1", "r2"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be a positive real, got {v!r}")
        if self.declared_c_r is not None:
            if not self.declared_c_r >= self.c_r_terms_sum:
                raise ParameterError(
                    f"declared c_r={self.declared_c_r} is below the value {self.c_r_terms_sum} "
                    "supported by (c_p, r1, r2)"
                )

    @classmethod
    def concrete(cls, K) -> TheoremParams:
        """c_p = 2, epsilon = delta/20, delta = d/sqrt(K): c_o = 60 with c_r = 3/4."""
        return cls.from_design(K, c_p=2.0, eps_over_delta=1 / 20, delta_sqrtK_over_d=1.0, c_r=0.75)

    @classmethod
    def from_design(cls, K, c_p, eps_over_delta, delta_sqrtK_over_d, c_r=None) -> TheoremParams:
        """Parameters from the design ratios epsilon/delta and delta*sqrt(K)/d."""
        r1 = 2.0 * c_p * eps_over_delta
        r2 = delta_sqrtK_over_d
        return cls(K, c_p, r1, r2, c_r)

    @property
    def c_o(self) -> float:
        return 6.0 * self.c_p / (self.r1 * self.r2)

    @property
    def sigma(self) -> float:
        return 1.0 / math.sqrt(self.K)

    @property
    def c_r_terms(self) -> tuple[float, float, float]:
        """(pair term, ball-width term, norm-tail term); each is nonnegative."""
        pair = 0.5 + 0.5 * math.exp(-(math.pi**2) / (2.0 * self.r2**2))
        return pair, float(self.r1), norm_tail(self.K, self.sigma, self.c_p)

    @property
    def c_r_terms_sum(self) -> float:
        return math.fsum(self.c_r_terms)

    @property
    def c_r(self) -> float:
        return self.c_r_terms_sum if self.declared_c_r is None else float(self.declared_c_r)

    def _check_decay(self):
        if not self.c_r < 1:
            raise VacuousBoundError(f"c_r = {self.c_r} >= 1: the bound does not decay with M")


@dataclass(frozen=True)
class FailureBound:
    """``value = exp(log_value)``; ``value`` may exceed 1 (then it is vacuous)."""

    log_value: float
    value: float
    c_o: float
    c_r: float


def log_failure_bound(K, d, M, c_o, c_r):
    """``2K ln(c_o sqrt(K) / d) + M ln(c_r)``."""
    return 2 * K * math.log(c_o * math.sqrt(K) / d) + M * math.log(c_r)


def theorem_failure_bound(params: TheoremParams, M, d) -> FailureBound:
    """Bound ``(c_o sqrt(K) / d)^(2K) c_r^M`` on P(some pair at distance >= d is consistent).

    Evaluated in log space.  Raises ``VacuousBoundError`` when c_r >= 1.
    """
    params._check_decay()
    if isinstance(M, bool) or int(M) != M or M < 0:
        raise ParameterError(f"M must be a nonnegative integer, got {M!r}")
    d = _pos("d", d)
    if d > 2:
        raise DomainError(f"d={d} exceeds the diameter 2 of the unit ball")
    lv = log_failure_bound(params.K, d, int(M), params.c_o, params.c_r)
    value = math.exp(lv) if lv < 709.0 else math.inf
    return FailureBound(lv, value, params.c_o, params.c_r)


def corollary_distance(K, M, P0, c_o, c_r):
    """Distance beyond which every pair is inconsistent with probability >= 1 - P0.

    ``c_o sqrt(K) P0^(-1/(2K)) c_r^(M/(2K))``.
    """
    if isinstance(K, bool) or int(K) != K or K < 1:
        raise DomainError(f"K must be a positive integer, got {K!r}")
    if M < 0:
        raise DomainError(f"M must be nonnegative, got {M!r}")
    P0 = _prob("P0", P0)
    c_o = _pos("c_o", c_o)
    c_r = _decay_base(c_r)
    log_d = math.log(c_o) + 0.5 * math.log(K) + (M * math.log(c_r) - math.log(P0)) / (2 * K)
    return math.exp(log_d)


def rate_overhead(c_r):
    """Measurements per dimension per bit of an orthonormal-basis quantizer: 2 ln2 / ln(1/c_r)."""
    return 2.0 * math.log(2.0) / -math.log(_decay_base(c_r))


def required_rate(B, K, P0, c_o, c_r) -> int:
    """Smallest M matching a B-bit orthonormal-basis quantizer's worst case 2^-(B-1) sqrt(K).

    ``M >= 2K (B ln2 + ln(c_o / (2 P0^(1/(2K))))) / ln(1/c_r)``.
    """
    B = _bits(B)
    if isinstance(K, bool) or int(K) != K or K < 1:
        raise DomainError(f"K must be a positive integer, got {K!r}")
    P0 = _prob("P0", P0)
    c_o = _pos("c_o", c_o)
    c_r = _decay_base(c_r)
    rhs = 2 * K * (B * math.log(2.0) + math.log(c_o / 2.0) - math.log(P0) / (2 * K)) / -math.log(c_r)
    return max(1, _ceil(rhs))


def _ceil(x):
    # guard against ceil(n + 1e-15) jumping to n + 1 from rounding in the log algebra
    n = round(x)
    return int(n) if abs(x - n) <= 1e-9 * max(1.0, abs(x)) else int(math.ceil(x))


# -- covering numbers and rate planning -------------------------------------


def log_binom(n, k):
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def covering_log(model, epsilon):
    """Natural log of the covering-number bound of ``model`` by epsilon-balls.

    Unit ball ``K ln(3/eps)``; K-sparse ``ln C(N,K) + K ln(3/eps)``; union of
    L subspaces ``ln L + K ln(3/eps)``; D-ball ``K ln(3D/eps)``.
    """
    epsilon = _pos("epsilon", epsilon)
    if isinstance(model, UnitBall):
        return model.K * math.log(3.0 / epsilon)
    if isinstance(model, Sparse):
        return log_binom(model.N, model.K) + model.K * math.log(3.0 / epsilon)
    if isinstance(model, UnionOfSubspaces):
        return math.log(model.L) + model.K * math.log(3.0 / epsilon)
    if isinstance(model, SimilarSignal):
        return model.K * math.log(3.0 * model.D / epsilon)
    raise ParameterError(f"unknown signal model {model!r}")


def scaling_dim(model) -> int:
    """Dimension used in the sigma and delta scalings: N for sparse/union models, else K."""
    if isinstance(model, (Sparse, UnionOfSubspaces)):
        return model.N
    return model.K


@dataclass(frozen=True)
class RatePlan:
    model: object
    d: float
    P0: float
    c_o: float
    c_r: float
    epsilon: float
    covering_log: float
    required_M: int


def plan_rate(model, d, P0, params: TheoremParams) -> RatePlan:
    """Measurements sufficient for worst-case distortion d with probability >= 1 - P0.

    The union bound runs over pairs of covering balls, so the requirement is
    ``M >= (2 ln C_eps + ln(1/P0)) / ln(1/c_r)`` with
    ``eps = 3 d / (c_o sqrt(n))`` and n the scaling dimension of the model.
    """
    d = _pos("d", d)
    P0 = _prob("P0", P0)
    params._check_decay()
    c_r = _decay_base(params.c_r)
    eps = 3.0 * d / (params.c_o * math.sqrt(scaling_dim(model)))
    clog = covering_log(model, eps)
    rhs = (2.0 * clog - math.log(P0)) / -math.log(c_r)
    return RatePlan(model, d, P0, params.c_o, c_r, eps, clog, max(1, _ceil(rhs)))

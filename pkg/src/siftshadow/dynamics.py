"""Co-norms, orbit strings, and Lyapunov/Birkhoff/Kingman estimators."""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from ._accel import kernels
from .errors import BadParameters, NotPeriodic, SingularMatrix
from .maps import (
    EXACT_ORBIT_THRESHOLD,
    MapSystem,
    ShiftPoint,
    Word,
    bm_matrices,
    rational_proxy,
)

TOL_EVAL = 1e-10
TOL_PER = 1e-9
TOL_MONO = 1e-9


def conorm(m) -> float:
    """Minimum norm min_{|v|=1} |m v| of an invertible linear map.

    Equals 1/|m^-1| (operator norms).  Scalars are treated as 1x1 maps.
    """
    if isinstance(m, numbers.Real):
        v = abs(float(m))
        if v == 0.0 or not math.isfinite(v):
            raise SingularMatrix("scalar map is singular or non-finite")
        return v
    a = np.asarray(m, dtype=float)
    if a.ndim == 0 or a.size == 1:
        return conorm(float(a.reshape(())))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise BadParameters(f"conorm needs a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SingularMatrix("matrix has non-finite entries")
    smin = float(np.linalg.svd(a, compute_uv=False)[-1])
    if smin <= 0.0:
        raise SingularMatrix("matrix is singular")
    return smin


def log_conorm(m) -> float:
    return math.log(conorm(m))


@dataclass(frozen=True)
class OrbitString:
    """An ordered orbit segment (x, f(x), ..., f^k(x)) with cached increments.

    ``increments[i]`` is the log co-norm of the derivative at the i-th point;
    ``points`` holds x..f^{k-1}(x) and ``end`` is f^k(x).
    """

    base: object
    length: int
    increments: np.ndarray
    points: object
    end: object

    def mean_increment(self) -> float:
        return float(self.increments.mean())


def orbit_string(sys: MapSystem, x, k: int) -> OrbitString:
    """Iterate the map k times, recording points and log co-norm increments."""
    if k < 1:
        raise BadParameters("orbit length k must be >= 1")
    if sys.domain == "shift":
        return _orbit_string_shift(sys, x, k)

    x = float(x) % 1.0
    if sys.exact_step is not None and k > EXACT_ORBIT_THRESHOLD:
        q = rational_proxy(x) if sys.params.get("proxy_seed") else Fraction(x)
        points = np.empty(k)
        for i in range(k):
            points[i] = float(q)
            q = sys.exact_step(q)
        end = float(q)
        derivs = np.array([sys.deriv(float(p)) for p in points])
    elif sys.kernel_code is not None:
        params = np.array(sys.kernel_params, dtype=float)
        points, derivs, end = kernels.orbit_circle(sys.kernel_code, params, x, k)
    else:
        points = np.empty(k)
        derivs = np.empty(k)
        y = x
        for i in range(k):
            points[i] = y
            derivs[i] = sys.deriv(y)
            y = sys.step(y)
        end = y
    if np.any(derivs == 0.0) or not np.all(np.isfinite(derivs)):
        raise SingularMatrix(f"singular derivative along orbit of {sys.name}")
    increments = np.log(np.abs(derivs))
    return OrbitString(base=x, length=k, increments=increments, points=points, end=end)


def _orbit_string_shift(sys: MapSystem, p: ShiftPoint, k: int) -> OrbitString:
    S0, S1 = sys.params["S0"], sys.params["S1"]
    per_symbol = (log_conorm(S0), log_conorm(S1))
    syms = p.word.symbols(p.pos, k)
    increments = np.array([per_symbol[s] for s in syms])
    points = [ShiftPoint(p.word, p.pos + i) for i in range(k)]
    return OrbitString(
        base=p, length=k, increments=increments, points=points, end=ShiftPoint(p.word, p.pos + k)
    )


@dataclass(frozen=True)
class ExponentEstimate:
    """A finite-horizon minimal-exponent estimate (nats per iterate).

    ``limsup_proxy`` is the max over the trailing window of 8 horizons,
    standing in for the limsup a finite computation cannot take.
    """

    value: float
    horizon: int
    scheme: str
    limsup_proxy: Optional[float] = None


def _prefix_log_conorms(sys: MapSystem, x, horizon: int) -> np.ndarray:
    """log co-norm of the composed derivative over the first k steps, k=1..horizon."""
    if sys.domain == "circle":
        s = orbit_string(sys, x, horizon)
        return np.cumsum(s.increments)
    syms = x.word.symbols(x.pos, horizon)
    S0, S1 = sys.params["S0"], sys.params["S1"]
    return kernels.cocycle_prefix_logconorms(syms, S0, S1, horizon)


def min_lyapunov_estimate(sys: MapSystem, x, horizon: int) -> ExponentEstimate:
    """Birkhoff-style estimate (1/h) log conorm(D_x f^h).

    Matrix products are renormalized internally, so long horizons never
    overflow.  For one-dimensional maps the co-norm is multiplicative and the
    estimate is exactly the mean increment.
    """
    if horizon < 1:
        raise BadParameters("horizon must be >= 1")
    L = _prefix_log_conorms(sys, x, horizon)
    ks = np.arange(1, horizon + 1)
    rates = L / ks
    proxy = float(rates[max(0, horizon - 8) :].max())
    return ExponentEstimate(
        value=float(rates[-1]), horizon=horizon, scheme="birkhoff", limsup_proxy=proxy
    )


def kingman_doubling_average(
    sys: MapSystem, x, t1: int, levels: int, blocks: int
) -> list[ExponentEstimate]:
    """Subadditive averages along doubling time scales t_l = t1 * 2^l.

    All levels read the same orbit window of ``t1 * 2^(levels-1) * blocks``
    steps: level l averages over ``blocks * 2^(levels-1-l)`` windows of length
    t_l.  Halving the block count as the scale doubles makes the level
    sequence nondecreasing (up to roundoff) by supermultiplicativity of the
    co-norm, mirroring the limit comparison in the underlying ergodic lemma.
    """
    if t1 < 1 or levels < 1 or blocks < 1:
        raise BadParameters("t1, levels, blocks must all be >= 1")
    total = t1 * 2 ** (levels - 1) * blocks
    if sys.domain == "circle":
        inc = orbit_string(sys, x, total).increments
        syms = S0 = S1 = None
    else:
        syms = x.word.symbols(x.pos, total)
        S0, S1 = sys.params["S0"], sys.params["S1"]
        inc = None
    out = []
    for lev in range(levels):
        t = t1 * 2**lev
        count = blocks * 2 ** (levels - 1 - lev)
        if sys.domain == "circle":
            phis = inc[: count * t].reshape(count, t).sum(axis=1)
        else:
            phis = kernels.cocycle_window_logconorms(syms, S0, S1, t, count)
        value = float(phis.mean() / t)
        out.append(ExponentEstimate(value=value, horizon=t, scheme="kingman_doubling"))
    return out


def check_periodic(sys: MapSystem, p, period: int, tol: float = TOL_PER):
    """Raise NotPeriodic unless f^period(p) returns to p within tol."""
    if period < 1:
        raise BadParameters("period must be >= 1")
    ret = sys.iterate(p, period)
    d = sys.distance(ret, p)
    if d > tol:
        raise NotPeriodic(p, period, d, tol)


def expansion_indicator_over_set(
    sys: MapSystem, points, tol_per: float = TOL_PER
) -> float:
    """Infimum over supplied periodic points of the one-period Birkhoff
    average of log co-norm; a positive value certifies nonuniform expansion
    on the finite sample."""
    if not points:
        raise BadParameters("need at least one (point, period) pair")
    best = math.inf
    for p, tau in points:
        check_periodic(sys, p, tau, tol_per)
        avg = orbit_string(sys, p, tau).mean_increment()
        best = min(best, avg)
    return best


def periodic_word_exponent(alpha: float, gamma: float, cycle: tuple[int, ...]) -> float:
    """Minimal Lyapunov exponent of the cocycle along a periodic word:
    (1/p) log of the smallest absolute eigenvalue of the period matrix."""
    S0, S1 = bm_matrices(alpha, gamma)
    P = np.eye(2)
    for s in cycle:
        P = (S0 if s == 0 else S1) @ P
    eig = np.linalg.eigvals(P)
    return float(math.log(min(abs(eig))) / len(cycle))


def scan_bm_cocycle(
    alphas, gammas, max_period: int = 6, window: int = 12
) -> list[dict]:
    """Scan the cocycle family for the tension the family is known for:
    positive exponents along all short periodic words next to small
    window growth rates.  Evidence only, no certification.
    """
    records = []
    for alpha in alphas:
        for gamma in gammas:
            per_min = math.inf
            for p in range(1, max_period + 1):
                for bits in range(2**p):
                    cycle = tuple((bits >> i) & 1 for i in range(p))
                    per_min = min(per_min, periodic_word_exponent(alpha, gamma, cycle))
            S0, S1 = bm_matrices(alpha, gamma)
            win_min = math.inf
            for bits in range(2**window):
                syms = np.array([(bits >> i) & 1 for i in range(window)], dtype=np.int64)
                L = kernels.cocycle_prefix_logconorms(syms, S0, S1, window)
                win_min = min(win_min, float((L / np.arange(1, window + 1)).min()))
            records.append(
                {
                    "alpha": float(alpha),
                    "gamma": float(gamma),
                    "min_periodic_exponent": per_min,
                    "min_window_rate": win_min,
                }
            )
    return records


def random_word(rng: np.random.Generator, length: int) -> Word:
    """I.i.d. fair-coin word of the given cycle length (repeats beyond it)."""
    cycle = tuple(int(s) for s in rng.integers(0, 2, size=length))
    return Word((), cycle)

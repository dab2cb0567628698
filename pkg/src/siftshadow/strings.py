"""The combinatorial calculus on real strings: gamma-strings, quasi-expanding
strings, Pliss sifting, obstructions, gap classification, and well-adapted
rescalings.

Conventions: a prefix length n means (a_0, ..., a_{n-1}); quasi-expansion is
always checked from the right end (every suffix average meets the level).
Closed inequalities throughout — ties count as satisfying >=.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import kernels
from .errors import BadParameters, HypothesesNotMet, NotGammaString, NotQuasiExpanding

EQ_TOL = 1e-12
RECHECK_TOL = 1e-10


def _as_values(values) -> np.ndarray:
    a = np.ascontiguousarray(values, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise BadParameters("string values must be a nonempty 1-d sequence")
    return a


@dataclass(frozen=True)
class RealString:
    """A finite real string (a_0, ..., a_{m-1}) with |a_i| <= bound."""

    values: np.ndarray
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.values))
        if self.bound <= 0:
            raise BadParameters("bound H must be positive")
        if float(np.abs(self.values).max()) > self.bound + EQ_TOL:
            raise BadParameters("string value exceeds the declared bound H")

    def __len__(self) -> int:
        return int(self.values.size)

    def mean(self) -> float:
        return float(self.values.mean())

    def prefix(self, n: int) -> "RealString":
        return RealString(self.values[:n], self.bound)

    def to_json_array(self) -> list:
        return [float(v) for v in self.values]


@dataclass(frozen=True)
class PositiveString:
    """A string of positive reals with an attached gamma in (0,1)."""

    values: np.ndarray
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.values))
        if np.any(self.values <= 0.0):
            raise BadParameters("positive string must have strictly positive entries")
        if not 0.0 < self.gamma < 1.0:
            raise BadParameters("gamma must lie in (0,1)")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class SiftResult:
    """Pliss sift output: the prefix lengths n_1 < ... < n_k whose prefixes
    are gamma_prime-quasi-expanding, plus the Pliss constants."""

    indices: np.ndarray
    gamma: float
    gamma_prime: float
    pliss_constant: float
    pliss_threshold: int

    def count(self) -> int:
        return int(self.indices.size)


def is_gamma_string(s: RealString, gamma: float) -> bool:
    """True iff the full mean is >= gamma."""
    return s.mean() >= gamma


def is_quasi_expanding(s: RealString, lam: float) -> bool:
    """True iff every suffix average from the right end is >= lam."""
    return bool(kernels.quasi_expanding(s.values, lam))


def pliss_constants(gamma: float, gamma_prime: float, bound: float) -> tuple[float, int]:
    """The density c = (gamma - gamma')/(H - gamma') and threshold N = ceil(1/c)
    from the standard proof of the Pliss lemma."""
    if not 0.0 < gamma_prime < gamma:
        raise BadParameters("need 0 < gamma_prime < gamma")
    if bound <= gamma_prime:
        raise BadParameters("need bound H > gamma_prime")
    c = (gamma - gamma_prime) / (bound - gamma_prime)
    return c, math.ceil(1.0 / c)


def pliss_sift(s: RealString, gamma: float, gamma_prime: float) -> SiftResult:
    """Extract every prefix length whose prefix is gamma'-quasi-expanding.

    For a gamma-string of length m the count is at least max(1, m*c) with
    c = (gamma - gamma')/(H - gamma'): the drift-adjusted partial sums gain
    at most H - gamma' at each running-maximum step but end at least
    m*(gamma - gamma') high.
    """
    c, N = pliss_constants(gamma, gamma_prime, s.bound)
    if not is_gamma_string(s, gamma):
        raise NotGammaString(
            f"mean {s.mean():.6g} < gamma {gamma:.6g}; not a gamma-string"
        )
    flags = kernels.pliss_prefix_flags(s.values, gamma_prime)
    indices = np.nonzero(flags)[0] + 1
    return SiftResult(
        indices=indices,
        gamma=gamma,
        gamma_prime=gamma_prime,
        pliss_constant=c,
        pliss_threshold=N,
    )


def is_obstruction(s: RealString, n: int, rho: float) -> bool:
    """True iff the string has length >= n and no prefix of length in
    [n, len] is a rho-string; vacuously false on shorter strings."""
    if n < 1:
        raise BadParameters("n must be >= 1")
    return bool(kernels.obstruction(s.values, n, rho))


def classify_gaps(s: RealString, gamma2bar: float, gamma3: float) -> list[str]:
    """Label each gap between consecutive sifted indices "short" or
    "obstruction".

    A gap of length at most N_{gamma2bar,gamma3} is short; otherwise the
    segment between the indices must be an (N, gamma2bar)-obstruction — the
    dichotomy is a theorem, so anything else raises an internal assertion.
    """
    if not is_gamma_string(s, gamma2bar):
        raise NotGammaString("classify_gaps needs a gamma2bar-string")
    c, N = pliss_constants(gamma2bar, gamma3, s.bound)
    flags = kernels.pliss_prefix_flags(s.values, gamma3)
    indices = np.nonzero(flags)[0] + 1
    labels = []
    for a, b in zip(indices[:-1], indices[1:]):
        if b - a <= N:
            labels.append("short")
            continue
        segment = s.values[a:b]
        if not kernels.obstruction(segment, N, gamma2bar):
            raise AssertionError(
                "gap dichotomy violated: segment neither short nor an "
                "obstruction — this indicates a bug"
            )
        labels.append("obstruction")
    return labels


def extract_bad_quasi_string(
    s: RealString, gammas: tuple[float, float, float, float], n: int, ell: int
) -> int:
    """Find a prefix length kk in [ell, m) whose prefix is gamma3-quasi-
    expanding but not a gamma1-string.

    Hypotheses (checked in order, failures raise HypothesesNotMet):
    the gammas decrease strictly; the string is a gamma0-string; the prefix
    of length ell is an (n, gamma2)-obstruction; and the four counting
    conditions (a) m >= N_{g0,g3}, (b) m*c_{g0,g3} > ell,
    (c) ell >= N_{g1,g2}, (d) ell*c_{g1,g2} > n.
    """
    g0, g1, g2, g3 = gammas
    if not (g0 > g1 > g2 > g3 > 0.0):
        raise HypothesesNotMet("order", "need gamma0 > gamma1 > gamma2 > gamma3 > 0")
    m = len(s)
    if not (m > ell > n > 0):
        raise HypothesesNotMet("order", f"need m > ell > n > 0, got {m}, {ell}, {n}")
    if not is_gamma_string(s, g0):
        raise HypothesesNotMet("gamma0", "string is not a gamma0-string")
    if not is_obstruction(s.prefix(ell), n, g2):
        raise HypothesesNotMet("obstruction", "ell-prefix is not an (n, gamma2)-obstruction")
    c03, N03 = pliss_constants(g0, g3, s.bound)
    c12, N12 = pliss_constants(g1, g2, s.bound)
    if m < N03:
        raise HypothesesNotMet("a", f"m={m} < N={N03}")
    if m * c03 <= ell:
        raise HypothesesNotMet("b", f"m*c={m * c03:.6g} <= ell={ell}")
    if ell < N12:
        raise HypothesesNotMet("c", f"ell={ell} < N={N12}")
    if ell * c12 <= n:
        raise HypothesesNotMet("d", f"ell*c={ell * c12:.6g} <= n={n}")

    flags = kernels.pliss_prefix_flags(s.values, g3)
    means = np.cumsum(s.values) / np.arange(1, m + 1)
    for kk in range(ell, m):
        if flags[kk - 1] and means[kk - 1] < g1:
            return kk
    raise AssertionError(
        "no qualifying prefix found although the hypotheses hold — "
        "this indicates a bug"
    )


def is_quasi_expanding_positive(b: PositiveString) -> bool:
    """Quasi-expansion for positive strings: every suffix product of k terms
    is >= gamma^-k."""
    return bool(kernels.quasi_expanding(np.log(b.values), -math.log(b.gamma)))


def well_adapted(b: PositiveString) -> PositiveString:
    """A well-adapted rescaling string for a gamma-quasi-expanding string.

    The output c has unit total product, sub-unit partial products, leaves
    b_i/c_i uniformly gamma-expanding, and stays inside
    [min(gamma*b_i, 1), b_i].  Construction: in log space the slack
    u_i = log(b_i) + log(gamma) is forced onto c where negative and spent
    greedily to repay accumulated debt where positive; quasi-expansion makes
    the debt land at zero.  Any output passing the four-condition recheck is
    acceptable.
    """
    if not is_quasi_expanding_positive(b):
        raise NotQuasiExpanding("input string is not gamma-quasi-expanding")
    ell = len(b)
    log_gamma = math.log(b.gamma)
    if ell == 1:
        return PositiveString(np.ones(1), b.gamma)
    log_b = np.log(b.values)
    u = log_b + log_gamma
    xi = kernels.well_adapted_log(u)

    prefix = np.cumsum(xi)
    ok = (
        abs(prefix[-1]) <= RECHECK_TOL
        and np.all(prefix[:-1] <= RECHECK_TOL)
        and np.all(log_b - xi >= -log_gamma - RECHECK_TOL)
        and np.all(xi >= np.minimum(u, 0.0) - RECHECK_TOL)
        and np.all(xi <= log_b + RECHECK_TOL)
    )
    if not ok:
        raise AssertionError("well-adapted recheck failed — this indicates a bug")
    return PositiveString(np.exp(xi), b.gamma)


def suffix_averages(values) -> np.ndarray:
    """Suffix averages (1/l) * sum of the last l entries, l = 1..m."""
    a = _as_values(values)
    return np.cumsum(a[::-1]) / np.arange(1, a.size + 1)

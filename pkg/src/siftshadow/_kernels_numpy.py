"""Pure-numpy implementations of the hot kernels.

Selected by the env flag ``SIFTSHADOW_NUMBA=0`` (see ``_accel``); otherwise
these serve as the fallback when numba is unavailable.  Signatures match
``_kernels_numba`` one for one.
"""

import math

import numpy as np

# circle map kernel codes shared with the numba twin
DOUBLING = 0
PERTURBED_DOUBLING = 1
NEUTRAL_FIXED = 2
PL_TENT = 3


def pliss_prefix_flags(values, gamma_prime):
    """Boolean mask: flags[n-1] is True iff the prefix of length n is
    gamma_prime-quasi-expanding.

    Uses the running-maximum characterisation of Pliss times: with
    T_i = sum(a_0..a_{i-1}) - gamma_prime*i, the prefix of length n
    qualifies iff T_n >= max(T_0, ..., T_{n-1}).
    """
    drift = np.cumsum(values - gamma_prime)
    prev_max = np.maximum.accumulate(np.concatenate(([0.0], drift[:-1])))
    return drift >= prev_max


def quasi_expanding(values, lam):
    """True iff every suffix average of ``values`` is >= lam."""
    m = values.shape[0]
    rs = np.cumsum(values[::-1])
    return bool(np.all(rs >= lam * np.arange(1, m + 1)))


def obstruction(values, n, rho):
    """True iff len >= n and no prefix of length in [n, len] has mean >= rho."""
    m = values.shape[0]
    if m < n:
        return False
    means = np.cumsum(values) / np.arange(1, m + 1)
    return not bool(np.any(means[n - 1 :] >= rho))


def well_adapted_log(u):
    """Log-space well-adapted rescaling by greedy debt repayment.

    ``u[i]`` is the log slack log(b_i) + log(gamma); returns xi = log(c_i).
    Forced xi = u on non-expanding steps, positive slack is spent only to
    repay accumulated debt, so prefix sums stay <= 0 and the total lands
    at ~0 whenever the slack has nonnegative suffix sums.
    """
    ell = u.shape[0]
    xi = np.empty(ell)
    debt = 0.0
    for i in range(ell):
        ui = u[i]
        if ui <= 0.0:
            xi[i] = ui
            debt += ui
        else:
            take = ui if ui <= -debt else -debt
            xi[i] = take
            debt += take
    return xi


def _circle_dist(a, b):
    d = abs(a - b) % 1.0
    return d if d <= 0.5 else 1.0 - d


def _step_circle(code, params, x):
    if code == DOUBLING:
        return (2.0 * x) % 1.0, 2.0
    if code == PERTURBED_DOUBLING:
        eps = params[0]
        y = (2.0 * x + eps * math.sin(2.0 * math.pi * x) / (2.0 * math.pi)) % 1.0
        return y, 2.0 + eps * math.cos(2.0 * math.pi * x)
    if code == NEUTRAL_FIXED:
        alpha = params[0]
        return (x + x ** (1.0 + alpha)) % 1.0, 1.0 + (1.0 + alpha) * x**alpha
    if code == PL_TENT:
        s1 = params[0]
        s2 = params[1]
        c = 1.0 / s1
        if x < c:
            return (s1 * x) % 1.0, s1
        return (1.0 - s2 * (x - c)) % 1.0, -s2
    raise ValueError("unknown circle kernel code")


def orbit_circle(code, params, x0, k):
    """k orbit points of a coded circle map, the derivative at each, and f^k(x0)."""
    points = np.empty(k)
    derivs = np.empty(k)
    x = x0 % 1.0
    for i in range(k):
        points[i] = x
        x, d = _step_circle(code, params, x)
        derivs[i] = d
    return points, derivs, x


def best_pairs_per_period(points_ext, sift_mask, delta, tau_min):
    """Best (smallest-gap) recurrence pair for every period.

    ``points_ext[n]`` is f^n(x) for n = 0..m; ``sift_mask[n]`` marks sifted
    prefix lengths.  A pair (n', n'' = n'+tau) qualifies when both ends are
    sifted, n' <= tau/2 and the circle gap d(x_{n'}, x_{n''}) < delta.
    Returns (taus, nprimes, gaps) sorted by tau.
    """
    m = points_ext.shape[0] - 1
    sift_idx = np.nonzero(sift_mask)[0]
    best_gap = {}
    best_np = {}
    for nd in sift_idx:
        lim = nd // 3
        if lim < 1:
            continue
        cand = sift_idx[: np.searchsorted(sift_idx, lim, side="right")]
        if cand.size == 0:
            continue
        raw = np.abs(points_ext[cand] - points_ext[nd]) % 1.0
        gaps = np.minimum(raw, 1.0 - raw)
        hits = np.nonzero(gaps < delta)[0]
        for h in hits:
            npv = int(cand[h])
            tau = int(nd) - npv
            if tau < tau_min:
                continue
            g = float(gaps[h])
            if g < best_gap.get(tau, np.inf):
                best_gap[tau] = g
                best_np[tau] = npv
    taus = np.array(sorted(best_gap), dtype=np.int64)
    nprimes = np.array([best_np[t] for t in taus], dtype=np.int64)
    out_gaps = np.array([best_gap[t] for t in taus])
    return taus, nprimes, out_gaps


def _log_smax_2x2_batch(P):
    """Largest-singular-value logs for a (k,2,2) batch; stable even when the
    matrices are nearly singular."""
    a = np.einsum("kij,kij->k", P, P)
    det = P[:, 0, 0] * P[:, 1, 1] - P[:, 0, 1] * P[:, 1, 0]
    disc = np.maximum(a * a - 4.0 * det * det, 0.0)
    return 0.5 * np.log(0.5 * (a + np.sqrt(disc)))


def _logabsdet(M):
    return math.log(abs(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]))


def cocycle_window_logconorms(symbols, S0, S1, window, count):
    """log co-norm of the matrix product over each of ``count`` consecutive
    windows of length ``window``.

    Products are renormalized against overflow, and log|det| accumulates
    analytically from the factors: extracting it from the long product would
    lose everything to cancellation once the product gets ill-conditioned.
    The co-norm is then |det| / smax.
    """
    ld = (_logabsdet(S0), _logabsdet(S1))
    sym = symbols[: window * count].reshape(count, window)
    P = np.broadcast_to(np.eye(2), (count, 2, 2)).copy()
    logsum = np.zeros(count)
    logdet = np.zeros(count)
    for step in range(window):
        pick = sym[:, step]
        M = np.where(pick[:, None, None] == 0, S0, S1)
        P = M @ P
        s = np.abs(P).max(axis=(1, 2))
        P /= s[:, None, None]
        logsum += np.log(s)
        logdet += np.where(pick == 0, ld[0], ld[1])
    return logdet - logsum - _log_smax_2x2_batch(P)


def cocycle_prefix_logconorms(symbols, S0, S1, kmax):
    """log co-norm of the first-k-step products, k = 1..kmax, renormalized."""
    ld = (_logabsdet(S0), _logabsdet(S1))
    out = np.empty(kmax)
    P = np.eye(2)
    logsum = 0.0
    logdet = 0.0
    for k in range(kmax):
        M = S0 if symbols[k] == 0 else S1
        P = M @ P
        s = np.abs(P).max()
        P = P / s
        logsum += math.log(s)
        logdet += ld[0] if symbols[k] == 0 else ld[1]
        out[k] = logdet - logsum - _log_smax_2x2_batch(P[None, :, :])[0]
    return out

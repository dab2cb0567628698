"""Numba-jitted implementations of the hot kernels.

The default path when numba imports cleanly; ``SIFTSHADOW_NUMBA=0`` selects
the pure-numpy twin in ``_kernels_numpy``.  Keep signatures in sync.
"""

import math

import numpy as np
from numba import njit

DOUBLING = 0
PERTURBED_DOUBLING = 1
NEUTRAL_FIXED = 2
PL_TENT = 3


@njit(cache=True)
def pliss_prefix_flags(values, gamma_prime):
    m = values.shape[0]
    flags = np.empty(m, dtype=np.bool_)
    drift = 0.0
    run_max = 0.0
    for i in range(m):
        drift += values[i] - gamma_prime
        flags[i] = drift >= run_max
        if drift > run_max:
            run_max = drift
    return flags


@njit(cache=True)
def quasi_expanding(values, lam):
    m = values.shape[0]
    s = 0.0
    for j in range(m):
        s += values[m - 1 - j]
        if s < lam * (j + 1):
            return False
    return True


@njit(cache=True)
def obstruction(values, n, rho):
    m = values.shape[0]
    if m < n:
        return False
    s = 0.0
    for i in range(m):
        s += values[i]
        if i + 1 >= n and s >= rho * (i + 1):
            return False
    return True


@njit(cache=True)
def well_adapted_log(u):
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


@njit(cache=True)
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
    s1 = params[0]
    s2 = params[1]
    c = 1.0 / s1
    if x < c:
        return (s1 * x) % 1.0, s1
    return (1.0 - s2 * (x - c)) % 1.0, -s2


@njit(cache=True)
def orbit_circle(code, params, x0, k):
    points = np.empty(k)
    derivs = np.empty(k)
    x = x0 % 1.0
    for i in range(k):
        points[i] = x
        x, d = _step_circle(code, params, x)
        derivs[i] = d
    return points, derivs, x


@njit(cache=True)
def best_pairs_per_period(points_ext, sift_mask, delta, tau_min):
    m = points_ext.shape[0] - 1
    best_gap = np.full(m + 1, np.inf)
    best_np = np.full(m + 1, -1, dtype=np.int64)
    for nd in range(tau_min + 1, m + 1):
        if not sift_mask[nd]:
            continue
        lim = nd // 3
        for npv in range(1, lim + 1):
            if not sift_mask[npv]:
                continue
            tau = nd - npv
            if tau < tau_min:
                break
            raw = abs(points_ext[npv] - points_ext[nd]) % 1.0
            g = raw if raw <= 0.5 else 1.0 - raw
            if g < delta and g < best_gap[tau]:
                best_gap[tau] = g
                best_np[tau] = npv
    count = 0
    for tau in range(m + 1):
        if best_np[tau] >= 0:
            count += 1
    taus = np.empty(count, dtype=np.int64)
    nprimes = np.empty(count, dtype=np.int64)
    gaps = np.empty(count)
    j = 0
    for tau in range(m + 1):
        if best_np[tau] >= 0:
            taus[j] = tau
            nprimes[j] = best_np[tau]
            gaps[j] = best_gap[tau]
            j += 1
    return taus, nprimes, gaps


@njit(cache=True)
def _log_smax_2x2(p00, p01, p10, p11):
    a = p00 * p00 + p01 * p01 + p10 * p10 + p11 * p11
    det = p00 * p11 - p01 * p10
    disc = a * a - 4.0 * det * det
    if disc < 0.0:
        disc = 0.0
    return 0.5 * math.log(0.5 * (a + math.sqrt(disc)))


@njit(cache=True)
def cocycle_window_logconorms(symbols, S0, S1, window, count):
    # log|det| accumulates from the factors; reading it off the long product
    # would cancel to noise once the product is ill-conditioned
    ld0 = math.log(abs(S0[0, 0] * S0[1, 1] - S0[0, 1] * S0[1, 0]))
    ld1 = math.log(abs(S1[0, 0] * S1[1, 1] - S1[0, 1] * S1[1, 0]))
    out = np.empty(count)
    for j in range(count):
        p00 = 1.0
        p01 = 0.0
        p10 = 0.0
        p11 = 1.0
        logsum = 0.0
        logdet = 0.0
        for step in range(window):
            sym = symbols[j * window + step]
            if sym == 0:
                m00 = S0[0, 0]
                m01 = S0[0, 1]
                m10 = S0[1, 0]
                m11 = S0[1, 1]
                logdet += ld0
            else:
                m00 = S1[0, 0]
                m01 = S1[0, 1]
                m10 = S1[1, 0]
                m11 = S1[1, 1]
                logdet += ld1
            q00 = m00 * p00 + m01 * p10
            q01 = m00 * p01 + m01 * p11
            q10 = m10 * p00 + m11 * p10
            q11 = m10 * p01 + m11 * p11
            s = max(max(abs(q00), abs(q01)), max(abs(q10), abs(q11)))
            p00 = q00 / s
            p01 = q01 / s
            p10 = q10 / s
            p11 = q11 / s
            logsum += math.log(s)
        out[j] = logdet - logsum - _log_smax_2x2(p00, p01, p10, p11)
    return out


@njit(cache=True)
def cocycle_prefix_logconorms(symbols, S0, S1, kmax):
    ld0 = math.log(abs(S0[0, 0] * S0[1, 1] - S0[0, 1] * S0[1, 0]))
    ld1 = math.log(abs(S1[0, 0] * S1[1, 1] - S1[0, 1] * S1[1, 0]))
    out = np.empty(kmax)
    p00 = 1.0
    p01 = 0.0
    p10 = 0.0
    p11 = 1.0
    logsum = 0.0
    logdet = 0.0
    for k in range(kmax):
        sym = symbols[k]
        if sym == 0:
            m00 = S0[0, 0]
            m01 = S0[0, 1]
            m10 = S0[1, 0]
            m11 = S0[1, 1]
            logdet += ld0
        else:
            m00 = S1[0, 0]
            m01 = S1[0, 1]
            m10 = S1[1, 0]
            m11 = S1[1, 1]
            logdet += ld1
        q00 = m00 * p00 + m01 * p10
        q01 = m00 * p01 + m01 * p11
        q10 = m10 * p00 + m11 * p10
        q11 = m10 * p01 + m11 * p11
        s = max(max(abs(q00), abs(q01)), max(abs(q10), abs(q11)))
        p00 = q00 / s
        p01 = q01 / s
        p10 = q10 / s
        p11 = q11 / s
        logsum += math.log(s)
        out[k] = logdet - logsum - _log_smax_2x2(p00, p01, p10, p11)
    return out

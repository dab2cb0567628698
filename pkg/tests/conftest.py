"""Shared independent oracles for the test suite.

Everything here is deliberately naive (plain loops, exact rational
arithmetic, eigenvalue-based singular values) so the library under test is
checked against computations that share none of its code paths.
"""

from fractions import Fraction

import numpy as np
import pytest


def brute_quasi_expanding(values, lam):
    """Suffix-average check via direct per-suffix summation."""
    m = len(values)
    for ell in range(1, m + 1):
        s = 0.0
        for j in range(1, ell + 1):
            s += values[m - j]
        if s < lam * ell:
            return False
    return True


def brute_prefix_quasi_expanding(values, n, lam):
    """Quasi-expansion of the length-n prefix, summed independently."""
    for J in range(1, n + 1):
        s = 0.0
        for j in range(1, J + 1):
            s += values[n - j]
        if s < lam * J:
            return False
    return True


def brute_sift_indices(values, gamma_prime):
    """All prefix lengths whose prefix is gamma'-quasi-expanding."""
    m = len(values)
    return [n for n in range(1, m + 1) if brute_prefix_quasi_expanding(values, n, gamma_prime)]


def brute_obstruction(values, n, rho):
    m = len(values)
    if m < n:
        return False
    for ell in range(n, m + 1):
        if sum(values[:ell]) / ell >= rho:
            return False
    return True


def conorm_via_gram(A):
    """Smallest singular value from the eigenvalues of A^T A."""
    A = np.asarray(A, dtype=float)
    eig = np.linalg.eigvalsh(A.T @ A)
    return float(np.sqrt(max(eig.min(), 0.0)))


def doubling_periodic_points(period):
    """Exact fixed points of x -> 2^n x mod 1: k/(2^n - 1)."""
    M = 2**period - 1
    return [Fraction(k, M) for k in range(M)]


def nearest_doubling_periodic_distance(x, period):
    """Exact distance from a float point to the nearest k/(2^period - 1)."""
    M = 2**period - 1
    q = Fraction(x) % 1
    k = round(q * M)
    d = abs(q - Fraction(k % M, M))
    return float(min(d, 1 - d))


def pl_tent_affine(s1, s2, branch):
    """One branch of the tent map as an exact affine map a*x + b."""
    s1, s2 = Fraction(s1), Fraction(s2)
    c = 1 / s1
    if branch == 0:
        return s1, Fraction(0)
    return -s2, 1 + s2 * c


def pl_tent_periodic_point(s1, s2, itinerary):
    """Exact periodic point of the tent map realizing an itinerary, or None.

    Composes the affine branch maps and solves the fixed-point equation in
    exact rationals, then verifies the itinerary is actually realized.
    """
    a_tot, b_tot = Fraction(1), Fraction(0)
    for branch in itinerary:
        a, b = pl_tent_affine(s1, s2, branch)
        a_tot, b_tot = a * a_tot, a * b_tot + b
    if a_tot == 1:
        return None
    x = b_tot / (1 - a_tot)
    c = 1 / Fraction(s1)
    pt = x
    for branch in itinerary:
        if not 0 <= pt < 1:
            return None
        if branch == 0 and not pt < c:
            return None
        if branch == 1 and not pt >= c:
            return None
        a, b = pl_tent_affine(s1, s2, branch)
        pt = (a * pt + b) % 1
    if pt != x % 1:
        return None
    return x % 1


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)

"""Finite-depth inverse-limit machinery for noninvertible maps.

A backward branch is a depth-d truncation of a natural-extension point:
the present together with one choice of preimage at each of d steps back.
All metric values are truncations of the full inverse-limit metric with
tail error at most 2^-depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import log_conorm
from .errors import BadParameters, DepthTooLarge, DepthTooSmall
from .maps import MapSystem, circle_dist

BRANCH_CAP = 2**20
TOL_INV = 1e-10


@dataclass(frozen=True)
class BackwardBranch:
    """Present point plus a finite backward history (x_-1, ..., x_-d)
    with f(x_{-i-1}) = x_{-i}."""

    present: object
    history: tuple

    @property
    def depth(self) -> int:
        return len(self.history)

    def point(self, i: int):
        """The point at position i <= 0 (0 is the present)."""
        if i > 0 or -i > self.depth:
            raise BadParameters(f"position {i} outside [-{self.depth}, 0]")
        return self.present if i == 0 else self.history[-i - 1]

    def to_json_array(self) -> list:
        return [self.present, *self.history]


def validate_branch(sys: MapSystem, branch: BackwardBranch, tol: float = TOL_INV) -> None:
    prev = branch.present
    for h in branch.history:
        if sys.distance(sys.step(h), prev) > tol:
            raise BadParameters("branch history fails forward consistency")
        prev = h


def enumerate_branches(sys: MapSystem, x, depth: int) -> list[BackwardBranch]:
    """All backward branches of the given depth below x (q^depth of them for
    a degree-q map), each forward-checked against tol_inv."""
    if depth < 0:
        raise BadParameters("depth must be >= 0")
    if depth == 0:
        return [BackwardBranch(present=x, history=())]
    degree = max(len(sys.inverse_branches(x)), 1)
    if degree**depth > BRANCH_CAP:
        raise DepthTooLarge(
            f"{degree}^{depth} branches would exceed the cap {BRANCH_CAP}"
        )
    paths = [(x,)]
    for _ in range(depth):
        new_paths = []
        for path in paths:
            for pre in sys.inverse_branches(path[-1]):
                if sys.distance(sys.step(pre), path[-1]) > TOL_INV:
                    raise BadParameters(
                        f"inverse branch {pre!r} fails to map forward onto {path[-1]!r}"
                    )
                new_paths.append(path + (pre,))
        paths = new_paths
    return [BackwardBranch(present=x, history=p[1:]) for p in paths]


def extension_metric(a: BackwardBranch, b: BackwardBranch, dist=circle_dist) -> float:
    """Truncated inverse-limit metric sum_i 2^i min(1, d(x_i, y_i)) over
    i = 0, -1, ..., -min(depth); truncation error <= 2^-min(depth)."""
    dmin = min(a.depth, b.depth)
    total = 0.0
    for i in range(dmin + 1):
        total += 2.0**-i * min(1.0, dist(a.point(-i), b.point(-i)))
    return total


@dataclass(frozen=True)
class TGammaReport:
    """Per-branch verdict of the (t, gamma)-set membership check.

    A pass means: some phase m in [0, t) makes every backward window of
    length r <= r_max ending at shift^m of the branch a gamma-string.  This
    is a finite-horizon certificate only (the definition quantifies over all
    r > 0).
    """

    passes: bool
    witness_m: Optional[int]
    failures: tuple
    t: int
    gamma: float
    certified_to_r: int


def tgamma_report_payload(
    sys: MapSystem, t: int, gamma: float, r_max: int, reports, version: str
) -> dict:
    """Assemble the serializable report for a batch of membership checks."""
    return {
        "kind": "tgamma",
        "version": version,
        "map": sys.name,
        "t": t,
        "gamma": gamma,
        "r_max": r_max,
        "reports": [
            {
                "passes": r.passes,
                "witness_m": r.witness_m,
                "failures": [list(f) for f in r.failures],
            }
            for r in reports
        ],
    }


def check_t_gamma_set(
    sys: MapSystem, branches, t: int, gamma: float, r_max: int
) -> list[TGammaReport]:
    """Check each branch for membership-style (t, gamma) behaviour up to
    window length r_max."""
    if t < 1 or r_max < 1:
        raise BadParameters("t and r_max must be >= 1")
    reports = []
    for branch in branches:
        if branch.depth < t + r_max:
            raise DepthTooSmall(
                f"branch depth {branch.depth} < t + r_max = {t + r_max}"
            )
        # log co-norm increments at positions -r_max .. t-2
        inc = np.empty(r_max + t - 1)
        for off, p in enumerate(range(-r_max, t - 1)):
            if p < 0:
                pt = branch.point(p)
            elif p == 0:
                pt = branch.present
            else:
                pt = sys.iterate(branch.present, p)
            inc[off] = log_conorm(sys.deriv(pt))
        csum = np.concatenate(([0.0], np.cumsum(inc)))

        def window_mean(m: int, r: int) -> float:
            # window covers positions m-r .. m-1, offset by r_max
            lo = m - r + r_max
            return (csum[lo + r] - csum[lo]) / r

        witness = None
        failures = []
        for m in range(t):
            bad = None
            for r in range(1, r_max + 1):
                if window_mean(m, r) < gamma:
                    bad = r
                    break
            if bad is None:
                witness = m
                break
            failures.append((m, bad))
        reports.append(
            TGammaReport(
                passes=witness is not None,
                witness_m=witness,
                failures=tuple(failures),
                t=t,
                gamma=gamma,
                certified_to_r=r_max,
            )
        )
    return reports

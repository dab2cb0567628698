"""Exception hierarchy shared by all siftshadow modules."""


class SiftShadowError(Exception):
    """Base class for all library errors."""


class SingularMatrix(SiftShadowError):
    """A derivative (or matrix argument) is singular where invertibility is required."""


class NotPeriodic(SiftShadowError):
    """A point claimed periodic fails the periodicity check.

    Carries the offending point and the measured return distance.
    """

    def __init__(self, point, period, distance, tol):
        self.point = point
        self.period = period
        self.distance = distance
        self.tol = tol
        super().__init__(
            f"point {point!r} is not periodic with period {period}: "
            f"return distance {distance:.3e} exceeds tolerance {tol:.1e}"
        )


class NotGammaString(SiftShadowError):
    """The string's mean falls below the required gamma."""


class BadParameters(SiftShadowError):
    """Parameter ordering or range constraints are violated."""


class NotQuasiExpanding(SiftShadowError):
    """A string (or pseudo-orbit chain) fails the quasi-expansion test."""


class HypothesesNotMet(SiftShadowError):
    """One of the hypotheses of the bad-string extraction failed.

    ``which`` names the failed hypothesis: one of "order", "gamma0",
    "obstruction", "a", "b", "c", "d".
    """

    def __init__(self, which, detail=""):
        self.which = which
        msg = f"hypothesis ({which}) not met"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class InvalidConfig(SiftShadowError):
    """A ShadowingConfig violates its defining inequality chain."""


class GapTooLarge(SiftShadowError):
    """A pseudo-orbit gap exceeds the admissible bound (r for lifts, delta for chains)."""


class ContractionFailed(SiftShadowError):
    """The sequence-space contraction did not converge; signals violated preconditions."""


class DepthTooLarge(SiftShadowError):
    """Backward-branch enumeration would exceed the branch-count cap."""


class DepthTooSmall(SiftShadowError):
    """Branches are too shallow for the requested window check."""


class NoHyperbolicTimes(SiftShadowError):
    """The Pliss sift of the seed orbit produced no hyperbolic times."""


class NoRecurrence(SiftShadowError):
    """No recurrence pair within the gap bound; try a longer horizon."""


class SchemaMismatch(SiftShadowError):
    """A report file does not validate against the expected schema."""

"""Map systems: circle maps with evaluable derivatives and inverse branches,
plus the two-matrix cocycle over the one-sided shift.

A map system bundles everything the estimators and the shadowing solver need:
forward step, derivative, local inverse branches, a Lipschitz bound K with
K >= sup max(|Df|, |Df^-1|), and optional extras (an exact rational step for
maps whose float iteration degenerates, derivative-discontinuity locations,
and an analytic modulus of continuity for the derivative).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from ._accel import kernels
from .errors import BadParameters

TOL_INV = 1e-10

# beyond ~52 steps, float iteration of dyadic-exact maps collapses; switch to
# the exact rational path well before that
EXACT_ORBIT_THRESHOLD = 48

# fixed large-order odd denominator used to proxy irrational seeds for maps
# whose float orbits degenerate (2 has multiplicative order 2*3^79 mod 3^80)
_PROXY_DEN = 3**80


def circle_dist(a: float, b: float) -> float:
    """Arc-length distance on the circle of circumference 1."""
    d = abs(a - b) % 1.0
    return d if d <= 0.5 else 1.0 - d


def circle_dist_signed(origin: float, target: float) -> float:
    """Signed displacement from origin to target, wrapped into [-1/2, 1/2].

    Wrapping by subtracting round(d) is exact in floating point (Sterbenz),
    unlike a double pass through ``% 1.0`` which costs an ulp of 1 exactly
    where the solver needs displacements at the 1e-16 scale.
    """
    d = target - origin
    return d - round(d)


def rational_proxy(x: float) -> Fraction:
    """Lift a float to a fraction with the large odd proxy denominator.

    Float circle points are dyadic rationals, which are transient under
    dyadic-exact maps like angle doubling (they collapse onto 0 in at most
    ~52 steps).  Rounding onto p/3^80 changes the point by < 1e-38 while
    giving it an astronomically long exact orbit.
    """
    p = round(Fraction(x % 1.0) * _PROXY_DEN)
    return Fraction(p % _PROXY_DEN, _PROXY_DEN)


@dataclass(frozen=True)
class Word:
    """Eventually periodic one-sided sequence over {0,1}: head then cycle."""

    head: tuple[int, ...]
    cycle: tuple[int, ...]

    def __post_init__(self):
        if not self.cycle:
            raise BadParameters("word cycle must be nonempty")
        if any(s not in (0, 1) for s in self.head + self.cycle):
            raise BadParameters("word symbols must be 0 or 1")

    def symbol(self, i: int) -> int:
        if i < len(self.head):
            return self.head[i]
        return self.cycle[(i - len(self.head)) % len(self.cycle)]

    def symbols(self, start: int, count: int) -> np.ndarray:
        return np.array([self.symbol(start + i) for i in range(count)], dtype=np.int64)


@dataclass(frozen=True)
class ShiftPoint:
    """A point of the shift space: a driving word plus a read position."""

    word: Word
    pos: int = 0

    def symbol(self, offset: int = 0) -> int:
        return self.word.symbol(self.pos + offset)


def shift_dist(a: ShiftPoint, b: ShiftPoint, depth: int = 128) -> float:
    """2^-j metric with j the first symbol mismatch reading forward."""
    for j in range(depth):
        if a.symbol(j) != b.symbol(j):
            return 2.0**-j
    return 0.0


@dataclass(frozen=True)
class MapSystem:
    """A circle map or shift cocycle with derivative data.

    Immutable after construction; safe to share across threads.
    """

    name: str
    domain: str  # "circle" | "shift"
    step: Callable
    deriv: Callable
    inverse_branches: Callable
    lipschitz_bound: float
    kernel_code: Optional[int] = None
    kernel_params: tuple = ()
    exact_step: Optional[Callable[[Fraction], Fraction]] = None
    deriv_kinks: tuple = ()
    deriv_modulus: Optional[Callable[[float, float], float]] = None
    params: dict = field(default_factory=dict)

    def distance(self, a, b) -> float:
        if self.domain == "circle":
            return circle_dist(a, b)
        return shift_dist(a, b)

    def iterate(self, x, k: int):
        for _ in range(k):
            x = self.step(x)
        return x


def _validate_circle_system(sys: MapSystem, samples: int = 32) -> None:
    xs = (np.arange(samples) + 0.382) / samples
    K = sys.lipschitz_bound
    for x in xs:
        d = sys.deriv(float(x))
        if d == 0 or not math.isfinite(d):
            raise BadParameters(f"{sys.name}: derivative degenerate at {x}")
        if abs(d) > K * (1 + 1e-12) or 1.0 / abs(d) > K * (1 + 1e-12):
            raise BadParameters(f"{sys.name}: Lipschitz bound K={K} violated at {x}")
        y = sys.step(float(x))
        for b in sys.inverse_branches(y):
            if circle_dist(sys.step(b), y) > TOL_INV:
                raise BadParameters(f"{sys.name}: inverse branch of {y} fails to map back")


def doubling() -> MapSystem:
    """Angle doubling x -> 2x mod 1."""

    def exact(q: Fraction) -> Fraction:
        return (2 * q) % 1

    sys = MapSystem(
        name="doubling",
        domain="circle",
        step=lambda x: (2.0 * x) % 1.0,
        deriv=lambda x: 2.0,
        inverse_branches=lambda y: [0.5 * (y % 1.0), 0.5 * (y % 1.0) + 0.5],
        lipschitz_bound=2.0,
        kernel_code=kernels.DOUBLING,
        kernel_params=(),
        exact_step=exact,
        deriv_modulus=lambda x, r: 0.0,
        params={"proxy_seed": True},
    )
    _validate_circle_system(sys)
    return sys


def perturbed_doubling(eps: float) -> MapSystem:
    """x -> 2x + eps*sin(2 pi x)/(2 pi) mod 1; smooth perturbation of doubling."""
    if not 0.0 <= eps < 1.0:
        raise BadParameters("perturbed_doubling needs 0 <= eps < 1")
    two_pi = 2.0 * math.pi

    def step(x):
        return (2.0 * x + eps * math.sin(two_pi * x) / two_pi) % 1.0

    def lift(y):
        return 2.0 * y + eps * math.sin(two_pi * y) / two_pi

    def inverse(y):
        y = y % 1.0
        return [float(brentq(lambda t: lift(t) - (y + b), 0.0, 1.0, xtol=1e-15)) for b in (0, 1)]

    sys = MapSystem(
        name=f"perturbed_doubling({eps:g})",
        domain="circle",
        step=step,
        deriv=lambda x: 2.0 + eps * math.cos(two_pi * x),
        inverse_branches=inverse,
        lipschitz_bound=2.0 + eps,
        kernel_code=kernels.PERTURBED_DOUBLING,
        kernel_params=(eps,),
        deriv_modulus=lambda x, r: min(2.0 * eps, two_pi * eps * r),
        params={"eps": eps},
    )
    _validate_circle_system(sys)
    return sys


def neutral_fixed(alpha: float) -> MapSystem:
    """Manneville-Pomeau-type map x -> x + x^(1+alpha) mod 1.

    The fixed point 0 is neutral (derivative exactly 1), so every backward
    window at 0 has zero mean log co-norm.
    """
    if alpha <= 0:
        raise BadParameters("neutral_fixed needs alpha > 0")

    def step(x):
        return (x + x ** (1.0 + alpha)) % 1.0

    def lift(y):
        return y + y ** (1.0 + alpha)

    def inverse(y):
        y = y % 1.0
        return [float(brentq(lambda t: lift(t) - (y + b), 0.0, 1.0, xtol=1e-15)) for b in (0, 1)]

    def modulus(x, r):
        # derivative jumps by 1+alpha across the circle point 0
        if circle_dist(x, 0.0) <= r:
            return 1.0 + alpha
        lo = max(x - r, 0.0)
        hi = min(x + r, 1.0)
        return (1.0 + alpha) * (hi**alpha - lo**alpha)

    sys = MapSystem(
        name=f"neutral_fixed({alpha:g})",
        domain="circle",
        step=step,
        deriv=lambda x: 1.0 + (1.0 + alpha) * (x % 1.0) ** alpha,
        inverse_branches=inverse,
        lipschitz_bound=2.0 + alpha,
        kernel_code=kernels.NEUTRAL_FIXED,
        kernel_params=(alpha,),
        deriv_kinks=(0.0,),
        deriv_modulus=modulus,
        params={"alpha": alpha},
    )
    _validate_circle_system(sys)
    return sys


def pl_tent(s1: float, s2: float) -> MapSystem:
    """Piecewise-linear tent circle map with slopes s1 and -s2.

    Rises with slope s1 on [0, 1/s1], falls with slope -s2 on [1/s1, 1];
    continuity onto the circle requires 1/s1 + 1/s2 = 1.
    """
    if s1 <= 1.0 or s2 <= 1.0:
        raise BadParameters("pl_tent needs slopes > 1")
    if abs(1.0 / s1 + 1.0 / s2 - 1.0) > 1e-12:
        raise BadParameters("pl_tent needs 1/s1 + 1/s2 = 1 for circle continuity")
    c = 1.0 / s1

    def step(x):
        x = x % 1.0
        if x < c:
            return (s1 * x) % 1.0
        return (1.0 - s2 * (x - c)) % 1.0

    def inverse(y):
        y = y % 1.0
        if y == 0.0:
            return [0.0, c]
        return [y / s1, c + (1.0 - y) / s2]

    def modulus(x, r):
        if circle_dist(x, 0.0) <= r or circle_dist(x, c) <= r:
            return s1 + s2
        return 0.0

    s1f, s2f = Fraction(s1), Fraction(s2)
    exact = None
    if s1f.denominator <= 2**16 and s2f.denominator <= 2**16:
        cf = 1 / s1f

        def exact(q: Fraction) -> Fraction:
            q = q % 1
            if q < cf:
                return (s1f * q) % 1
            return (1 - s2f * (q - cf)) % 1

    sys = MapSystem(
        name=f"pl_tent({s1:g},{s2:g})",
        domain="circle",
        step=step,
        deriv=lambda x: s1 if (x % 1.0) < c else -s2,
        inverse_branches=inverse,
        lipschitz_bound=max(s1, s2),
        kernel_code=kernels.PL_TENT,
        kernel_params=(s1, s2),
        exact_step=exact,
        deriv_kinks=(0.0, c),
        deriv_modulus=modulus,
        params={"s1": s1, "s2": s2},
    )
    _validate_circle_system(sys)
    return sys


def bm_matrices(alpha: float, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """The two shear matrices of the Bochi-Morris-type cocycle family."""
    S0 = alpha * np.array([[1.0, -1.0], [0.0, 1.0]])
    S1 = gamma * np.array([[1.0, 0.0], [-1.0, 1.0]])
    return S0, S1


def bm_cocycle(alpha: float, gamma: float) -> MapSystem:
    """Two-matrix cocycle over the one-sided full shift on {0,1}.

    Points are (word, position) pairs; the derivative at a point is the
    2x2 matrix selected by the symbol under the read head.
    """
    if alpha <= 1.0 or gamma <= 1.0:
        raise BadParameters("bm_cocycle needs alpha, gamma > 1")
    S0, S1 = bm_matrices(alpha, gamma)
    norms = []
    for M in (S0, S1):
        sv = np.linalg.svd(M, compute_uv=False)
        norms += [sv[0], 1.0 / sv[-1]]
    K = float(max(norms))

    def step(p: ShiftPoint) -> ShiftPoint:
        return ShiftPoint(p.word, p.pos + 1)

    def deriv(p: ShiftPoint) -> np.ndarray:
        return S0 if p.symbol() == 0 else S1

    def inverse(p: ShiftPoint):
        if p.pos > 0:
            return [ShiftPoint(p.word, p.pos - 1)]
        return [ShiftPoint(Word((s,) + p.word.head, p.word.cycle), 0) for s in (0, 1)]

    return MapSystem(
        name=f"bm_cocycle({alpha:g},{gamma:g})",
        domain="shift",
        step=step,
        deriv=deriv,
        inverse_branches=inverse,
        lipschitz_bound=K,
        params={"alpha": alpha, "gamma": gamma, "S0": S0, "S1": S1},
    )


def iterate_map(sys: MapSystem, kappa: int) -> MapSystem:
    """The kappa-th iterate f^kappa as a map system of its own.

    Derivatives compose by the chain rule; the Lipschitz bound is K^kappa.
    No analytic modulus survives iteration, so the shadowing planner falls
    back to sampled estimation on iterated systems.
    """
    if kappa < 1:
        raise BadParameters("power must be >= 1")
    if kappa == 1:
        return sys

    def step(x):
        return sys.iterate(x, kappa)

    def deriv(x):
        if sys.domain == "circle":
            d = 1.0
            for _ in range(kappa):
                d *= sys.deriv(x)
                x = sys.step(x)
            return d
        D = np.eye(2)
        for _ in range(kappa):
            D = sys.deriv(x) @ D
            x = sys.step(x)
        return D

    def inverse(y):
        layer = [y]
        for _ in range(kappa):
            layer = [b for p in layer for b in sys.inverse_branches(p)]
        return layer

    exact = None
    if sys.exact_step is not None:
        def exact(q):
            for _ in range(kappa):
                q = sys.exact_step(q)
            return q

    return MapSystem(
        name=f"{sys.name}^{kappa}",
        domain=sys.domain,
        step=step,
        deriv=deriv,
        inverse_branches=inverse,
        lipschitz_bound=sys.lipschitz_bound**kappa,
        exact_step=exact,
        params={"base": sys.name, "power": kappa},
    )


_MAP_SPEC = re.compile(r"^\s*([a-zA-Z_][a-zA-Z0-9_]*)\s*(?:\(([^)]*)\))?\s*$")

MAP_ZOO = {
    "doubling": doubling,
    "perturbed_doubling": perturbed_doubling,
    "neutral_fixed": neutral_fixed,
    "pl_tent": pl_tent,
    "bm_cocycle": bm_cocycle,
}


def make_map(spec: str) -> MapSystem:
    """Build a zoo map from a spec string like ``pl_tent(3,1.5)``."""
    m = _MAP_SPEC.match(spec)
    if not m:
        raise BadParameters(f"cannot parse map spec {spec!r}")
    name, argstr = m.group(1), m.group(2)
    if name not in MAP_ZOO:
        raise BadParameters(f"unknown map {name!r}; known: {sorted(MAP_ZOO)}")
    args = []
    if argstr:
        args = [float(a) for a in argstr.split(",") if a.strip()]
    return MAP_ZOO[name](*args)

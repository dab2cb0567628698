"""Constructive shadowing and closing of quasi-expanding pseudo-orbits.

The machinery mirrors the classical expanding-map construction: local lifts
in arc-length charts split the map into a linear part H and a small remainder
phi; a blockwise well-adapted rescaling turns quasi-expansion into uniform
expansion; and the cyclic sequence-space fixed point is found by iterating
the inverse-graph transform, which contracts once |H| >= 1/gamma and
Lip(phi) <= sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import OrbitString, orbit_string
from .errors import (
    ContractionFailed,
    GapTooLarge,
    InvalidConfig,
    NotQuasiExpanding,
)
from .maps import MapSystem, circle_dist, circle_dist_signed
from .strings import PositiveString, suffix_averages, well_adapted

TOL_FIX = 1e-12
MAX_ITER = 100_000
RESIDUAL_TOL = 1e-10
TOL_PER = 1e-9

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ShadowingConfig:
    """The constant chain threading the closing construction together.

    All defining inequalities are checked at construction:
    (1-tau) e^lambda >= 1/gamma, eps1 = 2 eps_c (1+gamma)/(1-gamma) < 1,
    0 < r <= epsilon and 0 < delta <= r * sigma.
    """

    lambda_: float
    epsilon: float
    tau: float
    gamma: float
    eps_contraction: float
    r: float
    delta: float

    def __post_init__(self):
        if self.lambda_ <= 0 or self.epsilon <= 0:
            raise InvalidConfig("lambda and epsilon must be positive")
        if not 0.0 < self.tau < 1.0:
            raise InvalidConfig("tau must lie in (0,1)")
        if not 0.0 < self.gamma < 1.0:
            raise InvalidConfig("gamma must lie in (0,1)")
        if (1.0 - self.tau) * math.exp(self.lambda_) < 1.0 / self.gamma - 1e-12:
            raise InvalidConfig("(1-tau) e^lambda >= 1/gamma fails")
        if self.eps1 >= 1.0:
            raise InvalidConfig("eps1 = 2 eps (1+gamma)/(1-gamma) must be < 1")
        if not 0.0 < self.r <= self.epsilon:
            raise InvalidConfig("need 0 < r <= epsilon")
        if not 0.0 < self.delta <= self.r * self.sigma * (1.0 + 1e-12):
            raise InvalidConfig("need 0 < delta <= r * sigma")

    @property
    def eps1(self) -> float:
        return 2.0 * self.eps_contraction * (1.0 + self.gamma) / (1.0 - self.gamma)

    @property
    def sigma(self) -> float:
        return (1.0 - self.gamma) * (1.0 - self.eps1) / (2.0 * (1.0 + self.gamma))

    def to_dict(self) -> dict:
        return {
            "lambda": self.lambda_,
            "epsilon": self.epsilon,
            "tau": self.tau,
            "gamma": self.gamma,
            "eps_contraction": self.eps_contraction,
            "eps1": self.eps1,
            "sigma": self.sigma,
            "r": self.r,
            "delta": self.delta,
        }


def _sampled_modulus(sys: MapSystem, x: float, r: float, samples: int = 32) -> float:
    """Sampled sup of |f'(x+v) - f'(x)| over the r-ball, with a 2x safety factor."""
    d0 = sys.deriv(x)
    worst = 0.0
    for i in range(samples):
        v = (((i + 1) * _GOLDEN) % 1.0 * 2.0 - 1.0) * r
        worst = max(worst, abs(sys.deriv((x + v) % 1.0) - d0))
    return 2.0 * worst


def _global_modulus(sys: MapSystem, r: float, grid: int) -> float:
    """Derivative modulus of continuity at scale r, sampled over the circle.

    Points within r of a derivative kink are excluded: lifts built there
    carry their own (large) local bound and fail gracefully instead.
    """
    worst = 0.0
    for i in range(grid):
        x = (i + 0.382) / grid
        if any(circle_dist(x, kink) <= r for kink in sys.deriv_kinks):
            continue
        if sys.deriv_modulus is not None:
            w = sys.deriv_modulus(x, r)
        else:
            w = _sampled_modulus(sys, x, r)
        worst = max(worst, w)
    return worst


def plan_shadowing_config(
    sys: MapSystem,
    lambda_: float,
    epsilon: float,
    *,
    grid: int = 256,
    r_min: float = 1e-9,
) -> ShadowingConfig:
    """Produce the full constant chain delta(epsilon, lambda) constructively.

    tau and gamma come from lambda via tau = (1 - e^(-lambda/2))/2 and
    gamma = 1/((1-tau) e^lambda); the contraction epsilon is fixed so that
    eps1 = 1/4; r is found by halving until the sampled derivative modulus
    at scale r fits under sigma/(K e^lambda) and the induced log co-norm
    oscillation fits under epsilon; finally delta = r * sigma.
    """
    if sys.domain != "circle":
        raise InvalidConfig("shadowing supports circle maps only")
    if lambda_ <= 0 or epsilon <= 0:
        raise InvalidConfig("lambda and epsilon must be positive")
    tau = (1.0 - math.exp(-lambda_ / 2.0)) / 2.0
    gamma = 1.0 / ((1.0 - tau) * math.exp(lambda_))
    eps_c = (1.0 - gamma) / (8.0 * (1.0 + gamma))
    sigma = (1.0 - gamma) * 0.75 / (2.0 * (1.0 + gamma))
    K = sys.lipschitz_bound
    sigma_hat = sigma / (K * math.exp(lambda_))
    # charts stay single-valued while r (K+1) < 1/2
    r = min(epsilon, 0.4 / (K + 1.0))
    while r >= r_min:
        omega = _global_modulus(sys, r, grid)
        if omega <= sigma_hat and K * omega <= epsilon:
            break
        r *= 0.5
    else:
        raise InvalidConfig(
            f"no chart radius r >= {r_min:g} meets the modulus bounds for {sys.name}"
        )
    return ShadowingConfig(
        lambda_=lambda_,
        epsilon=epsilon,
        tau=tau,
        gamma=gamma,
        eps_contraction=eps_c,
        r=r,
        delta=r * sigma,
    )


@dataclass(frozen=True)
class Lift:
    """Local lift of f from the chart at x to the chart at y:
    Phi(v) = H v + phi(v), with phi(0) the signed displacement of f(x) from y."""

    x: float
    y: float
    H: float
    phi: Callable[[float], float]
    phi0: float
    lip_phi_bound: float


def build_lift(
    sys: MapSystem, x: float, y: float, cfg: ShadowingConfig, ball: Optional[float] = None
) -> Lift:
    """Lift of f at (x, y) in flat arc-length charts.

    H is exactly the derivative at x (the charts carry no distortion, so the
    co-norm ratio to |D_x f| is 1).  The Lipschitz bound on the remainder is
    the map's analytic derivative modulus when available, else a sampled
    difference-quotient estimate over 10^3 low-discrepancy pairs doubled for
    safety.  ``ball`` (default r) is the chart radius the bound is quoted
    for; the solver shrinks it to the scale the fixed point can reach.
    """
    if sys.domain != "circle":
        raise InvalidConfig("lifts are defined for circle maps only")
    if ball is None:
        ball = cfg.r
    x, y = x % 1.0, y % 1.0
    fx = sys.step(x)
    gap = circle_dist(fx, y)
    if gap > cfg.r:
        raise GapTooLarge(f"d(f(x), y) = {gap:.3e} exceeds r = {cfg.r:.3e}")
    H = sys.deriv(x)
    phi0 = circle_dist_signed(y, fx)

    def phi(v: float, _x=x, _y=y, _H=H) -> float:
        return circle_dist_signed(_y, sys.step((_x + v) % 1.0)) - _H * v

    if sys.deriv_modulus is not None:
        lip = sys.deriv_modulus(x, ball)
    else:
        worst = 0.0
        prev = (_GOLDEN % 1.0 * 2.0 - 1.0) * ball
        fprev = phi(prev)
        for i in range(2, 1002):
            v = ((i * _GOLDEN) % 1.0 * 2.0 - 1.0) * ball
            fv = phi(v)
            if v != prev:
                worst = max(worst, abs(fv - fprev) / abs(v - prev))
            prev, fprev = v, fv
        lip = 2.0 * worst
    return Lift(x=x, y=y, H=H, phi=phi, phi0=phi0, lip_phi_bound=lip)


@dataclass(frozen=True)
class PseudoOrbitChain:
    """Orbit strings chained by small gaps; cyclic chains close up periodically."""

    strings: tuple[OrbitString, ...]
    gaps: tuple[float, ...]
    cyclic: bool

    def __post_init__(self):
        want = len(self.strings) if self.cyclic else len(self.strings) - 1
        if len(self.gaps) != want:
            raise InvalidConfig(
                f"chain with {len(self.strings)} strings needs {want} gaps, "
                f"got {len(self.gaps)}"
            )

    @property
    def total_length(self) -> int:
        return sum(s.length for s in self.strings)


def chain_from_bases(sys: MapSystem, bases, lengths, cyclic: bool = True) -> PseudoOrbitChain:
    """Build a chain from base points and string lengths; gaps are computed
    from the map."""
    strings = tuple(orbit_string(sys, b, k) for b, k in zip(bases, lengths))
    gaps = []
    for i in range(len(strings) - 1):
        gaps.append(sys.distance(strings[i].end, strings[i + 1].base))
    if cyclic:
        gaps.append(sys.distance(strings[-1].end, strings[0].base))
    return PseudoOrbitChain(strings=strings, gaps=tuple(gaps), cyclic=cyclic)


def chain_is_quasi_expanding(chain: PseudoOrbitChain, lam: float) -> bool:
    from ._accel import kernels

    return all(bool(kernels.quasi_expanding(s.increments, lam)) for s in chain.strings)


def validate_chain(sys: MapSystem, chain: PseudoOrbitChain, tol_eval: float = 1e-10) -> None:
    """Recheck that stored gaps and increments match the map to tol_eval."""
    n_strings = len(chain.strings)
    for i, s in enumerate(chain.strings):
        for p, inc in zip(np.asarray(s.points, dtype=float), s.increments):
            if abs(math.log(abs(sys.deriv(float(p)))) - inc) > tol_eval:
                raise InvalidConfig(f"increments of string {i} not recomputable")
    for i, gap in enumerate(chain.gaps):
        nxt = chain.strings[(i + 1) % n_strings].base
        recomputed = sys.distance(chain.strings[i].end, nxt)
        if abs(recomputed - gap) > tol_eval:
            raise InvalidConfig(
                f"gap {i} = {gap:.3e} disagrees with recomputed {recomputed:.3e}"
            )


@dataclass(frozen=True)
class RescaledChain:
    """Lift sequence after blockwise well-adapted rescaling."""

    lifts: tuple[Lift, ...]
    raw_lifts: tuple[Lift, ...]
    g: np.ndarray
    g_prev: np.ndarray
    ys: np.ndarray
    targets: np.ndarray
    block_starts: np.ndarray


def compose_and_rescale(
    sys: MapSystem, chain: PseudoOrbitChain, cfg: ShadowingConfig
) -> RescaledChain:
    """Concatenate the chain into a lift sequence and rescale blockwise.

    Within each string the co-norms |H_j| form a gamma-quasi-expanding
    string; its well-adapted rescaling c_j with partial products g_j gives
    H~_j = H_j / c_j (uniformly gamma-expanding) and
    phi~_j(v) = phi_j(g_{j-1} v) / g_j.  Since g ends each block at 1, the
    remainder at block boundaries keeps its size <= delta, and inside blocks
    it vanishes.
    """
    if not chain_is_quasi_expanding(chain, cfg.lambda_):
        raise NotQuasiExpanding(
            f"chain is not {cfg.lambda_:g}-quasi-expanding; cannot rescale"
        )
    for i, gap in enumerate(chain.gaps):
        if gap >= cfg.delta:
            raise GapTooLarge(
                f"gap {i} = {gap:.3e} not below delta = {cfg.delta:.3e}"
            )
    ys = np.concatenate([np.asarray(s.points, dtype=float) for s in chain.strings])
    n = ys.size
    lengths = [s.length for s in chain.strings]
    block_starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    targets = np.empty(n)
    targets[:-1] = ys[1:]
    for i, start in enumerate(block_starts):
        end_idx = start + lengths[i] - 1
        if i + 1 < len(lengths):
            targets[end_idx] = ys[block_starts[i + 1]]
        elif chain.cyclic:
            targets[end_idx] = ys[0]
        else:
            targets[end_idx] = float(chain.strings[-1].end) % 1.0

    # the fixed point reaches at most max_gap/sigma from the charts, so the
    # Lipschitz bound need only hold on that ball (the contraction lemma
    # applies verbatim with the smaller radius); this lets piecewise-smooth
    # maps close segments whose points clear derivative kinks by that much
    max_gap = max(chain.gaps, default=0.0)
    ball = min(cfg.r, max(1.5 * max_gap / cfg.sigma, 1e-9))
    raw = tuple(build_lift(sys, ys[j], targets[j], cfg, ball=ball) for j in range(n))

    g = np.empty(n)
    g_prev = np.empty(n)
    rescaled = []
    pos = 0
    for length in lengths:
        block = raw[pos : pos + length]
        conorms = np.array([abs(l.H) for l in block])
        c = well_adapted(PositiveString(conorms, cfg.gamma)).values
        gb = np.cumprod(c)
        for k, lift in enumerate(block):
            j = pos + k
            g[j] = gb[k]
            g_prev[j] = gb[k - 1] if k > 0 else 1.0
            Ht = lift.H / c[k]
            lip_t = lift.lip_phi_bound / c[k]

            def phi_t(v: float, _phi=lift.phi, _gp=g_prev[j], _g=g[j]) -> float:
                return _phi(_gp * v) / _g

            rescaled.append(
                Lift(
                    x=lift.x,
                    y=lift.y,
                    H=Ht,
                    phi=phi_t,
                    phi0=lift.phi0 / g[j],
                    lip_phi_bound=lip_t,
                )
            )
        pos += length

    for j, lift in enumerate(rescaled):
        if abs(lift.H) < 1.0 / cfg.gamma - 1e-9:
            raise ContractionFailed(
                f"rescaled |H| = {abs(lift.H):.6g} below 1/gamma at step {j}"
            )
        if lift.lip_phi_bound > cfg.sigma + 1e-12:
            raise ContractionFailed(
                f"rescaled Lip(phi) = {lift.lip_phi_bound:.3e} exceeds sigma = "
                f"{cfg.sigma:.3e} at step {j} (chart too close to a derivative kink?)"
            )
    return RescaledChain(
        lifts=tuple(rescaled),
        raw_lifts=raw,
        g=g,
        g_prev=g_prev,
        ys=ys,
        targets=targets,
        block_starts=block_starts,
    )


def _inner_solve(h: float, phi, target: float, w0: float, r: float) -> float:
    """Solve w = (target - phi(w)) / h by Picard iteration (contracts since
    Lip(phi)/|h| < 1 under the solver preconditions).

    The stopping threshold sits above the ~1e-16 float noise of chart
    evaluations, or the iteration would chatter forever at the last ulp.
    """
    w = w0
    for _ in range(200):
        w_new = (target - phi(w)) / h
        if w_new > r:
            w_new = r
        elif w_new < -r:
            w_new = -r
        if abs(w_new - w) <= 1e-15:
            return w_new
        w = w_new
    raise ContractionFailed("inner Picard iteration failed to converge")


def solve_contraction(
    lifts: Sequence[Lift],
    cfg: ShadowingConfig,
    v0: Optional[np.ndarray] = None,
    tol_fix: float = TOL_FIX,
    max_iter: int = MAX_ITER,
) -> np.ndarray:
    """Unique fixed point of the cyclic lift sequence, via the inverse-graph
    transform v_j <- H_j^-1 (v_{j+1} - phi_j(v_j)).

    Terminates when successive sweeps differ by less than tol_fix; the
    returned point always satisfies the residual bound 1e-10 and
    |v|_inf <= delta/sigma + 1e-12, else ContractionFailed is raised
    (signalling violated preconditions).
    """
    n = len(lifts)
    v = np.zeros(n) if v0 is None else np.clip(np.asarray(v0, dtype=float), -cfg.r, cfg.r)
    hs = [l.H for l in lifts]
    phis = [l.phi for l in lifts]
    converged = False
    for _ in range(max_iter):
        vn = np.empty(n)
        for j in range(n):
            vn[j] = _inner_solve(hs[j], phis[j], v[(j + 1) % n], v[j], cfg.r)
        diff = float(np.max(np.abs(vn - v)))
        v = vn
        if diff < tol_fix:
            converged = True
            break
    if not converged:
        raise ContractionFailed(f"no convergence within {max_iter} sweeps")
    residual = max(
        abs(hs[j] * v[j] + phis[j](v[j]) - v[(j + 1) % n]) for j in range(n)
    )
    if residual > RESIDUAL_TOL:
        raise ContractionFailed(f"fixed-point residual {residual:.3e} > {RESIDUAL_TOL:g}")
    bound = cfg.delta / cfg.sigma + 1e-12
    if float(np.max(np.abs(v))) > bound:
        raise ContractionFailed(
            f"fixed point escapes the delta/sigma ball: {np.max(np.abs(v)):.3e} > {bound:.3e}"
        )
    return v


@dataclass(frozen=True)
class ShadowResult:
    """A true (periodic) orbit shadowing a pseudo-orbit chain.

    ``orbit_points`` caches the stepwise-verified orbit (iterating the point
    directly would amplify float error by K^period); it stays out of the
    JSON serialization.
    """

    point: float
    period: Optional[int]
    shadow_distance: float
    post_averages: np.ndarray
    config_echo: dict
    orbit_points: Optional[np.ndarray] = None

    @property
    def suffix_min_average(self) -> float:
        return float(self.post_averages.min())

    def to_json_dict(self) -> dict:
        return {
            "period": self.period,
            "point": self.point,
            "shadow_distance": self.shadow_distance,
            "suffix_min_average": self.suffix_min_average,
            "config_echo": self.config_echo,
        }


def _orbit_from_charts(sys: MapSystem, ys: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (ys + v) % 1.0


def _verify_shadow(
    sys: MapSystem,
    cfg: ShadowingConfig,
    zs: np.ndarray,
    v: np.ndarray,
    cyclic: bool,
) -> None:
    n = zs.size
    if float(np.max(np.abs(v))) > cfg.epsilon:
        raise AssertionError("shadowing conclusion violated: |v| exceeds epsilon")
    last = n if cyclic else n - 1
    for j in range(last):
        step_err = circle_dist(sys.step(zs[j]), zs[(j + 1) % n])
        if step_err > RESIDUAL_TOL:
            raise AssertionError(
                f"orbit step residual {step_err:.3e} at {j} exceeds {RESIDUAL_TOL:g}"
            )


def close_periodic(
    sys: MapSystem, chain: PseudoOrbitChain, cfg: ShadowingConfig
) -> ShadowResult:
    """Close a cyclic quasi-expanding pseudo-orbit chain into a true periodic
    orbit of period sum(n_i).

    The returned orbit epsilon-shadows the concatenated pseudo-orbit and its
    suffix averages of log co-norm all clear lambda - epsilon; both are
    verified on every run.  Periodicity is certified stepwise through the
    chart residuals (a direct f^tau check would amplify float error by K^tau,
    so it is run only when K^tau keeps that amplification below tolerance).
    """
    if not chain.cyclic:
        raise InvalidConfig("close_periodic needs a cyclic chain")
    resc = compose_and_rescale(sys, chain, cfg)
    vtil = solve_contraction(resc.lifts, cfg)
    v = resc.g_prev * vtil
    n = v.size
    residual = max(
        abs(resc.raw_lifts[j].H * v[j] + resc.raw_lifts[j].phi(v[j]) - v[(j + 1) % n])
        for j in range(n)
    )
    if residual > RESIDUAL_TOL:
        raise ContractionFailed(
            f"descaled residual {residual:.3e} exceeds {RESIDUAL_TOL:g}"
        )
    zs = _orbit_from_charts(sys, resc.ys, v)
    _verify_shadow(sys, cfg, zs, v, cyclic=True)
    if n * math.log(sys.lipschitz_bound) <= math.log(TOL_PER / 1e-13):
        direct = sys.distance(sys.iterate(float(zs[0]), n), float(zs[0]))
        if direct > TOL_PER:
            raise AssertionError(f"direct periodicity check failed: {direct:.3e}")
    inc = np.log(np.abs(np.array([sys.deriv(float(z)) for z in zs])))
    post = suffix_averages(inc)
    if float(post.min()) < cfg.lambda_ - cfg.epsilon - 1e-12:
        raise AssertionError(
            "suffix-average conclusion violated: "
            f"{post.min():.6g} < lambda - epsilon = {cfg.lambda_ - cfg.epsilon:.6g}"
        )
    return ShadowResult(
        point=float(zs[0]),
        period=n,
        shadow_distance=float(np.max(np.abs(v))),
        post_averages=post,
        config_echo=cfg.to_dict(),
        orbit_points=zs,
    )


def shadow_finite(
    sys: MapSystem, chain: PseudoOrbitChain, cfg: ShadowingConfig
) -> ShadowResult:
    """Shadow a finite (non-cyclic) chain by a true orbit segment.

    Backward substitution through the rescaled lifts solves the finite
    window exactly in one sweep: the last chart displacement is pinned to 0
    and each earlier one follows from the inverse-graph relation.
    """
    if chain.cyclic:
        raise InvalidConfig("shadow_finite needs a non-cyclic chain")
    resc = compose_and_rescale(sys, chain, cfg)
    n = len(resc.lifts)
    vtil = np.zeros(n + 1)
    for j in range(n - 1, -1, -1):
        vtil[j] = _inner_solve(
            resc.lifts[j].H, resc.lifts[j].phi, vtil[j + 1], 0.0, cfg.r
        )
    g_prev = np.concatenate((resc.g_prev, [1.0]))
    v = g_prev * vtil
    ys_ext = np.concatenate((resc.ys, [float(chain.strings[-1].end) % 1.0]))
    zs = _orbit_from_charts(sys, ys_ext, v)
    _verify_shadow(sys, cfg, zs, v, cyclic=False)
    inc = np.log(np.abs(np.array([sys.deriv(float(z)) for z in zs[:-1]])))
    return ShadowResult(
        point=float(zs[0]),
        period=None,
        shadow_distance=float(np.max(np.abs(v))),
        post_averages=suffix_averages(inc),
        config_echo=cfg.to_dict(),
        orbit_points=zs,
    )

"""End-to-end procedures: periodic-repeller search, the abnormal-orbit
verifier, and uniform-expansion constant fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._accel import kernels
from .dynamics import OrbitString, _prefix_log_conorms, check_periodic, orbit_string
from .errors import (
    BadParameters,
    ContractionFailed,
    GapTooLarge,
    NoHyperbolicTimes,
    NoRecurrence,
    NotGammaString,
    NotQuasiExpanding,
)
from .maps import MapSystem, iterate_map
from .shadowing import (
    PseudoOrbitChain,
    ShadowingConfig,
    ShadowResult,
    close_periodic,
    plan_shadowing_config,
)
from .strings import RealString, pliss_sift, suffix_averages


def directed_hausdorff_circle(points: np.ndarray, support: np.ndarray) -> float:
    """max over points of the circle distance to the nearest support point."""
    sup = np.sort(np.asarray(support, dtype=float) % 1.0)
    pts = np.asarray(points, dtype=float) % 1.0
    idx = np.searchsorted(sup, pts)
    lo = sup[(idx - 1) % sup.size]
    hi = sup[idx % sup.size]
    d_lo = np.abs(pts - lo) % 1.0
    d_lo = np.minimum(d_lo, 1.0 - d_lo)
    d_hi = np.abs(pts - hi) % 1.0
    d_hi = np.minimum(d_hi, 1.0 - d_hi)
    return float(np.minimum(d_lo, d_hi).max())


@dataclass(frozen=True)
class RepellerRecord:
    """One closed periodic repeller with its provenance pair."""

    result: ShadowResult
    nprime: int
    ndouble: int
    gap: float
    hausdorff: float

    @property
    def period(self) -> int:
        return self.result.period

    @property
    def point(self) -> float:
        return self.result.point

    @property
    def indicator(self) -> float:
        return self.result.suffix_min_average


@dataclass(frozen=True)
class RepellerSearchReport:
    """Full record of a repeller search run.

    ``repellers`` is sorted by (period, point); ``hausdorff_trace[k]`` is the
    best (smallest) directed Hausdorff distance to the seed orbit's empirical
    support among the first k+1 repellers in that order, tracking the
    convergence of the family.
    """

    map_name: str
    seed: float
    horizon: int
    power: int
    gammas: tuple[float, float, float]
    tau_min: int
    config_echo: dict
    pairs_considered: int
    repellers: tuple[RepellerRecord, ...]
    hausdorff_trace: tuple[float, ...]
    skipped: tuple[dict, ...]

    def to_json_dict(self) -> dict:
        return {
            "map": self.map_name,
            "seed": self.seed,
            "horizon": self.horizon,
            "power": self.power,
            "gammas": {
                "gamma": self.gammas[0],
                "gamma_prime": self.gammas[1],
                "gamma_double_prime": self.gammas[2],
            },
            "tau_min": self.tau_min,
            "config_echo": self.config_echo,
            "pairs_considered": self.pairs_considered,
            "repellers": [
                {
                    "period": r.period,
                    "point": r.point,
                    "indicator": r.indicator,
                    "shadow_distance": r.result.shadow_distance,
                    "hausdorff": r.hausdorff,
                    "nprime": r.nprime,
                    "ndouble": r.ndouble,
                    "gap": r.gap,
                }
                for r in self.repellers
            ],
            "hausdorff_trace": list(self.hausdorff_trace),
            "skipped": list(self.skipped),
        }

    def to_csv_rows(self) -> list[dict]:
        return [
            {
                "period": r.period,
                "point": r.point,
                "indicator": r.indicator,
                "shadow_distance": r.result.shadow_distance,
                "hausdorff": r.hausdorff,
            }
            for r in self.repellers
        ]


def default_repeller_config(
    sys: MapSystem, gammas, power: int = 1, epsilon: Optional[float] = None
) -> ShadowingConfig:
    """Plan a shadowing config matched to a repeller search: lambda is the
    middle gamma, epsilon stays below gamma' - gamma'' so certificates clear
    the indicator."""
    g, gp, gpp = gammas
    if not g > gp > gpp > 0:
        raise BadParameters("need gamma > gamma' > gamma'' > 0")
    work = iterate_map(sys, power)
    if epsilon is None:
        epsilon = 0.25 * (gp - gpp) * power
    return plan_shadowing_config(work, lambda_=gp * power, epsilon=epsilon)


def find_repellers(
    sys: MapSystem,
    x: float,
    horizon: int,
    gammas,
    cfg: ShadowingConfig,
    max_repellers: int = 8,
    tau_min: int = 3,
    power: int = 1,
    max_workers: int = 1,
) -> RepellerSearchReport:
    """Extract periodic repellers along a seed orbit.

    The procedure: (1) run the orbit to the horizon; (2) Pliss-sift its log
    co-norm string at (gamma, gamma'); (3) pair sifted times n' < n'' with
    n'/(n''-n') <= 1/2 and circle gap below delta, keeping the smallest gap
    per period; (4) close each paired segment into a true periodic orbit;
    (5) record directed Hausdorff distances to the seed orbit's support.

    With ``power`` = kappa the whole procedure runs on f^kappa and the gammas
    are interpreted per step of f (thresholds scale by kappa internally).
    """
    g, gp, gpp = gammas
    if not g > gp > gpp > 0:
        raise BadParameters("need gamma > gamma' > gamma'' > 0")
    if sys.domain != "circle":
        raise BadParameters("repeller search needs a circle map")
    work = iterate_map(sys, power)
    gs, gps, gpps = g * power, gp * power, gpp * power
    if cfg.lambda_ > gps + 1e-12:
        raise BadParameters("cfg.lambda must not exceed gamma' (scaled)")
    if cfg.lambda_ - cfg.epsilon < gpps - 1e-12:
        raise BadParameters(
            "cfg.lambda - cfg.epsilon must clear gamma'' (scaled) so the "
            "closed orbits certify the indicator"
        )

    orbit = orbit_string(work, x, horizon)
    points_ext = np.append(np.asarray(orbit.points, dtype=float), float(orbit.end))
    bound = max(math.log(work.lipschitz_bound), float(np.abs(orbit.increments).max()))
    rs = RealString(orbit.increments, bound)
    try:
        sift = pliss_sift(rs, gs, gps)
    except NotGammaString as e:
        raise NoHyperbolicTimes(
            f"seed orbit mean {rs.mean():.6g} below gamma {gs:.6g}: {e}"
        ) from e
    if sift.count() == 0:
        raise NoHyperbolicTimes("Pliss sift returned no hyperbolic times")

    mask = np.zeros(horizon + 1, dtype=bool)
    mask[sift.indices] = True
    taus, nprimes, gaps = kernels.best_pairs_per_period(
        points_ext, mask, cfg.delta, tau_min
    )
    if taus.size == 0:
        raise NoRecurrence(
            f"no sifted recurrence pair with gap < delta = {cfg.delta:.3e}; "
            "try a longer horizon"
        )

    support = points_ext

    def attempt(pair):
        tau, npv, gap = pair
        tau, npv = int(tau), int(npv)
        seg = _slice_orbit(orbit, points_ext, npv, tau)
        chain = PseudoOrbitChain(strings=(seg,), gaps=(float(gap),), cyclic=True)
        try:
            res = close_periodic(work, chain, cfg)
        except (ContractionFailed, GapTooLarge, NotQuasiExpanding, AssertionError) as e:
            return {"period": tau, "nprime": npv, "reason": str(e)}
        if res.suffix_min_average < gpps - 1e-12:
            return {"period": tau, "nprime": npv, "reason": "indicator below gamma''"}
        zs = _closed_orbit_points(res, seg)
        return RepellerRecord(
            result=res,
            nprime=npv,
            ndouble=npv + tau,
            gap=float(gap),
            hausdorff=directed_hausdorff_circle(zs, support),
        )

    # independent pairs may close concurrently; outcomes are consumed in tau
    # order and extras past the cap are dropped, so the report is identical
    # whatever the worker count
    pairs = list(zip(taus, nprimes, gaps))
    workers = max(1, int(max_workers))
    records: list[RepellerRecord] = []
    skipped: list[dict] = []
    idx = 0
    while idx < len(pairs) and len(records) < max_repellers:
        batch = pairs[idx : idx + workers]
        idx += len(batch)
        if workers == 1 or len(batch) == 1:
            outcomes = [attempt(p) for p in batch]
        else:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=workers) as ex:
                outcomes = list(ex.map(attempt, batch))
        for out in outcomes:
            if len(records) >= max_repellers:
                break
            if isinstance(out, RepellerRecord):
                records.append(out)
            else:
                skipped.append(out)

    records.sort(key=lambda r: (r.period, r.point))
    trace = []
    best = math.inf
    for r in records:
        best = min(best, r.hausdorff)
        trace.append(best)
    return RepellerSearchReport(
        map_name=sys.name,
        seed=float(x),
        horizon=horizon,
        power=power,
        gammas=(g, gp, gpp),
        tau_min=tau_min,
        config_echo=cfg.to_dict(),
        pairs_considered=int(taus.size),
        repellers=tuple(records),
        hausdorff_trace=tuple(trace),
        skipped=tuple(skipped),
    )


def _slice_orbit(orbit, points_ext: np.ndarray, nprime: int, tau: int):
    """View the segment (x_{n'}, f^tau(x_{n'})) of an already-computed orbit
    as an orbit string (no float re-iteration)."""
    return OrbitString(
        base=float(points_ext[nprime]),
        length=tau,
        increments=orbit.increments[nprime : nprime + tau].copy(),
        points=points_ext[nprime : nprime + tau].copy(),
        end=float(points_ext[nprime + tau]),
    )


def _closed_orbit_points(res: ShadowResult, seg) -> np.ndarray:
    """Orbit points of the closed repeller, recovered from the shadowed
    pseudo-orbit (stepwise-correct; avoids re-iterating floats)."""
    if res.orbit_points is not None:
        return np.asarray(res.orbit_points)
    return np.asarray(seg.points)


@dataclass(frozen=True)
class AbnormalVerdict:
    """Two independent verdicts of the abnormal-inequality check."""

    mean_below: bool
    suffixes_above: bool
    mean: float
    min_suffix: float
    period: int
    point: float

    @property
    def abnormal(self) -> bool:
        return self.mean_below and self.suffixes_above

    def __iter__(self):
        return iter((self.mean_below, self.suffixes_above))

    def to_json_dict(self) -> dict:
        return {
            "mean_below": self.mean_below,
            "suffixes_above": self.suffixes_above,
            "abnormal": self.abnormal,
            "mean": self.mean,
            "min_suffix": self.min_suffix,
            "period": self.period,
            "point": self.point,
        }


def verify_abnormal(
    sys: MapSystem,
    p,
    tau: int,
    gamma_prime: float,
    gamma_double_prime: float,
    tol_per: float = 1e-9,
) -> AbnormalVerdict:
    """Check the abnormal-inequality pair on a periodic orbit: full-period
    mean log co-norm strictly below gamma'' while every suffix average stays
    strictly above gamma'."""
    if not 0 < gamma_prime < gamma_double_prime:
        raise BadParameters("need 0 < gamma' < gamma''")
    check_periodic(sys, p, tau, tol_per)
    inc = orbit_string(sys, p, tau).increments
    mean = float(inc.mean())
    min_suffix = float(suffix_averages(inc).min())
    return AbnormalVerdict(
        mean_below=mean < gamma_double_prime,
        suffixes_above=min_suffix > gamma_prime,
        mean=mean,
        min_suffix=min_suffix,
        period=tau,
        point=float(p) if sys.domain == "circle" else p,
    )


@dataclass(frozen=True)
class ExpansionFit:
    """Largest (C, lambda) with log conorm(D_x f^k) >= log C + k lambda on
    the sample, under the C >= 1 normalization that makes lambda
    identifiable at finite horizons."""

    C: float
    lam: float
    diagnostic: Optional[str]
    k_max: int

    def to_json_dict(self) -> dict:
        return {
            "C": self.C,
            "lambda": self.lam,
            "diagnostic": self.diagnostic,
            "k_max": self.k_max,
        }


def estimate_expansion_constants(
    sys: MapSystem, points, k_max: int, grid_size: int = 1000
) -> ExpansionFit:
    """Fit uniform-expansion constants over the supplied points.

    lambda is the largest grid value in [0, log K] not exceeding the worst
    per-step growth rate min_{x,k} L(x,k)/k (ties toward larger lambda);
    C = exp(min (L - k lambda)) >= 1.  When the worst rate is <= 0 the fit
    degenerates and the raw rate is returned with a diagnostic, signalling
    failure of uniform expansion on the sample.
    """
    if not points:
        raise BadParameters("need at least one sample point")
    if k_max < 1:
        raise BadParameters("k_max must be >= 1")
    ks = np.arange(1, k_max + 1)
    L = np.vstack([_prefix_log_conorms(sys, p, k_max) for p in points])
    lam_raw = float((L / ks).min())
    if lam_raw <= 0.0:
        return ExpansionFit(
            C=1.0,
            lam=lam_raw,
            diagnostic=(
                "no positive-lambda fit exists on the sample: worst per-step "
                f"rate is {lam_raw:.6g}"
            ),
            k_max=k_max,
        )
    log_K = math.log(sys.lipschitz_bound)
    grid = np.linspace(0.0, log_K, grid_size)
    feasible = grid[grid <= lam_raw + 1e-12]
    lam_fit = float(feasible[-1]) if feasible.size else 0.0
    C = float(np.exp((L - ks * lam_fit).min()))
    return ExpansionFit(C=C, lam=lam_fit, diagnostic=None, k_max=k_max)


def search_abnormal(
    sys: MapSystem,
    gamma_prime: float,
    gamma_double_prime: float,
    horizon: int = 4096,
    attempts: int = 8,
    tau_min: int = 3,
    seed: int = 0,
) -> list[AbnormalVerdict]:
    """Random-restart search for abnormal periodic orbits (no completeness
    claim): close recurrent quasi-expanding segments whose mean sits below
    gamma'' and keep those the verifier confirms."""
    if not 0 < gamma_prime < gamma_double_prime:
        raise BadParameters("need 0 < gamma' < gamma''")
    margin = gamma_double_prime - gamma_prime
    lam = gamma_prime + 0.25 * margin
    eps = min(0.1 * margin, 0.05)
    cfg = plan_shadowing_config(sys, lambda_=lam, epsilon=eps)
    rng = np.random.default_rng(seed)
    hits = []
    for _ in range(attempts):
        x = float(rng.random())
        orbit = orbit_string(sys, x, horizon)
        points_ext = np.append(np.asarray(orbit.points, dtype=float), float(orbit.end))
        flags = kernels.pliss_prefix_flags(orbit.increments, lam)
        mask = np.zeros(horizon + 1, dtype=bool)
        mask[np.nonzero(flags)[0] + 1] = True
        taus, nprimes, gaps = kernels.best_pairs_per_period(
            points_ext, mask, cfg.delta, tau_min
        )
        csum = np.concatenate(([0.0], np.cumsum(orbit.increments)))
        for tau, npv, gap in zip(taus, nprimes, gaps):
            tau, npv = int(tau), int(npv)
            seg_mean = (csum[npv + tau] - csum[npv]) / tau
            if seg_mean >= gamma_double_prime - 2.0 * eps:
                continue
            seg = _slice_orbit(orbit, points_ext, npv, tau)
            chain = PseudoOrbitChain(strings=(seg,), gaps=(float(gap),), cyclic=True)
            try:
                res = close_periodic(sys, chain, cfg)
            except (ContractionFailed, GapTooLarge, NotQuasiExpanding, AssertionError):
                continue
            # judge abnormality on the stepwise-verified orbit; re-iterating
            # the point for tau steps would amplify float error by K^tau
            inc = np.log(
                np.abs([sys.deriv(float(z)) for z in np.asarray(res.orbit_points)])
            )
            mean = float(inc.mean())
            min_suffix = float(suffix_averages(inc).min())
            verdict = AbnormalVerdict(
                mean_below=mean < gamma_double_prime,
                suffixes_above=min_suffix > gamma_prime,
                mean=mean,
                min_suffix=min_suffix,
                period=res.period,
                point=res.point,
            )
            if verdict.abnormal:
                hits.append(verdict)
    return hits

"""Configuration-driven experiment runner.

Subcommands: sift, shadow, close, repellers, verify-abnormal, expansion-fit,
kingman, compare.  Flat key=value config files supply defaults; CLI flags
win.  Exit status: 0 success, 2 validation error, 3 solver error (compare
exits 1 when reports differ beyond tolerance).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .dynamics import kingman_doubling_average, random_word
from .errors import (
    BadParameters,
    DepthTooLarge,
    DepthTooSmall,
    HypothesesNotMet,
    InvalidConfig,
    NotGammaString,
    NotPeriodic,
    SchemaMismatch,
    SiftShadowError,
)
from .maps import ShiftPoint, iterate_map, make_map
from .pipeline import (
    default_repeller_config,
    estimate_expansion_constants,
    find_repellers,
    verify_abnormal,
)
from .reporting import (
    compare_reports,
    dump_csv,
    dump_report,
    load_report,
    validate_report,
)
from .shadowing import (
    chain_from_bases,
    close_periodic,
    plan_shadowing_config,
    shadow_finite,
)
from .strings import RealString, pliss_sift

VALIDATION_ERRORS = (
    BadParameters,
    InvalidConfig,
    SchemaMismatch,
    NotPeriodic,
    NotGammaString,
    HypothesesNotMet,
    DepthTooSmall,
    DepthTooLarge,
)

_NAMED_POINTS = {
    "sqrt2-1": math.sqrt(2.0) - 1.0,
    "golden": (math.sqrt(5.0) - 1.0) / 2.0,
    "pi-3": math.pi - 3.0,
}


def parse_point(s: str) -> float:
    s = s.strip()
    if s in _NAMED_POINTS:
        return _NAMED_POINTS[s]
    if "/" in s:
        num, den = s.split("/", 1)
        return float(Fraction(int(num), int(den)) % 1)
    return float(s) % 1.0


def parse_floats(s: str) -> list[float]:
    return [float(tok) for tok in s.split(",") if tok.strip()]


def parse_ints(s: str) -> list[int]:
    return [int(tok) for tok in s.split(",") if tok.strip()]


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="deterministic RNG seed")
    common.add_argument(
        "--power", type=int, default=1, help="run the procedure on f^power"
    )
    common.add_argument("-o", "--output", default=None, help="report file path")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--config", default=None, help="flat key=value config file")
    return common


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="siftshadow",
        description="Sifting and shadowing experiments on expanding circle maps",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)
    tab = {}

    p = subs.add_parser("sift", parents=[common], help="Pliss sift a real string")
    p.add_argument("--values", help="comma-separated reals")
    p.add_argument("--H", dest="H", type=float, help="bound on |a_i|")
    p.add_argument("--gamma", type=float)
    p.add_argument("--gamma-prime", type=float)
    tab["sift"] = p

    for name, helptext in (
        ("shadow", "shadow a finite pseudo-orbit chain"),
        ("close", "close a cyclic pseudo-orbit chain into a periodic orbit"),
    ):
        p = subs.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--map", help="map spec, e.g. pl_tent(3,1.5)")
        p.add_argument("--chain", default=None, help="JSON file with bases/lengths")
        p.add_argument("--bases", default=None, help="comma-separated base points")
        p.add_argument("--lengths", default=None, help="comma-separated string lengths")
        p.add_argument("--lambda", dest="lam", type=float, default=0.5)
        p.add_argument("--epsilon", type=float, default=0.01)
        tab[name] = p

    p = subs.add_parser("repellers", parents=[common], help="periodic repeller search")
    p.add_argument("--map")
    p.add_argument("--point", default=None, help="seed point (float, p/q, or sqrt2-1)")
    p.add_argument("--horizon", type=int, default=10000)
    p.add_argument("--gammas", help="gamma,gamma',gamma''")
    p.add_argument("--max-repellers", type=int, default=8)
    p.add_argument("--tau-min", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=None, help="planner epsilon override")
    tab["repellers"] = p

    p = subs.add_parser("verify-abnormal", parents=[common], help="abnormal-inequality check")
    p.add_argument("--map")
    p.add_argument("--point")
    p.add_argument("--tau", type=int)
    p.add_argument("--gamma-prime", type=float)
    p.add_argument("--gamma-double-prime", type=float)
    tab["verify-abnormal"] = p

    p = subs.add_parser("expansion-fit", parents=[common], help="uniform-expansion constant fit")
    p.add_argument("--map")
    p.add_argument("--k-max", type=int)
    p.add_argument("--points", default=None, help="comma-separated sample points")
    p.add_argument(
        "--auto-repellers",
        action="store_true",
        help="sample the points from a repeller search",
    )
    p.add_argument("--horizon", type=int, default=10000)
    p.add_argument("--gammas", default=None, help="needed with --auto-repellers")
    tab["expansion-fit"] = p

    p = subs.add_parser("kingman", parents=[common], help="doubling-scale subadditive averages")
    p.add_argument("--map")
    p.add_argument("--point", default=None, help="circle seed point")
    p.add_argument("--word", default=None, help="explicit cocycle word, e.g. 0,1")
    p.add_argument("--t1", type=int, default=1)
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--blocks", type=int, default=64)
    tab["kingman"] = p

    p = subs.add_parser("compare", parents=[common], help="diff two reports with tolerances")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument(
        "--tol",
        action="append",
        default=[],
        metavar="FIELD=TOL",
        help="per-field numeric tolerance (repeatable)",
    )
    p.add_argument("--tol-default", type=float, default=0.0)
    tab["compare"] = p

    return parser, tab


def load_config_file(path: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    try:
        with open(path, "r") as fh:
            lines = fh.readlines()
    except OSError as e:
        raise BadParameters(f"cannot read config {path}: {e}") from e
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise BadParameters(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def _apply_config(parser, sub, entries: dict, argv: list[str]):
    actions = {a.dest: a for a in sub._actions}
    unknown = sorted(set(entries) - set(actions))
    if unknown:
        raise BadParameters(f"unknown config keys: {', '.join(unknown)}")
    typed = {}
    for key, value in entries.items():
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            typed[key] = value.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                typed[key] = action.type(value)
            except ValueError as e:
                raise BadParameters(f"config key {key}: {e}") from e
        else:
            typed[key] = value
    sub.set_defaults(**typed)
    return parser.parse_args(argv)


def _emit(args, payload: dict, summary: list[str]) -> None:
    for line in summary:
        print(line)
    if args.output:
        if args.format == "json":
            text = dump_report(payload)
        else:
            validate_report(payload)
            text = dump_csv(payload)
        with open(args.output, "w") as fh:
            fh.write(text)
        print(f"wrote {args.output}")


def _build_chain(sys_map, args, cyclic: bool):
    if args.chain:
        with open(args.chain, "r") as fh:
            spec = json.load(fh)
        bases = [parse_point(str(b)) if isinstance(b, str) else float(b) for b in spec["bases"]]
        lengths = [int(k) for k in spec["lengths"]]
    elif args.bases and args.lengths:
        bases = [parse_point(tok) for tok in args.bases.split(",") if tok.strip()]
        lengths = parse_ints(args.lengths)
    else:
        raise BadParameters("provide --chain FILE or --bases/--lengths")
    if len(bases) != len(lengths):
        raise BadParameters("bases and lengths must have equal length")
    return chain_from_bases(sys_map, bases, lengths, cyclic=cyclic)


def run_sift(args) -> int:
    values = np.array(parse_floats(args.values))
    s = RealString(values, args.H)
    res = pliss_sift(s, args.gamma, args.gamma_prime)
    indices = [int(i) for i in res.indices]
    print("indices: " + ",".join(str(i) for i in indices))
    payload = {
        "kind": "sift",
        "version": __version__,
        "values": s.to_json_array(),
        "H": args.H,
        "gamma": args.gamma,
        "gamma_prime": args.gamma_prime,
        "indices": indices,
        "count": res.count(),
        "pliss_constant": res.pliss_constant,
        "pliss_threshold": res.pliss_threshold,
    }
    _emit(args, payload, [])
    return 0


def run_shadow_or_close(args, cyclic: bool) -> int:
    base_map = make_map(args.map)
    work = iterate_map(base_map, args.power)
    cfg = plan_shadowing_config(work, lambda_=args.lam * args.power, epsilon=args.epsilon)
    chain = _build_chain(work, args, cyclic)
    res = close_periodic(work, chain, cfg) if cyclic else shadow_finite(work, chain, cfg)
    body = res.to_json_dict()
    payload = {"kind": "shadow", "version": __version__, "map": base_map.name, **body}
    summary = [
        f"point: {res.point:.12g}",
        f"period: {res.period}",
        f"shadow_distance: {res.shadow_distance:.3e}",
        f"suffix_min_average: {res.suffix_min_average:.6g}",
    ]
    _emit(args, payload, summary)
    return 0


def run_repellers(args) -> int:
    base_map = make_map(args.map)
    gammas = tuple(parse_floats(args.gammas))
    if len(gammas) != 3:
        raise BadParameters("--gammas needs exactly three values")
    if args.point is None:
        x = float(np.random.default_rng(args.seed).random())
    else:
        x = parse_point(args.point)
    cfg = default_repeller_config(base_map, gammas, power=args.power, epsilon=args.epsilon)
    workers = int(os.environ.get("SIFTSHADOW_THREADS", "1") or "1")
    report = find_repellers(
        base_map,
        x,
        args.horizon,
        gammas,
        cfg,
        max_repellers=args.max_repellers,
        tau_min=args.tau_min,
        power=args.power,
        max_workers=workers,
    )
    payload = {"kind": "repellers", "version": __version__, **report.to_json_dict()}
    periods = [r.period for r in report.repellers]
    summary = [
        f"repellers found: {len(periods)} (periods {periods})",
        f"pairs considered: {report.pairs_considered}",
    ]
    _emit(args, payload, summary)
    return 0


def run_verify_abnormal(args) -> int:
    base_map = make_map(args.map)
    work = iterate_map(base_map, args.power)
    verdict = verify_abnormal(
        work,
        parse_point(args.point),
        args.tau,
        args.gamma_prime * args.power,
        args.gamma_double_prime * args.power,
    )
    payload = {
        "kind": "abnormal",
        "version": __version__,
        "map": base_map.name,
        "gamma_prime": args.gamma_prime,
        "gamma_double_prime": args.gamma_double_prime,
        **verdict.to_json_dict(),
    }
    summary = [
        f"mean_below: {verdict.mean_below} (mean {verdict.mean:.6g})",
        f"suffixes_above: {verdict.suffixes_above} (min suffix {verdict.min_suffix:.6g})",
        f"abnormal: {verdict.abnormal}",
    ]
    _emit(args, payload, summary)
    return 0


def run_expansion_fit(args) -> int:
    base_map = make_map(args.map)
    work = iterate_map(base_map, args.power)
    if args.points:
        points = [parse_point(tok) for tok in args.points.split(",") if tok.strip()]
    elif args.auto_repellers:
        if not args.gammas:
            raise BadParameters("--auto-repellers needs --gammas")
        gammas = tuple(parse_floats(args.gammas))
        cfg = default_repeller_config(base_map, gammas, power=args.power)
        rep = find_repellers(
            base_map, float(np.random.default_rng(args.seed).random()),
            args.horizon, gammas, cfg, power=args.power,
        )
        points = [r.point for r in rep.repellers]
        if not points:
            raise BadParameters("repeller search produced no sample points")
    else:
        points = [(i + 0.382) / 16.0 for i in range(16)]
    fit = estimate_expansion_constants(work, points, args.k_max)
    payload = {
        "kind": "expansion_fit",
        "version": __version__,
        "map": base_map.name,
        "points": points,
        **fit.to_json_dict(),
    }
    summary = [f"C={fit.C:.12g} lambda={fit.lam:.12g}"]
    if fit.diagnostic:
        summary.append(f"diagnostic: {fit.diagnostic}")
    _emit(args, payload, summary)
    return 0


def run_kingman(args) -> int:
    base_map = make_map(args.map)
    work = iterate_map(base_map, args.power)
    point_field = None
    word_len = None
    if work.domain == "circle":
        x = parse_point(args.point) if args.point else float(
            np.random.default_rng(args.seed).random()
        )
        point_field = x
    else:
        total = args.t1 * 2 ** (args.levels - 1) * args.blocks
        if args.word:
            from .maps import Word

            cycle = tuple(parse_ints(args.word))
            word = Word((), cycle)
        else:
            word = random_word(np.random.default_rng(args.seed), total)
        word_len = len(word.cycle)
        x = ShiftPoint(word, 0)
    estimates = kingman_doubling_average(work, x, args.t1, args.levels, args.blocks)
    payload = {
        "kind": "kingman",
        "version": __version__,
        "map": base_map.name,
        "point": point_field,
        "word_length": word_len,
        "t1": args.t1,
        "levels": args.levels,
        "blocks": args.blocks,
        "estimates": [
            {"value": e.value, "horizon": e.horizon, "scheme": e.scheme}
            for e in estimates
        ],
    }
    summary = [
        f"level {i}: t={e.horizon} value={e.value:.12g}"
        for i, e in enumerate(estimates)
    ]
    _emit(args, payload, summary)
    return 0


def run_compare(args) -> int:
    tolerances = {}
    for item in args.tol:
        if "=" not in item:
            raise BadParameters(f"--tol expects FIELD=TOL, got {item!r}")
        key, val = item.split("=", 1)
        tolerances[key.strip()] = float(val)
    a = load_report(args.report_a)
    b = load_report(args.report_b)
    diffs = compare_reports(a, b, tolerances, args.tol_default)
    if not diffs:
        print("reports match within tolerance")
        return 0
    print(f"{len(diffs)} field(s) differ:")
    for d in diffs:
        tol = d.get("tol")
        suffix = f" (tol {tol:g})" if tol is not None else ""
        print(f"  {d['path']}: {d['a']!r} != {d['b']!r}{suffix}")
    return 1


_RUNNERS = {
    "sift": run_sift,
    "shadow": lambda a: run_shadow_or_close(a, cyclic=False),
    "close": lambda a: run_shadow_or_close(a, cyclic=True),
    "repellers": run_repellers,
    "verify-abnormal": run_verify_abnormal,
    "expansion-fit": run_expansion_fit,
    "kingman": run_kingman,
    "compare": run_compare,
}

# required per subcommand, enforced after the config file is merged in
_REQUIRED = {
    "sift": ("values", "H", "gamma", "gamma_prime"),
    "shadow": ("map",),
    "close": ("map",),
    "repellers": ("map", "gammas"),
    "verify-abnormal": ("map", "point", "tau", "gamma_prime", "gamma_double_prime"),
    "expansion-fit": ("map", "k_max"),
    "kingman": ("map",),
    "compare": (),
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, tab = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            entries = load_config_file(args.config)
            args = _apply_config(parser, tab[args.command], entries, argv)
        missing = [
            f"--{name.replace('_', '-')}"
            for name in _REQUIRED[args.command]
            if getattr(args, name, None) is None
        ]
        if missing:
            raise BadParameters(
                f"{args.command}: missing required arguments: {', '.join(missing)}"
            )
        return _RUNNERS[args.command](args)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    except VALIDATION_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SiftShadowError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

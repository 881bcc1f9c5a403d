"""Command-line entry point: ``delayfront <command> [options]``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical abort,
4 certificate infeasible where feasibility was required.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import artifacts
from .dispersion import (
    Params,
    certify_stability,
    char_roots,
    crossover_delay,
    hutchinson_bound,
    iter_flagged,
    kappa_crit,
    lattice,
    q_eval,
    region_map,
    uniqueness_threshold,
)
from .evolution import CFLError, EvolutionConfig, NumericalAbort, run
from .grid import Grid
from .norms import (
    WeightedSeries,
    default_window,
    fit_decay_rate,
    initial_K,
    norm_probe,
    verify_iterative_bound,
)
from .picard import Bump, NonContractionError, compare_with_evolution, gaussian, picard_solve
from .profile import ProfileError, align_profiles, compute_profile, discrete_profile, tail_start

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class Infeasible(RuntimeError):
    pass


def _sup_bound(value: str, p: Params) -> float:
    if value == "auto":
        return hutchinson_bound(p)
    try:
        x = float(value)
    except ValueError:
        raise ConfigError(f"--sup-bound must be 'auto' or a number, got {value!r}") from None
    if not (math.isfinite(x) and x > 0):
        raise ConfigError("--sup-bound must be positive")
    return x


def _params(args) -> Params:
    try:
        p = Params(args.c, args.h)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    char_roots(p)  # subcritical speeds fail here, before any work
    return p


def _config(args) -> dict:
    skip = {"func", "config", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, summary: dict) -> None:
    sys.stdout.write(artifacts.dumps(summary))


# commands -----------------------------------------------------------------

def cmd_profile(args) -> int:
    p = _params(args)
    if args.amplitude <= 0:
        raise ConfigError("--amplitude must be positive")
    prof = compute_profile(p, args.amplitude, args.depth, args.dz, args.length)
    out = artifacts.run_dir(args.out, "profile", _config(args))
    artifacts.write_json(out / "config.json", _config(args))
    artifacts.write_profile(prof, out)
    v = prof.values
    _emit(args, {"dir": str(out), "sup": float(v.max()), "exp_ch": hutchinson_bound(p),
                 "phi_end": float(v[-1]), "tail": prof.tail.to_dict(),
                 "ode_residual": prof.ode_residual})
    return EXIT_OK


def _lambda(args, p: Params) -> float:
    return p.c / 2 if args.lam is None else args.lam


def cmd_certify(args) -> int:
    p = _params(args)
    lam = _lambda(args, p)
    bound = _sup_bound(args.sup_bound, p)
    try:
        cert = certify_stability(p, lam, bound)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    report = cert.to_dict()
    report["params"] = {"c": p.c, "h": p.h}
    if p.c < 2 * math.sqrt(2):
        report["crossover_delay"] = crossover_delay(p.c)
    out = artifacts.run_dir(args.out, "certify", _config(args))
    artifacts.write_json(out / "config.json", _config(args))
    artifacts.write_json(out / "certificate.json", report)
    _emit(args, report)
    if args.require_feasible and not cert.feasible:
        raise Infeasible(f"certificate infeasible: R={cert.R} > beta={cert.beta}")
    return EXIT_OK


def cmd_stability(args) -> int:
    p = _params(args)
    lam = _lambda(args, p)
    bound = _sup_bound(args.sup_bound, p)
    if args.z_max - args.z_min < 20:
        raise ConfigError("domain must be at least 20 units long")
    cert = certify_stability(p, lam, bound)
    if not cert.feasible:
        raise Infeasible(f"no certified exponent: R={cert.R} > beta={cert.beta}")
    z0 = tail_start(p)
    if args.z_min < z0:
        raise ConfigError(f"--z-min below the profile's tail start {z0}")
    grid = Grid.snapped(args.z_min, args.z_max, args.dz, p.ch)
    prof = compute_profile(p, length=max(60.0, 20 * p.ch, grid.z_max - z0 + 1.0))
    phi = discrete_profile(prof, grid)
    center = 0.5 * (grid.z_min + grid.z_max) if args.center is None else args.center
    v0 = phi + gaussian(grid.z, args.amplitude, center, args.width)
    window = default_window(grid, args.inset)
    cfg = EvolutionConfig(t_final=args.t_final)
    dt = cfg.resolved_dt(p.h, grid.dz)
    cfg.probe_every = max(1, int(round(args.probe_dt / dt)))
    res = run(v0, p, grid, cfg, probe=norm_probe(grid, phi, lam, window))
    norms = [a for a, _ in res.probes]
    sups = [b for _, b in res.probes]
    series = WeightedSeries(lam, res.probe_times, norms, window)
    K = initial_K(v0, grid, phi, lam, window)
    report = verify_iterative_bound(series, K, cert.delta, p.h, args.slack)
    rate, r2 = fit_decay_rate(series, 0.0)
    out = artifacts.run_dir(args.out, "stability", _config(args))
    artifacts.write_json(out / "config.json", _config(args))
    artifacts.write_series(out / "series.csv", res.probe_times, norms, sups)
    summary = report.to_dict()
    summary.update({"delta_hat": rate, "r2": r2, "certificate": cert.to_dict(),
                    "grid": grid.to_dict(), "dt": dt})
    artifacts.write_json(out / "bound.json", summary)
    _emit(args, {"dir": str(out), "pass": report.passed, "K": K, "delta": cert.delta,
                 "delta_hat": rate, "worst_ratio": report.worst_ratio})
    return EXIT_OK


def cmd_region(args) -> int:
    hs = lattice(args.h_min, args.h_max, args.h_step)
    cs = lattice(args.c_min, args.c_max, args.c_step)
    if not hs or not cs:
        raise ConfigError("empty lattice")
    if min(hs) < 0:
        raise ConfigError("delays must be nonnegative")
    bound = None if args.sup_bound == "auto" else _sup_bound(args.sup_bound, Params(3.0, 0.0))
    cells = region_map(hs, cs, bound, args.workers)
    out = artifacts.run_dir(args.out, "region", _config(args))
    artifacts.write_json(out / "config.json", _config(args))
    artifacts.write_region(out / "region.csv", cells)
    above = [cl for cl in cells if cl.c > 2 * math.sqrt(2)]
    summary = {"dir": str(out), "cells": len(cells),
               "stable_above_2sqrt2": all(cl.stable for cl in above),
               "kappa_flagged": iter_flagged(cells)}
    artifacts.write_json(out / "summary.json", summary)
    _emit(args, summary)
    return EXIT_OK


def cmd_oracle(args) -> int:
    p = _params(args)
    if p.h <= 0:
        raise ConfigError("the oracle needs h > 0")
    x = lattice(args.x_min, args.x_max, args.dx)
    x = np.array(x)
    datum = Bump(x, args.amplitude, args.center, args.width)
    n_steps = int(round(p.h / args.oracle_dt))
    oracle = picard_solve(datum, p.h, x, n_steps)
    comps = [compare_with_evolution(p.c, p.h, datum, x, args.dz, oracle)]
    if args.refine:
        comps.append(compare_with_evolution(p.c, p.h, datum, x, args.dz / 2, oracle))
    report = {"params": {"c": p.c, "h": p.h}, "picard": oracle.to_dict(),
              "comparisons": [cmp.to_dict() for cmp in comps],
              "sup_error": comps[0].sup_error}
    if args.refine:
        report["refinement_ratio"] = comps[0].sup_error / comps[1].sup_error
    out = artifacts.run_dir(args.out, "oracle", _config(args))
    artifacts.write_json(out / "config.json", _config(args))
    artifacts.write_json(out / "comparison.json", report)
    _emit(args, report)
    return EXIT_OK


def cmd_uniqueness(args) -> int:
    p = _params(args)
    if len(args.amplitudes) != 2 or len(args.dzs) != 2:
        raise ConfigError("--amplitudes and --dzs take exactly two values")
    a = compute_profile(p, args.amplitudes[0], dz=args.dzs[0])
    b = compute_profile(p, args.amplitudes[1], dz=args.dzs[1])
    shift, diff = align_profiles(a, b)
    bound = hutchinson_bound(p)
    threshold = uniqueness_threshold(p)
    report = {"params": {"c": p.c, "h": p.h}, "shift": shift, "sup_difference": diff,
              "sup_bound": bound, "threshold": threshold,
              "threshold_check": bool(bound < threshold),
              "amplitudes": [a.tail.amplitude, b.tail.amplitude]}
    if p.h > 0:
        k = kappa_crit(p)
        report["kappa"] = k
        report["Q_kappa"] = q_eval(p, k)
    out = artifacts.run_dir(args.out, "uniqueness", _config(args))
    artifacts.write_json(out / "config.json", _config(args))
    artifacts.write_json(out / "alignment.json", report)
    _emit(args, report)
    return EXIT_OK


# parser -------------------------------------------------------------------

def _positive(text: str) -> float:
    x = float(text)
    if not (math.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delayfront", allow_abbrev=False,
                                     description="Semi-wavefronts of the delayed Fisher-KPP equation.")
    parser.add_argument("--out", type=Path, default=Path("runs"), help="base output directory")
    parser.add_argument("--config", type=Path, help="JSON file of option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, c=3.0, h=1.0):
        sp.add_argument("--c", type=float, default=c, help="wave speed")
        sp.add_argument("--h", type=float, default=h, help="delay")

    sp = sub.add_parser("profile", help="compute a semi-wavefront profile")
    common(sp)
    sp.add_argument("--amplitude", type=float, default=1.0, help="tail amplitude A")
    sp.add_argument("--depth", type=_positive, default=1e-8, help="tail value at the start")
    sp.add_argument("--dz", type=_positive, default=None)
    sp.add_argument("--length", type=_positive, default=None)
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("certify", help="weighted stability certificate")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=float, default=None, help="weight (default c/2)")
    sp.add_argument("--sup-bound", default="auto", help="'auto' (exp(ch)) or a number")
    sp.add_argument("--require-feasible", action="store_true", help="exit 4 when infeasible")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("stability", help="perturbed-front run and bound verification")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--sup-bound", default="auto")
    sp.add_argument("--amplitude", type=float, default=0.1)
    sp.add_argument("--center", type=float, default=None, help="bump centre (default mid-domain)")
    sp.add_argument("--width", type=_positive, default=1.0)
    sp.add_argument("--dz", type=_positive, default=0.05)
    sp.add_argument("--z-min", type=float, default=-20.0)
    sp.add_argument("--z-max", type=float, default=20.0)
    sp.add_argument("--inset", type=_positive, default=5.0)
    sp.add_argument("--t-final", type=_positive, default=15.0)
    sp.add_argument("--probe-dt", type=_positive, default=0.1)
    sp.add_argument("--slack", type=float, default=0.05)
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("region", help="certificate and uniqueness map over (h, c)")
    sp.add_argument("--h-min", type=float, default=0.0)
    sp.add_argument("--h-max", type=float, default=3.0)
    sp.add_argument("--h-step", type=_positive, default=0.05)
    sp.add_argument("--c-min", type=float, default=2.0)
    sp.add_argument("--c-max", type=float, default=5.0)
    sp.add_argument("--c-step", type=_positive, default=0.05)
    sp.add_argument("--sup-bound", default="auto")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("oracle", help="integral-equation cross-check on [0, h]")
    common(sp)
    sp.add_argument("--dz", type=_positive, default=0.05)
    sp.add_argument("--dx", type=_positive, default=0.05)
    sp.add_argument("--oracle-dt", type=_positive, default=0.01)
    sp.add_argument("--x-min", type=float, default=-20.0)
    sp.add_argument("--x-max", type=float, default=20.0)
    sp.add_argument("--amplitude", type=float, default=0.8)
    sp.add_argument("--center", type=float, default=0.0)
    sp.add_argument("--width", type=_positive, default=1.0)
    sp.add_argument("--refine", action="store_true", help="also run at dz/2")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("uniqueness", help="align two independently computed profiles")
    common(sp)
    sp.add_argument("--amplitudes", type=_positive, nargs="+", default=[1.0, 0.3])
    sp.add_argument("--dzs", type=_positive, nargs="+", default=[0.01, 0.005])
    sp.set_defaults(func=cmd_uniqueness)
    return parser


def parse(argv=None) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is not None:
        defaults = json.loads(known.config.read_text())
        for action in parser._subparsers._group_actions:
            for sp in action.choices.values():
                # keys may be flag names ("lambda", "sup-bound") or dests ("lam")
                dests = {o.lstrip("-"): a.dest for a in sp._actions for o in a.option_strings}
                sp.set_defaults(**{dests.get(k, k.replace("-", "_")): v
                                   for k, v in defaults.items()})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    try:
        args = parse(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except Infeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ProfileError, NumericalAbort, NonContractionError) as exc:
        print(f"error: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, CFLError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

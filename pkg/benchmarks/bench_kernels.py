"""Compiled vs pure-Python kernels on the two hot paths.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

The profile shooter loops over single cells, so it gains the most from the
compiled core; the evolution step is already vectorized in the fallback.
"""
import argparse
import json
import sys
import time

import numpy as np

from delayfront import evolution, profile
from delayfront import _kernels_py
from delayfront.dispersion import Params
from delayfront.evolution import EvolutionConfig, run
from delayfront.grid import Grid

try:
    from delayfront import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _use(mod):
    profile.kernels = mod
    evolution.kernels = mod


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_profile(repeat):
    p = Params(3.0, 1.0)
    return _best(lambda: profile.compute_profile(p), repeat)


def bench_evolution(repeat, t_final):
    p = Params(3.0, 1.0)
    grid = Grid.snapped(-20.0, 20.0, 0.05, p.ch)
    v0 = np.exp(-grid.z ** 2)
    cfg = EvolutionConfig(t_final=t_final)
    return _best(lambda: run(v0, p, grid, cfg), repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write the timings here")
    args = ap.parse_args(argv)
    if _kernels_c is None:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation`")
        return 1

    rows = {}
    t_final = 5.0
    for name, mod in (("cython", _kernels_c), ("python", _kernels_py)):
        _use(mod)
        rows[name] = {"compute_profile(3,1)": bench_profile(args.repeat)}
        rows[name][f"run t={t_final:g} dz=0.05"] = bench_evolution(args.repeat, t_final)

    print(f"{'case':<28}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for case in rows["cython"]:
        a, b = rows["cython"][case], rows["python"][case]
        print(f"{case:<28}{a:12.4f}{b:12.4f}{b / a:10.1f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())

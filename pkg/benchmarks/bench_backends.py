"""Compare the compiled kernel with the pure-Python loop.

    python benchmarks/bench_backends.py --setting 2.e --T 10000 --reps 3

Reports seconds per replication and per slot for each policy, the speedup, and
whether both backends produced identical trajectories.
"""
import argparse
import time

import numpy as np

from aoi_bandits.env import draw_environment, replication_streams
from aoi_bandits.harness import builtin_setting
from aoi_bandits.policies import PAPER_POLICIES, POLICY_CODES
from aoi_bandits.simulate import available_backends, run_policy


def bench(instance, name, horizon, reps, seed, backend):
    out, elapsed = [], 0.0
    for rep in range(reps):
        draws = draw_environment(instance, horizon, replication_streams(seed, rep, 0))
        rng = replication_streams(seed, rep, 1 + POLICY_CODES[name])
        t0 = time.perf_counter()
        out.append(run_policy(instance, name, draws, rng, backend=backend))
        elapsed += time.perf_counter() - t0
    return elapsed / reps, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--setting", default="2.e")
    ap.add_argument("--T", type=int, default=10_000)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if "cython" not in available_backends():
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation`")
    inst = builtin_setting(args.setting).instance
    print(f"setting {args.setting}  K={inst.K}  T={args.T}  reps={args.reps}")
    print(f"{'policy':<10} {'python s/rep':>13} {'cython s/rep':>13} {'ns/slot (cy)':>13} {'speedup':>8}  same")
    for name in PAPER_POLICIES:
        py_t, py_out = bench(inst, name, args.T, args.reps, args.seed, "python")
        cy_t, cy_out = bench(inst, name, args.T, args.reps, args.seed, "cython")
        same = all(np.array_equal(a, b) for pa, ca in zip(py_out, cy_out) for a, b in zip(pa, ca))
        print(f"{name:<10} {py_t:13.4f} {cy_t:13.5f} {1e9 * cy_t / args.T:13.1f} "
              f"{py_t / cy_t:8.0f}  {same}")


if __name__ == "__main__":
    main()

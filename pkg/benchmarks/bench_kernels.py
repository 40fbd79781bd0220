#!/usr/bin/env python3
"""Benchmark the numba-compiled kernels against the pure-Python fallback.

Each measurement runs in a fresh subprocess so RDWSIM_NO_NUMBA is read at
import time.  Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json
import time

import numpy as np

from rdwsim import kernels
from rdwsim.environment import build_physical_space, generate_virtual_space
from rdwsim.simulation import TrialConfig, run_trial

results = {"numba": kernels.NUMBA_ENABLED}

e4 = build_physical_space("e4")
edges, bvx, bvy, ovx, ovy, ooff = e4.kernel_args
rng = np.random.default_rng(0)

# warm the JIT (or do nothing on the fallback)
kernels.raycast_edges(0.0, 0.0, 1.0, 0.0, edges, 100.0)
kernels.free_clearance(0.0, 0.0, edges, bvx, bvy, ovx, ovy, ooff)
kernels.apf_force(0.0, 0.0, e4.apf_sx, e4.apf_sy, e4.apf_w)
kernels.mpc_search(0.0, 0.0, 0.3, 0.0, 4, 1/3, 1/3, 1/3, edges, bvx, bvy, ovx,
                   ovy, ooff, 0.5, 1.0, 0.25, 7.5, 0.1, 1000.0, 0.8, True)


def bench(name, fn, n):
    t0 = time.perf_counter()
    for _ in range(n):
        fn()
    results[name] = (time.perf_counter() - t0) / n


pts = rng.uniform(-4.4, 4.4, (256, 2))
angs = rng.uniform(-np.pi, np.pi, 256)

bench("raycast_256", lambda: [
    kernels.raycast_edges(x, y, np.cos(a), np.sin(a), edges, 100.0)
    for (x, y), a in zip(pts, angs)
], 20)
bench("clearance_256", lambda: [
    kernels.free_clearance(x, y, edges, bvx, bvy, ovx, ovy, ooff) for x, y in pts
], 20)
bench("apf_force_256", lambda: [
    kernels.apf_force(x, y, e4.apf_sx, e4.apf_sy, e4.apf_w) for x, y in pts
], 20)
bench("mpc_plan", lambda: kernels.mpc_search(
    0.6, -0.4, 0.3, 0.1, 4, 0.77, 0.115, 0.115, edges, bvx, bvy, ovx, ovy, ooff,
    0.5, 1.0, 0.25, 7.5, 0.1, 1000.0, 0.8, True), 5)

# a short full trial exercises the whole stack
cfg = TrialConfig(experiment="e4", controller="f-tapf", seed=3, distance_budget=10.0)
bench("trial_10m_e4_ftapf", lambda: run_trial(cfg), 1)
m = run_trial(cfg)
results["trial_resets"] = m.resets

print(json.dumps(results))
"""


def run_mode(no_numba: bool) -> dict:
    env = dict(os.environ)
    env["RDWSIM_NO_NUMBA"] = "1" if no_numba else "0"
    out = subprocess.run(
        [sys.executable, "-c", WORKER], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=1)
    args = parser.parse_args()

    fast = run_mode(no_numba=False)
    slow = run_mode(no_numba=True)
    if not fast.get("numba"):
        print("warning: numba unavailable; comparing fallback against itself")
    assert fast["trial_resets"] == slow["trial_resets"], "backends disagree on trial outcome"

    print(f"{'kernel':24s} {'numba':>12s} {'python':>12s} {'speedup':>9s}")
    for key in ("raycast_256", "clearance_256", "apf_force_256", "mpc_plan",
                "trial_10m_e4_ftapf"):
        a, b = fast[key], slow[key]
        print(f"{key:24s} {a * 1e3:10.3f}ms {b * 1e3:10.3f}ms {b / a:8.1f}x")
    print("identical trial outcome across backends: OK")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Time the numba kernels against the pure-numpy fallback.

Each backend runs in a fresh interpreter because ``SO3FILTER_DISABLE_JIT`` is
read once at import. The first JIT call (compilation or cache load) is timed
separately from the steady-state runs.

    python3 benchmarks/bench_filter.py [--duration 10] [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
from so3filter import _accel, sim

duration, repeat = float(sys.argv[1]), int(sys.argv[2])
sc = sim.paper_scenario().with_overrides(duration=duration)
t0 = time.perf_counter()
sim.run(sc.with_overrides(duration=0.01))
warmup = time.perf_counter() - t0
times, steady = [], None
for _ in range(repeat):
    t0 = time.perf_counter()
    log = sim.run(sc)
    times.append(time.perf_counter() - t0)
    steady = log.steady_mean_dist()
print(json.dumps(dict(jit=_accel.JIT_ENABLED, warmup=warmup, best=min(times),
                      steps=sc.n_steps, steady=steady)))
"""


def run_backend(disable_jit, duration, repeat):
    env = dict(os.environ)
    env["SO3FILTER_DISABLE_JIT"] = "1" if disable_jit else "0"
    out = subprocess.run([sys.executable, "-c", CHILD, str(duration), str(repeat)],
                         env=env, check=True, capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--duration", type=float, default=10.0, help="simulated seconds per run")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    results = {}
    for label, disable in (("numba", False), ("numpy", True)):
        r = run_backend(disable, args.duration, args.repeat)
        results[label] = r
        print(f"{label:6s} jit={r['jit']!s:5s} first call {r['warmup']:7.3f} s  "
              f"best of {args.repeat}: {r['best']:7.3f} s  "
              f"({1e6 * r['best'] / r['steps']:7.2f} us/step)  steady mean dist {r['steady']:.16g}")
    speedup = results["numpy"]["best"] / results["numba"]["best"]
    same = results["numpy"]["steady"] == results["numba"]["steady"]
    print(f"speedup {speedup:.1f}x; outputs {'identical' if same else 'DIFFER'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Time the hot kernels with numba and with the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Each backend runs in its own interpreter because ``TGRAND_DISABLE_NUMBA`` is
read at import time. The numba column excludes compilation: every workload is
run once to warm up before timing.
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from tgrand import _accel, gf2, harness
from tgrand.channel import params_from_stats, error_bits
from tgrand.guessers import run_sd, run_tgrand
from tgrand.harness import ExperimentConfig
from tgrand.ordering import calc_prob_and_sort, trace_sorted_prob

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
params = params_from_stats(0.05, 4)
masks = gf2.pack_bits((rng.random((10, 40)) < 0.5).astype(np.uint8))
e = error_bits(params, 10, 64, rng)
h = gf2.unpack_bits(masks, 40).astype(np.int64)
s_cols = gf2.pack_bits(((h.T @ e) % 2).T.astype(np.uint8))
big = gf2.random_matrix(256, 256, rng)

def ordering():
    for L0, L1 in ((8, 4), (12, 12), (20, 3)):
        calc_prob_and_sort(params.p01, params.p10, L0, L1)
        list(trace_sorted_prob(params.p01, params.p10, L0, L1))

work = {
    "gf2 rank 256x256": lambda: gf2.rank(big),
    "gf2 matmul 256x256": lambda: big @ big,
    "channel 200x2000": lambda: error_bits(params, 200, 2000, np.random.default_rng(1)),
    "ordering sort+trace": ordering,
    "tgrand sort L=10 B=64": lambda: run_tgrand(masks, s_cols, params.p01, params.p10, "sort"),
    "tgrand trace L=10 B=64": lambda: run_tgrand(masks, s_cols, params.p01, params.p10, "trace"),
    "sd L=10 B=64": lambda: run_sd(masks, s_cols),
    "decoding-probability 200 trials": lambda: harness.run_decoding_probability(
        ExperimentConfig(K=10, N_values=(20,), trials=200, master_seed=1)),
}
out = {}
for name, fn in work.items():
    fn()
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    out[name] = best
print(json.dumps({"numba": _accel.USING_NUMBA, "times": out}))
"""


def measure(disable: bool, repeat: int) -> dict:
    env = dict(os.environ, TGRAND_DISABLE_NUMBA="1" if disable else "0")
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True,
                          check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    fast = measure(False, args.repeat)
    slow = measure(True, args.repeat)
    if not fast["numba"]:
        print("numba is not installed; both columns use the fallback", file=sys.stderr)
    print(f"{'workload':34s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for name, t_fast in fast["times"].items():
        t_slow = slow["times"][name]
        print(f"{name:34s} {t_fast:10.4f} {t_slow:10.4f} {t_slow / t_fast:8.1f}")


if __name__ == "__main__":
    main()

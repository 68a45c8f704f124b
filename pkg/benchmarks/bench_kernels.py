"""Time the numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is made at
import time from ``AIMOLE_DISABLE_NUMBA``::

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from aimole import _accel
from aimole.plant import PlantParameters

k = _accel.kernels
rng = np.random.default_rng(0)
p = PlantParameters().as_vector()
u = rng.uniform(-2, 2, (200, 2))
x0 = np.array([0.0, 0.5, 0.0, 0.0])
xt = rng.standard_normal((597, 6))
inv = rng.uniform(0.3, 1.5, (4, 6))
w = 0.01 * rng.standard_normal((4, 597))
ym, ys = np.zeros(4), np.ones(4)
q = rng.standard_normal((597, 597))
gram = k.se_gram(xt, xt, inv[0])

cases = {
    "rk4_simulate (N=200, 4 substeps)": lambda: k.rk4_simulate(u, x0, p, 0.02, 4, 1e3),
    "se_gram (597 x 597, V=6)": lambda: k.se_gram(xt, xt, inv[0]),
    "lml_length_scale_grad (T=597)": lambda: k.lml_length_scale_grad(q, gram, xt, inv[0]),
    "rollout + sensitivities (N=200, T=597)": lambda: k.rollout(xt, inv, w, ym, ys, x0, u, True),
}
repeat = int(sys.argv[1])
out = {}
for name, fn in cases.items():
    fn()  # warm-up, includes JIT compilation for numba
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    out[name] = best
print(json.dumps({"backend": _accel.BACKEND, "times": out}))
"""


def run_backend(disable, repeat):
    env = dict(os.environ, AIMOLE_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    print(f"{'kernel':42s} {fast['backend']:>10s} {'numpy':>10s} {'speed-up':>9s}")
    for name, t_np in slow["times"].items():
        t_fast = fast["times"][name]
        print(f"{name:42s} {t_fast * 1e3:8.2f}ms {t_np * 1e3:8.2f}ms {t_np / t_fast:8.1f}x")


if __name__ == "__main__":
    main()

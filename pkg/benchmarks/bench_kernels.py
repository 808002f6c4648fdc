"""Compare the numba kernels with their pure-numpy fallbacks.

Kernel timings call both implementations in-process. The end-to-end row
runs the bundled sample through the CLI twice in fresh interpreters, once
per backend (selected with GENAGENT_NUMBA), so each pays its own startup.

    python benchmarks/bench_kernels.py [--repeat N] [--no-session]
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import tempfile
import time
from importlib import resources

import numpy as np

from genagent import kernels
from genagent.constraints import symbolize
from genagent.geometry import ScaleSpec
from genagent.scenes import synthetic_town


def _time(fn, args_list, repeat):
    fn(*args_list[0])  # compile / warm
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        for args in args_list:
            fn(*args)
        best = min(best, time.perf_counter() - t)
    return best / len(args_list) * 1e6


def kernel_cases(seed=0):
    rng = np.random.default_rng(seed)
    spec = ScaleSpec(1000, 1500)
    syms = [symbolize(o.geometry, spec) for o in synthetic_town(seed=42)]
    pairs = [(syms[i], syms[j]) for i, j in rng.integers(0, len(syms), (400, 2))]
    dist = [(a.coords, a.offsets, a.closed, b.coords, b.offsets, b.closed) for a, b in pairs]
    rings = []
    for _ in range(200):
        k = int(rng.integers(4, 40))
        ang = np.sort(rng.uniform(0, 2 * np.pi, k))
        rings.append((np.column_stack((np.cos(ang), np.sin(ang))) * rng.uniform(5, 10, (k, 1)),))
    lines = [(np.cumsum(rng.normal(0, 1, (int(rng.integers(10, 200)), 2)), axis=0), 0.5) for _ in range(200)]
    return {
        "parts_distance": (kernels.nb_parts_distance, kernels.np_parts_distance, dist),
        "ring_is_simple": (kernels.nb_ring_is_simple, kernels.np_ring_is_simple, rings),
        "douglas_peucker": (kernels.nb_douglas_peucker, kernels.np_douglas_peucker, lines),
    }


def session_ms(backend: str) -> float:
    sample = resources.files("genagent") / "data" / "sample_town.geojson"
    env = dict(os.environ, GENAGENT_NUMBA="1" if backend == "numba" else "0")
    with tempfile.TemporaryDirectory() as tmp:
        proc = subprocess.run(
            [sys.executable, "-m", "genagent", "--input", str(sample), "--output", os.path.join(tmp, "o.geojson"),
             "--source-scale", "1000", "--target-scale", "1500", "--seed", "42"],
            env=env, capture_output=True, text=True, check=True)
    last = proc.stderr.strip().splitlines()[-1]
    return float(dict(kv.split("=") for kv in last.split())["elapsed_ms"])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-session", action="store_true", help="skip the end-to-end CLI timing")
    args = ap.parse_args(argv)

    print(f"{'kernel':<18}{'numba us':>12}{'numpy us':>12}{'speedup':>10}")
    for name, (nb, npy, cases) in kernel_cases().items():
        t_nb = _time(nb, cases, args.repeat)
        t_np = _time(npy, cases, args.repeat)
        print(f"{name:<18}{t_nb:>12.2f}{t_np:>12.2f}{t_np / t_nb:>9.1f}x")
    if not args.no_session:
        t_nb = session_ms("numba")
        t_np = session_ms("numpy")
        print(f"{'session (ms)':<18}{t_nb:>12.0f}{t_np:>12.0f}{t_np / t_nb:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Benchmark the compiled geometry kernels against the pure-Python twin.

Times the raw kernels and two end-to-end workloads (consistency radius
and data fusion on the packaged localization scenario) under both
backends.  Run:

    python benchmarks/bench_kernels.py
"""

import os
import random
import subprocess
import sys
import time
import timeit


def bench_kernels(impl, n=200_000):
    rng = random.Random(1)
    pts = [(rng.uniform(0, 359), rng.uniform(-80, 80),
            rng.uniform(0, 359), rng.uniform(-80, 80)) for _ in range(512)]
    results = {}

    def run(label, fn):
        reps = n // len(pts)
        t0 = time.perf_counter()
        for _ in range(reps):
            for args in pts:
                fn(*args)
        results[label] = (time.perf_counter() - t0) / (reps * len(pts))

    run("haversine_km", impl.haversine_km)
    run("equirect_bearing_deg", impl.equirect_bearing_deg)
    run("circle_dist_deg", lambda a, b, c, d: impl.circle_dist_deg(a, c))
    run("dead_reckon_deg",
        lambda a, b, c, d: impl.dead_reckon_deg(a, b, c, d, 1.0, 6371.0,
                                                43.0))
    return results


def bench_pipeline():
    from sheaffuse.consistency import consistency_radius
    from sheaffuse.fusion import FusionOptions, fuse
    from sheaffuse.scenarios import build_sar_sheaf, sar_case_assignment

    sheaf = build_sar_sheaf()
    assignments = [sar_case_assignment(sheaf, c) for c in (1, 2, 3)]

    radius_t = timeit.timeit(
        lambda: [consistency_radius(a) for a in assignments], number=20
    ) / 20

    t0 = time.perf_counter()
    for a in assignments:
        fuse(a, FusionOptions(seed=0))
    fuse_t = time.perf_counter() - t0
    return radius_t, fuse_t


def main():
    if os.environ.get("_BENCH_CHILD"):
        from sheaffuse import _kernels

        print(f"backend: {_kernels.BACKEND}")
        for label, per_call in bench_kernels(_kernels).items():
            print(f"  {label:24s} {per_call * 1e9:9.1f} ns/call")
        radius_t, fuse_t = bench_pipeline()
        print(f"  {'consistency radius x3':24s} {radius_t * 1e3:9.2f} ms")
        print(f"  {'fusion x3 cases':24s} {fuse_t * 1e3:9.2f} ms")
        return

    for forced, title in ((None, "compiled (if built)"), ("1", "pure")):
        env = dict(os.environ, _BENCH_CHILD="1")
        if forced:
            env["SHEAFFUSE_PURE_KERNELS"] = forced
        else:
            env.pop("SHEAFFUSE_PURE_KERNELS", None)
        print(f"--- {title} ---", flush=True)
        subprocess.run([sys.executable, __file__], env=env, check=True)


if __name__ == "__main__":
    main()

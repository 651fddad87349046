"""Wall time of the hot kernels under the numba and numpy backends.

Usage: python benchmarks/bench_kernels.py [--repeat N]

The first numba call compiles; it is timed separately and excluded from the
steady-state figure.  Results of the two backends are compared as a sanity
check before timing is reported.
"""

import argparse
import time

import numpy as np

from fhd import catalogue
from fhd._backend import HAS_NUMBA, use_backend
from fhd.entropy import separated_counts
from fhd.green import box_samples, green_field
from fhd.pk import green_pk_field, sphere_samples


def _green_case():
    sys = catalogue.get("disc-contraction")
    X, Y = box_samples(np.random.default_rng(0), 3.0, 200_000)
    return lambda: green_field(sys, 0.1, X, Y, "+", 1e-10).value


def _pk_case():
    sys = catalogue.get("pk-perturbed")
    P = sphere_samples(np.random.default_rng(1), 100_000, 2) * 1.5
    return lambda: green_pk_field(sys, 0.1, P, 1e-10)[0]


def _separated_case():
    sys = catalogue.get("classical")
    rng = np.random.default_rng(2)
    cloud = rng.uniform(-1.0, 1.0, (4000, 2)) + 1j * rng.uniform(-1.0, 1.0, (4000, 2))
    cloud *= 0.3
    return lambda: np.asarray(separated_counts(sys, 0j, cloud, 6, 0.05, shuffles=1))


CASES = {"green_orbit": _green_case, "pk_green": _pk_case, "greedy_separated": _separated_case}


def bench(fn, repeat):
    t0 = time.perf_counter()
    first = fn()
    compile_time = time.perf_counter() - t0
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return first, compile_time, min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    backends = ["numba", "numpy"] if HAS_NUMBA else ["numpy"]
    print(f"{'kernel':<18}{'backend':<8}{'first call s':>14}{'best s':>10}{'speedup':>9}")
    for name, make in CASES.items():
        fn = make()
        results = {}
        for b in backends:
            with use_backend(b):
                results[b] = bench(fn, args.repeat)
        if len(results) == 2:
            a, c = results["numba"][0], results["numpy"][0]
            if not np.allclose(a, c, rtol=1e-9, atol=1e-12, equal_nan=True):
                raise SystemExit(f"{name}: backends disagree")
        ref = results["numpy"][2]
        for b, (_, first, best) in results.items():
            print(f"{name:<18}{b:<8}{first:>14.3f}{best:>10.3f}{ref / best:>8.1f}x")


if __name__ == "__main__":
    main()

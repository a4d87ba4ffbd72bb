"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 3]

Prints the best wall time per kernel and backend, the speedup, and the
largest difference between the two backends' outputs.
"""

import argparse
import time

import numpy as np

from synclab.kernels import backends


def _cases():
    rng = np.random.default_rng(0)
    ang = np.arange(256) / 256 * 2 * np.pi
    xs0, ys0 = 1.5 * np.cos(ang), 1.5 * np.sin(ang)
    radii = rng.uniform(0.0, 5.0, 2000)
    drive = np.sin(np.arange(20001) * 1e-3 * 3.0) * 10.0

    def polar(k):
        xs, ys = xs0.copy(), ys0.copy()
        k.polar_iterate(1e-7, 2 * np.pi, xs, ys, 2000, False, 2.0, 0.0, 1_000_000)
        return np.concatenate((xs, ys))

    return {
        "radial_orbit (1e5 steps)": lambda k: k.radial_orbit(1e-7, 1.5, 100_000),
        "polar_iterate (256 pts x 2000)": polar,
        "alpha_inverse (2000 calls)": lambda k: np.array(
            [k.alpha_inverse(1e-7, v) for v in radii]),
        "lorenz_rk4 (2e4 steps)": lambda k: k.lorenz_rk4(10.0, 28.0, 8.0 / 3.0, 1.0, 1.0, 1.0, 1e-3, 20_000),
        "lorenz_response_rk4 (2e4 steps)": lambda k: k.lorenz_response_rk4(28.0, 8.0 / 3.0, drive, 1.0, 2.0, 1e-3),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    mods = backends()
    if "cython" not in mods:
        print("compiled backend not built; only timing the Python fallback")
    print(f"{'kernel':34s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in _cases().items():
        times, outs = {}, {}
        for bname, mod in mods.items():
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                out = fn(mod)
                best = min(best, time.perf_counter() - t0)
            times[bname], outs[bname] = best, np.asarray(out, dtype=float)
        py = times["python"]
        if "cython" in times:
            cy = times["cython"]
            diff = float(np.max(np.abs(outs["python"] - outs["cython"])))
            print(f"{name:34s} {py:11.4f} {cy:11.4f} {py / cy:8.1f} {diff:11.3g}")
        else:
            print(f"{name:34s} {py:11.4f} {'-':>11s} {'-':>8s} {'-':>11s}")


if __name__ == "__main__":
    main()

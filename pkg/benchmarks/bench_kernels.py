"""Microbenchmark: compiled extension vs numpy fallback on the hot kernels.

Times the all-pairs similarity kernels and the graph edge split at a few
corpus sizes, then cross-checks that both backends agree (bitwise for the
linear kernel and edge split, last-ulp for the exponential kernel).

Run:  python3 benchmarks/bench_kernels.py --sizes 500,1000,2000
"""

import argparse
import os
import time

import numpy as np

from creascore import backend


def best_of(repeats, fn, *args):
    took = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        took.append(time.perf_counter() - t0)
    return min(took)


def run_backend(name, sizes, repeats, tau, rng_seed):
    os.environ["CREASCORE_BACKEND"] = name
    mod = backend.active_backend()
    rows = []
    for m in sizes:
        rng = np.random.default_rng(rng_seed)
        values = rng.standard_normal(m)
        times = rng.integers(1980, 2020, size=m)
        sim = mod.pairwise_numeric(values, backend.KIND_LINEAR)
        rows.append(
            {
                "m": m,
                "linear": best_of(repeats, mod.pairwise_numeric, values, backend.KIND_LINEAR),
                "exponential": best_of(
                    repeats, mod.pairwise_numeric, values, backend.KIND_EXPONENTIAL
                ),
                "graph_edges": best_of(repeats, mod.graph_edges, sim, times, tau),
            }
        )
    return rows


def check_parity(sizes, tau, rng_seed):
    os.environ["CREASCORE_BACKEND"] = "python"
    py = backend.active_backend()
    os.environ["CREASCORE_BACKEND"] = "compiled"
    comp = backend.active_backend()
    worst_ulp = 0
    for m in sizes:
        rng = np.random.default_rng(rng_seed)
        values = rng.standard_normal(m)
        times = rng.integers(1980, 2020, size=m)
        lin_py = py.pairwise_numeric(values, backend.KIND_LINEAR)
        lin_c = comp.pairwise_numeric(values, backend.KIND_LINEAR)
        assert np.array_equal(lin_py, lin_c), "linear kernels diverged"
        exp_py = py.pairwise_numeric(values, backend.KIND_EXPONENTIAL)
        exp_c = comp.pairwise_numeric(values, backend.KIND_EXPONENTIAL)
        ulps = np.abs(exp_py - exp_c) / np.spacing(np.maximum(np.abs(exp_py), np.abs(exp_c)))
        worst_ulp = max(worst_ulp, float(ulps.max()))
        for a, b in zip(py.graph_edges(lin_py, times, tau), comp.graph_edges(lin_c, times, tau)):
            assert np.array_equal(a, b), "graph edge split diverged"
    return worst_ulp


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="500,1000,2000", help="comma-separated corpus sizes")
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats, best-of")
    parser.add_argument("--tau", type=float, default=0.3, help="edge threshold")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    previous = os.environ.get("CREASCORE_BACKEND")
    try:
        if not backend.compiled_available():
            print("compiled extension not built; timing the python backend only")
            names = ["python"]
        else:
            names = ["python", "compiled"]
        results = {name: run_backend(name, sizes, args.repeats, args.tau, args.seed) for name in names}

        header = f"{'kernel':<12} {'m':>6}" + "".join(f" {name + ' (ms)':>15}" for name in names)
        if len(names) == 2:
            header += f" {'speedup':>9}"
        print(header)
        print("-" * len(header))
        for idx, m in enumerate(sizes):
            for kernel in ("linear", "exponential", "graph_edges"):
                cells = [results[name][idx][kernel] for name in names]
                line = f"{kernel:<12} {m:>6}" + "".join(f" {c * 1e3:>15.3f}" for c in cells)
                if len(names) == 2:
                    line += f" {cells[0] / cells[1]:>8.2f}x"
                print(line)

        if len(names) == 2:
            worst = check_parity(sizes, args.tau, args.seed)
            print(f"parity: linear and edge split bitwise equal; exponential within {worst:.1f} ulp")
    finally:
        if previous is None:
            os.environ.pop("CREASCORE_BACKEND", None)
        else:
            os.environ["CREASCORE_BACKEND"] = previous
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

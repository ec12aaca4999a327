"""Benchmark the two distinct-tuple evaluation backends.

Times batched evaluation of multiple integrals (degrees 2-4) over a Monte
Carlo batch of simulated atom configurations, once with the numba kernels
and once with the pure-numpy fallback.

Usage: python3 benchmarks/bench_backends.py [--paths N] [--repeat K]
"""
import argparse
import time

import numpy as np

from levychaos import _backend
from levychaos.kernelspace import LevyMeasureSpec, StateSpace, TimeGrid, random_kernel
from levychaos.levy import IntegralEvaluator, _counts_to_atoms, simulate_counts

MARKS = ((1.0, 2.5), (-0.5, 1.5))


def bench(degree: int, counts: np.ndarray, backend: str, repeat: int) -> float:
    space = StateSpace(TimeGrid.regular(1.0, 4), LevyMeasureSpec(MARKS))
    ev = IntegralEvaluator(random_kernel(space, degree, seed=[9, degree]))
    ok = counts.sum(axis=1).astype(float) ** degree <= ev.guard
    atoms_flat, offsets = _counts_to_atoms(counts[ok])
    # warm-up (includes JIT compilation for the numba backend)
    _backend.eval_paths(ev.chain, space.npoints, ev.signs, atoms_flat, offsets,
                        backend=backend)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        _backend.eval_paths(ev.chain, space.npoints, ev.signs, atoms_flat,
                            offsets, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    space = StateSpace(TimeGrid.regular(1.0, 4), LevyMeasureSpec(MARKS))
    counts = simulate_counts(space, [9, 0], args.paths)
    backends = ["numpy"] + (["numba"] if _backend.BACKEND == "numba" else [])

    print(f"batch of {args.paths} paths, best of {args.repeat} runs")
    print(f"{'degree':>6}  " + "".join(f"{b + ' (s)':>12}" for b in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for degree in (2, 3, 4):
        times = [bench(degree, counts, b, args.repeat) for b in backends]
        row = f"{degree:>6}  " + "".join(f"{t:>12.4f}" for t in times)
        if len(times) == 2 and times[1] > 0:
            row += f"  {times[0] / times[1]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()

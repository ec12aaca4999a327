"""Hot numeric kernels: sums over ordered tuples of pairwise-distinct atoms.

The pathwise evaluation of a multiple integral reduces to, for each
j = 0..n, the sum of a degree-j kernel over all ordered j-tuples of
pairwise-distinct path atoms.  That inner loop dominates Monte Carlo
runtime, so it has a numba @njit implementation (with prange over paths)
and a pure-numpy fallback built on fancy indexing over permutation index
tables.

Backend selection: env var LEVYCHAOS_BACKEND = "numba" | "numpy".
Default is numba when importable, else numpy.  LEVYCHAOS_THREADS caps the
numba thread count.
"""
from __future__ import annotations

import os
from itertools import permutations

import numpy as np

_ENV_BACKEND = "LEVYCHAOS_BACKEND"
_ENV_THREADS = "LEVYCHAOS_THREADS"


def _init_backend() -> str:
    requested = os.environ.get(_ENV_BACKEND, "").strip().lower()
    if requested not in ("", "numba", "numpy"):
        raise ValueError(f"{_ENV_BACKEND} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            raise
        return "numpy"
    threads = os.environ.get(_ENV_THREADS, "").strip()
    if threads:
        import numba
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    return "numba"


BACKEND = _init_backend()


# ---------------------------------------------------------------------------
# numpy route: permutation index tables + fancy indexing

def _distinct_sum_np(gflat: np.ndarray, npts: int, j: int, pts: np.ndarray) -> float:
    P = pts.shape[0]
    if j == 0:
        return float(gflat[0])
    if j > P:
        return 0.0
    idx = np.fromiter(
        (a for tup in permutations(range(P), j) for a in tup),
        dtype=np.int64,
    ).reshape(-1, j)
    flat = np.zeros(idx.shape[0], dtype=np.int64)
    for d in range(j):
        flat = flat * npts + pts[idx[:, d]]
    return float(gflat[flat].sum())


def _eval_paths_np(gall, goff, npts, n, signs, atoms_flat, path_off, out):
    for i in range(path_off.shape[0] - 1):
        pts = atoms_flat[path_off[i]:path_off[i + 1]]
        v = 0.0
        for j in range(n + 1):
            v += signs[j] * _distinct_sum_np(gall[goff[j]:goff[j + 1]], npts, j, pts)
        out[i] = v


# ---------------------------------------------------------------------------
# numba route: iterative backtracking over distinct tuples

if BACKEND == "numba":
    import numba
    from numba import njit, prange

    @njit(cache=True)
    def _distinct_sum_nb(gflat, npts, j, pts):  # pragma: no cover - compiled
        P = pts.shape[0]
        if j == 0:
            return gflat[0]
        if j > P:
            return 0.0
        sel = np.empty(j, np.int64)
        used = np.zeros(P, np.bool_)
        prefix = np.empty(j, np.int64)
        total = 0.0
        depth = 0
        start = 0
        while True:
            a = -1
            for c in range(start, P):
                if not used[c]:
                    a = c
                    break
            if a == -1:
                depth -= 1
                if depth < 0:
                    break
                used[sel[depth]] = False
                start = sel[depth] + 1
                continue
            base = prefix[depth - 1] if depth > 0 else 0
            idx = base * npts + pts[a]
            if depth == j - 1:
                total += gflat[idx]
                start = a + 1
            else:
                sel[depth] = a
                used[a] = True
                prefix[depth] = idx
                depth += 1
                start = 0
        return total

    @njit(parallel=True, cache=True)
    def _eval_paths_nb(gall, goff, npts, n, signs, atoms_flat, path_off, out):  # pragma: no cover
        for i in prange(path_off.shape[0] - 1):
            pts = atoms_flat[path_off[i]:path_off[i + 1]]
            v = 0.0
            for j in range(n + 1):
                v += signs[j] * _distinct_sum_nb(gall[goff[j]:goff[j + 1]], npts, j, pts)
            out[i] = v


# ---------------------------------------------------------------------------
# public API

def _resolve(backend: str | None) -> str:
    chosen = backend or BACKEND
    if chosen not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {chosen!r}")
    if chosen == "numba" and BACKEND != "numba":
        raise ValueError("numba backend requested but numba is not active")
    return chosen


def distinct_tuple_sum(g: np.ndarray, npts: int, pts: np.ndarray,
                       backend: str | None = None) -> float:
    """Sum of the degree-j array ``g`` over ordered distinct j-tuples of atoms.

    ``pts`` holds the state-space point index of each atom; atoms at equal
    points are still distinct atoms.  ``g`` has shape (npts,)*j.
    """
    j = g.ndim
    gflat = np.ascontiguousarray(g, dtype=np.float64).reshape(-1)
    pts = np.ascontiguousarray(pts, dtype=np.int64)
    if _resolve(backend) == "numba":
        return float(_distinct_sum_nb(gflat, npts, j, pts))
    return _distinct_sum_np(gflat, npts, j, pts)


def eval_paths(gparts: list[np.ndarray], npts: int, signs: np.ndarray,
               atoms_flat: np.ndarray, path_off: np.ndarray,
               backend: str | None = None) -> np.ndarray:
    """Batched signed combination sum_j signs[j] * distinct_tuple_sum(g_j).

    ``gparts[j]`` is the degree-j array (shape (npts,)*j) for j = 0..n,
    ``atoms_flat``/``path_off`` give per-path atom point indices in CSR
    layout.  Returns one value per path.
    """
    n = len(gparts) - 1
    gall = np.concatenate([np.ascontiguousarray(g, dtype=np.float64).reshape(-1)
                           for g in gparts])
    goff = np.zeros(n + 2, dtype=np.int64)
    np.cumsum([g.size for g in gparts], out=goff[1:])
    signs = np.asarray(signs, dtype=np.float64)
    atoms_flat = np.ascontiguousarray(atoms_flat, dtype=np.int64)
    path_off = np.ascontiguousarray(path_off, dtype=np.int64)
    out = np.empty(path_off.shape[0] - 1, dtype=np.float64)
    if _resolve(backend) == "numba":
        _eval_paths_nb(gall, goff, npts, n, signs, atoms_flat, path_off, out)
    else:
        _eval_paths_np(gall, goff, npts, n, signs, atoms_flat, path_off, out)
    return out

"""Compound-Poisson path simulation and pathwise multiple-integral evaluation.

A path is a finite atom configuration of the jump measure.  Multiple
integrals against the compensated measure are evaluated exactly via the
inclusion-exclusion subset formula: for a symmetric degree-n kernel f,

    I_n(f) = sum_{j=0}^{n} (-1)^(n-j) C(n, j) * D_j(g_j),

where g_j is f with n-j slots summed out against the reference weights
and D_j sums the degree-j kernel over ordered j-tuples of pairwise
distinct atoms.  Everything is a finite sum, so the product identity can
be checked to machine precision per path.

RNG scheme: numpy ``default_rng`` seeded with integer sequences; derived
streams use ``[seed, tag, index]`` so replicas are reproducible and
independent.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from . import _backend
from .errors import DomainError, NonFiniteError, ResourceError
from .kernelspace import StateSpace, SymmetricKernel

TUPLE_GUARD = 1e7


@dataclass(eq=False)
class JumpPath:
    """One realized atom configuration: (time, mark index) pairs, time-sorted."""

    times: np.ndarray
    marks: np.ndarray
    space: StateSpace

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        mk = np.asarray(self.marks, dtype=np.int64)
        if t.shape != mk.shape or t.ndim != 1:
            raise DomainError("times and marks must be 1-d arrays of equal length")
        if t.size and (np.any(np.diff(t) <= 0.0) or t[0] <= 0.0 or t[-1] > self.space.grid.horizon):
            raise DomainError("times must be strictly increasing in (0, T]")
        if np.any(mk < 0) or np.any(mk >= self.space.nmarks):
            raise DomainError("mark index out of range")
        self.times = t
        self.marks = mk

    @property
    def natoms(self) -> int:
        return self.times.size

    @property
    def point_indices(self) -> np.ndarray:
        """State-space point index of each atom (cell of its time, its mark)."""
        if self.natoms == 0:
            return np.empty(0, dtype=np.int64)
        cells = self.space.cell_of_time(self.times)
        return cells * self.space.nmarks + self.marks

    def to_json(self, seed: int | None = None) -> dict:
        doc = {"atoms": [{"t": float(t), "mark": int(m)}
                         for t, m in zip(self.times, self.marks)]}
        if seed is not None:
            doc["seed"] = seed
        return doc

    @staticmethod
    def from_json(doc: dict, space: StateSpace) -> "JumpPath":
        atoms = doc.get("atoms", [])
        times = np.array([a["t"] for a in atoms], dtype=np.float64)
        marks = np.array([a["mark"] for a in atoms], dtype=np.int64)
        order = np.argsort(times)
        return JumpPath(times[order], marks[order], space)


def simulate_path(space: StateSpace, seed) -> JumpPath:
    """One compound-Poisson path: per mark, Poisson(T * rate) jumps at uniform times.

    Deterministic given the seed.  Tied times (a measure-zero event in the
    continuum) are re-drawn so atoms stay pairwise distinct.
    """
    rng = np.random.default_rng(seed)
    T = space.grid.horizon
    times_parts, marks_parts = [], []
    for j, (_, rate) in enumerate(space.measure.marks):
        count = rng.poisson(T * rate)
        # 1 - U maps [0, 1) onto (0, 1]
        times_parts.append(T * (1.0 - rng.random(count)))
        marks_parts.append(np.full(count, j, dtype=np.int64))
    times = np.concatenate(times_parts)
    marks = np.concatenate(marks_parts)
    while times.size > 1 and len(np.unique(times)) < times.size:
        _, first = np.unique(times, return_index=True)
        dup = np.setdiff1d(np.arange(times.size), first)
        times[dup] = T * (1.0 - rng.random(dup.size))
    order = np.argsort(times)
    return JumpPath(times[order], marks[order], space)


def simulate_counts(space: StateSpace, seed, n_paths: int) -> np.ndarray:
    """Atom counts per (path, point) for a Monte Carlo batch.

    By Poisson thinning the number of atoms in each (cell, mark) point is
    an independent Poisson with mean equal to the point weight, and every
    quantity evaluated here depends on a path only through these counts.
    """
    rng = np.random.default_rng(seed)
    return rng.poisson(space.weights, size=(n_paths, space.npoints))


def _counts_to_atoms(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    counts = np.asarray(counts, dtype=np.int64)
    n_paths, npts = counts.shape
    offsets = np.zeros(n_paths + 1, dtype=np.int64)
    np.cumsum(counts.sum(axis=1), out=offsets[1:])
    pts = np.tile(np.arange(npts, dtype=np.int64), n_paths)
    atoms_flat = np.repeat(pts, counts.ravel())
    return atoms_flat, offsets


class IntegralEvaluator:
    """Pathwise evaluator for one kernel, with the weight-contraction chain precomputed."""

    def __init__(self, f: SymmetricKernel, guard: float = TUPLE_GUARD):
        self.kernel = f
        self.space = f.space
        self.degree = f.degree
        self.guard = float(guard)
        w = self.space.weights
        chain = [f.values]
        for _ in range(f.degree):
            chain.append(np.tensordot(chain[-1], w, axes=([-1], [0])))
        chain.reverse()  # chain[j] has degree j
        self.chain = chain
        n = f.degree
        self.signs = np.array([(-1.0) ** (n - j) * comb(n, j) for j in range(n + 1)])

    def _check_guard(self, natoms: int) -> bool:
        return self.degree == 0 or float(natoms) ** self.degree <= self.guard

    def eval_path(self, path: JumpPath) -> float:
        if not path.space.compatible(self.space):
            raise DomainError("path and kernel live on different state spaces")
        if not self._check_guard(path.natoms):
            raise ResourceError(
                f"{path.natoms}^{self.degree} atom tuples exceed the guard {self.guard:g}")
        if self.degree == 0:
            return float(self.chain[0])
        pts = path.point_indices
        total = 0.0
        for j in range(self.degree + 1):
            total += self.signs[j] * _backend.distinct_tuple_sum(
                self.chain[j], self.space.npoints, pts)
        return total

    def eval_counts(self, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Batched evaluation from per-point atom counts.

        Returns (values, ok); paths tripping the tuple guard have ok=False
        and value 0 (callers must treat them as skipped, not passed).
        """
        counts = np.asarray(counts, dtype=np.int64)
        natoms = counts.sum(axis=1)
        if self.degree == 0:
            return np.full(counts.shape[0], float(self.chain[0])), np.ones(counts.shape[0], bool)
        ok = natoms.astype(np.float64) ** self.degree <= self.guard
        atoms_flat, offsets = _counts_to_atoms(counts[ok])
        vals = np.zeros(counts.shape[0])
        vals[ok] = _backend.eval_paths(self.chain, self.space.npoints, self.signs,
                                       atoms_flat, offsets)
        return vals, ok


def eval_multiple_integral(f: SymmetricKernel, path: JumpPath,
                           guard: float = TUPLE_GUARD) -> float:
    """I_n(f) evaluated exactly on one path."""
    return IntegralEvaluator(f, guard).eval_path(path)


def path_counts(path: JumpPath) -> np.ndarray:
    """Per-point atom counts of one path (row vector usable with eval_counts)."""
    counts = np.zeros(path.space.npoints, dtype=np.int64)
    np.add.at(counts, path.point_indices, 1)
    return counts


# ---------------------------------------------------------------------------
# exponential functional and its chaos kernels

@dataclass(eq=False)
class ExponentialSpec:
    """A degree-1 exponent kernel rho together with the derived e^rho - 1."""

    rho: SymmetricKernel

    def __post_init__(self):
        if self.rho.degree != 1:
            raise DomainError("rho must have degree 1")

    @property
    def space(self) -> StateSpace:
        return self.rho.space

    @property
    def expm1(self) -> SymmetricKernel:
        return SymmetricKernel(1, self.space, np.expm1(self.rho.values))


def eval_exponential_functional(spec: ExponentialSpec, path: JumpPath) -> float:
    """exp{ integral of rho against the compensated measure minus the
    (e^rho - 1 - rho) compensator }, all sums grid-exact."""
    if not path.space.compatible(spec.space):
        raise DomainError("path and rho live on different state spaces")
    rho = spec.rho.values
    exponent = rho[path.point_indices].sum() - _compensator(spec)
    value = float(np.exp(exponent))
    if not np.isfinite(value):
        raise NonFiniteError("exponential functional overflowed; rho too large")
    return value


def _compensator(spec: ExponentialSpec) -> float:
    with np.errstate(over="raise"):
        try:
            return float(np.expm1(spec.rho.values) @ spec.space.weights)
        except FloatingPointError as exc:
            raise NonFiniteError("compensator overflowed; rho too large") from exc


def eval_exponential_counts(spec: ExponentialSpec, counts: np.ndarray) -> np.ndarray:
    """Batched exponential functional from per-point atom counts."""
    vals = np.exp(np.asarray(counts) @ spec.rho.values - _compensator(spec))
    if not np.all(np.isfinite(vals)):
        raise NonFiniteError("exponential functional overflowed; rho too large")
    return vals


def exponential_chaos_kernel(spec: ExponentialSpec, n: int) -> SymmetricKernel:
    """n-fold symmetric tensor power of e^rho - 1 (a product kernel, so no
    symmetrization pass is needed); n = 0 gives the scalar 1."""
    if n < 0:
        raise DomainError("order must be >= 0")
    if n > spec.space.degree_cap:
        raise ResourceError(f"order {n} above degree cap {spec.space.degree_cap}")
    u = np.expm1(spec.rho.values)
    values = np.array(1.0)
    for _ in range(n):
        values = np.multiply.outer(values, u)
    return SymmetricKernel(n, spec.space, values)


def eval_truncated_chaos(spec: ExponentialSpec, path: JumpPath, order: int,
                         guard: float = TUPLE_GUARD) -> float:
    """Partial chaos sum sum_{n=0}^{order} I_n((e^rho - 1)^tensor n) / n!."""
    total = 0.0
    fact = 1.0
    for n in range(order + 1):
        if n > 0:
            fact *= n
        total += eval_multiple_integral(exponential_chaos_kernel(spec, n), path, guard) / fact
    return total

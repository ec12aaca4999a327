"""Symmetric kernels on a discretized time x jump-size state space.

The state space is the product of a time grid on [0, T] and a finite
atomic jump-size measure.  Kernels are dense arrays over points**n, kept
symmetric in their argument slots, with the reference measure weight
(cell width times mark rate) bound at contraction time rather than baked
into the values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import permutations
from math import factorial
from typing import Sequence

import numpy as np

from .combinatorics import PairedMultiIndex, SubsetIndex, chi, enumerate_upsilon, term_degree
from .errors import DomainError, ResourceError

DEFAULT_DEGREE_CAP = 6
DEFAULT_MAX_POINTS = 16


@dataclass(frozen=True)
class LevyMeasureSpec:
    """A finite atomic jump-size measure: (jump size, rate) pairs, rates > 0."""

    marks: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.marks:
            raise DomainError("measure needs at least one mark")
        sizes = [s for s, _ in self.marks]
        if any(s == 0.0 for s in sizes):
            raise DomainError("jump sizes must be nonzero")
        if len(set(sizes)) != len(sizes):
            raise DomainError("jump sizes must be distinct")
        if any(r <= 0.0 for _, r in self.marks):
            raise DomainError("rates must be positive")

    @property
    def rates(self) -> np.ndarray:
        return np.array([r for _, r in self.marks])

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s for s, _ in self.marks])

    @property
    def total_rate(self) -> float:
        return float(sum(r for _, r in self.marks))


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing cell boundaries 0 = t_0 < ... < t_G = T."""

    boundaries: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=np.float64)
        object.__setattr__(self, "boundaries", b)
        if b.ndim != 1 or b.size < 2:
            raise DomainError("grid needs at least one cell")
        if b[0] != 0.0 or np.any(np.diff(b) <= 0.0):
            raise DomainError("boundaries must start at 0 and strictly increase")

    @staticmethod
    def regular(horizon: float, cells: int) -> "TimeGrid":
        if horizon <= 0 or cells < 1:
            raise DomainError("horizon must be > 0 and cells >= 1")
        return TimeGrid(np.linspace(0.0, horizon, cells + 1))

    @property
    def horizon(self) -> float:
        return float(self.boundaries[-1])

    @property
    def cells(self) -> int:
        return self.boundaries.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.boundaries)


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Discretized domain: (time cell, mark) points with product weights."""

    grid: TimeGrid
    measure: LevyMeasureSpec
    degree_cap: int = DEFAULT_DEGREE_CAP
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self):
        if self.npoints > self.max_points:
            raise ResourceError(
                f"{self.npoints} points exceed the dense-storage guard of {self.max_points}")

    @property
    def nmarks(self) -> int:
        return len(self.measure.marks)

    @property
    def npoints(self) -> int:
        return self.grid.cells * self.nmarks

    @property
    def weights(self) -> np.ndarray:
        """weight(cell, mark) = cell width * mark rate, point-major (cell*M + mark)."""
        return np.outer(self.grid.widths, self.measure.rates).ravel()

    @property
    def total_mass(self) -> float:
        """T * total rate: the reference measure of the whole domain."""
        return self.grid.horizon * self.measure.total_rate

    def point_index(self, cell: int, mark: int) -> int:
        return cell * self.nmarks + mark

    def cell_of_time(self, t: float | np.ndarray) -> np.ndarray:
        """Cell index for times in (0, T]; cells are the half-open (t_c, t_{c+1}]."""
        b = self.grid.boundaries
        t = np.asarray(t, dtype=np.float64)
        if np.any(t <= 0.0) or np.any(t > b[-1]):
            raise DomainError("times must lie in (0, T]")
        return np.searchsorted(b, t, side="left") - 1

    def compatible(self, other: "StateSpace") -> bool:
        return (np.array_equal(self.grid.boundaries, other.grid.boundaries)
                and self.measure.marks == other.measure.marks)


@dataclass(eq=False)
class SymmetricKernel:
    """Degree-n symmetric function on points**n; degree 0 stores one scalar."""

    degree: int
    space: StateSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        expected = (self.space.npoints,) * self.degree
        if v.shape != expected:
            raise DomainError(f"values shape {v.shape} != {expected} for degree {self.degree}")
        if not np.all(np.isfinite(v)):
            raise DomainError("kernel values must be finite")
        self.values = v

    @property
    def scalar(self) -> float:
        if self.degree != 0:
            raise DomainError("scalar only defined for degree 0")
        return float(self.values)

    def __add__(self, other: "SymmetricKernel") -> "SymmetricKernel":
        _check_match(self, other)
        return SymmetricKernel(self.degree, self.space, self.values + other.values)

    def __sub__(self, other: "SymmetricKernel") -> "SymmetricKernel":
        _check_match(self, other)
        return SymmetricKernel(self.degree, self.space, self.values - other.values)

    def __mul__(self, c: float) -> "SymmetricKernel":
        return SymmetricKernel(self.degree, self.space, self.values * float(c))

    __rmul__ = __mul__

    def allclose(self, other: "SymmetricKernel", rtol: float = 1e-12, atol: float = 1e-12) -> bool:
        _check_match(self, other)
        return bool(np.allclose(self.values, other.values, rtol=rtol, atol=atol))


def _check_match(f: SymmetricKernel, g: SymmetricKernel) -> None:
    if not f.space.compatible(g.space):
        raise DomainError("kernels live on different state spaces")
    if f.degree != g.degree:
        raise DomainError(f"degree mismatch: {f.degree} vs {g.degree}")


def _check_space(kernels: Sequence[SymmetricKernel]) -> StateSpace:
    space = kernels[0].space
    for k in kernels[1:]:
        if not k.space.compatible(space):
            raise DomainError("kernels live on different state spaces")
    return space


def symmetrize(values: np.ndarray, space: StateSpace) -> SymmetricKernel:
    """Average of ``values`` over all slot permutations; exact n!-term sum."""
    v = np.asarray(values, dtype=np.float64)
    n = v.ndim
    if n > space.degree_cap:
        raise ResourceError(f"degree {n} above cap {space.degree_cap} ({factorial(n)} permutations)")
    if n <= 1:
        return SymmetricKernel(n, space, v.copy())
    acc = np.zeros_like(v)
    for perm in permutations(range(n)):
        acc += v.transpose(perm)
    return SymmetricKernel(n, space, acc / factorial(n))


def is_symmetric(f: SymmetricKernel, samples: int = 10, seed: int = 0,
                 rtol: float = 1e-12) -> bool:
    """Check invariance under randomly sampled slot permutations."""
    if f.degree <= 1:
        return True
    rng = np.random.default_rng(seed)
    perms = [tuple(rng.permutation(f.degree)) for _ in range(samples)]
    return all(np.allclose(f.values, f.values.transpose(p), rtol=rtol, atol=1e-12)
               for p in perms)


def tensor(f: SymmetricKernel, g: SymmetricKernel) -> SymmetricKernel:
    """Symmetric tensor product."""
    if not f.space.compatible(g.space):
        raise DomainError("kernels live on different state spaces")
    if f.degree == 0:
        return g * f.scalar
    if g.degree == 0:
        return f * g.scalar
    return symmetrize(np.multiply.outer(f.values, g.values), f.space)


def inner(f: SymmetricKernel, g: SymmetricKernel) -> float:
    """Weighted L2 pairing: sum over points**n of f*g with one weight per slot."""
    _check_match(f, g)
    if f.degree == 0:
        return f.scalar * g.scalar
    w = f.space.weights
    ids = list(range(f.degree))
    ops: list = [f.values, ids, g.values, ids]
    for a in ids:
        ops.extend([w, [a]])
    return float(np.einsum(*ops, []))


def norm(f: SymmetricKernel) -> float:
    return float(np.sqrt(inner(f, f)))


def apply_contraction_pattern(factors: Sequence[SymmetricKernel],
                              pm: PairedMultiIndex) -> SymmetricKernel:
    """Apply all integrated contractions and diagonal identifications of pm.

    Slot allocation: groups are visited in canonical subset order,
    integrated groups before live groups; each copy of a group consumes
    one slot of every member factor.  Integrated slots are summed out with
    one weight factor each; live slots remain output variables shared by
    their group's members.  The result does not depend on the allocation
    because the factors are symmetric.
    """
    space = _check_space(factors)
    m = len(factors)
    if pm.m != m:
        raise DomainError(f"pattern is for m={pm.m}, got {m} factors")
    q = [f.degree for f in factors]
    for k in range(1, m + 1):
        if chi(k, pm) > q[k - 1]:
            raise DomainError(f"pattern consumes {chi(k, pm)} slots of factor {k} "
                              f"of degree {q[k - 1]}")
    w = space.weights
    next_id = 0

    def fresh() -> int:
        nonlocal next_id
        next_id += 1
        return next_id - 1

    slot_ids: list[list[int]] = [[] for _ in range(m)]
    weight_ids: list[int] = []
    out_ids: list[int] = []
    for subset, copies in pm.l:
        for _ in range(copies):
            a = fresh()
            weight_ids.append(a)
            for k in subset:
                slot_ids[k - 1].append(a)
    for subset, copies in pm.n:
        for _ in range(copies):
            b = fresh()
            out_ids.append(b)
            for k in subset:
                slot_ids[k - 1].append(b)
    for k in range(m):
        while len(slot_ids[k]) < q[k]:
            c = fresh()
            out_ids.append(c)
            slot_ids[k].append(c)

    ops: list = []
    for k in range(m):
        ops.extend([factors[k].values, slot_ids[k]])
    for a in weight_ids:
        ops.extend([w, [a]])
    values = np.einsum(*ops, out_ids, optimize=True)
    result = symmetrize(values, space)
    assert result.degree == term_degree(q, pm)
    return result


def contract_integrated(factors: Sequence[SymmetricKernel], i: SubsetIndex,
                        mu: int) -> SymmetricKernel:
    """Sum out mu shared slots of the factors indexed by i against the weights."""
    i = tuple(i)
    if len(i) < 2:
        raise DomainError("integrated contraction needs a group of size >= 2")
    if mu < 0:
        raise DomainError("mu must be >= 0")
    pm = PairedMultiIndex.make(len(factors), {i: mu} if mu else None, None)
    return apply_contraction_pattern(factors, pm)


def identify_diagonal(factors: Sequence[SymmetricKernel], j: SubsetIndex,
                      nu: int) -> SymmetricKernel:
    """Identify nu shared slots of the factors indexed by j, leaving them live."""
    j = tuple(j)
    if nu < 0:
        raise DomainError("nu must be >= 0")
    if len(j) == 1 or nu == 0:
        # a singleton group (or an empty one) is the identity operator
        if nu > min(factors[k - 1].degree for k in j):
            raise DomainError("nu exceeds a member factor's degree")
        out = factors[0]
        for f in factors[1:]:
            out = tensor(out, f)
        return out
    pm = PairedMultiIndex.make(len(factors), None, {j: nu})
    return apply_contraction_pattern(factors, pm)


def pair_contraction(f: SymmetricKernel, g: SymmetricKernel, k: int, l: int) -> SymmetricKernel:
    """Two-factor contraction: k live shared slots, l integrated shared slots.

    Output degree n + m - 2l - k.  Implemented directly (not via the
    multi-factor pattern engine) so the two routes can be cross-checked.
    """
    if not f.space.compatible(g.space):
        raise DomainError("kernels live on different state spaces")
    if k < 0 or l < 0 or k + l > min(f.degree, g.degree):
        raise DomainError(f"need k, l >= 0 and k + l <= {min(f.degree, g.degree)}, "
                          f"got k={k}, l={l}")
    space = f.space
    w = space.weights
    n, m = f.degree, g.degree
    live = list(range(k))
    integ = list(range(k, k + l))
    f_free = list(range(k + l, k + l + (n - k - l)))
    g_free = list(range(k + l + (n - k - l), n + m - k - 2 * l + l))
    ops: list = [f.values, live + f_free + integ, g.values, live + g_free + integ]
    for a in integ:
        ops.extend([w, [a]])
    values = np.einsum(*ops, live + f_free + g_free, optimize=True)
    return symmetrize(values, space)


def random_kernel(space: StateSpace, degree: int, seed: int, scale: float = 1.0) -> SymmetricKernel:
    """Seeded random symmetric kernel: standard normal entries times scale, symmetrized.

    Generator: numpy default_rng seeded with the pair [seed, degree].
    """
    if degree > space.degree_cap:
        raise ResourceError(f"degree {degree} above cap {space.degree_cap}")
    rng = np.random.default_rng([seed, degree])
    values = rng.standard_normal((space.npoints,) * degree) * scale
    return symmetrize(values, space)


# ---------------------------------------------------------------------------
# JSON interchange

def space_to_json(space: StateSpace) -> dict:
    return {
        "boundaries": space.grid.boundaries.tolist(),
        "marks": [{"size": s, "rate": r} for s, r in space.measure.marks],
    }


def space_from_json(doc: dict, degree_cap: int = DEFAULT_DEGREE_CAP,
                    max_points: int = DEFAULT_MAX_POINTS) -> StateSpace:
    try:
        grid = TimeGrid(np.asarray(doc["boundaries"], dtype=np.float64))
        marks = tuple((float(m["size"]), float(m["rate"])) for m in doc["marks"])
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed state-space document: {exc}") from exc
    return StateSpace(grid, LevyMeasureSpec(marks), degree_cap, max_points)


def kernel_to_json(f: SymmetricKernel) -> dict:
    doc = space_to_json(f.space)
    doc["degree"] = f.degree
    doc["values"] = f.values.ravel().tolist()
    return doc


def kernel_from_json(doc: dict, space: StateSpace | None = None) -> SymmetricKernel:
    if space is None:
        space = space_from_json(doc)
    degree = int(doc.get("degree", -1))
    if degree < 0:
        raise DomainError("kernel document needs a nonnegative 'degree'")
    values = np.asarray(doc.get("values", []), dtype=np.float64)
    if values.size != space.npoints ** degree:
        raise DomainError(f"values length {values.size} != {space.npoints}^{degree}")
    return SymmetricKernel(degree, space, values.reshape((space.npoints,) * degree))


def kernel_load(path: str, space: StateSpace | None = None) -> SymmetricKernel:
    with open(path) as fh:
        return kernel_from_json(json.load(fh), space)

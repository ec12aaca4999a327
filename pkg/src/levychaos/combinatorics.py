"""Multi-index combinatorics for the m-fold product expansion.

The expansion of a product of m multiple integrals is indexed by pairs of
multi-indices (l, n) over the collection of subsets of {1, ..., m} with at
least two elements.  l counts integrated contractions, n counts diagonal
identifications.  This module enumerates that index set, decides
admissibility against the factor degrees, and produces the exact integer
coefficient and output degree of each term.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import factorial
from typing import Iterator, Mapping, Sequence

from .errors import DomainError

# A subset of factor positions, 1-based, strictly increasing.
SubsetIndex = tuple[int, ...]


def enumerate_upsilon(m: int) -> list[SubsetIndex]:
    """All subsets of {1,...,m} of size >= 2, ordered by size then lexicographically.

    The list has exactly 2**m - 1 - m elements.
    """
    if m < 2:
        raise DomainError(f"subset index set requires m >= 2, got m={m}")
    out: list[SubsetIndex] = []
    for size in range(2, m + 1):
        out.extend(combinations(range(1, m + 1), size))
    return out


def _canonical_items(m: int, mapping: Mapping[SubsetIndex, int] | None,
                     valid: frozenset[SubsetIndex]) -> tuple[tuple[SubsetIndex, int], ...]:
    if not mapping:
        return ()
    items = []
    for key, val in mapping.items():
        key = tuple(key)
        if key not in valid:
            raise DomainError(f"{key} is not a valid subset index for m={m}")
        if val < 0:
            raise DomainError(f"multi-index value for {key} must be >= 0, got {val}")
        if val > 0:
            items.append((key, int(val)))
    items.sort(key=lambda kv: (len(kv[0]), kv[0]))
    return tuple(items)


@dataclass(frozen=True)
class PairedMultiIndex:
    """One summation index (l, n) of the product expansion.

    ``l`` maps subsets to integrated-contraction counts, ``n`` to
    diagonal-identification counts.  Zero entries are dropped, so equal
    pairs compare and hash equal.  Build via :meth:`make`.
    """

    m: int
    l: tuple[tuple[SubsetIndex, int], ...]
    n: tuple[tuple[SubsetIndex, int], ...]

    @staticmethod
    def make(m: int,
             l: Mapping[SubsetIndex, int] | None = None,
             n: Mapping[SubsetIndex, int] | None = None) -> "PairedMultiIndex":
        valid = frozenset(enumerate_upsilon(m))
        return PairedMultiIndex(m, _canonical_items(m, l, valid), _canonical_items(m, n, valid))

    def l_of(self, subset: SubsetIndex) -> int:
        return dict(self.l).get(tuple(subset), 0)

    def n_of(self, subset: SubsetIndex) -> int:
        return dict(self.n).get(tuple(subset), 0)

    @property
    def total_l(self) -> int:
        return sum(v for _, v in self.l)

    @property
    def total_n(self) -> int:
        return sum(v for _, v in self.n)

    def is_zero(self) -> bool:
        return not self.l and not self.n


def chi(k: int, pm: PairedMultiIndex) -> int:
    """Number of argument slots of factor k consumed by all groups of pm."""
    if not 1 <= k <= pm.m:
        raise DomainError(f"factor index k={k} out of range 1..{pm.m}")
    total = 0
    for subset, val in pm.l:
        if k in subset:
            total += val
    for subset, val in pm.n:
        if k in subset:
            total += val
    return total


def is_admissible(q: Sequence[int], pm: PairedMultiIndex) -> bool:
    """True iff chi(k, pm) <= q_k for every factor k."""
    if pm.m != len(q):
        return False
    return all(chi(k, pm) <= q[k - 1] for k in range(1, pm.m + 1))


def admissible_pairs(q: Sequence[int]) -> Iterator[PairedMultiIndex]:
    """Yield every (l, n) with chi(k) <= q_k for all k, each exactly once.

    Deterministic order: depth-first over the canonical subset order, for
    each subset the l value varies before the n value, values ascending.
    Each value is bounded by the remaining capacity min over the subset's
    members, which keeps the stream finite and prunes early.
    """
    m = len(q)
    if m < 2:
        raise DomainError(f"admissible_pairs requires m >= 2, got m={m}")
    if any(qk < 0 for qk in q):
        raise DomainError("degrees must be nonnegative")
    subsets = enumerate_upsilon(m)
    rem = list(q)
    lvals: dict[SubsetIndex, int] = {}
    nvals: dict[SubsetIndex, int] = {}

    def rec(pos: int) -> Iterator[PairedMultiIndex]:
        if pos == 2 * len(subsets):
            yield PairedMultiIndex.make(m, lvals, nvals)
            return
        subset = subsets[pos // 2]
        target = lvals if pos % 2 == 0 else nvals
        bound = min(rem[k - 1] for k in subset)
        for v in range(bound + 1):
            for k in subset:
                rem[k - 1] -= v
            target[subset] = v
            yield from rec(pos + 1)
            for k in subset:
                rem[k - 1] += v
        del target[subset]

    yield from rec(0)


def term_coefficient(q: Sequence[int], pm: PairedMultiIndex) -> int:
    """Exact integer coefficient of the term indexed by pm.

    Equals prod_k q_k! / (prod_i l_i! * prod_j n_j! * prod_k (q_k - chi(k))!),
    always a positive integer for admissible pm.
    """
    if not is_admissible(q, pm):
        raise DomainError(f"pair {pm} is not admissible for degrees {tuple(q)}")
    num = 1
    for qk in q:
        num *= factorial(qk)
    den = 1
    for _, v in pm.l:
        den *= factorial(v)
    for _, v in pm.n:
        den *= factorial(v)
    for k in range(1, pm.m + 1):
        den *= factorial(q[k - 1] - chi(k, pm))
    coeff, rest = divmod(num, den)
    if rest:
        raise ArithmeticError(f"non-integer coefficient for q={tuple(q)}, pm={pm}")
    return coeff


def term_degree(q: Sequence[int], pm: PairedMultiIndex) -> int:
    """Order of the multiple integral produced by the term indexed by pm.

    |q| + |n| - sum_k chi(k); equivalently the slot count left after
    removing every integrated slot and collapsing each identified group
    of slots to one.
    """
    if not is_admissible(q, pm):
        raise DomainError(f"pair {pm} is not admissible for degrees {tuple(q)}")
    deg = sum(q) + pm.total_n - sum(chi(k, pm) for k in range(1, pm.m + 1))
    if deg < 0:
        raise ArithmeticError(f"negative degree for q={tuple(q)}, pm={pm}")
    return deg

"""Expansion of a product of multiple integrals into a chaos term list.

``expand_product`` handles any number of factors through the multi-index
machinery; ``expand_pair`` is the dedicated two-factor path with the
classical (k, l) coefficients.  The two must agree term for term, which
the verification suite checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence

import numpy as np

from .combinatorics import (PairedMultiIndex, admissible_pairs, term_coefficient,
                            term_degree)
from .errors import DomainError
from .kernelspace import (SymmetricKernel, _check_space, apply_contraction_pattern,
                          pair_contraction)


@dataclass(eq=False)
class ExpansionTerm:
    """One summand: coefficient * I_degree(kernel), tagged with its (l, n) index."""

    coefficient: int
    degree: int
    kernel: SymmetricKernel
    provenance: PairedMultiIndex | None

    def __post_init__(self):
        if self.degree != self.kernel.degree:
            raise DomainError("term degree disagrees with its kernel")


@dataclass(eq=False)
class Expansion:
    """Term list for one product; terms stay in one-to-one correspondence
    with the admissible index pairs (no merging of equal kernels)."""

    q: tuple[int, ...]
    terms: list[ExpansionTerm]

    def degree_zero_total(self) -> float:
        return sum(t.coefficient * t.kernel.scalar for t in self.terms if t.degree == 0)


def expand_product(factors: Sequence[SymmetricKernel]) -> Expansion:
    """Full expansion of prod_k I_{q_k}(f_k), one term per admissible (l, n).

    Degree-0 factors are constants (I_0(c) = c) and are pulled out as a
    multiplier before the combinatorics; with one effective factor the
    expansion is the single untouched term.
    """
    if not factors:
        raise DomainError("need at least one factor")
    space = _check_space(factors)
    q_all = tuple(f.degree for f in factors)
    scalar = 1.0
    live = []
    for f in factors:
        if f.degree == 0:
            scalar *= f.scalar
        else:
            live.append(f)
    if not live:
        kernel = SymmetricKernel(0, space, np.array(scalar))
        return Expansion(q_all, [ExpansionTerm(1, 0, kernel, None)])
    if len(live) == 1:
        return Expansion(q_all, [ExpansionTerm(1, live[0].degree, live[0] * scalar, None)])
    q = tuple(f.degree for f in live)
    terms = []
    for pm in admissible_pairs(q):
        kernel = apply_contraction_pattern(live, pm) * scalar
        terms.append(ExpansionTerm(term_coefficient(q, pm), term_degree(q, pm), kernel, pm))
    return Expansion(q_all, terms)


def expand_pair(f: SymmetricKernel, g: SymmetricKernel) -> Expansion:
    """Two-factor expansion over {(k, l) : k, l >= 0, k + l <= min(n, m)}.

    Coefficient n! m! / (l! k! (n-k-l)! (m-k-l)!), output degree
    n + m - 2l - k, kernel pair_contraction(f, g, k, l).  Term order
    matches ``expand_product`` under (k, l) <-> (n_{12}, l_{12}).
    """
    if not f.space.compatible(g.space):
        raise DomainError("kernels live on different state spaces")
    n, m = f.degree, g.degree
    if n == 0 or m == 0:
        return expand_product([f, g])
    terms = []
    for l in range(min(n, m) + 1):
        for k in range(min(n, m) - l + 1):
            coeff_num = factorial(n) * factorial(m)
            coeff_den = (factorial(l) * factorial(k)
                         * factorial(n - k - l) * factorial(m - k - l))
            coeff, rest = divmod(coeff_num, coeff_den)
            assert rest == 0
            pm = PairedMultiIndex.make(2, {(1, 2): l} if l else None,
                                       {(1, 2): k} if k else None)
            terms.append(ExpansionTerm(coeff, n + m - 2 * l - k,
                                       pair_contraction(f, g, k, l), pm))
    return Expansion((n, m), terms)


def expected_value(e: Expansion) -> float:
    """Closed-form expectation of the product: multiple integrals of order
    >= 1 are centered, so only degree-0 terms contribute."""
    return float(e.degree_zero_total())


def merge_terms(e: Expansion, atol: float = 1e-12) -> list[tuple[int, SymmetricKernel]]:
    """Optional display normalization: aggregate coefficient * kernel per degree."""
    by_degree: dict[int, SymmetricKernel] = {}
    for t in e.terms:
        scaled = t.kernel * t.coefficient
        if t.degree in by_degree:
            by_degree[t.degree] = by_degree[t.degree] + scaled
        else:
            by_degree[t.degree] = scaled
    out = []
    for deg in sorted(by_degree):
        kern = by_degree[deg]
        if np.max(np.abs(np.atleast_1d(kern.values))) > atol:
            out.append((deg, kern))
    return out

import json

import numpy as np
import pytest

from levychaos.combinatorics import PairedMultiIndex, admissible_pairs, term_degree
from levychaos.errors import DomainError, ResourceError
from levychaos.kernelspace import (LevyMeasureSpec, StateSpace, SymmetricKernel,
                                   TimeGrid, apply_contraction_pattern,
                                   contract_integrated, identify_diagonal, inner,
                                   is_symmetric, kernel_from_json, kernel_to_json,
                                   pair_contraction, random_kernel, symmetrize,
                                   tensor)


def const_kernel(space, degree, value=1.0):
    return SymmetricKernel(degree, space, np.full((space.npoints,) * degree, value))


class TestTypes:
    def test_measure_invariants(self):
        with pytest.raises(DomainError):
            LevyMeasureSpec(())
        with pytest.raises(DomainError):
            LevyMeasureSpec(((1.0, -2.0),))
        with pytest.raises(DomainError):
            LevyMeasureSpec(((0.0, 1.0),))
        with pytest.raises(DomainError):
            LevyMeasureSpec(((1.0, 1.0), (1.0, 2.0)))

    def test_grid_invariants(self):
        with pytest.raises(DomainError):
            TimeGrid(np.array([0.0, 0.5, 0.5]))
        with pytest.raises(DomainError):
            TimeGrid(np.array([0.1, 0.5]))
        g = TimeGrid.regular(2.0, 4)
        assert g.horizon == 2.0 and g.cells == 4
        assert np.allclose(g.widths.sum(), 2.0)

    def test_space_weights(self, space):
        assert space.npoints == 8
        assert np.all(space.weights > 0)
        assert np.isclose(space.weights.sum(), space.total_mass)
        assert np.isclose(space.total_mass, 4.0)

    def test_point_guard(self):
        grid = TimeGrid.regular(1.0, 20)
        with pytest.raises(ResourceError):
            StateSpace(grid, LevyMeasureSpec(((1.0, 1.0),)), max_points=16)

    def test_kernel_shape_and_finiteness(self, space):
        with pytest.raises(DomainError):
            SymmetricKernel(2, space, np.zeros((8, 7)))
        with pytest.raises(DomainError):
            SymmetricKernel(1, space, np.full(8, np.nan))


class TestSymmetrize:
    def test_idempotent(self, space):
        f = random_kernel(space, 3, seed=1)
        g = symmetrize(f.values, space)
        assert np.allclose(f.values, g.values)

    def test_two_slot_average(self, space):
        raw = np.zeros((8, 8))
        raw[2, 5] = 1.0
        out = symmetrize(raw, space)
        assert out.values[2, 5] == pytest.approx(0.5)
        assert out.values[5, 2] == pytest.approx(0.5)

    def test_three_slot_oracle(self, space):
        rng = np.random.default_rng(0)
        raw = rng.standard_normal((8, 8, 8))
        out = symmetrize(raw, space)
        from itertools import permutations
        oracle = sum(raw.transpose(p) for p in permutations(range(3))) / 6.0
        assert np.allclose(out.values, oracle)
        assert is_symmetric(out)

    def test_cap(self, space):
        with pytest.raises(ResourceError):
            symmetrize(np.zeros((8,) * 7), space)


class TestTensorInner:
    def test_scalar_factor_scales(self, space):
        f = random_kernel(space, 2, seed=2)
        c = SymmetricKernel(0, space, np.array(3.0))
        assert tensor(f, c).allclose(f * 3.0)

    def test_commutative(self, space):
        f = random_kernel(space, 1, seed=3)
        g = random_kernel(space, 2, seed=4)
        assert tensor(f, g).allclose(tensor(g, f))

    def test_degree_one_formula(self, space):
        f = random_kernel(space, 1, seed=5)
        g = random_kernel(space, 1, seed=6)
        expected = 0.5 * (np.multiply.outer(f.values, g.values)
                          + np.multiply.outer(g.values, f.values))
        assert np.allclose(tensor(f, g).values, expected)

    def test_inner_constant_one(self, space):
        one = const_kernel(space, 1)
        assert inner(one, one) == pytest.approx(space.total_mass)

    def test_inner_zero(self, space):
        f = random_kernel(space, 2, seed=7)
        zero = const_kernel(space, 2, 0.0)
        assert inner(f, zero) == 0.0

    def test_inner_symmetric_pair_indicator(self, space):
        a, b = 1, 4
        vals = np.zeros((8, 8))
        vals[a, b] = vals[b, a] = 1.0
        f = SymmetricKernel(2, space, vals)
        w = space.weights
        assert inner(f, f) == pytest.approx(2.0 * w[a] * w[b])

    def test_mismatch_errors(self, space, tiny_space):
        f = random_kernel(space, 1, seed=1)
        g = random_kernel(tiny_space, 1, seed=1)
        with pytest.raises(DomainError):
            inner(f, g)
        h = random_kernel(space, 2, seed=1)
        with pytest.raises(DomainError):
            inner(f, h)


class TestContractions:
    def test_integrated_mu0_is_tensor(self, space):
        f, g = (random_kernel(space, d, seed=i) for i, d in enumerate((1, 2)))
        out = contract_integrated([f, g], (1, 2), 0)
        assert out.allclose(tensor(f, g))

    def test_integrated_full_pair_is_inner(self, space):
        f = random_kernel(space, 1, seed=8)
        g = random_kernel(space, 1, seed=9)
        out = contract_integrated([f, g], (1, 2), 1)
        assert out.degree == 0
        assert out.scalar == pytest.approx(inner(f, g))

    def test_integrated_triple_diagonal(self, space):
        f, g, h = (random_kernel(space, 1, seed=10 + i) for i in range(3))
        out = contract_integrated([f, g, h], (1, 2, 3), 1)
        expected = float(np.sum(f.values * g.values * h.values * space.weights))
        assert out.scalar == pytest.approx(expected)

    def test_integrated_errors(self, space):
        f = random_kernel(space, 1, seed=1)
        g = random_kernel(space, 1, seed=2)
        with pytest.raises(DomainError):
            contract_integrated([f, g], (1,), 1)
        with pytest.raises(DomainError):
            contract_integrated([f, g], (1, 2), 2)

    def test_diagonal_identity_cases(self, space):
        f = random_kernel(space, 1, seed=11)
        g = random_kernel(space, 2, seed=12)
        assert identify_diagonal([f, g], (1,), 1).allclose(tensor(f, g))
        assert identify_diagonal([f, g], (1, 2), 0).allclose(tensor(f, g))

    def test_diagonal_pointwise_product(self, space):
        f = random_kernel(space, 1, seed=13)
        g = random_kernel(space, 1, seed=14)
        out = identify_diagonal([f, g], (1, 2), 1)
        assert out.degree == 1
        assert np.allclose(out.values, f.values * g.values)

    def test_diagonal_live_plus_free_slot(self, space):
        f = random_kernel(space, 2, seed=15)
        g = random_kernel(space, 1, seed=16)
        out = identify_diagonal([f, g], (1, 2), 1)
        raw = f.values * g.values[:, None]  # (x, y) -> f(x, y) g(x)
        assert out.allclose(symmetrize(raw, space))

    def test_diagonal_nu_too_large(self, space):
        f = random_kernel(space, 1, seed=1)
        g = random_kernel(space, 2, seed=2)
        with pytest.raises(DomainError):
            identify_diagonal([f, g], (1, 2), 2)


class TestContractionPattern:
    def test_all_zero_is_tensor(self, space):
        fs = [random_kernel(space, d, seed=20 + i) for i, d in enumerate((1, 2, 1))]
        pm = PairedMultiIndex.make(3, None, None)
        expected = tensor(tensor(fs[0], fs[1]), fs[2])
        assert apply_contraction_pattern(fs, pm).allclose(expected)

    def test_pair_live_slot(self, space):
        f = random_kernel(space, 1, seed=22)
        g = random_kernel(space, 1, seed=23)
        pm = PairedMultiIndex.make(2, None, {(1, 2): 1})
        out = apply_contraction_pattern([f, g], pm)
        assert np.allclose(out.values, f.values * g.values)

    def test_q22_mixed_pattern(self, space):
        f = random_kernel(space, 2, seed=24)
        g = random_kernel(space, 2, seed=25)
        pm = PairedMultiIndex.make(2, {(1, 2): 1}, {(1, 2): 1})
        out = apply_contraction_pattern([f, g], pm)
        expected = np.einsum("xy,xy,y->x", f.values, g.values, space.weights)
        assert out.degree == 1
        assert np.allclose(out.values, expected)

    def test_inadmissible(self, space):
        f = random_kernel(space, 1, seed=26)
        g = random_kernel(space, 1, seed=27)
        pm = PairedMultiIndex.make(2, {(1, 2): 1}, {(1, 2): 1})
        with pytest.raises(DomainError):
            apply_contraction_pattern([f, g], pm)

    @pytest.mark.parametrize("q", [(2, 2), (2, 1), (1, 1, 2)])
    def test_degree_bookkeeping_and_symmetry(self, space, q):
        fs = [random_kernel(space, d, seed=30 + i) for i, d in enumerate(q)]
        for pm in admissible_pairs(q):
            out = apply_contraction_pattern(fs, pm)
            assert out.degree == term_degree(q, pm)
            assert is_symmetric(out)

    def test_slot_allocation_invariance(self, space):
        # assigning the contraction groups to different slots must not
        # change the value, because the factors are symmetric
        f = random_kernel(space, 3, seed=33)
        g = random_kernel(space, 3, seed=34)
        pm = PairedMultiIndex.make(2, {(1, 2): 1}, {(1, 2): 1})
        out = apply_contraction_pattern([f, g], pm)
        w = space.weights
        raw_first = np.einsum("xya,xyb,x->yab", f.values, g.values, w)
        raw_last = np.einsum("yax,ybx,x->yab", f.values, g.values, w)
        assert out.allclose(symmetrize(raw_first, space), rtol=1e-12)
        assert out.allclose(symmetrize(raw_last, space), rtol=1e-12)

    def test_multilinearity(self, space):
        f1 = random_kernel(space, 2, seed=35)
        f2 = random_kernel(space, 2, seed=36)
        g = random_kernel(space, 1, seed=37)
        pm = PairedMultiIndex.make(2, {(1, 2): 1}, None)
        a, b = 0.7, -1.3
        combo = apply_contraction_pattern([f1 * a + f2 * b, g], pm)
        split = (apply_contraction_pattern([f1, g], pm) * a
                 + apply_contraction_pattern([f2, g], pm) * b)
        assert combo.allclose(split, rtol=1e-10, atol=1e-10)


class TestPairContraction:
    def test_k0_l0(self, space):
        f = random_kernel(space, 2, seed=40)
        g = random_kernel(space, 1, seed=41)
        assert pair_contraction(f, g, 0, 0).allclose(tensor(f, g))

    def test_full_integration(self, space):
        f = random_kernel(space, 1, seed=42)
        g = random_kernel(space, 1, seed=43)
        assert pair_contraction(f, g, 0, 1).scalar == pytest.approx(inner(f, g))

    def test_diagonal(self, space):
        f = random_kernel(space, 1, seed=44)
        g = random_kernel(space, 1, seed=45)
        assert np.allclose(pair_contraction(f, g, 1, 0).values, f.values * g.values)

    def test_bounds(self, space):
        f = random_kernel(space, 1, seed=46)
        g = random_kernel(space, 2, seed=47)
        with pytest.raises(DomainError):
            pair_contraction(f, g, 1, 1)

    @pytest.mark.parametrize("n,m", [(1, 1), (2, 2), (3, 2)])
    def test_matches_pattern_engine(self, space, n, m):
        f = random_kernel(space, n, seed=48)
        g = random_kernel(space, m, seed=49)
        for l in range(min(n, m) + 1):
            for k in range(min(n, m) - l + 1):
                pm = PairedMultiIndex.make(2, {(1, 2): l} if l else None,
                                           {(1, 2): k} if k else None)
                direct = pair_contraction(f, g, k, l)
                engine = apply_contraction_pattern([f, g], pm)
                assert direct.allclose(engine, rtol=1e-12, atol=1e-12)


class TestJson:
    def test_roundtrip(self, space):
        f = random_kernel(space, 2, seed=50)
        doc = json.loads(json.dumps(kernel_to_json(f)))
        g = kernel_from_json(doc)
        assert g.degree == 2
        assert np.allclose(g.values, f.values)
        assert g.space.compatible(f.space)

    def test_length_validated(self, space):
        doc = kernel_to_json(random_kernel(space, 2, seed=51))
        doc["values"] = doc["values"][:-1]
        with pytest.raises(DomainError):
            kernel_from_json(doc)

    def test_missing_degree(self, space):
        doc = kernel_to_json(random_kernel(space, 1, seed=52))
        del doc["degree"]
        with pytest.raises(DomainError):
            kernel_from_json(doc)

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from raymoments.symtensor import (
    SymTensor,
    contract,
    eval_power,
    multi_indices,
    multiplicity,
    mult_weights,
    sym_dim,
    sym_inner,
    sym_mult,
    sym_mult_matrix,
    symmetrize,
)


def full_inner(a: SymTensor, b: SymTensor) -> float:
    return float((a.to_full() * b.to_full()).sum())


class TestSymDim:
    def test_examples(self):
        assert sym_dim(3, 2) == 6
        assert sym_dim(2, 3) == 4
        for n in (1, 2, 3, 5):
            assert sym_dim(n, 0) == 1

    def test_matches_index_count(self):
        for n in (1, 2, 3):
            for m in range(5):
                assert sym_dim(n, m) == len(multi_indices(n, m))

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            sym_dim(0, 1)
        with pytest.raises(ValueError):
            sym_dim(2, -1)


class TestMultiIndices:
    def test_non_decreasing(self):
        for alpha in multi_indices(3, 3):
            assert list(alpha) == sorted(alpha)

    def test_colexicographic_order(self):
        idx = multi_indices(3, 2)
        assert idx == ((0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2))

    def test_multiplicity(self):
        assert multiplicity((0, 0)) == 1
        assert multiplicity((0, 1)) == 2
        assert multiplicity((0, 1, 2)) == 6
        assert multiplicity((0, 0, 1)) == 3
        for n, m in [(2, 3), (3, 2), (3, 4)]:
            # multiplicities of all packed indices partition the n^m table
            assert mult_weights(n, m).sum() == n ** m


class TestSymmetrize:
    def test_off_diagonal_average(self):
        raw = np.zeros((2, 2))
        raw[0, 1] = 1.0
        t = symmetrize(raw)
        assert t[(0, 1)] == pytest.approx(0.5)
        assert t[(0, 0)] == 0.0

    def test_diagonal_fixed_point(self):
        raw = np.zeros((2, 2))
        raw[0, 0] = 3.0
        assert symmetrize(raw)[(0, 0)] == pytest.approx(3.0)

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        raw = rng.normal(size=(3, 3, 3))
        once = symmetrize(raw)
        twice = symmetrize(once.to_full())
        np.testing.assert_allclose(once.coeffs, twice.coeffs, atol=1e-15)

    def test_symmetric_input_unchanged(self):
        rng = np.random.default_rng(1)
        t = SymTensor(3, 2, rng.normal(size=6))
        np.testing.assert_allclose(symmetrize(t.to_full()).coeffs, t.coeffs)


class TestSymMult:
    def test_scalar_base(self):
        u = SymTensor(2, 0, np.array([1.0]))
        out = sym_mult(u, np.array([1.0, 0.0]), 1)
        np.testing.assert_allclose(out.coeffs, [1.0, 0.0])

    def test_k_zero_identity(self):
        u = SymTensor(2, 1, np.array([2.0, -1.0]))
        assert sym_mult(u, np.array([5.0, 5.0]), 0) is u

    def test_rank_one_example(self):
        # sigma(x (x) u) for x = e_1, u = (a, b)
        a, b = 1.7, -0.3
        u = SymTensor(2, 1, np.array([a, b]))
        out = sym_mult(u, np.array([1.0, 0.0]), 1)
        assert out[(0, 0)] == pytest.approx(a)
        assert out[(0, 1)] == pytest.approx(b / 2)
        assert out[(1, 1)] == 0.0

    def test_matches_brute_force_symmetrization(self):
        rng = np.random.default_rng(2)
        u = SymTensor(3, 2, rng.normal(size=6))
        x = rng.normal(size=3)
        raw = np.einsum("i,jk->ijk", x, u.to_full())
        np.testing.assert_allclose(sym_mult(u, x, 1).coeffs,
                                   symmetrize(raw).coeffs, atol=1e-14)

    def test_matrix_agrees_with_operator(self):
        rng = np.random.default_rng(3)
        for n, m, k in [(2, 1, 1), (3, 1, 2), (3, 2, 1)]:
            u = SymTensor(n, m, rng.normal(size=sym_dim(n, m)))
            x = rng.normal(size=n)
            np.testing.assert_allclose(sym_mult_matrix(n, m, k, x) @ u.coeffs,
                                       sym_mult(u, x, k).coeffs, atol=1e-14)


class TestContract:
    def test_k_zero_identity(self):
        w = SymTensor(2, 2, np.array([1.0, 2.0, 3.0]))
        assert contract(w, np.ones(2), 0) is w

    def test_rank_one_dot_product(self):
        w = SymTensor(3, 1, np.array([1.0, -2.0, 0.5]))
        x = np.array([0.3, 0.1, 4.0])
        assert contract(w, x, 1).coeffs[0] == pytest.approx(w.coeffs @ x)

    def test_excess_order_rejected(self):
        w = SymTensor(2, 1, np.ones(2))
        with pytest.raises(ValueError):
            contract(w, np.ones(2), 2)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_duality(self, seed):
        # <i_{x^(k)} u, w>_sym = <u, j_{x^(k)} w>_sym
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 4))
        m = int(rng.integers(0, 3))
        k = int(rng.integers(1, 3))
        u = SymTensor(n, m, rng.normal(size=sym_dim(n, m)))
        w = SymTensor(n, m + k, rng.normal(size=sym_dim(n, m + k)))
        x = rng.normal(size=n)
        lhs = sym_inner(sym_mult(u, x, k), w)
        rhs = sym_inner(u, contract(w, x, k))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


class TestEvalPower:
    def test_diagonal(self):
        f = SymTensor.from_components(2, 2, {(0, 0): 1.0})
        assert eval_power(f, np.array([0.6, 0.8])) == pytest.approx(0.36)

    def test_multiplicity_two(self):
        f = SymTensor.from_components(2, 2, {(0, 1): 1.0})
        assert eval_power(f, np.array([0.6, 0.8])) == pytest.approx(0.96)

    def test_scalar_rank(self):
        f = SymTensor(3, 0, np.array([4.2]))
        assert eval_power(f, np.ones(3)) == pytest.approx(4.2)

    def test_equals_full_contraction(self):
        rng = np.random.default_rng(4)
        f = SymTensor(3, 3, rng.normal(size=10))
        xi = rng.normal(size=3)
        got = eval_power(f, xi)
        want = contract(f, xi, 3).coeffs[0]
        assert got == pytest.approx(want, rel=1e-12)


class TestPackedStorage:
    def test_full_round_trip(self):
        rng = np.random.default_rng(5)
        for n, m in [(2, 2), (3, 3), (2, 4)]:
            t = SymTensor(n, m, rng.normal(size=sym_dim(n, m)))
            np.testing.assert_allclose(symmetrize(t.to_full()).coeffs, t.coeffs)

    def test_permuted_lookup(self):
        rng = np.random.default_rng(6)
        t = SymTensor(3, 3, rng.normal(size=10))
        for alpha in multi_indices(3, 3):
            for perm in itertools.permutations(alpha):
                assert t[perm] == t[alpha]

    def test_inner_product_matches_full(self):
        rng = np.random.default_rng(7)
        a = SymTensor(3, 2, rng.normal(size=6))
        b = SymTensor(3, 2, rng.normal(size=6))
        assert sym_inner(a, b) == pytest.approx(full_inner(a, b), rel=1e-12)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            SymTensor(2, 2, np.zeros(4))

    def test_json_round_trip(self):
        t = SymTensor.from_components(2, 2, {(0, 0): 1.0, (0, 1): 0.5})
        back = SymTensor.from_json(t.to_json())
        np.testing.assert_allclose(back.coeffs, t.coeffs)
        assert '"11"' in t.to_json() and '"12"' in t.to_json()

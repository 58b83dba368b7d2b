import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hollowpca.errors import (
    ConvergenceFailure,
    IndexOutOfRange,
    InvalidParameter,
    RankDeficient,
)
from hollowpca.linalg import (
    eigh,
    gram,
    hollow,
    matrix_sign,
    norm_2p,
    svd_small,
    symmetrize,
    top_window,
)

from oracles import (
    charpoly_eigenvalues,
    direct_gram,
    direct_norm_2p,
    eigh_2x2,
    polar_2x2_brute,
    polar_orthogonal_newton,
)


def random_symmetric(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) * scale
    return symmetrize(a + a.T)


small_dims = st.integers(min_value=1, max_value=5)


# ---------------------------------------------------------------------------
# hollow
# ---------------------------------------------------------------------------

class TestHollow:
    def test_identity_becomes_zero(self):
        assert np.array_equal(hollow(np.eye(3)), np.zeros((3, 3)))

    def test_two_by_two(self):
        out = hollow(np.array([[1.0, 2.0], [2.0, 3.0]]))
        assert np.array_equal(out, np.array([[0.0, 2.0], [2.0, 0.0]]))

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        m = random_symmetric(rng, 5)
        once = hollow(m)
        assert np.array_equal(hollow(once), once)

    def test_off_diagonal_bit_identical(self):
        rng = np.random.default_rng(8)
        m = random_symmetric(rng, 6)
        out = hollow(m)
        mask = ~np.eye(6, dtype=bool)
        assert np.array_equal(out[mask], m[mask])
        assert np.all(out[np.eye(6, dtype=bool)] == 0.0)

    def test_does_not_mutate_input(self):
        m = np.array([[1.0, 2.0], [2.0, 3.0]])
        hollow(m)
        assert m[0, 0] == 1.0

    def test_accepts_nonsymmetric_square(self):
        # the hollowing operator is used on products like Z X^T as well
        m = np.array([[1.0, 2.0], [5.0, 3.0]])
        out = hollow(m)
        assert np.array_equal(out, np.array([[0.0, 2.0], [5.0, 0.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(InvalidParameter):
            hollow(np.ones((2, 3)))

    @given(
        st.integers(min_value=1, max_value=6),
        st.floats(-5, 5, allow_nan=False),
        st.floats(-5, 5, allow_nan=False),
        st.integers(min_value=0, max_value=2**31 - 1),
    )
    @settings(max_examples=50, deadline=None)
    def test_linear_projection(self, n, a, b, seed):
        rng = np.random.default_rng(seed)
        m1 = random_symmetric(rng, n)
        m2 = random_symmetric(rng, n)
        lhs = hollow(a * m1 + b * m2)
        rhs = a * hollow(m1) + b * hollow(m2)
        assert np.allclose(lhs, rhs, atol=1e-12)


# ---------------------------------------------------------------------------
# gram
# ---------------------------------------------------------------------------

class TestGram:
    def test_orthonormal_rows_identity(self):
        assert np.array_equal(gram(np.eye(2)), np.eye(2))

    def test_rank_one_outer_structure(self):
        # rows y_i * mu give <x_i, x_j> = y_i y_j ||mu||^2
        y = np.array([1.0, -1.0, 1.0, -1.0, -1.0])
        mu = np.array([1.2, -0.7, 3.0])
        x = np.outer(y, mu)
        expected = float(mu @ mu) * np.outer(y, y)
        assert np.allclose(gram(x), expected, atol=1e-12)

    def test_against_entrywise_dot_oracle(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((3, 2))
        assert np.allclose(gram(x), direct_gram(x), atol=1e-12)

    def test_exactly_symmetric(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((40, 17))
        g = gram(x)
        assert np.array_equal(g, g.T)

    @given(st.integers(min_value=1, max_value=8), st.integers(min_value=1, max_value=8),
           st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_positive_semidefinite(self, n, d, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, d)) * 3.0
        g = gram(x)
        dec = eigh(g)
        assert dec.values.min() >= -1e-10 * max(1.0, np.linalg.norm(g))


# ---------------------------------------------------------------------------
# eigh
# ---------------------------------------------------------------------------

class TestEigh:
    def test_diagonal_input_descending_values(self):
        dec = eigh(np.diag([3.0, 1.0, 2.0]))
        assert np.array_equal(dec.values, [3.0, 2.0, 1.0])
        expected_vectors = np.eye(3)[:, [0, 2, 1]]
        assert np.allclose(dec.vectors, expected_vectors, atol=1e-12)

    def test_rank_one_spike(self):
        y = np.array([1.0, -1.0, 1.0, -1.0])
        s = 2.0 * np.outer(y, y)  # leading eigenvalue n * 2 = 8
        dec = eigh(s)
        assert dec.values[0] == pytest.approx(8.0, abs=1e-10)
        assert np.allclose(dec.vectors[:, 0], y / 2.0, atol=1e-10)
        assert np.allclose(dec.values[1:], 0.0, atol=1e-10)

    def test_matches_cubic_formula_roots(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            s = random_symmetric(rng, 3)
            dec = eigh(s)
            assert np.allclose(dec.values, charpoly_eigenvalues(s), atol=1e-8)

    def test_matches_quadratic_formula_roots(self):
        rng = np.random.default_rng(22)
        for _ in range(50):
            s = random_symmetric(rng, 2)
            dec = eigh(s)
            assert np.allclose(dec.values, charpoly_eigenvalues(s), atol=1e-8)

    def test_residual_and_orthonormality(self):
        rng = np.random.default_rng(23)
        s = random_symmetric(rng, 20, scale=4.0)
        dec = eigh(s, tol=1e-10)
        assert dec.residual <= 1e-10
        gramian = dec.vectors.T @ dec.vectors
        off = gramian - np.eye(20)
        assert np.max(np.abs(off)) <= 1e-8
        recon = dec.vectors @ np.diag(dec.values) @ dec.vectors.T
        assert np.linalg.norm(recon - s) <= 10 * 1e-10 * max(1.0, np.linalg.norm(s))

    def test_abs_ordering(self):
        dec = eigh(np.diag([1.0, -3.0, 2.0]), ordering="abs")
        assert np.array_equal(dec.values, [-3.0, 2.0, 1.0])

    def test_abs_ordering_tie_prefers_positive(self):
        dec = eigh(np.diag([-2.0, 2.0]), ordering="abs")
        assert np.array_equal(dec.values, [2.0, -2.0])

    def test_sign_convention_largest_entry_positive(self):
        rng = np.random.default_rng(24)
        s = random_symmetric(rng, 6)
        dec = eigh(s)
        for j in range(6):
            col = dec.vectors[:, j]
            assert col[np.argmax(np.abs(col))] > 0

    def test_unmeetable_tolerance_raises(self):
        rng = np.random.default_rng(25)
        s = random_symmetric(rng, 8)
        with pytest.raises(ConvergenceFailure):
            eigh(s, tol=1e-30)

    def test_invalid_inputs(self):
        with pytest.raises(InvalidParameter):
            eigh(np.eye(2), tol=0.0)
        with pytest.raises(InvalidParameter):
            eigh(np.eye(2), ordering="sideways")
        with pytest.raises(InvalidParameter):
            eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))  # not symmetric

    @given(st.integers(min_value=2, max_value=6), st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_eigenvalues_invariant_under_conjugation(self, n, seed):
        rng = np.random.default_rng(seed)
        s = random_symmetric(rng, n)
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        conj = symmetrize(q @ s @ q.T)
        assert np.allclose(eigh(s).values, eigh(conj).values, atol=2e-10 * max(1, np.linalg.norm(s)))

    def test_eigenvector_residual_per_column(self):
        rng = np.random.default_rng(26)
        s = random_symmetric(rng, 12)
        dec = eigh(s, tol=1e-10)
        for j in range(12):
            r = s @ dec.vectors[:, j] - dec.values[j] * dec.vectors[:, j]
            assert np.linalg.norm(r) <= 1e-10 * max(1.0, np.linalg.norm(s))


# ---------------------------------------------------------------------------
# top_window
# ---------------------------------------------------------------------------

class TestTopWindow:
    def test_leading_pair_of_diagonal(self):
        dec = eigh(np.diag([3.0, 1.0, 2.0]))
        values, vectors = top_window(dec, 0, 1)
        assert np.array_equal(values, [3.0])
        assert np.allclose(vectors[:, 0], [1.0, 0.0, 0.0], atol=1e-12)

    def test_second_eigenvector_of_two_block_expectation(self):
        # (alpha+beta)/2 * ones + (alpha-beta)/2 * yy^T with balanced labels:
        # second eigenpair is (n(alpha-beta)/2, y/sqrt(n))
        alpha, beta = 0.6, 0.2
        y = np.array([1.0, 1.0, -1.0, -1.0])
        n = 4
        m = symmetrize((alpha + beta) / 2 * np.ones((n, n)) + (alpha - beta) / 2 * np.outer(y, y))
        values, vectors = top_window(eigh(m), 1, 1)
        assert values[0] == pytest.approx(n * (alpha - beta) / 2, abs=1e-10)
        assert abs(float(vectors[:, 0] @ (y / 2.0))) == pytest.approx(1.0, abs=1e-10)

    def test_window_equals_slice_of_full(self):
        rng = np.random.default_rng(31)
        dec = eigh(random_symmetric(rng, 4))
        values, vectors = top_window(dec, 0, 2)
        assert np.array_equal(values, dec.values[:2])
        assert np.array_equal(vectors, dec.vectors[:, :2])

    def test_window_bounds(self):
        dec = eigh(np.eye(4))
        with pytest.raises(IndexOutOfRange):
            top_window(dec, 3, 2)
        with pytest.raises(IndexOutOfRange):
            top_window(dec, -1, 1)
        with pytest.raises(IndexOutOfRange):
            top_window(dec, 0, 0)


# ---------------------------------------------------------------------------
# svd_small
# ---------------------------------------------------------------------------

class TestSvdSmall:
    def test_identity(self):
        u, s, vt = svd_small(np.eye(3))
        assert np.allclose(s, 1.0, atol=1e-12)
        assert np.allclose(u @ vt, np.eye(3), atol=1e-12)

    def test_diagonal_negative_entry(self):
        _, s, _ = svd_small(np.diag([2.0, -3.0]))
        assert np.allclose(s, [3.0, 2.0], atol=1e-12)

    def test_singular_values_match_quadratic_oracle(self):
        rng = np.random.default_rng(41)
        for _ in range(25):
            h = rng.standard_normal((2, 2))
            _, s, _ = svd_small(h)
            vals, _ = eigh_2x2(h.T @ h)
            assert np.allclose(s, np.sqrt(np.maximum(vals[::-1], 0.0)), atol=1e-8)

    def test_reconstruction_and_orthonormal_factors(self):
        rng = np.random.default_rng(42)
        h = rng.standard_normal((4, 4))
        u, s, vt = svd_small(h)
        assert np.allclose(u @ np.diag(s) @ vt, h, atol=1e-10)
        assert np.allclose(u.T @ u, np.eye(4), atol=1e-10)
        assert np.allclose(vt @ vt.T, np.eye(4), atol=1e-10)
        assert np.all(np.diff(s) <= 0) and np.all(s >= 0)


# ---------------------------------------------------------------------------
# matrix_sign
# ---------------------------------------------------------------------------

class TestMatrixSign:
    def test_orthonormal_input_is_fixed_point(self):
        rng = np.random.default_rng(51)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        assert np.allclose(matrix_sign(q), q, atol=1e-10)

    def test_diagonal_signs(self):
        out = matrix_sign(np.diag([2.0, -3.0]))
        assert np.allclose(out, np.diag([1.0, -1.0]), atol=1e-12)

    def test_matches_brute_polar_oracle(self):
        h = np.array([[0.9, 0.1], [-0.1, 0.8]])
        expected = polar_2x2_brute(h)
        out = matrix_sign(h)
        assert np.allclose(out, expected, atol=1e-8)
        assert np.allclose(out, polar_orthogonal_newton(h), atol=1e-8)

    def test_matches_newton_oracle_on_random(self):
        rng = np.random.default_rng(52)
        for _ in range(25):
            h = rng.standard_normal((3, 3))
            if np.min(np.abs(np.linalg.svd(h, compute_uv=False))) < 1e-3:
                continue
            assert np.allclose(matrix_sign(h), polar_orthogonal_newton(h), atol=1e-8)

    def test_scalar_case_reduces_to_sign(self):
        assert matrix_sign(np.array([[-0.3]]))[0, 0] == pytest.approx(-1.0)
        assert matrix_sign(np.array([[5.0]]))[0, 0] == pytest.approx(1.0)

    def test_output_orthonormal(self):
        rng = np.random.default_rng(53)
        h = rng.standard_normal((4, 4))
        out = matrix_sign(h)
        assert np.max(np.abs(out.T @ out - np.eye(4))) <= 1e-10

    def test_rank_deficient_raises(self):
        with pytest.raises(RankDeficient):
            matrix_sign(np.array([[1.0, 0.0], [0.0, 0.0]]))

    @given(st.integers(min_value=1, max_value=4), st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_left_equivariance_under_rotation(self, r, seed):
        rng = np.random.default_rng(seed)
        h = rng.standard_normal((r, r))
        if np.min(np.abs(np.linalg.svd(h, compute_uv=False))) < 1e-3:
            return
        q, _ = np.linalg.qr(rng.standard_normal((r, r)))
        assert np.allclose(matrix_sign(q @ h), q @ matrix_sign(h), atol=1e-8)


# ---------------------------------------------------------------------------
# norm_2p
# ---------------------------------------------------------------------------

class TestNorm2p:
    def test_p2_is_frobenius(self):
        rng = np.random.default_rng(61)
        a = rng.standard_normal((5, 3))
        assert norm_2p(a, 2) == pytest.approx(np.linalg.norm(a), rel=1e-12)

    def test_ones_vector_finite_p(self):
        n = 16
        x = np.ones(n)
        for p in (1.0, 2.0, 3.5, 10.0):
            assert norm_2p(x, p) == pytest.approx(n ** (1.0 / p), rel=1e-12)

    def test_log_p_sandwiches_max_norm(self):
        rng = np.random.default_rng(62)
        for n in (10, 100, 1000):
            x = rng.standard_normal(n)
            inf_norm = norm_2p(x, math.inf)
            for c in (0.5, 1.0, 2.0):
                p = c * math.log(n)
                val = norm_2p(x, p)
                assert inf_norm <= val + 1e-12
                assert val <= math.exp(1.0 / c) * inf_norm * (1 + 1e-12)

    def test_matrix_against_direct_summation(self):
        rng = np.random.default_rng(63)
        a = rng.standard_normal((3, 2))
        assert norm_2p(a, 4) == pytest.approx(direct_norm_2p(a, 4), rel=1e-12)

    def test_infinity_is_max_row_norm(self):
        a = np.array([[3.0, 4.0], [1.0, 0.0]])
        assert norm_2p(a, math.inf) == pytest.approx(5.0)

    def test_vector_matches_entrywise_p_norm(self):
        x = np.array([1.0, -2.0, 2.0])
        assert norm_2p(x, 3) == pytest.approx((1 + 8 + 8) ** (1 / 3), rel=1e-12)

    def test_huge_p_does_not_overflow(self):
        x = np.array([1e150, 5e149])
        assert norm_2p(x, 200.0) == pytest.approx(1e150, rel=1e-2)

    def test_zero_input(self):
        assert norm_2p(np.zeros(5), 3) == 0.0
        assert norm_2p(np.zeros((2, 2)), math.inf) == 0.0

    def test_invalid_p(self):
        with pytest.raises(InvalidParameter):
            norm_2p(np.ones(3), 0.5)

    @given(
        st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=30),
        st.floats(1.0, 40.0),
        st.floats(0.0, 40.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_scaled_power_mean_increasing_in_p(self, xs, p, dq):
        # power-mean inequality: (mean |x_i|^p)^{1/p} is nondecreasing in p
        x = np.asarray(xs)
        q = p + dq
        n = len(xs)
        lhs = n ** (-1.0 / p) * norm_2p(x, p)
        rhs = n ** (-1.0 / q) * norm_2p(x, q)
        assert lhs <= rhs + 1e-9 * max(1.0, lhs)

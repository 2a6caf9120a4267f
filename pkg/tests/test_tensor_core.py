import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bachpinch import tensor_core as tc
from oracles import kn_loop, norm_sq4_loop, ricci_loop, space_form_riemann


def _spd(rng, n):
    M = rng.standard_normal((n, n))
    return M @ M.T + n * np.eye(n)


class TestSymmetries:
    def test_random_tensor_has_curvature_symmetries(self, rng):
        for n in range(3, 9):
            T = tc.random_alg_curv(rng, n, 20)
            assert tc.symmetry_residual(T) < 1e-15
            assert tc.bianchi_residual(T) < 1e-13

    def test_projection_is_idempotent(self, rng):
        T = tc.random_alg_curv(rng, 5)
        assert np.allclose(tc.project_alg_curv(T), T, atol=1e-14)

    def test_arbitrary_array_is_not_curvature(self, rng):
        assert not tc.is_alg_curv(rng.standard_normal((4, 4, 4, 4)))

    def test_decompose_rejects_invalid_symmetries(self, rng):
        with pytest.raises(tc.SymmetryError):
            tc.decompose(rng.standard_normal((4, 4, 4, 4)))

    def test_sym2_and_skew2_checks(self):
        tc.check_sym2(np.eye(3))
        tc.check_skew2(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        with pytest.raises(tc.SymmetryError):
            tc.check_sym2(np.array([[0.0, 1.0], [0.0, 0.0]]))
        with pytest.raises(tc.SymmetryError):
            tc.check_skew2(np.eye(2))


class TestNorms:
    def test_zero_tensor(self):
        assert tc.norm_sq(np.zeros((4,) * 4), np.eye(4)) == 0.0

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_identity_kn_square(self, n):
        I = np.eye(n)
        # brute-force loop: 4 * sum (d_ik d_jl - d_il d_jk)^2 = 8 n (n - 1)
        assert np.isclose(tc.norm_sq(kn_loop(I, I), I), 8 * n * (n - 1), rtol=1e-14)
        assert np.isclose(tc.norm_sq(tc.kulkarni_nomizu(I, I), I), 8 * n * (n - 1), rtol=1e-14)

    def test_scaled_identity_metric(self, rng):
        T = tc.random_alg_curv(rng, 4)
        c = 2.5
        assert np.isclose(tc.norm_sq(T, c * np.eye(4)), c ** -4 * tc.norm_sq(T), rtol=1e-13)

    def test_matches_index_loop_for_general_metric(self, rng):
        g = _spd(rng, 3)
        T = tc.random_alg_curv(rng, 3)
        assert np.isclose(tc.norm_sq(T, g), norm_sq4_loop(T, g), rtol=1e-12)

    def test_rank_two_inner_matches_frame(self, rng):
        g = _spd(rng, 5)
        A, B = rng.standard_normal((2, 5, 5))
        ref = np.sum(tc.to_frame(A, g, 2) * tc.to_frame(B, g, 2))
        assert np.isclose(tc.inner(A, B, g, rank=2), ref, rtol=1e-13)

    def test_frame_round_trip(self, rng):
        g = _spd(rng, 4)
        T = tc.random_alg_curv(rng, 4)
        assert np.allclose(tc.from_frame(tc.to_frame(T, g, 4), g, 4), T, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(tc.DimensionError):
            tc.norm_sq(np.zeros((4,) * 4), np.eye(3))

    def test_indefinite_metric(self):
        with pytest.raises(tc.NotPositiveDefinite):
            tc.norm_sq(np.zeros((3,) * 4), np.diag([1.0, -1.0, 1.0]))


class TestKulkarniNomizu:
    def test_identity_entries(self):
        I = np.eye(4)
        ref = 2 * (np.einsum("ik,jl->ijkl", I, I) - np.einsum("il,jk->ijkl", I, I))
        assert np.array_equal(tc.kulkarni_nomizu(I, I), ref)

    def test_matches_loop_and_is_curvature(self, rng):
        A, B = (0.5 * (M + M.T) for M in rng.standard_normal((2, 4, 4)))
        T = tc.kulkarni_nomizu(A, B)
        assert np.allclose(T, kn_loop(A, B), atol=1e-14)
        assert tc.is_alg_curv(T, 1e-13)
        assert np.allclose(T, tc.kulkarni_nomizu(B, A), atol=1e-14)

    def test_zero_factor(self):
        assert not np.any(tc.kulkarni_nomizu(np.zeros((3, 3)), np.eye(3)))

    def test_scalar_part_formula(self, rng):
        n, R = 5, 7.3
        g = _spd(rng, n)
        U = R / (2 * n * (n - 1)) * tc.kulkarni_nomizu(g, g)
        assert np.allclose(U, R / (n * (n - 1)) * space_form_riemann(g), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(tc.DimensionError):
            tc.kulkarni_nomizu(np.eye(3), np.eye(4))


class TestDecomposition:
    def test_round_sphere_is_pure_scalar(self):
        g = np.eye(4)
        d = tc.decompose(space_form_riemann(g), g)
        assert np.isclose(d.R, 12.0)
        assert np.allclose(d.W, 0, atol=1e-14) and np.allclose(d.V, 0, atol=1e-14)
        assert np.allclose(d.U, space_form_riemann(g), atol=1e-14)

    @pytest.mark.parametrize("n", [4, 5, 6])
    def test_circle_times_sphere(self, n):
        Rm = np.zeros((n,) * 4)
        Rm[1:, 1:, 1:, 1:] = space_form_riemann(np.eye(n - 1))
        d = tc.decompose(Rm)
        assert np.allclose(d.W, 0, atol=1e-13)
        assert np.isclose(d.R, (n - 1) * (n - 2))
        assert np.isclose(tc.norm_sq(d.Ric0, rank=2), (n - 1) * (n - 2) ** 2 / n, rtol=1e-13)

    def test_general_metric_postconditions(self, rng):
        n = 5
        g = _spd(rng, n)
        Rm = tc.from_frame(tc.random_alg_curv(rng, n), g, 4)
        d = tc.decompose(Rm, g)
        scale = np.max(np.abs(Rm))
        assert np.allclose(d.W + d.V + d.U, Rm, atol=1e-13 * scale)
        gi = np.linalg.inv(g)
        assert np.max(np.abs(np.einsum("ik,ijkl->jl", gi, d.W))) < 1e-12 * scale
        assert abs(tc.trace(d.Ric0, g)) < 1e-12 * np.max(np.abs(d.Ric))
        assert np.allclose(d.Ric, ricci_loop(Rm, g), atol=1e-12 * scale)
        for A, B in [(d.W, d.V), (d.W, d.U), (d.V, d.U)]:
            assert abs(tc.inner(A, B, g)) < 1e-12 * tc.norm_sq(Rm, g)

    def test_rm0_norm_split(self, rng):
        for n in range(4, 9):
            Rm = tc.random_alg_curv(rng, n, 50)
            d = tc.decompose(Rm)
            lhs = tc.norm_sq(d.Rm0, rank=4)
            rhs = tc.norm_sq(d.W, rank=4) + 4 / (n - 2) * tc.norm_sq(d.Ric0, rank=2)
            assert np.allclose(lhs, rhs, rtol=1e-12)

    def test_idempotent(self, rng):
        d = tc.decompose(tc.random_alg_curv(rng, 6))
        e = tc.decompose(d.W + d.V + d.U)
        for a, b in zip(d[:3], e[:3]):
            assert np.allclose(a, b, atol=1e-13)

    def test_from_parts_inverts(self, rng):
        g = _spd(rng, 4)
        Rm = tc.from_frame(tc.random_alg_curv(rng, 4), g, 4)
        d = tc.decompose(Rm, g)
        assert np.allclose(tc.from_parts(d.W, d.Ric0, d.R, g), Rm, atol=1e-12 * np.max(np.abs(Rm)))

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(3, 7), seed=st.integers(0, 2 ** 32 - 1))
    def test_ricci_bound_property(self, n, seed):
        Rm = tc.random_alg_curv(np.random.default_rng(seed), n)
        d = tc.decompose(Rm)
        assert tc.norm_sq(d.Ric0) <= (n - 2) / 4 * tc.norm_sq(d.Rm0) * (1 + 1e-12)


class TestOperators:
    def test_scalar_part_on_two_forms(self, rng):
        n, R = 5, 3.0
        U = R / (2 * n * (n - 1)) * tc.kulkarni_nomizu(np.eye(n), np.eye(n))
        w = rng.standard_normal((n, n))
        w = w - w.T
        assert np.allclose(tc.act_on_two_forms(U, w), 2 * R / (n * (n - 1)) * w, atol=1e-14)

    def test_zero_operator(self):
        assert not np.any(tc.act_on_two_tensors(np.zeros((3,) * 4), np.eye(3)))

    def test_self_adjoint(self, rng):
        T = tc.random_alg_curv(rng, 4)
        for _ in range(100):
            a, b = rng.standard_normal((2, 4, 4))
            w1, w2 = a - a.T, b - b.T
            s1, s2 = a + a.T, b + b.T
            x, y = np.sum(tc.act_on_two_forms(T, w1) * w2), np.sum(w1 * tc.act_on_two_forms(T, w2))
            assert abs(x - y) <= 1e-12 * max(abs(x), 1.0)
            x, y = np.sum(tc.act_on_two_tensors(T, s1) * s2), np.sum(s1 * tc.act_on_two_tensors(T, s2))
            assert abs(x - y) <= 1e-12 * max(abs(x), 1.0)

    def test_output_symmetry(self, rng):
        T = tc.random_alg_curv(rng, 4)
        a = rng.standard_normal((4, 4))
        tc.check_skew2(tc.act_on_two_forms(T, a - a.T))
        tc.check_sym2(tc.act_on_two_tensors(T, a + a.T))


class TestKNSquare:
    def test_zero(self):
        parts = tc.kn_square_decompose(np.zeros((4, 4)))
        assert all(not np.any(p) for p in parts)

    def test_rejects_trace(self):
        with pytest.raises(tc.SymmetryError):
            tc.kn_square_decompose(np.eye(4))

    def test_weighted_norm_sum_n5(self, rng):
        S = tc.random_trace_free(rng, 5)
        p = tc.kn_square_decompose(S)
        lhs = tc.norm_sq(p.T) + 2.5 * tc.norm_sq(p.Vp)
        assert np.isclose(lhs, 8 * 3 / 4 * tc.norm_sq(S) ** 2, rtol=1e-13)

    def test_diag_example_against_loops(self):
        S = np.diag([3.0, -1.0, -1.0, -1.0])
        n = 4
        p = tc.kn_square_decompose(S)
        s2 = np.sum(S * S)
        q2 = np.sum((S @ S) ** 2)
        KK = kn_loop(S, S)
        I = np.eye(n)
        gg = kn_loop(I, I)
        Vp = -2 / (n - 2) * kn_loop(S @ S, I) + 2 / (n * (n - 2)) * s2 * gg
        Up = -s2 / (n * (n - 1)) * gg
        assert np.allclose(p.T + p.Vp + p.Up, KK, atol=1e-13)
        assert np.allclose(p.Vp, Vp, atol=1e-13) and np.allclose(p.Up, Up, atol=1e-13)
        assert np.isclose(np.sum(KK ** 2), 8 * s2 ** 2 - 8 * q2)
        assert np.isclose(np.sum(Vp ** 2), 16 / (n - 2) * q2 - 16 / (n * (n - 2)) * s2 ** 2)
        assert np.isclose(np.sum(Up ** 2), 8 / (n * (n - 1)) * s2 ** 2)
        assert np.max(np.abs(np.einsum("ijil->jl", p.T))) < 1e-13


class TestCurvatureBasis:
    @pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 8])
    def test_dimensions(self, n):
        full = n * n * (n * n - 1) // 12
        assert tc.curvature_basis(n, "full").shape[0] == full
        assert tc.curvature_basis(n, "weyl").shape[0] == n * (n + 1) * (n + 2) * (n - 3) // 12
        assert tc.curvature_basis(n, "trace-adjusted").shape[0] == full - 1

    def test_samples_lie_in_subspace(self, rng):
        W = tc.random_curvature_part(rng, 6, 10, "weyl")
        assert tc.is_alg_curv(W, 1e-13)
        assert np.max(np.abs(np.einsum("zijil->zjl", W))) < 1e-13
        X = tc.random_curvature_part(rng, 6, 10, "trace-adjusted")
        assert np.max(np.abs(tc.decompose(X).R)) < 1e-12

    def test_unknown_part(self, rng):
        with pytest.raises(ValueError):
            tc.random_curvature_part(rng, 4, 1, "ricci")

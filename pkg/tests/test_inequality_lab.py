import math

import numpy as np
import pytest

from bachpinch import inequality_lab as lab
from bachpinch import metric_zoo as mz
from bachpinch import tensor_core as tc
import oracles as o


def _unit(T):
    return T / np.linalg.norm(T)


class TestMatrixBounds:
    def test_cubic_trace_equality(self):
        assert lab.check_cubic_trace(_unit(np.diag([2.0, -1, -1]))) == pytest.approx(1.0, abs=1e-15)
        for m in range(3, 9):
            T = np.diag([m - 1.0] + [-1.0] * (m - 1))
            assert lab.check_cubic_trace(T) == pytest.approx(1.0, rel=1e-14)

    def test_cubic_trace_is_signed(self, rng):
        T = tc.random_trace_free(rng, 5, 20)
        assert np.allclose(lab.check_cubic_trace(-T), -lab.check_cubic_trace(T), rtol=1e-15)

    def test_eigenvalue_examples(self):
        for m in range(2, 9):
            T = np.diag([m - 1.0] + [-1.0] * (m - 1))
            assert lab.check_eigen_bound(T) == pytest.approx(1.0, rel=1e-14)
        m = 5
        T = np.diag([1.0, -1, 0, 0, 0]) / math.sqrt(2)
        assert lab.check_eigen_bound(T) == pytest.approx((1 / math.sqrt(2)) / math.sqrt((m - 1) / m), rel=1e-14)

    def test_rejects_trace(self):
        with pytest.raises(ValueError):
            lab.check_cubic_trace(np.eye(3))
        with pytest.raises(ValueError):
            lab.check_eigen_bound(np.diag([1.0, 0.0, 0.0]))

    def test_zero_is_skipped(self):
        assert np.isnan(lab.check_cubic_trace(np.zeros((4, 4))))

    @pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
    def test_homogeneity(self, rng, c):
        T = tc.random_trace_free(rng, 6, 50)
        assert np.allclose(lab.check_cubic_trace(c * T), lab.check_cubic_trace(T), rtol=1e-13)
        assert np.allclose(lab.check_eigen_bound(c * T), lab.check_eigen_bound(T), rtol=1e-13)


class TestWeylRicci:
    def test_weyl_zero_is_skipped(self, rng):
        Ric0 = tc.random_trace_free(rng, 4, 3)
        assert np.all(np.isnan(lab.check_huisken(np.zeros((3, 4, 4, 4, 4)), Ric0)))

    @pytest.mark.parametrize("c,d", [(0.5, 2.0), (2.0, 10.0), (10.0, 0.5)])
    def test_huisken_homogeneity(self, rng, c, d):
        W, Ric0 = lab.random_weyl(rng, 5, 20), tc.random_trace_free(rng, 5, 20)
        assert np.allclose(lab.check_huisken(c * W, d * Ric0), lab.check_huisken(W, Ric0), rtol=1e-12)

    def test_pairing_matches_einsum(self, rng):
        W, Ric0 = lab.random_weyl(rng, 5, 4), tc.random_trace_free(rng, 5, 4)
        ref = np.einsum("zik,zjl,zijkl->z", Ric0, Ric0, W)
        assert np.allclose(lab._weyl_ricci_pairing(W, Ric0), ref, rtol=1e-12)

    def test_k_zero_is_huisken(self, rng):
        W, Ric0 = lab.random_weyl(rng, 6, 30), tc.random_trace_free(rng, 6, 30)
        assert np.allclose(lab.check_weyl_ricci_cubic(W, Ric0, 0.0), lab.check_huisken(W, Ric0), rtol=1e-13)

    @pytest.mark.parametrize("n", [4, 5, 6])
    def test_weyl_free_reduces_to_cubic_trace(self, rng, n):
        Ric0 = tc.random_trace_free(rng, n, 1000)
        W = np.zeros((1000,) + (n,) * 4)
        r = lab.check_weyl_ricci_cubic(W, Ric0, lab.default_K(n))
        assert np.allclose(r, np.abs(lab.check_cubic_trace(Ric0)), rtol=1e-12)

    @pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
    def test_weyl_ricci_cubic_homogeneity(self, rng, c):
        W, Ric0 = lab.random_weyl(rng, 5, 20), tc.random_trace_free(rng, 5, 20)
        K = lab.default_K(5)
        assert np.allclose(lab.check_weyl_ricci_cubic(c * W, c * Ric0, K),
                           lab.check_weyl_ricci_cubic(W, Ric0, K), rtol=1e-12)


class TestContractions:
    def test_against_loop_oracle(self, rng):
        for n in (3, 4):
            Rm0 = lab.random_trace_adjusted(rng, n, 3)
            first, second = lab.rm0_cubic_contractions(Rm0)
            for z in range(3):
                f, s = o.contraction_loops(Rm0[z])
                assert first[z] == pytest.approx(f, rel=1e-12)
                assert second[z] == pytest.approx(s, rel=1e-12)

    def test_round_sphere_has_zero_rm0(self):
        g = np.eye(5)
        Rm0 = tc.decompose(o.space_form_riemann(g), g).Rm0
        first, second = lab.rm0_cubic_contractions(Rm0)
        assert abs(first) < 1e-12 and abs(second) < 1e-12
        assert np.all(np.isnan(lab.check_contraction_bounds(Rm0)))

    def test_circle_times_four_sphere(self):
        e = mz.make_product_circle_sphere(5, 0.4)
        x = np.array([[0.1, 0.2, -0.3, 0.4, 0.0]])
        g = e.chart.metric_at(x)
        Rm0 = tc.to_frame(tc.decompose(e.chart.riemann_at(x), g).Rm0, tc.orthonormal_frame(g))[0]
        r1, r2 = lab.check_contraction_bounds(Rm0)
        assert 0 < r1 <= 1 and 0 < r2 <= 1
        f, s = o.contraction_loops(Rm0)
        assert lab.rm0_cubic_contractions(Rm0)[0] == pytest.approx(f, rel=1e-12)
        assert lab.rm0_cubic_contractions(Rm0)[1] == pytest.approx(s, rel=1e-12)

    def test_ricci_rm_equality_and_zero(self, rng):
        n = 6
        Ric0 = tc.random_trace_free(rng, n, 10)
        V = tc.kulkarni_nomizu(Ric0, np.broadcast_to(np.eye(n), Ric0.shape)) / (n - 2)
        assert np.allclose(lab.check_ric_rm_bound(V), 1.0, rtol=1e-13)
        assert np.allclose(lab.check_ric_rm_bound(lab.random_weyl(rng, n, 10)), 0.0, atol=1e-13)

    @pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
    def test_homogeneity(self, rng, c):
        Rm0 = lab.random_trace_adjusted(rng, 4, 20)
        for a, b in zip(lab.check_contraction_bounds(c * Rm0), lab.check_contraction_bounds(Rm0)):
            assert np.allclose(a, b, rtol=1e-12)
        assert np.allclose(lab.check_ric_rm_bound(c * Rm0), lab.check_ric_rm_bound(Rm0), rtol=1e-12)


class TestCampaigns:
    def test_same_seed_identical(self):
        cfg = lab.CampaignConfig("huisken", 4, 2000, seed=7)
        assert lab.run_campaign(cfg).to_dict() == lab.run_campaign(cfg).to_dict()
        other = lab.run_campaign(lab.CampaignConfig("huisken", 4, 2000, seed=8))
        assert other.max_ratio != lab.run_campaign(cfg).max_ratio

    def test_chunks_are_independent_of_total(self):
        small = lab.run_campaign(lab.CampaignConfig("eigenvalue", 4, 100, seed=3))
        cfg = lab.CampaignConfig("eigenvalue", 4, 100, seed=3)
        data = lab._draw_matrix(lab._chunk_rng(3, 0), 4, cfg.chunk_size, "gaussian", None)
        assert np.nanmax(lab.check_eigen_bound(data["T"][:100])) == small.max_ratio

    @pytest.mark.parametrize("name", sorted(lab.INEQUALITIES))
    def test_witness_replay(self, name):
        n = 4
        st = lab.run_campaign(lab.CampaignConfig(name, n, 500, seed=11))
        assert st.violations == 0 and st.evaluated + st.skipped == 500
        replay = lab.evaluate_witness(name, st.witness, st.K)
        assert replay == pytest.approx(st.max_ratio, rel=1e-15)
        # the witness is the maximizer among all evaluated samples
        assert 0 < st.max_ratio <= 1 + lab.DEFAULT_TOL

    def test_spiked_cubic_trace_reaches_equality(self):
        st = lab.run_campaign(lab.CampaignConfig("cubic-trace", 5, 10_000, seed=0, distribution="spiked"))
        assert st.max_ratio > 0.999 and st.violations == 0
        st = lab.run_campaign(lab.CampaignConfig("eigenvalue", 5, 10_000, seed=0, distribution="spiked"))
        assert st.max_ratio > 0.999 and st.violations == 0

    def test_gaussian_cubic_trace(self):
        st = lab.run_campaign(lab.CampaignConfig("cubic-trace", 5, 20_000, seed=1))
        assert st.violations == 0 and st.max_ratio <= 1 + 1e-12

    def test_k_variants(self):
        for K in (0.0, 1.0, None):
            st = lab.run_campaign(lab.CampaignConfig("weyl-ricci-cubic", 5, 2000, seed=2, K=K))
            assert st.violations == 0
        assert lab.CampaignConfig("weyl-ricci-cubic", 6, 1, 0).effective_K == 0.75

    @pytest.mark.parametrize("kwargs", [
        dict(inequality="cubic-trace", n=4, trials=0, seed=0),
        dict(inequality="cubic-trace", n=4, trials=2.5, seed=0),
        dict(inequality="nope", n=4, trials=10, seed=0),
        dict(inequality="huisken", n=3, trials=10, seed=0),
        dict(inequality="huisken", n=4, trials=10, seed=-1),
        dict(inequality="huisken", n=4, trials=10, seed=0, distribution="uniform"),
        dict(inequality="huisken", n=4, trials=10, seed=0, K=1.0),
    ])
    def test_bad_configs(self, kwargs):
        with pytest.raises(lab.CampaignError):
            lab.CampaignConfig(**kwargs)

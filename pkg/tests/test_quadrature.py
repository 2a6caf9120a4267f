import math

import numpy as np
import pytest

from bachpinch import metric_zoo as mz
from bachpinch.quadrature import GridError, build_grid, default_counts, integrate, parse_grid, volume


class TestGrid:
    def test_rules_follow_axis_type(self):
        ch = mz.make_product_circle_sphere(4, 0.3).chart
        G = build_grid(ch, (3, 4, 4, 4))
        assert G.rules == ("trapezoid-periodic",) + ("gauss-legendre-tan",) * 3
        polar = mz.make_round_sphere(4, chart="polar").chart
        assert build_grid(polar, (4, 4, 4, 4)).rules == ("gauss-legendre",) * 3 + ("trapezoid-periodic",)

    def test_batches_cover_grid(self):
        ch = mz.make_flat_torus(3).chart
        G = build_grid(ch, (3, 4, 5))
        pts = np.vstack([P for P, _ in G.batches(7)])
        w = np.concatenate([w for _, w in G.batches(7)])
        assert len(pts) == G.size == 60
        assert len({tuple(p) for p in pts}) == 60
        assert math.fsum(w) == pytest.approx((2 * math.pi) ** 3, rel=1e-14)

    def test_parse(self):
        assert parse_grid("6", 3) == (6, 6, 6)
        assert parse_grid("2,8,8", 3) == (2, 8, 8)
        for bad in ("a", "4,4", ""):
            with pytest.raises(GridError):
                parse_grid(bad, 3)

    def test_bad_counts(self):
        ch = mz.make_flat_torus(3).chart
        with pytest.raises(GridError):
            build_grid(ch, (4, 4))
        with pytest.raises(GridError):
            build_grid(ch, (4, 1, 4))

    def test_default_counts(self):
        assert default_counts(mz.make_flat_torus(4).chart) == (24,) * 4
        assert default_counts(mz.make_flat_torus(8).chart) == (5,) * 8


class TestIntegrate:
    def test_trapezoid_exact_for_trig(self):
        ch = mz.make_flat_torus(3).chart
        G = build_grid(ch, (8, 8, 8))
        val = integrate(ch, lambda P, g: np.cos(P[:, 0]) ** 2 * np.sin(P[:, 1]) ** 2, G)
        assert val == pytest.approx((2 * math.pi) ** 3 / 4, rel=1e-13)

    def test_vector_integrand(self):
        ch = mz.make_flat_torus(3).chart
        G = build_grid(ch, (4, 4, 4))
        val = integrate(ch, lambda P, g: np.stack([np.ones(len(P)), 2 * np.ones(len(P))], -1), G)
        assert val.shape == (2,) and val[1] == pytest.approx(2 * val[0], rel=1e-15)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_sphere_volume_converges(self, n):
        ch = mz.make_round_sphere(n).chart
        exact = mz.sphere_volume(n)
        coarse = abs(volume(ch, build_grid(ch, (6,) * n)) / exact - 1)
        fine = abs(volume(ch, build_grid(ch, (12,) * n)) / exact - 1)
        assert fine < coarse and fine < 1e-2

    def test_polar_volume(self):
        ch = mz.make_round_sphere(5, chart="polar").chart
        assert volume(ch, build_grid(ch, (8, 8, 8, 8, 2))) == pytest.approx(mz.sphere_volume(5), rel=1e-5)

    def test_batch_size_does_not_change_result(self):
        ch = mz.make_round_sphere(4).chart
        G = build_grid(ch, (6,) * 4)
        assert volume(ch, G) == pytest.approx(integrate(ch, lambda P, g: np.ones(len(P)), G, batch=17), rel=1e-14)

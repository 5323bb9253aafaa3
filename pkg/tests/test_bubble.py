"""Bubble solutions: parameter identities and curvature residuals."""

import math

import numpy as np
import pytest

from sigma2kit import bubble as bm
from sigma2kit.symfunc import dimension_constant


class TestMakeBubbleParams:
    def test_n3_anchor(self):
        p = bm.make_bubble_params(3, math.sqrt(3.0) / 2.0, 0.0)
        assert p.lambda_cap == pytest.approx(1.0, abs=1e-14)
        assert p.b == pytest.approx(0.25, abs=1e-14)
        assert p.T_c == pytest.approx(0.0, abs=1e-14)

    def test_n4_anchor(self):
        p = bm.make_bubble_params(4, math.sqrt(6.0) / 2.0, 0.0)
        assert p.lambda_cap == pytest.approx(1.0, abs=1e-14)
        assert p.b == pytest.approx(0.25, abs=1e-14)

    def test_zero_c_centers_on_wall(self):
        for n in (3, 4, 5):
            for f in (0.5, 1.0, 3.0):
                p = bm.make_bubble_params(n, f, 0.0)
                assert p.ybar_n == 0.0
                assert p.Ttilde_c == 0.0

    def test_identities_random_draws(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(3, 7))
            f = float(rng.uniform(0.2, 5.0))
            c = float(rng.uniform(0.0, 2.0))
            p = bm.make_bubble_params(n, f, c)
            res = p.invariant_residuals()
            scale = 1.0 + p.b + p.ybar_n**2 * p.b
            assert abs(res["b"]) <= 1e-12 * scale
            assert abs(res["Ttilde_c"]) <= 1e-12 * scale
            assert abs(res["lambda_cap"]) <= 1e-12 * scale
            assert abs(res["T_c"]) <= 1e-12 * scale
            assert abs(res["fixed_point"]) <= 1e-10 * scale

    def test_liouville_relation(self):
        # wall slope of the profile: (n-2) a^-1 b xbar_n = -((n-2)/2) c
        rng = np.random.default_rng(1)
        for _ in range(300):
            n = int(rng.integers(3, 7))
            f = float(rng.uniform(0.2, 5.0))
            c = float(rng.uniform(0.0, 2.0))
            p = bm.make_bubble_params(n, f, c)
            a, b, xbar = p.liouville_constants()
            lhs = (n - 2) * b * xbar / a
            rhs = -0.5 * (n - 2) * c
            assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(rhs))

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            bm.make_bubble_params(4, 0.0, 0.0)
        with pytest.raises(ValueError):
            bm.make_bubble_params(4, 1.0, -0.1)


class TestInteriorBubble:
    def test_value_at_origin(self):
        for n, f in ((3, 1.0), (4, math.sqrt(6.0)), (5, 2.0)):
            bub = bm.interior_bubble(n, f)
            assert bub(np.zeros(n)) == pytest.approx(1.0)

    def test_monotone_decreasing(self):
        bub = bm.interior_bubble(4, 1.5)
        r = np.linspace(0.0, 10.0, 200)
        v = bub.value(r)
        assert np.all(np.diff(v) < 0)

    @pytest.mark.parametrize("n", [3, 4])
    @pytest.mark.parametrize("f", [1.0, 2.0])
    def test_curvature_residual(self, n, f):
        bub = bm.interior_bubble(n, f)
        rng = np.random.default_rng(2)
        rho = rng.uniform(0.05, 8.0, 30)
        res = bm.curvature_residual(bub, rho)
        assert np.max(res) < 1e-8

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            bm.interior_bubble(4, -1.0)
        with pytest.raises(ValueError):
            bm.interior_bubble(2, 1.0)


class TestBoundaryBubble:
    def test_c_zero_reduces_to_interior(self):
        for n, f in ((3, 1.0), (4, 2.0)):
            p = bm.make_bubble_params(n, f, 0.0)
            bb = bm.boundary_bubble(p)
            ib = bm.interior_bubble(n, f)
            r = np.linspace(0.0, 5.0, 50)
            assert np.max(np.abs(bb.value(r) - ib.value(r))) == 0.0

    def test_n4_b_value(self):
        p = bm.make_bubble_params(4, 1.0, 0.5)
        expected = 1.0 / (2.0 * math.sqrt(6.0)) * (1.0 + math.sqrt(6.0) / 8.0) ** 2
        assert p.b == pytest.approx(expected, rel=1e-14)

    def test_neumann_residual_on_wall(self):
        p = bm.make_bubble_params(4, 1.0, 0.5)
        bub = bm.boundary_bubble(p)
        rng = np.random.default_rng(3)
        res = bm.neumann_residual(bub, rng.uniform(0.0, 6.0, 20))
        assert np.max(res) < 1e-8

    def test_verify_bubble_grids(self):
        rng = np.random.default_rng(4)
        for n in (3, 4):
            for f in (1.0, 2.0):
                for c in (0.0, 0.5):
                    p = bm.make_bubble_params(n, f, c)
                    rep = bm.verify_bubble(p, bm.default_grid(n, 30, seed=5))
                    assert rep.interior_max < 1e-8
                    assert rep.boundary_max < 1e-8

    def test_perturbed_b_negative_control(self):
        p = bm.make_bubble_params(4, 1.0, 0.5)
        bub = bm.boundary_bubble(p)
        bub.b *= 1.1
        rho = np.linspace(0.3, 4.0, 30)
        assert np.max(bm.curvature_residual(bub, rho)) > 1e-3

    def test_grid_validation(self):
        p = bm.make_bubble_params(3, 1.0, 0.0)
        bad = np.array([[0.0, 0.0, -1.0]])
        with pytest.raises(ValueError):
            bm.verify_bubble(p, bad)
        with pytest.raises(ValueError):
            bm.verify_bubble(p, np.zeros((3, 4)))

    def test_liouville_curvature_normalization(self):
        # sigma2^(1/2)(2 a^-2 b I) equals the prescribed f
        rng = np.random.default_rng(6)
        for _ in range(100):
            n = int(rng.integers(3, 7))
            f = float(rng.uniform(0.2, 5.0))
            c = float(rng.uniform(0.0, 2.0))
            p = bm.make_bubble_params(n, f, c)
            a, b, _ = p.liouville_constants()
            level = dimension_constant(n) * 2.0 * b / (a * a)
            assert level == pytest.approx(f, rel=1e-12)

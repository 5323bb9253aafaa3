"""Radial reductions: Schouten eigenvalues, degenerate families, the
singular barrier, and annulus shooting."""

import math

import numpy as np
import pytest

from sigma2kit import bubble as bm
from sigma2kit import conformal as cf
from sigma2kit import radial as rd
from sigma2kit.symfunc import SymmetricMatrixN, dimension_constant, sigma_pair


class TestRadialSchoutenEigs:
    def test_flat_inversion(self):
        for n in (3, 4, 5):
            r = 1.7
            u = r ** (2.0 - n)
            du = (2.0 - n) * r ** (1.0 - n)
            ddu = (2.0 - n) * (1.0 - n) * r ** (-n)
            lr, lt = rd.radial_schouten_eigs((r, u, du, ddu), n, "pow")
            assert abs(lr) < 1e-13 and abs(lt) < 1e-13

    def test_constant_factor(self):
        lr, lt = rd.radial_schouten_eigs((2.0, 1.0, 0.0, 0.0), 4, "pow")
        assert lr == 0.0 and lt == 0.0

    def test_interior_bubble_curvature(self):
        for n, f in ((3, 1.0), (4, 2.0)):
            bub = bm.interior_bubble(n, f)
            r = np.linspace(0.3, 5.0, 17)
            lr, lt = rd.radial_schouten_eigs(
                (r, bub.value(r), bub.d1(r), bub.d2(r)), n, "pow"
            )
            _, s2 = sigma_pair(lr, lt, n)
            curv = np.sqrt(s2) * bub.value(r) ** (-4.0 / (n - 2))
            assert np.max(np.abs(curv - f)) < 1e-10

    def test_agrees_with_dense_schouten_pow(self):
        # off-axis point: embed the radial data in an ambient frame
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(3, 6))
            bub = bm.interior_bubble(n, float(rng.uniform(0.5, 3.0)))
            x = rng.standard_normal(n)
            x *= rng.uniform(0.5, 3.0) / np.linalg.norm(x)
            r = float(np.linalg.norm(x))
            u, du, ddu = bub.value(r), bub.d1(r), bub.d2(r)
            xhat = x / r
            grad = du * xhat
            hess = ddu * np.outer(xhat, xhat) + du / r * (np.eye(n) - np.outer(xhat, xhat))
            dense = cf.schouten_pow(
                n, float(u), grad, SymmetricMatrixN.symmetrized(hess),
                SymmetricMatrixN(np.zeros((n, n))),
            )
            lam = np.sort(dense.eigenvalues())
            lr, lt = rd.radial_schouten_eigs((r, u, du, ddu), n, "pow")
            expect = np.sort(np.array([lr] + [lt] * (n - 1)))
            assert np.max(np.abs(lam - expect)) < 1e-10

    def test_fd_cross_check(self):
        # analytic (u', u'') columns vs central differences of the profile
        rng = np.random.default_rng(1)
        bub = bm.interior_bubble(4, 1.2)
        h = 1e-4  # balances h^2 truncation against 1/h^2 roundoff
        for _ in range(200):
            r = float(rng.uniform(0.5, 4.0))
            du_fd = (bub.value(r + h) - bub.value(r - h)) / (2 * h)
            ddu_fd = (bub.value(r + h) - 2 * bub.value(r) + bub.value(r - h)) / h**2
            lr_a, lt_a = rd.radial_schouten_eigs(
                (r, bub.value(r), bub.d1(r), bub.d2(r)), 4, "pow"
            )
            lr_f, lt_f = rd.radial_schouten_eigs(
                (r, bub.value(r), du_fd, ddu_fd), 4, "pow"
            )
            assert abs(lr_a - lr_f) < 1e-6 and abs(lt_a - lt_f) < 1e-6

    def test_exp_convention(self):
        # e^(-2u) g with u = -2 log(v)/(n-2) matches the pow route
        n, r = 4, 1.3
        v, dv, ddv = 0.8, -0.2, 0.35
        w = -2.0 * math.log(v) / (n - 2)
        dw = -2.0 / (n - 2) * dv / v
        ddw = -2.0 / (n - 2) * (ddv / v - (dv / v) ** 2)
        lr_p, lt_p = rd.radial_schouten_eigs((r, v, dv, ddv), n, "pow")
        lr_e, lt_e = rd.radial_schouten_eigs((r, w, dw, ddw), n, "exp")
        assert lr_p == pytest.approx(lr_e, rel=1e-12)
        assert lt_p == pytest.approx(lt_e, rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            rd.radial_schouten_eigs((0.0, 1.0, 0.0, 0.0), 4, "pow")
        with pytest.raises(ValueError):
            rd.radial_schouten_eigs((1.0, -1.0, 0.0, 0.0), 4, "pow")
        with pytest.raises(ValueError):
            rd.radial_schouten_eigs((1.0, 1.0, 0.0, 0.0), 4, "weird")


class TestDegenerateFamilies:
    def test_case_a_inversion(self):
        fam = rd.degenerate_family(4, "a", (1.0, 2.0))
        prof = fam.profile(np.geomspace(0.1, 10.0, 100))
        s1, s2 = prof.sigma_columns()
        assert np.max(np.abs(s2)) < 1e-12
        assert np.max(np.abs(s1)) < 1e-12

    def test_case_b_anchor(self):
        fam = rd.degenerate_family(3, "b", (1.0, 1.0))
        prof = fam.profile(np.geomspace(0.1, 10.0, 200))
        s1, s2 = prof.sigma_columns()
        assert np.max(np.abs(s2)) < 1e-9
        assert np.min(s1) >= -1e-9

    def test_random_draws_stay_degenerate(self):
        rng = np.random.default_rng(2)
        r = np.geomspace(0.1, 10.0, 200)
        for _ in range(50):
            fam = rd.degenerate_family(
                4, "a", (float(rng.uniform(0.2, 3.0)), float(rng.uniform(0.0, 2.0)))
            )
            s1, s2 = fam.profile(r).sigma_columns()
            assert np.max(np.abs(s2)) < 1e-9
            assert np.min(s1) >= -1e-9
        for _ in range(50):
            c3 = float(rng.uniform(0.0, 2.0))
            c4 = float(rng.uniform(0.0, 2.0))
            if c3 + c4 == 0.0:
                c4 = 0.5
            fam = rd.degenerate_family(3, "b", (c3, c4))
            s1, s2 = fam.profile(r).sigma_columns()
            assert np.max(np.abs(s2)) < 1e-9
            assert np.min(s1) >= -1e-9

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            rd.degenerate_family(4, "a", (1.0, 2.1))  # C2 > n-2
        with pytest.raises(ValueError):
            rd.degenerate_family(3, "a", (1.0, 0.5))  # mu != 1
        with pytest.raises(ValueError):
            rd.degenerate_family(4, "b", (1.0, 1.0))  # mu == 1
        with pytest.raises(ValueError):
            rd.degenerate_family(3, "b", (0.0, 0.0))
        with pytest.raises(ValueError):
            rd.degenerate_family(4, "c", (1.0, 1.0))


class TestBarrier:
    @pytest.mark.parametrize("n", [3, 4])
    @pytest.mark.parametrize("delta", [0.1, 0.25, 0.4])
    def test_exclusion_below_r1(self, n, delta):
        bar = rd.barrier_profile(n, delta)
        r = np.geomspace(bar.r1 * 1e-3, bar.r1 * (1 - 1e-12), 100)
        assert np.all(bar.sigma2_flat(r) < -1e-12)

    @pytest.mark.parametrize("delta", [0.1, 0.25, 0.4])
    def test_n3_closed_form_bound(self, delta):
        bar = rd.barrier_profile(3, delta)
        r = np.geomspace(bar.r1 * 1e-3, bar.r1 * (1 - 1e-12), 100)
        bound = -3.0 * delta**2 * (1 - delta) ** 2 / r**4
        s2 = bar.sigma2_flat(r)
        assert np.all(s2 <= bound * (1 - 1e-12))

    def test_n4_d1_bound(self):
        bar = rd.barrier_profile(4, 0.25)
        r2 = bar.r_chain["r2"]
        r = np.geomspace(r2 * 1e-3, r2 * (1 - 1e-12), 100)
        bound = -3.0 * bar.rate_b * 0.25 * (2 - 0.25) / (4.0 * r**3)
        assert np.all(bar.sigma2_flat(r) < bound)

    def test_chi_match_schouten_eigs(self):
        # chi1 is the tangential eigenvalue, chi1 - chi2 the radial one
        for n in (3, 4):
            bar = rd.barrier_profile(n, 0.3)
            r = np.geomspace(bar.r1 * 1e-2, bar.r1, 50)
            v, dv, ddv = bar.derivatives(r)
            lr, lt = rd.radial_schouten_eigs((r, v, dv, ddv), n, "pow")
            assert np.max(np.abs(lt - bar.chi1(r)) / np.abs(lt)) < 1e-10
            assert np.max(np.abs(lr - (bar.chi1(r) - bar.chi2(r))) / np.abs(lr)) < 1e-9

    def test_neumann_on_flat_wall(self):
        # radial function: normal derivative vanishes on any wall through 0
        bar = rd.barrier_profile(3, 0.25)
        r = np.array([0.01, 0.05])
        _, dv, _ = bar.derivatives(r)
        x_n = 0.0
        assert np.all(np.abs(dv * x_n / r) == 0.0)

    def test_rate_defaults_and_validation(self):
        assert rd.barrier_profile(3, 0.2).rate_b == 1.0
        assert rd.barrier_profile(4, 0.2).rate_b == 8.0
        with pytest.raises(ValueError):
            rd.barrier_profile(5, 0.2)
        with pytest.raises(ValueError):
            rd.barrier_profile(3, 0.6)


class TestShooting:
    def test_bubble_restriction(self):
        # u1 from the global bubble with b = 1: the solution on [1, 2]
        # is the restriction of the closed form
        for n in (3, 4):
            a = math.sqrt(2.0 * dimension_constant(n))
            u1 = (a / 2.0) ** ((n - 2) / 2.0)
            res = rd.shoot_annulus(n, 2.0, 0.0, u1, step=1e-3)
            assert res.reached_outer
            exact = (a / (1.0 + res.profile.r**2)) ** ((n - 2) / 2.0)
            assert np.max(np.abs(res.profile.u - exact)) < 1e-6

    def test_initial_slope_matches_neumann(self):
        n, c, u1 = 3, -0.5, 1.0
        res = rd.shoot_annulus(n, 1.5, c, u1)
        du1 = res.profile.du[0]
        assert du1 == pytest.approx(
            -0.5 * (n - 2) * (u1 + c * u1 ** (n / (n - 2))), rel=1e-14
        )

    def test_step_halving_consistency(self):
        n = 3
        a = math.sqrt(2.0 * dimension_constant(n))
        u1 = (a / 2.0) ** 0.5
        r1 = rd.shoot_annulus(n, 2.0, 0.0, u1, step=2e-3)
        r2 = rd.shoot_annulus(n, 2.0, 0.0, u1, step=1e-3)
        end1, end2 = r1.profile.u[-1], r2.profile.u[-1]
        assert abs(end1 - end2) / abs(end2) < 1e-6

    def test_admissibility_along_profile(self):
        res = rd.shoot_annulus(3, 1.8, -0.4, 1.0, step=1e-3)
        s1, s2 = res.profile.sigma_columns()
        assert np.min(s1) > -1e-9
        assert np.min(s2) > 0.0

    def test_family_blowup_trend(self):
        results = rd.shoot_family(3, 1.3, -0.5, members=4, step=2e-3)
        dd = [abs(r.ddu_inner) for r in results]
        growth = [b / a for a, b in zip(dd, dd[1:])]
        assert len(growth) >= 3
        assert all(g >= 2.0 for g in growth)
        bound = max(r.bound_c0 for r in results)
        assert bound < 10.0

    def test_singular_inner_value(self):
        assert rd.singular_inner_value(3, -0.5) == pytest.approx(math.sqrt(2.0))
        assert rd.singular_inner_value(4, -0.5) == pytest.approx(2.0)
        assert math.isinf(rd.singular_inner_value(3, 0.0))

    def test_inadmissible_start_raises(self):
        # u1 beyond the singular value puts the data outside the cone
        with pytest.raises(rd.ShootingError):
            rd.shoot_annulus(3, 1.5, -0.5, 1.5)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            rd.shoot_annulus(3, 0.9, 0.0, 1.0)
        with pytest.raises(ValueError):
            rd.shoot_annulus(3, 2.0, 0.0, -1.0)
        with pytest.raises(ValueError):
            rd.shoot_annulus(3, 2.0, 0.0, 1.0, k=3)

    def test_profile_csv(self, tmp_path):
        res = rd.shoot_annulus(3, 1.5, 0.0, 0.8, step=2e-3)
        path = tmp_path / "profile.csv"
        res.profile.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "r,u,du,ddu,sigma1,sigma2"
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape[1] == 6
        assert data[0, 0] == 1.0


class TestRadialProfile:
    def test_validation(self):
        with pytest.raises(ValueError):
            rd.RadialProfile("pow", 3, np.array([[1.0, -1.0, 0.0, 0.0]]))
        with pytest.raises(ValueError):
            rd.RadialProfile(
                "pow", 3, np.array([[2.0, 1.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]])
            )
        with pytest.raises(ValueError):
            rd.RadialProfile("bad", 3, np.array([[1.0, 1.0, 0.0, 0.0]]))

    def test_exp_profile_allows_negative_u(self):
        prof = rd.RadialProfile("exp", 3, np.array([[1.0, -2.0, 0.0, 0.0]]))
        assert prof.u[0] == -2.0

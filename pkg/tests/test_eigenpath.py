"""Continuation solvers: eigen family and existence homotopy."""

import math

import numpy as np
import pytest

from sigma2kit import eigenpath as ep
from sigma2kit.symfunc import dimension_constant, sigma_pair

NODES = 121  # module tests run lighter than the 201-node acceptance gate


class TestModelGeometry:
    def test_hemisphere_volume(self):
        g4 = ep.spherical_cap(4, math.pi / 2)
        assert g4.volume == pytest.approx(4.0 * math.pi**2 / 3.0, rel=1e-13)
        g3 = ep.spherical_cap(3, math.pi / 2)
        assert g3.volume == pytest.approx(math.pi**2, rel=1e-13)

    def test_hemisphere_h_exact_zero(self):
        assert ep.spherical_cap(4, math.pi / 2).h_right == 0.0

    def test_cap_background_admissible(self):
        g = ep.spherical_cap(4, math.pi / 3)
        assert g.a_radial == 0.5
        _, s2 = sigma_pair(g.a_radial, g.a_tangential, g.n)
        assert s2 > 0
        assert g.h_right == pytest.approx(1.0 / math.sqrt(3.0))

    def test_annulus_boundary_curvatures(self):
        g = ep.annulus_geometry(3, 1.0, 2.0)
        assert g.h_left == -1.0
        assert g.h_right == 0.5
        assert g.volume == pytest.approx(4.0 * math.pi * 7.0 / 3.0, rel=1e-13)

    def test_positivity_guard(self):
        small = ep.spherical_cap(4, math.pi / 6)
        assert not small.positivity_holds()
        scaled, b = ep.scale_to_positive(small)
        assert b >= 2.0
        assert scaled.positivity_holds()
        hemi = ep.spherical_cap(4, math.pi / 2)
        same, b1 = ep.scale_to_positive(hemi)
        assert b1 == 1.0 and same is hemi

    def test_validation(self):
        with pytest.raises(ValueError):
            ep.spherical_cap(4, 0.0)
        with pytest.raises(ValueError):
            ep.annulus_geometry(3, 2.0, 1.0)


class TestZetaRamp:
    def test_endpoints_and_plateau(self):
        assert ep.zeta_ramp(0.0) == 0.0
        for t in (0.5, 0.7, 1.0):
            assert ep.zeta_ramp(t) == 1.0
        assert 0.0 < ep.zeta_ramp(0.25) < 1.0


class TestIntegratedBasis:
    def test_antiderivative_columns(self):
        geom = ep.annulus_geometry(3, 1.0, 2.5)
        disc = ep.Discretization(geom, 60)  # odd Chebyshev order branch
        e0 = np.zeros(disc.n_coeff)
        e0[0] = 1.0
        assert np.max(np.abs(disc.U1 @ e0 - (disc.x - geom.x0))) < 1e-13
        assert np.max(np.abs(disc.U2 @ e0 - 0.5 * (disc.x - geom.x0) ** 2)) < 1e-13

    def test_quadrature_exact_on_cubic(self):
        geom = ep.annulus_geometry(3, 1.0, 2.5)
        disc = ep.Discretization(geom, 60)
        w = disc.w_mu / geom.measure_density(disc.x)
        exact = (2.5**4 - 1.0) / 4.0
        assert abs(float(w @ disc.x**3) - exact) < 1e-12

    def test_fields_consistent_with_matrices(self):
        # integrated fields agree with differentiation of the
        # reconstructed u (up to the conditioning of D, D2)
        geom = ep.spherical_cap(4, math.pi / 2)
        disc = ep.Discretization(geom, 61)
        z = ep.random_admissible_state(disc, np.random.default_rng(3), scale=0.05)
        w, up, u = disc.fields(z)
        assert np.max(np.abs(disc.D @ u - up)) < 1e-8
        assert np.max(np.abs(disc.D2 @ u - w)) < 1e-5


class TestPathResidual:
    def test_t0_anchor_hemisphere(self):
        for n in (3, 4):
            geom = ep.spherical_cap(n, math.pi / 2)
            u0 = np.zeros(201)
            r = ep.path_residual(geom, u0, 0.0, 1.0, 0.0)
            assert np.max(np.abs(r)) < 1e-10

    def test_t1_background_solves_itself(self):
        geom = ep.spherical_cap(4, math.pi / 2)
        f = math.sqrt(dimension_constant(4) ** 2) / 2.0  # sigma2^(1/2)(A_g)
        f = dimension_constant(4) / 2.0
        u0 = np.zeros(NODES)
        r = ep.path_residual(geom, u0, 1.0, f, 0.0)
        assert np.max(np.abs(r)) < 1e-13

    def test_perturbation_negative_control(self):
        geom = ep.spherical_cap(4, math.pi / 2)
        disc = ep.Discretization(geom, NODES)
        bump = 0.1 * np.exp(-((disc.x - 0.8) ** 2) / 0.3)
        r = ep.path_residual(geom, bump, 0.0, 1.0, 0.0, disc=disc)
        assert np.max(np.abs(r)) > 1e-3

    def test_inadmissible_flagged(self):
        geom = ep.annulus_geometry(3, 1.0, 2.0)
        disc = ep.Discretization(geom, NODES)
        with pytest.raises(ep.InadmissibleStateError):
            # at t = 1 the shift vanishes and the flat annulus with u = 0
            # sits on the cone boundary
            ep.path_residual(geom, np.zeros(NODES), 1.0, 1.0, 0.0, disc=disc)

    def test_f0_offset(self):
        geom = ep.spherical_cap(4, math.pi / 2)
        disc = ep.Discretization(geom, NODES)
        r0 = ep.path_residual(geom, np.zeros(NODES), 0.0, 1.0, 0.0, disc=disc)
        r1 = ep.path_residual(geom, np.zeros(NODES), 0.0, 1.0, 0.0, f0=0.25, disc=disc)
        assert np.max(np.abs((r0 - r1)[disc.interior] - 0.25)) < 1e-13


class TestEpsilonEigen:
    def test_hemisphere_constant_solution(self):
        for n in (3, 4):
            geom = ep.spherical_cap(n, math.pi / 2)
            res = ep.solve_epsilon_eigen(geom, 0.1, nodes=NODES)
            assert res.converged
            assert res.residual_norm < 1e-10
            # t=1 member: eps*u = log sigma2^(1/2)(A_g), constant
            expect = math.log(geom.background_sigma2_half()) / 0.1
            assert np.max(np.abs(res.u - expect)) < 1e-8
            assert res.sandwich_ok

    def test_cap_sandwich_lower_bound(self):
        geom = ep.spherical_cap(4, math.pi / 3)
        res = ep.solve_epsilon_eigen(geom, 0.1, nodes=NODES)
        assert res.converged
        assert res.residual_norm < 1e-10
        assert res.sandwich_ok
        low, eu_min, eu_max, high = res.sandwich
        assert eu_min >= low - 1e-8

    def test_eps_cauchy_sequence(self):
        geom = ep.spherical_cap(4, math.pi / 3)
        vals = []
        for eps in (0.2, 0.1, 0.05):
            res = ep.solve_epsilon_eigen(geom, eps, nodes=81)
            vals.append(eps * res.mean_u)
        d1 = abs(vals[1] - vals[0])
        d2 = abs(vals[2] - vals[1])
        assert d2 < d1

    def test_inadmissible_background_rejected(self):
        geom = ep.annulus_geometry(3, 1.0, 2.0)
        with pytest.raises(ep.InadmissibleStateError):
            ep.solve_epsilon_eigen(geom, 0.1, nodes=NODES)

    def test_bad_eps(self):
        geom = ep.spherical_cap(3, math.pi / 2)
        with pytest.raises(ValueError):
            ep.solve_epsilon_eigen(geom, 0.0)


class TestExtractEigenvalue:
    def test_hemisphere_anchors(self):
        for n, level in ((4, 1.5), (3, 0.75)):
            geom = ep.spherical_cap(n, math.pi / 2)
            res = ep.extract_eigenvalue(geom, [4e-4, 2e-4, 1e-4], nodes=NODES)
            assert res.level == pytest.approx(level, abs=1e-6)
            assert np.max(np.abs(res.v)) < 1e-10
            assert res.residual < 1e-6
            assert res.cauchy_ok

    def test_cap_pi3_regression_anchor(self):
        # golden value from the first converged run; node-independent
        geom = ep.spherical_cap(4, math.pi / 3)
        res = ep.extract_eigenvalue(geom, [4e-4, 2e-4, 1e-4], nodes=NODES)
        assert res.level == pytest.approx(4.8, abs=1e-9)
        assert np.max(np.abs(res.v)) > 1e-2  # genuinely non-constant
        assert res.residual < 1e-6
        assert res.cauchy_ok

    def test_cap_pi3_n3_regression_anchor(self):
        geom = ep.spherical_cap(3, math.pi / 3)
        res = ep.extract_eigenvalue(geom, [4e-4, 2e-4, 1e-4], nodes=NODES)
        assert res.level == pytest.approx(2.5842805367064794, abs=1e-8)
        assert res.residual < 1e-6

    def test_sequence_validation(self):
        geom = ep.spherical_cap(3, math.pi / 2)
        with pytest.raises(ValueError):
            ep.extract_eigenvalue(geom, [1e-3, 2e-3], nodes=NODES)
        with pytest.raises(ValueError):
            ep.extract_eigenvalue(geom, [], nodes=NODES)

    def test_level_monotone_in_cap_size(self):
        # larger caps admit lower constant levels: e^lambda decreases
        # strictly with the cap angle, matching first-eigenvalue behavior
        for n in (3, 4):
            levels = []
            for angle in (0.9, 1.2, math.pi / 2, 1.9):
                geom = ep.spherical_cap(n, angle)
                res = ep.extract_eigenvalue(geom, [2e-4, 1e-4], nodes=81)
                assert res.residual < 1e-6
                levels.append(res.level)
            assert all(b < a for a, b in zip(levels, levels[1:]))

    def test_polish_removes_constant_shift(self):
        # bordered limit solve is deflated: shifted seeds converge to the
        # same mean-zero eigenfunction
        geom = ep.spherical_cap(4, math.pi / 3)
        disc = ep.Discretization(geom, NODES)
        res = ep.extract_eigenvalue(geom, [4e-4, 2e-4], nodes=NODES)
        z = disc.zero_state()
        z[-1] = 0.7  # pure constant, mean != 0
        out = ep._polish_limit(disc, z + 0.0, math.exp(res.lam))
        assert out is not None
        w, up, u = disc.fields(out[:-1])
        assert abs(disc.mean(u)) < 1e-10
        assert math.exp(res.lam) == pytest.approx(float(out[-1]), rel=1e-9)


class TestHomotopy:
    def test_hemisphere_constant_branch(self):
        geom = ep.spherical_cap(4, math.pi / 2)
        f = dimension_constant(4) / 2.0
        res = ep.trace_homotopy(geom, f, 0.0, steps=8, nodes=NODES)
        assert res.success
        assert np.max(np.abs(res.u_final)) < 1e-10

    @pytest.mark.parametrize("n", [3, 4])
    def test_hemisphere_f1_endpoint(self, n):
        geom = ep.spherical_cap(n, math.pi / 2)
        res = ep.trace_homotopy(geom, 1.0, 0.0, steps=10, nodes=NODES)
        assert res.success
        target = -0.5 * math.log(dimension_constant(n) / 2.0)
        assert np.max(np.abs(res.u_final - target)) < 1e-8
        assert res.states[-1].residual_norm < 1e-9

    def test_all_states_admissible_and_converged(self):
        geom = ep.spherical_cap(4, math.pi / 2)
        res = ep.trace_homotopy(geom, 1.0, 0.1, steps=10, nodes=NODES)
        assert res.success
        for state in res.states:
            assert state.residual_norm < 1e-9
            assert state.cone_margin > 0

    def test_boundary_condition_with_c(self):
        geom = ep.spherical_cap(4, math.pi / 2)
        res = ep.trace_homotopy(geom, 1.0, 0.1, steps=10, nodes=NODES)
        disc = ep.Discretization(geom, NODES)
        r = ep.path_residual(geom, res.u_final, 1.0, 1.0, 0.1, disc=disc)
        assert np.max(np.abs(r)) < 1e-8
        # regression anchors from the first converged run (node-independent)
        assert res.u_final[0] == pytest.approx(0.00907725045773271, abs=1e-10)
        assert res.u_final[-1] == pytest.approx(-0.0952797492691809, abs=1e-10)

    def test_monotone_volume_bound(self):
        # (1-t) (int e^(-(n+1)u))^(2/(n+1)) <= max sigma2^(1/2)(A_g + S_g)
        geom = ep.spherical_cap(4, math.pi / 2)
        n = geom.n
        res = ep.trace_homotopy(geom, 1.0, 0.0, steps=10, nodes=NODES)
        disc = ep.Discretization(geom, NODES)
        for state in res.states:
            q = float(disc.w_mu @ np.exp(-(n + 1) * state.u))
            lhs = (1.0 - state.t) * q ** (2.0 / (n + 1))
            s_r, s_t = state.s_eigs
            _, s2 = sigma_pair(geom.a_radial + s_r, geom.a_tangential + s_t, n)
            assert lhs <= math.sqrt(s2) + 1e-9

    def test_gauge_constant_invariance_of_operator(self):
        # A_u is unchanged by constant shifts; only the zero-order terms move
        geom = ep.spherical_cap(4, math.pi / 2)
        disc = ep.Discretization(geom, NODES)
        z = ep.random_admissible_state(disc, np.random.default_rng(0))
        sys_ = ep.EigenSystem(disc, 1e-6)
        w1, up1, _ = disc.fields(z)
        z2 = z.copy()
        z2[-1] += 3.0
        w2, up2, _ = disc.fields(z2)
        lr1, lt1 = disc.schouten_eigs_from_fields(w1, up1)
        lr2, lt2 = disc.schouten_eigs_from_fields(w2, up2)
        assert np.array_equal(lr1, lr2)
        assert np.array_equal(lt1, lt2)

    def test_auto_rescale_small_cap(self):
        geom = ep.spherical_cap(4, math.pi / 6)
        res = ep.trace_homotopy(geom, 1.0, 0.0, steps=10, nodes=81)
        assert res.rescale_factor >= 2.0
        assert res.geometry.positivity_holds()

    def test_annulus_reports_reachable_t(self):
        # flat annulus background is only marginally admissible; the
        # march either reaches t = 1 or reports the reachable parameter
        geom = ep.annulus_geometry(3, 1.0, 2.0)
        res = ep.trace_homotopy(geom, 1.0, 0.0, steps=8, nodes=61)
        assert 0.0 <= res.t_final <= 1.0
        if not res.success:
            assert "underflow" in res.message


class TestJacobian:
    def test_fd_agreement_20_states(self):
        rng = np.random.default_rng(1)
        geom = ep.spherical_cap(4, math.pi / 2)
        disc = ep.Discretization(geom, 41)
        path_sys = ep.PathSystem(disc, 1.0, 0.05)
        eigen_sys = ep.EigenSystem(disc, 0.1)
        worst = 0.0
        for k in range(20):
            z = ep.random_admissible_state(disc, rng)
            t = float(rng.uniform(0.0, 1.0))
            system = path_sys if k % 2 == 0 else eigen_sys
            worst = max(worst, ep.jacobian_fd_error(system, z, t, seed=k))
        assert worst < 1e-5

    def test_annulus_fd(self):
        rng = np.random.default_rng(2)
        geom = ep.annulus_geometry(3, 1.0, 2.0)
        disc = ep.Discretization(geom, 41)
        system = ep.PathSystem(disc, 1.0, 0.0)
        for k in range(5):
            z = ep.random_admissible_state(disc, rng)
            assert ep.jacobian_fd_error(system, z, 0.2, seed=k) < 1e-5


class TestTrace:
    def test_path_state_trace(self):
        geom = ep.spherical_cap(4, math.pi / 2)
        res = ep.trace_homotopy(geom, 1.0, 0.0, steps=6, nodes=61)
        trace = res.states[-1].to_trace()
        assert set(trace) == {"t", "zeta", "residual", "min_cone_margin", "u_samples"}
        assert trace["t"] == 1.0
        assert len(trace["u_samples"]) == 9

import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from floqsense.model import DIPOLAR_2D_MEANFIELD, ISING_1D_NN, CriticalExponents, NoiseSpec
from floqsense import scaling as sc
from floqsense.freefermion import fit_power_law


class TestKibbleZurekXi:
    def test_one_dimensional_arithmetic(self):
        assert sc.kibble_zurek_xi(1.0, 100.0, ISING_1D_NN) == pytest.approx(10.0)

    def test_two_dimensional_dipolar(self):
        assert sc.kibble_zurek_xi(1.0, 128.0, DIPOLAR_2D_MEANFIELD) == pytest.approx(128.0 ** (2.0 / 3.0))

    def test_clamped_below_unity(self):
        with pytest.warns(UserWarning, match="clamp"):
            assert sc.kibble_zurek_xi(1.0, 0.5, ISING_1D_NN) == 1.0

    def test_system_size_cap(self):
        assert sc.kibble_zurek_xi(1.0, 1e6, ISING_1D_NN, system_size=64) == 64.0


class TestStageSplit:
    def test_known_values(self):
        assert sc.optimal_stage_split(ISING_1D_NN, 1).beta == pytest.approx(0.2)
        assert sc.optimal_stage_split(DIPOLAR_2D_MEANFIELD, 2).beta == pytest.approx(0.4)

    def test_budget_partition(self):
        split = sc.optimal_stage_split(ISING_1D_NN, 1, t2_eff=50.0)
        assert split.t_p + split.t_s == pytest.approx(50.0)
        assert split.t_p == pytest.approx(10.0)

    def test_against_numerical_optimizer(self):
        # maximize xi^(d/2) T_s = (J beta T2)^(d nu / 2(1+z nu)) (1-beta) T2
        rng = np.random.default_rng(0)
        for _ in range(8):
            exps = CriticalExponents(nu=rng.uniform(0.5, 2.0), z=rng.uniform(0.3, 2.0))
            d = int(rng.integers(1, 4))
            e = d * exps.nu / (2.0 * (1.0 + exps.z * exps.nu))

            def objective(beta):
                return -(beta**e) * (1.0 - beta)

            res = minimize_scalar(objective, bounds=(1e-9, 1 - 1e-9), method="bounded",
                                  options={"xatol": 1e-12})
            assert sc.optimal_stage_split(exps, d).beta == pytest.approx(res.x, abs=1e-6)


class TestSensitivity:
    def test_heisenberg_vs_sql_ratio(self):
        n = 25
        ratio = sc.sensitivity("heisenberg", n, 3.0, 2.0) / sc.sensitivity("sql", n, 3.0, 2.0)
        assert ratio == pytest.approx(math.sqrt(n))

    def test_no_parity_exponent(self):
        # (J T2)^(3/16) on top of the SQL form
        t2 = 37.0
        val = sc.sensitivity("no-parity", 1.0, 1.0, t2, j=1.0)
        assert val == pytest.approx(math.sqrt(t2) * t2 ** (3.0 / 16.0), rel=1e-12)

    def test_correlated_reductions(self):
        n, t, t2 = 32, 7.0, 3.0
        assert sc.sensitivity("correlated", n, t, t2, xi=n, t_s=t2, d=1) == pytest.approx(
            sc.sensitivity("heisenberg", n, t, t2)
        )
        assert sc.sensitivity("correlated", n, t, t2, xi=1.0, t_s=t2, d=1) == pytest.approx(
            sc.sensitivity("sql", n, t, t2)
        )

    def test_optimal_correlated_1d(self):
        # optimized 1D chain gains (J T2)^(1/4) over the SQL
        t2 = 11.0
        gain = sc.sensitivity("correlated", 4, 2.0, t2) / sc.sensitivity("sql", 4, 2.0, t2)
        assert gain == pytest.approx(t2**0.25, rel=1e-12)

    def test_unknown_regime(self):
        with pytest.raises(ValueError, match="regime"):
            sc.sensitivity("squeezed", 1, 1, 1)

    def test_positive_inputs_required(self):
        with pytest.raises(ValueError):
            sc.sensitivity("sql", -1, 1, 1)


class TestSelfConsistentChi:
    def test_dipolar_2d_exponent(self):
        jt2 = 321.0
        assert sc.self_consistent_chi(1.0, jt2) == pytest.approx(jt2 ** (4.0 / 7.0), rel=1e-10)

    def test_nn_1d_exponent(self):
        jt2 = 55.0
        assert sc.self_consistent_chi(1.0, jt2, ISING_1D_NN, d=1) == pytest.approx(
            jt2 ** (1.0 / 3.0), rel=1e-10
        )

    def test_fixed_point_random_draws(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            exps = CriticalExponents(nu=rng.uniform(0.5, 2.0), z=rng.uniform(0.3, 2.0))
            d = int(rng.integers(1, 4))
            jt2 = rng.uniform(2.0, 1e4)
            val = sc.self_consistent_chi(1.0, jt2, exps, d)
            s = d * exps.nu / (1.0 + exps.z * exps.nu)
            assert val == pytest.approx(jt2 ** (s / (1.0 + s)), rel=1e-8)

    def test_requires_jt2_above_one(self):
        with pytest.raises(ValueError):
            sc.self_consistent_chi(1.0, 0.5)


class TestEffectiveT2:
    def test_unit_cluster(self):
        assert sc.effective_t2(3.0, 1.0, 1) == 3.0
        assert sc.effective_t2(3.0, 1.0, 2, "dipolar-correlated") == 3.0

    def test_independent_model(self):
        assert sc.effective_t2(5.0, 100.0, 1) == pytest.approx(0.05)

    def test_correlated_model(self):
        # chi = xi^2 = 100: T2 / sqrt(chi) = T2 / 10
        assert sc.effective_t2(5.0, 10.0, 2, "dipolar-correlated") == pytest.approx(0.5)

    def test_correlated_needs_2d(self):
        with pytest.raises(ValueError, match="d = 2"):
            sc.effective_t2(1.0, 2.0, 1, "dipolar-correlated")


class TestBandwidth:
    def test_unit_chi_equal(self):
        assert sc.bandwidth_product("conventional", 3.0, 5.0) == sc.bandwidth_product(
            "correlated", 3.0, 5.0, chi=1.0
        )

    def test_chi_enhancement(self):
        assert sc.bandwidth_product("correlated", 3.0, 5.0, chi=50.0) == pytest.approx(
            50.0 * sc.bandwidth_product("conventional", 3.0, 5.0)
        )

    def test_consistency_with_sensitivity(self):
        # delta_omega = 1/T2 and delta_B from the SQL law reproduce N T
        n, t, t2 = 9.0, 4.0, 0.25
        db_inv = sc.sensitivity("sql", n, t, t2)
        assert (1.0 / t2) * db_inv**2 == pytest.approx(
            sc.bandwidth_product("conventional", n, t), rel=1e-12
        )


class TestDipoleField:
    def test_vertical_dipole_no_inplane(self):
        g = sc.DipoleNoiseGeometry(a0=1.0, depth=0.5, m=2.0, alpha_angle=0.0)
        bz, bq = sc.dipole_effective_field(g, xi=1.5)
        assert bq == 0.0
        assert bz > 0.0

    def test_large_patch_decay(self):
        # xi >> z: field magnitude falls off as 1/xi
        g = sc.DipoleNoiseGeometry(a0=1.0, depth=0.1, m=1.0, alpha_angle=0.3)
        b1 = np.hypot(*sc.dipole_effective_field(g, xi=50.0))
        b2 = np.hypot(*sc.dipole_effective_field(g, xi=100.0))
        assert b1 / b2 == pytest.approx(2.0, rel=0.01)

    def test_closed_form_matches_quadrature(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            g = sc.DipoleNoiseGeometry(
                a0=rng.uniform(0.5, 2.0),
                depth=rng.uniform(0.05, 3.0),
                m=rng.uniform(0.5, 2.0),
                alpha_angle=rng.uniform(0.0, math.pi / 2),
            )
            xi = rng.uniform(0.3, 6.0)
            bz, bq = sc.dipole_effective_field(g, xi)
            qz, qq = sc.dipole_field_quadrature(g, xi)
            scale = max(abs(bz), abs(bq))
            assert abs(bz - qz) < 1e-6 * scale
            assert abs(bq - qq) < 1e-6 * scale


class TestNoiseRatio:
    def test_order_unity_at_spacing(self):
        g = sc.DipoleNoiseGeometry(a0=1.0, depth=0.0)
        ratio = sc.noise_density_ratio(g, 1.0)
        assert 0.05 < ratio < 20.0

    def test_linear_growth_with_patch_size(self):
        g = sc.DipoleNoiseGeometry(a0=1.0, depth=0.0)
        xis = np.geomspace(3.0, 100.0, 8)
        ratios = [sc.noise_density_ratio(g, x) for x in xis]
        fit = fit_power_law(xis, ratios)
        assert fit.exponent == pytest.approx(1.0, abs=0.1)

    def test_quadrature_stability(self):
        g = sc.DipoleNoiseGeometry(a0=0.7, depth=0.0)
        loose = sc.noise_density_ratio(g, 12.0, epsrel=1e-6)
        tight = sc.noise_density_ratio(g, 12.0, epsrel=1e-12)
        assert loose == pytest.approx(tight, rel=1e-6)

    def test_requires_xi_above_spacing(self):
        g = sc.DipoleNoiseGeometry(a0=1.0, depth=0.0)
        with pytest.raises(ValueError):
            sc.noise_density_ratio(g, 0.5)


class TestImagerBudget:
    def test_dipolar_coupling_anchor(self):
        # J0 / (250 nm)^3 = 2 pi x 3.3 Hz
        j_dd = sc.NV_J0 / (250e-9) ** 3
        assert j_dd / (2 * math.pi) == pytest.approx(3.3, rel=0.02)

    def test_room_temperature_spacing_and_n0(self):
        # J_dd T2 = 1 at r_min ~ 100 nm; (250/100)^2 ~ 6 sensors per probe
        r_min = sc.interaction_limited_spacing(sc.NV_J0, 3e-3)
        assert r_min == pytest.approx(100e-9, rel=0.05)
        n0 = (250e-9 / r_min) ** 2
        assert 5.0 < n0 < 7.0
        assert math.sqrt(n0) == pytest.approx(3.0, rel=0.2)

    def test_single_layer_n1(self):
        pts = sc.imager_budget([1.0 / (5e-9) ** 2], t2_single=3e-3)
        assert pts[0].n_probe == pytest.approx(2500.0, rel=1e-9)
        # uncorrelated gain over a single spin: sqrt(N1) = 50
        single = sc.imager_budget([1.0 / (300e-9) ** 2], t2_single=3e-3)[0]
        gain = math.sqrt(pts[0].n_probe)
        assert gain == pytest.approx(50.0, rel=1e-9)
        assert single.regime == "I"

    def test_regime_progression(self):
        densities = [1e12, 1e14, 4e16]
        pts = sc.imager_budget(densities, t2_single=3e-3)
        assert [p.regime for p in pts] == ["I", "II", "III"]
        # in regime III the protocol curve beats the conventional one
        assert pts[2].db_inv_protocol > pts[2].db_inv_conventional

    def test_conventional_saturates(self):
        pts = sc.imager_budget([1e15, 1e17], t2_single=3e-3)
        assert pts[0].db_inv_conventional == pytest.approx(pts[1].db_inv_conventional)
        assert pts[1].db_inv_protocol > pts[0].db_inv_protocol


class TestDisorderPipeline:
    def test_localization_length(self):
        assert sc.localization_length(0.1) == pytest.approx(0.1 ** (-1.49))

    def test_prep_time_consistency(self):
        # xi(T_p*) equals xi_loc for the 1D chain: (J T_p*)^(1/2) = (W/J)^(-mu)
        w = 0.2
        t_star = sc.disorder_limited_prep_time(w)
        xi_ramp = sc.kibble_zurek_xi(1.0, t_star, ISING_1D_NN)
        assert xi_ramp == pytest.approx(sc.localization_length(w), rel=1e-12)

    def test_report_disorder_binding(self):
        noise = NoiseSpec(t2_single=1e4)
        free = sc.sensitivity_report(64, 10.0, noise, regime="correlated")
        capped = sc.sensitivity_report(64, 10.0, noise, regime="correlated", w_over_j=0.4)
        assert capped.xi <= free.xi
        assert capped.t_p <= free.t_p

    def test_report_invariants(self):
        rep = sc.sensitivity_report(16, 5.0, NoiseSpec(t2_single=100.0), regime="no-parity")
        assert 0.0 < rep.beta < 1.0
        assert rep.xi >= 1.0
        assert rep.bandwidth == pytest.approx(1.0 / rep.t2_eff)


class TestHomogeneity:
    def test_dimensionless_outputs_invariant(self):
        # J -> s J with all times -> times / s leaves beta, chi and the
        # sensitivity gains unchanged
        rng = np.random.default_rng(3)
        for _ in range(5):
            s = rng.uniform(0.1, 10.0)
            j, t, t2, n = 1.0, rng.uniform(1, 50), rng.uniform(2, 50), 16
            beta1 = sc.optimal_stage_split(ISING_1D_NN, 1).beta
            beta2 = sc.optimal_stage_split(ISING_1D_NN, 1).beta
            assert beta1 == beta2
            chi1 = sc.self_consistent_chi(j, t2, ISING_1D_NN, 1)
            chi2 = sc.self_consistent_chi(s * j, t2 / s, ISING_1D_NN, 1)
            assert chi1 == pytest.approx(chi2, rel=1e-12)
            gain1 = sc.sensitivity("correlated", n, t, t2, j) / sc.sensitivity("sql", n, t, t2, j)
            gain2 = sc.sensitivity("correlated", n, t / s, t2 / s, s * j) / sc.sensitivity(
                "sql", n, t / s, t2 / s, s * j
            )
            assert gain1 == pytest.approx(gain2, rel=1e-12)

import numpy as np
import pytest

from floqsense.model import DisorderSpec, SpinEnsembleSpec, sample_disorder
from floqsense import freefermion as ff
from floqsense import statevector as sv


def chain_spec(n, **disorder):
    return SpinEnsembleSpec(n=n, j=1.0, boundary="periodic", disorder=DisorderSpec(**disorder))


class TestBuildBdg:
    def test_two_site_shape_and_symmetry(self):
        bm = ff.build_bdg(sample_disorder(chain_spec(2)), omega=0.7)
        assert bm.matrix.shape == (4, 4)
        w = np.sort(np.linalg.eigvalsh(bm.matrix))
        assert np.max(np.abs(w + w[::-1])) < 1e-10

    def test_particle_hole_symmetry_disordered(self):
        real = sample_disorder(chain_spec(64, w_omega=0.4, w_j=0.3, seed=11))
        sol = ff.solve_bdg(real, omega=0.5)
        w = sol.eigenvalues
        assert np.max(np.abs(w + w[::-1])) < 1e-10

    def test_near_gapless_at_critical_point(self):
        sol = ff.solve_bdg(sample_disorder(chain_spec(1000)), omega=0.5)
        assert sol.positive_branch[0] < 1e-2

    def test_even_sector_matches_dense_n10(self):
        for disorder in ({}, {"w_omega": 0.2, "w_j": 0.15, "seed": 7}):
            real = sample_disorder(chain_spec(10, **disorder))
            mb = ff.solve_bdg(real, omega=0.5).many_body_even_energies()
            dense = sv.even_sector_spectrum(real, omega=0.5)
            assert np.max(np.abs(mb - dense)) < 1e-8

    def test_non_nn_profile_rejected(self):
        n = 4
        jm = np.zeros((n, n))
        jm[0, 2] = jm[2, 0] = 1.0
        real = sample_disorder(SpinEnsembleSpec(n=n, coupling=jm))
        with pytest.raises(ValueError, match="nearest-neighbour"):
            ff.build_bdg(real, omega=0.5)

    def test_odd_n_rejected(self):
        with pytest.raises(ValueError, match="even"):
            ff.build_bdg(sample_disorder(SpinEnsembleSpec(n=5, boundary="periodic")), omega=0.5)


class TestIpr:
    def test_clean_extended_states(self):
        spec = chain_spec(1000)
        val = ff.ipr_average(spec, n_realizations=1)
        assert val < 10.0 / 1000.0

    def test_mode_ipr_bounds(self):
        real = sample_disorder(chain_spec(64, w_omega=0.5, w_j=0.5, seed=2))
        sol = ff.solve_bdg(real, omega=0.5)
        n = 64
        for col in range(n, n + 20):
            val = sol.ipr(col)
            assert 1.0 / n - 1e-12 <= val <= 1.0 + 1e-12

    def test_size_independence_when_localized(self):
        # localized regime: IPR insensitive to doubling N
        w = 0.3
        vals = []
        for n in (400, 800):
            spec = SpinEnsembleSpec(
                n=n, j=1.0, boundary="periodic", disorder=DisorderSpec(w_omega=w, w_j=w, seed=5)
            )
            vals.append(ff.ipr_average(spec, n_realizations=8))
        assert abs(vals[1] - vals[0]) / vals[0] < 0.15

    def test_deterministic_in_seed(self):
        spec = chain_spec(200, w_omega=0.2, w_j=0.2, seed=9)
        a = ff.ipr_average(spec, n_realizations=3)
        b = ff.ipr_average(spec, n_realizations=3)
        assert a == b

    def test_n_states_cap(self):
        with pytest.raises(ValueError, match="n_states"):
            ff.ipr_average(chain_spec(10), n_states=50)


class TestPowerLawFit:
    def test_exact_square(self):
        f = ff.fit_power_law([1.0, 2.0, 3.0, 4.0], [1.0, 4.0, 9.0, 16.0])
        assert f.exponent == pytest.approx(2.0, abs=1e-10)
        assert f.stderr == pytest.approx(0.0, abs=1e-10)

    def test_inverse_with_prefactor(self):
        f = ff.fit_power_law([1.0, 2.0, 4.0], [3.0, 1.5, 0.75])
        assert f.exponent == pytest.approx(-1.0, abs=1e-12)
        assert f.prefactor == pytest.approx(3.0, rel=1e-10)

    def test_rejects_bad_data(self):
        with pytest.raises(ValueError):
            ff.fit_power_law([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            ff.fit_power_law([1.0, -2.0, 3.0], [1.0, 2.0, 3.0])


class TestDispersion:
    def test_critical_gap_bound(self):
        # small-k expansion: eps_min = J sin(pi/2N) <= pi J / (2N)
        for n in (100, 400):
            ks, eps = ff.dispersion(0.5, 1.0, n)
            assert eps.min() <= np.pi / (2 * n) + 1e-12
            assert eps.min() == pytest.approx(np.sin(np.pi / (2 * n)), rel=1e-10)

    def test_paramagnetic_limit(self):
        omega = 50.0
        _, eps = ff.dispersion(omega, 1.0, 64)
        assert np.all(np.abs(eps - omega) / omega < 0.05)

    def test_matches_bdg_eigenvalues(self):
        real = sample_disorder(chain_spec(100))
        sol = ff.solve_bdg(real, omega=0.7)
        _, eps = ff.dispersion(0.7, 1.0, 100)
        doubled = np.sort(np.concatenate([eps, eps]))
        assert np.max(np.abs(sol.mode_energies - doubled)) < 1e-10

    def test_mode_gap_property(self):
        modes = ff.momentum_modes(0.8, 1.0, 16)
        _, eps = ff.dispersion(0.8, 1.0, 16)
        gaps = np.array([m.gap for m in modes])
        assert np.allclose(gaps, 2.0 * eps)


class TestKzRamp:
    def test_sudden_limit_overlap_oracle(self):
        # overlap oracle: p_k = |<excited(stop)|ground(start)>|^2
        n, j = 64, 1.0
        spec = chain_spec(n)
        res = ff.kz_ramp(spec, t_p=1e-6)
        ks, _ = ff.dispersion(0.0, j, n)
        a0 = 1.0 - 0.5 * j * np.cos(ks)
        a1 = 0.0 - 0.5 * j * np.cos(ks)
        b = 0.5 * j * np.sin(ks)
        e0 = np.hypot(a0, b)
        e1 = np.hypot(a1, b)
        u0 = b / np.hypot(b, a0 - e0)
        v0 = (a0 - e0) / np.hypot(b, a0 - e0)
        ue = b / np.hypot(b, a1 + e1)
        ve = (a1 + e1) / np.hypot(b, a1 + e1)
        pk = (u0 * ue + v0 * ve) ** 2
        oracle = 2.0 * pk.sum() / n
        assert res.n_ex == pytest.approx(oracle, rel=1e-4)

    def test_xi_is_inverse_density(self):
        res = ff.kz_ramp(chain_spec(32), t_p=20.0)
        assert res.xi * res.n_ex == pytest.approx(1.0, rel=1e-12)

    def test_monotone_in_ramp_time(self):
        spec = chain_spec(128)
        nex = [ff.kz_ramp(spec, t_p=t).n_ex for t in (10.0, 40.0, 160.0)]
        assert nex[0] > nex[1] > nex[2]

    def test_requires_crossing(self):
        with pytest.raises(ValueError, match="cross"):
            ff.kz_ramp(chain_spec(16), t_p=10.0, omega_start=2.0, omega_stop=1.0)

    def test_requires_clean_chain(self):
        with pytest.raises(ValueError, match="clean"):
            ff.kz_ramp(chain_spec(16, w_omega=0.1), t_p=10.0)


class TestManyBodyAssembly:
    def test_even_state_count(self):
        real = sample_disorder(chain_spec(8))
        mb = ff.solve_bdg(real, omega=1.0).many_body_even_energies()
        assert mb.size == 2**7

    def test_ground_energy_is_minus_half_qp_sum(self):
        real = sample_disorder(chain_spec(12, w_j=0.1, seed=4))
        sol = ff.solve_bdg(real, omega=0.6)
        assert sol.ground_energy() == pytest.approx(-0.5 * sol.mode_energies.sum(), rel=1e-12)

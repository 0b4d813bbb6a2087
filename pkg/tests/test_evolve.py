"""Split-step solver tests: conservation laws, order, symmetries,
observables."""

import numpy as np
import pytest

from randschro.grid import (
    ComplexField,
    Grid,
    free_propagate,
    gaussian_packet,
    translate,
)
from randschro.evolve import (
    energy,
    evolve,
    cylinder_mass,
    free_trajectory,
    ground_overlap,
    l6_low_fraction,
    observables_csv,
    rage_statistic,
    shifted_potential,
    strichartz_deviation,
    wave_operator_estimate,
)
from randschro.paths import (
    PathSample,
    make_piecewise_linear,
    sample_brownian,
    zero_path,
)
from randschro.potentials import ground_state, make_potential


@pytest.fixture
def setup1d():
    grid = Grid(1, 128, 40.0)
    pot = make_potential("gaussian_well", 1.5, 1.0, grid)
    z0 = gaussian_packet(grid, 1.0)
    return grid, pot, z0


class TestConservation:
    def test_mass_conserved_to_roundoff(self, setup1d):
        grid, pot, z0 = setup1d
        path = sample_brownian(11, 64, 1.0, 1)
        traj = evolve(z0, pot, path, 2.0, 1 / 64, 1.0)
        masses = [traj.mass(m) for m in range(len(traj.times))]
        drift = max(abs(m - masses[0]) for m in masses) / masses[0]
        assert drift < 1e-12

    def test_static_energy_drift_second_order(self, setup1d):
        grid, pot, z0 = setup1d

        def drift(dt):
            steps = int(round(1.0 / dt))
            traj = evolve(z0, pot, zero_path(steps, 1.0, 1), 0.0, dt, 1.0)
            es = [energy(traj, m) for m in range(len(traj.times))]
            return max(abs(e - es[0]) for e in es)

        assert drift(0.02) / drift(0.01) > 3.5

    def test_static_ground_state_is_stationary(self):
        grid = Grid(1, 128, 40.0)
        pot = make_potential("gaussian_well", 4.0, 1.0, grid)
        phi, e0 = ground_state(pot, dtau=0.005)
        traj = evolve(phi, pot, zero_path(64, 1.0, 1), 0.0, 1 / 64, 1.0)
        for m in (0, 32, 64):
            assert ground_overlap(traj, phi, m) == pytest.approx(1.0, abs=1e-6)
            assert energy(traj, m) == pytest.approx(e0, abs=1e-5)


class TestFreeLimit:
    def test_zero_potential_matches_free_flow(self, setup1d):
        grid, _, z0 = setup1d
        pot0 = make_potential("zero", 0.0, 1.0, grid)
        path = sample_brownian(3, 32, 1.0, 1)
        traj = evolve(z0, pot0, path, 1.0, 1 / 32, 1.0)
        free = free_trajectory(z0, traj.times)
        np.testing.assert_allclose(traj.field.values, free.values, atol=1e-12)

    def test_strichartz_deviation_zero_for_free(self, setup1d):
        grid, _, z0 = setup1d
        pot0 = make_potential("zero", 0.0, 1.0, grid)
        traj = evolve(z0, pot0, zero_path(32, 1.0, 1), 0.0, 1 / 32, 1.0)
        assert strichartz_deviation(traj, z0)["l2t_l62"] < 1e-12


class TestSymmetries:
    def test_galilean_boost_covariance(self, setup1d):
        # Evolving boosted data in a static well equals evolving unboosted
        # data against the oppositely translated well, up to the known
        # quadratic phase.
        grid, pot, _ = setup1d
        v = 2.0
        t_final, dt = 0.5, 1 / 128
        z0_lab = gaussian_packet(grid, 1.0, velocity=[v])
        lab = evolve(z0_lab, pot, zero_path(64, t_final, 1), 0.0, dt, t_final)
        # Moving frame: the well slides with velocity -v under the path.
        path = make_piecewise_linear(1, [[-v]], steps_per_piece=64,
                                     t_path=t_final)
        z0_mov = gaussian_packet(grid, 1.0)
        mov = evolve(z0_mov, pot, path, 1.0, dt, t_final)
        m = len(lab.times) - 1
        t = lab.times[m]
        x = grid.x_axis
        phase = np.exp(1j * (v * x / 2.0 - v * v * t / 4.0))
        mapped = ComplexField(grid, phase * translate(
            mov.slice(m), [-v * t]).values)
        overlap = abs(mapped.inner(lab.slice(m)))
        assert overlap == pytest.approx(1.0, abs=1e-6)

    def test_time_reversal(self, setup1d):
        grid, pot, z0 = setup1d
        dt, t_final = 1 / 64, 0.5
        path = sample_brownian(7, 32, t_final, 1)
        fwd = evolve(z0, pot, path, 1.0, dt, t_final)
        m_last = len(fwd.times) - 1
        shift_t = 1.0 * path.positions[-1]
        # Reverse the path (recentred to start at the origin) and recentre
        # the potential so the physical well track is traversed backwards.
        rev_pos = path.positions[::-1] - path.positions[-1]
        rev = PathSample(path.times, rev_pos, "imported")
        pot_rev = make_potential(pot.kind, pot.depth, pot.width, grid,
                                 center=pot.center + shift_t)
        zt = ComplexField(grid, np.conj(fwd.slice(m_last).values))
        back = evolve(zt, pot_rev, rev, 1.0, dt, t_final)
        recovered = ComplexField(grid,
                                 np.conj(back.slice(m_last).values))
        err = (recovered - z0).norm_l2()
        assert err < 1e-9


class TestObservables:
    def test_cylinder_mass_bounded_by_total(self, setup1d):
        grid, pot, z0 = setup1d
        traj = evolve(z0, pot, zero_path(16, 0.5, 1), 0.0, 1 / 32, 0.5)
        cm = cylinder_mass(traj, [0.0], [0.0], 5.0, 8)
        assert 0.0 < cm <= traj.mass(8) + 1e-12

    def test_rage_statistic_positive(self, setup1d):
        grid, pot, z0 = setup1d
        traj = evolve(z0, pot, zero_path(16, 0.5, 1), 0.0, 1 / 32, 0.5)
        assert rage_statistic(traj) > 0.0

    def test_l6_low_fraction_monotone_in_eps(self, setup1d):
        grid, pot, z0 = setup1d
        traj = evolve(z0, pot, zero_path(16, 0.5, 1), 0.0, 1 / 32, 0.5)
        assert l6_low_fraction(traj, 0.01) <= l6_low_fraction(traj, 10.0)
        assert l6_low_fraction(traj, 1e6) == 1.0

    def test_observables_csv_columns(self, setup1d, tmp_path):
        grid, pot, z0 = setup1d
        traj = evolve(z0, pot, zero_path(8, 0.25, 1), 0.0, 1 / 32, 0.25)
        fname = tmp_path / "obs.csv"
        observables_csv(traj, fname, phi0=z0, cylinder=([0.0], [0.0], 3.0))
        lines = fname.read_text().strip().splitlines()
        assert lines[0] == ("t,mass,energy,cylinder_mass,ground_overlap,"
                            "l2_norm_L62")
        assert len(lines) == len(traj.times) + 1


class TestWaveOperator:
    def test_free_evolution_converges_immediately(self, setup1d):
        grid, _, z0 = setup1d
        pot0 = make_potential("zero", 0.0, 1.0, grid)
        traj = evolve(z0, pot0, zero_path(16, 1.0, 1), 0.0, 1 / 16, 1.0)
        out = wave_operator_estimate(traj)
        assert out["converged"]
        assert np.max(out["cauchy_tail"]) < 1e-12

    def test_fast_linear_path_converges(self):
        # A rapidly escaping well interacts only briefly, so the pulled-back
        # states become Cauchy.
        grid = Grid(1, 128, 40.0)
        pot = make_potential("gaussian_well", 1.0, 1.0, grid)
        z0 = gaussian_packet(grid, 1.0)
        path = make_piecewise_linear(1, [[12.0]], steps_per_piece=128)
        traj = evolve(z0, pot, path, 1.0, 1 / 128, 1.0)
        out = wave_operator_estimate(traj, tol=0.05)
        d = out["cauchy_tail"]
        assert out["tail_sum"] < 0.25 * np.sum(d)

    def test_shifted_potential_translates_well(self, setup1d):
        grid, pot, _ = setup1d
        # V(x - a) moves the well to +a, i.e. rolls samples forward.
        v = shifted_potential(pot, np.array([grid.spacing * 3]))
        np.testing.assert_allclose(v, np.roll(pot.v, 3), atol=1e-10)

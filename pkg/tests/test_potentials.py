"""Potential construction, norms and ground-state eigensolver tests."""

import math

import numpy as np
import pytest

from randschro.grid import Grid, lorentz_norm
from randschro.potentials import (
    NoBoundStateError,
    PotentialConfigError,
    ground_state,
    hamiltonian_dense,
    make_potential,
    potential_norms,
    save_potential_csv,
)


@pytest.fixture
def grid1d():
    return Grid(1, 256, 40.0)


class TestMakePotential:
    def test_gaussian_well_shape(self, grid1d):
        pot = make_potential("gaussian_well", 2.0, 1.5, grid1d)
        x = grid1d.x_axis
        np.testing.assert_allclose(pot.v, -2.0 * np.exp(-x ** 2 / 1.5 ** 2),
                                   atol=1e-12)

    def test_compact_bump_support(self, grid1d):
        pot = make_potential("compact_bump", 1.0, 2.0, grid1d)
        x = grid1d.x_axis
        assert np.all(pot.v[np.abs(x) >= 2.0] == 0.0)
        assert pot.v.min() == pytest.approx(-1.0, rel=1e-10)

    def test_zero_potential(self, grid1d):
        pot = make_potential("zero", 0.0, 1.0, grid1d)
        assert np.all(pot.v == 0.0)

    def test_factorization_v1_v2(self, grid1d):
        pot = make_potential("gaussian_well", 2.0, 1.0, grid1d)
        np.testing.assert_allclose(pot.v1 * pot.v2, pot.v, atol=1e-12)
        np.testing.assert_allclose(pot.v1, np.sqrt(np.abs(pot.v)), atol=1e-12)

    def test_unknown_kind_rejected(self, grid1d):
        with pytest.raises(PotentialConfigError):
            make_potential("cubic_well", 1.0, 1.0, grid1d)

    def test_width_exceeding_box_rejected(self, grid1d):
        with pytest.raises(PotentialConfigError):
            make_potential("gaussian_well", 1.0, 8.0, grid1d)


class TestNorms:
    def test_linf_is_depth(self, grid1d):
        pot = make_potential("gaussian_well", 3.0, 1.0, grid1d)
        assert potential_norms(pot)["linf"] == pytest.approx(3.0, rel=1e-12)

    def test_l32_1_scales_linearly_in_depth(self, grid1d):
        n1 = potential_norms(make_potential("gaussian_well", 1.0, 1.0, grid1d))
        n2 = potential_norms(make_potential("gaussian_well", 2.0, 1.0, grid1d))
        assert n2["l32_1"] == pytest.approx(2.0 * n1["l32_1"], rel=1e-12)

    def test_l32_norms_match_direct_lorentz(self, grid1d):
        pot = make_potential("gaussian_well", 2.0, 1.5, grid1d)
        norms = potential_norms(pot)
        assert norms["l32_1"] == pytest.approx(
            lorentz_norm(pot.as_field(), 1.5, 1.0), rel=1e-12)
        assert norms["l32_inf"] == pytest.approx(
            lorentz_norm(pot.as_field(), 1.5, math.inf), rel=1e-12)


class TestGroundState:
    def test_sech_squared_well_eigenvalue(self):
        # -2 sech^2(x) has exact ground energy -1 with state sech(x).
        grid = Grid(1, 512, 40.0)
        x = grid.x_axis
        from randschro.potentials import Potential
        pot = Potential(grid, -2.0 / np.cosh(x) ** 2, "imported", 2.0, 1.0,
                        np.zeros(1))
        phi, energy = ground_state(pot, tol=1e-12)
        assert energy == pytest.approx(-1.0, abs=1e-4)
        expect = 1.0 / np.cosh(x)
        expect /= np.linalg.norm(expect) * math.sqrt(grid.spacing)
        overlap = abs(np.vdot(expect, phi.values)) * grid.spacing
        assert overlap == pytest.approx(1.0, abs=1e-6)

    def test_matches_dense_eigensolve(self):
        grid = Grid(1, 256, 40.0)
        pot = make_potential("gaussian_well", 3.0, 1.2, grid)
        phi, energy = ground_state(pot, tol=1e-12)
        h = hamiltonian_dense(pot)
        eigs = np.linalg.eigvalsh(h)
        assert energy == pytest.approx(eigs[0], abs=2e-4)

    def test_state_is_normalized_and_positive(self):
        grid = Grid(1, 256, 40.0)
        pot = make_potential("gaussian_well", 3.0, 1.2, grid)
        phi, _ = ground_state(pot)
        assert phi.norm_l2() == pytest.approx(1.0, abs=1e-10)
        assert np.min(phi.values.real) > -1e-6

    def test_zero_potential_has_no_bound_state(self):
        grid = Grid(1, 64, 20.0)
        pot = make_potential("zero", 0.0, 1.0, grid)
        with pytest.raises(NoBoundStateError):
            ground_state(pot, max_iter=2000)


class TestCsv:
    def test_save_potential(self, grid1d, tmp_path):
        pot = make_potential("gaussian_well", 1.0, 1.0, grid1d)
        fname = tmp_path / "pot.csv"
        save_potential_csv(pot, fname)
        body = fname.read_text().strip().splitlines()
        assert len(body) == grid1d.n + 1

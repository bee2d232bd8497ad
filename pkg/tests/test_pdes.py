import numpy as np
import pytest

from fkpde.grid import BoundaryKind, Field, make_grid
from fkpde.pdes import (AllenCahn, ConvectionDiffusion, NavierStokesVorticity,
                        PdeSpec, allencahn_case, convdiff_case, drift,
                        forcing_value, forcing_values, navierstokes_case,
                        pde_from_header, stationary_forcing,
                        velocity_from_vorticity, vorticity_from_velocity)


@pytest.fixture
def grid2():
    return make_grid(2, 64)


def shear_mode(grid):
    pts = grid.points().reshape(*grid.resolution, 2)
    return Field(grid, np.sin(2 * np.pi * pts[..., 0])), pts


class TestDrift:
    def test_convdiff_constant(self):
        pde, _ = convdiff_case("E1")
        u = Field(pde.grid, np.random.default_rng(0).standard_normal(64))
        d = drift(pde, u)
        assert np.all(d.values == 0.1)

    def test_allencahn_zero(self):
        pde, _ = allencahn_case("E1")
        u = Field(pde.grid, np.ones(65))
        assert np.all(drift(pde, u).values == 0.0)

    def test_ns_minus_velocity(self, grid2):
        pde = navierstokes_case("E1")
        w, pts = shear_mode(grid2)
        d = drift(pde, w)
        expect_2 = np.cos(2 * np.pi * pts[..., 0]) / (2 * np.pi)
        assert np.max(np.abs(d.values[0])) < 1e-10
        assert np.max(np.abs(d.values[1] - expect_2)) < 1e-10


class TestVelocityFromVorticity:
    def test_shear_mode_closed_form(self, grid2):
        w, pts = shear_mode(grid2)
        vel = velocity_from_vorticity(w)
        expect = -np.cos(2 * np.pi * pts[..., 0]) / (2 * np.pi)
        assert np.max(np.abs(vel.values[0])) < 1e-10
        assert np.max(np.abs(vel.values[1] - expect)) < 1e-10

    @staticmethod
    def _nyquist_free_noise(grid, seed):
        # random field on the derivative-representable subspace (the unpaired
        # Nyquist row has no real spectral derivative and is excluded)
        rng = np.random.default_rng(seed)
        P = grid.resolution[0]
        c = np.fft.fft2(rng.standard_normal(grid.resolution))
        c[P // 2, :] = 0.0
        c[:, P // 2] = 0.0
        return Field(grid, np.fft.ifft2(c).real)

    def test_divergence_free(self, grid2):
        w = self._nyquist_free_noise(grid2, 5)
        vel = velocity_from_vorticity(w)
        k = np.fft.fftfreq(64, d=1.0 / 64)
        div_hat = (2j * np.pi * k[:, None] * np.fft.fft2(vel.values[0])
                   + 2j * np.pi * k[None, :] * np.fft.fft2(vel.values[1]))
        assert np.max(np.abs(np.fft.ifft2(div_hat).real)) < 1e-10

    def test_curl_roundtrip(self, grid2):
        w = self._nyquist_free_noise(grid2, 6)
        back = vorticity_from_velocity(velocity_from_vorticity(w))
        target = w.values - w.values.mean()
        assert np.linalg.norm(back.values - target) / np.linalg.norm(target) < 1e-10

    def test_uniform_shift_leaves_velocity_unchanged(self, grid2):
        w, _ = shear_mode(grid2)
        v1 = velocity_from_vorticity(w)
        v2 = velocity_from_vorticity(Field(grid2, w.values + 3.7))
        assert np.allclose(v1.values, v2.values, atol=1e-12)


class TestForcing:
    def test_li_at_origin(self):
        pde = navierstokes_case("E1")
        assert forcing_value(pde, [0.0, 0.0], 0.0) == pytest.approx(0.1)

    def test_kolmogorov_quarter_period(self):
        pde = navierstokes_case("E3")
        assert forcing_value(pde, [1.0 / 16, 0.3], 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_reaction_fixed_point(self):
        pde, _ = allencahn_case("E1")
        x = pde.grid.points()
        vals = forcing_values(pde, x, 0.0, np.ones(65))
        assert np.all(vals == 0.0)

    def test_reaction_requires_state(self):
        pde, _ = allencahn_case("E1")
        with pytest.raises(ValueError):
            forcing_values(pde, pde.grid.points(), 0.0)

    @pytest.mark.parametrize("name", ["li", "kolmogorov"])
    def test_zero_spatial_mean(self, name, grid2):
        vals = stationary_forcing(name, grid2.points())
        assert abs(np.mean(vals)) < 1e-12


class TestPdeSpec:
    def test_rejects_bad_parameters(self):
        g = make_grid(1, 64)
        with pytest.raises(ValueError):
            PdeSpec(ConvectionDiffusion(beta=0.1, kappa=-0.01), g, 2.0)
        with pytest.raises(ValueError):
            PdeSpec(NavierStokesVorticity(nu=1e-4, forcing="li"), g, 10.0)  # needs 2D
        gb = make_grid(1, 65, 1.0, BoundaryKind.DIRICHLET_ZERO)
        with pytest.raises(ValueError):
            PdeSpec(AllenCahn(boundary=BoundaryKind.NEUMANN_ZERO), gb, 1.0)

    def test_header_roundtrip(self):
        for pde in (convdiff_case("E2")[0], allencahn_case("E3")[0], navierstokes_case("E4")):
            back = pde_from_header(pde.header(), pde.grid)
            assert back == pde

"""Grid, field, and spectral transform contracts."""

import numpy as np
import pytest

from flowelm import (
    Field,
    SpectralField,
    dealias,
    make_grid,
    to_physical,
    to_spectral,
    wavenumbers,
)


class TestMakeGrid:
    def test_table_setup_1d(self):
        grid = make_grid(200.0, 512, dims=1)
        assert grid.dx == 200.0 / 512 == 0.390625

    def test_small_grid(self):
        assert make_grid(1.0, 8, dims=1).dx == 0.125

    def test_table_setup_2d(self):
        grid = make_grid(60 * np.pi, 256, dims=2)
        assert grid.dx == pytest.approx(60 * np.pi / 256, rel=0, abs=0)
        assert grid.shape == (256, 256)

    def test_dx_times_m_is_length(self):
        grid = make_grid(7.3, 48, dims=1)
        assert grid.dx * grid.m == pytest.approx(grid.L, rel=1e-15)

    @pytest.mark.parametrize("L,m", [(1.0, 7), (1.0, 6), (1.0, 9), (0.0, 8), (-2.0, 16)])
    def test_rejects_bad_arguments(self, L, m):
        with pytest.raises(ValueError):
            make_grid(L, m)

    def test_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            make_grid(1.0, 8, dims=3)


class TestField:
    def test_shape_must_match(self):
        grid = make_grid(1.0, 8, dims=2)
        with pytest.raises(ValueError):
            Field(grid, np.zeros(8))

    def test_rejects_non_finite(self):
        grid = make_grid(1.0, 8)
        values = np.zeros(8)
        values[3] = np.nan
        with pytest.raises(ValueError):
            Field(grid, values)

    def test_values_read_only(self):
        field = Field(make_grid(1.0, 8), np.arange(8.0))
        with pytest.raises(ValueError):
            field.values[0] = 1.0


class TestWavenumbers:
    def test_dft_frequency_order(self):
        # integer frequencies 0..m/2-1, -m/2..-1 scaled by 2*pi/L
        k = wavenumbers(make_grid(2 * np.pi, 8))
        assert np.allclose(k, [0, 1, 2, 3, -4, -3, -2, -1], atol=1e-15)

    def test_scaling_with_length(self):
        k = wavenumbers(make_grid(1.0, 8))
        assert np.allclose(k, 2 * np.pi * np.array([0, 1, 2, 3, -4, -3, -2, -1]))

    def test_first_mode_table_grid(self):
        k = wavenumbers(make_grid(200.0, 512))
        assert k[1] == pytest.approx(2 * np.pi / 200.0, rel=1e-15)

    def test_odd_symmetry_except_nyquist(self):
        grid = make_grid(3.7, 16)
        k = wavenumbers(grid)
        for j in range(1, grid.m // 2):
            assert k[j] == -k[grid.m - j]

    def test_2d_returns_identical_axes(self):
        kx, ky = wavenumbers(make_grid(5.0, 8, dims=2))
        assert np.array_equal(kx, ky)


class TestTransforms:
    def test_constant_field_mean_convention(self):
        grid = make_grid(3.0, 8)
        spec = to_spectral(Field(grid, np.full(8, 1.0)))
        assert spec.coeffs[0] == pytest.approx(1.0, abs=1e-15)
        assert np.abs(spec.coeffs[1:]).max() < 1e-15

    def test_single_cosine_two_modes(self):
        grid = make_grid(4.0, 8)
        x = grid.axis_coordinates()
        spec = to_spectral(Field(grid, np.cos(2 * np.pi * x / grid.L)))
        coeffs = spec.coeffs
        assert coeffs[1].real == pytest.approx(0.5, abs=1e-14)
        assert coeffs[-1].real == pytest.approx(0.5, abs=1e-14)
        mask = np.ones(8, dtype=bool)
        mask[[1, 7]] = False
        assert np.abs(coeffs[mask]).max() < 1e-14

    @pytest.mark.parametrize("dims", [1, 2])
    def test_round_trip(self, dims):
        grid = make_grid(2.3, 16, dims=dims)
        rng = np.random.default_rng(0)
        field = Field(grid, rng.normal(size=grid.shape))
        back = to_physical(to_spectral(field))
        assert np.abs(back.values - field.values).max() < 1e-12

    @pytest.mark.parametrize("dims", [1, 2])
    def test_conjugate_symmetry(self, dims):
        grid = make_grid(1.0, 12, dims=dims)
        rng = np.random.default_rng(1)
        coeffs = to_spectral(Field(grid, rng.normal(size=grid.shape))).coeffs
        flipped = coeffs[tuple(
            np.roll(np.arange(grid.m)[::-1], 1) for _ in range(dims)
        )] if dims == 1 else coeffs[np.ix_(
            np.roll(np.arange(grid.m)[::-1], 1), np.roll(np.arange(grid.m)[::-1], 1)
        )]
        assert np.abs(coeffs - np.conj(flipped)).max() < 1e-12

    @pytest.mark.parametrize("dims", [1, 2])
    def test_parseval(self, dims):
        grid = make_grid(2.0, 16, dims=dims)
        rng = np.random.default_rng(2)
        field = Field(grid, rng.normal(size=grid.shape))
        physical = (field.values**2).sum() / grid.n_nodes
        spectral = (np.abs(to_spectral(field).coeffs) ** 2).sum()
        assert physical == pytest.approx(spectral, rel=1e-10)

    def test_spectral_shape_must_match(self):
        with pytest.raises(ValueError):
            SpectralField(make_grid(1.0, 8, dims=2), np.zeros(8, dtype=complex))


class TestDealias:
    def test_two_thirds_rule_m8(self):
        # m=8: keep |f| in {0,1,2}, zero |f| in {3,4}
        grid = make_grid(1.0, 8)
        coeffs = np.ones(8, dtype=complex)
        kept = dealias(SpectralField(grid, coeffs)).coeffs
        assert np.array_equal(kept != 0, np.array(
            [True, True, True, False, False, False, True, True]))

    def test_constant_unchanged(self):
        grid = make_grid(1.0, 8)
        field = Field(grid, np.full(8, 2.5))
        out = to_physical(dealias(to_spectral(field)))
        assert np.abs(out.values - 2.5).max() < 1e-14

    def test_mode_three_removed_entirely(self):
        grid = make_grid(1.0, 8)
        x = grid.axis_coordinates()
        field = Field(grid, np.cos(2 * np.pi * 3 * x / grid.L))
        out = to_physical(dealias(to_spectral(field)))
        assert np.abs(out.values).max() < 1e-13

    @pytest.mark.parametrize("dims", [1, 2])
    def test_mean_preserved(self, dims):
        grid = make_grid(1.0, 16, dims=dims)
        rng = np.random.default_rng(3)
        field = Field(grid, rng.normal(size=grid.shape))
        out = to_physical(dealias(to_spectral(field)))
        assert out.values.mean() == pytest.approx(field.values.mean(), abs=1e-14)

    def test_2d_masks_each_axis(self):
        grid = make_grid(1.0, 8, dims=2)
        coeffs = np.ones((8, 8), dtype=complex)
        kept = dealias(SpectralField(grid, coeffs)).coeffs
        keep_1d = np.array([True, True, True, False, False, False, True, True])
        assert np.array_equal(kept != 0, keep_1d[:, None] & keep_1d[None, :])

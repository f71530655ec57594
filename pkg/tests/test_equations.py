"""Equation right-hand sides, the exponential integrator, and simulation."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from flowelm import (
    ChForm,
    DivergenceError,
    Equation,
    EquationKind,
    Etdrk4,
    Field,
    SpectralField,
    attractor_init,
    cahn_hilliard,
    dealias,
    etdrk4_step,
    ks1d,
    ks1d_forced,
    ks2d,
    laplacian,
    linear_symbol,
    make_grid,
    nonlinear_term,
    simulate,
    to_physical,
    to_spectral,
)


class TestEquation:
    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            Equation(EquationKind.CH2D)  # gamma missing
        with pytest.raises(ValueError):
            Equation(EquationKind.CH2D, gamma=-1.0)
        with pytest.raises(ValueError):
            Equation(EquationKind.KS1D_INHOM, mu=0.05)  # lam missing
        with pytest.raises(ValueError):
            Equation(EquationKind.KS1D_INHOM, mu=0.05, lam=0.0)

    def test_dims(self):
        assert ks1d().dims == 1
        assert ks1d_forced(0.05, 50.0).dims == 1
        assert ks2d().dims == 2
        assert cahn_hilliard(0.5).dims == 2

    def test_zero_mean_default(self):
        assert ks2d().needs_zero_mean
        assert not ks1d().needs_zero_mean
        assert not cahn_hilliard(0.5).needs_zero_mean


class TestLinearSymbol:
    def test_ks_zero_at_unit_wavenumber(self):
        # |k|^2 - |k|^4 vanishes at |k| = 1; grid L=2*pi makes k integers
        grid = make_grid(2 * np.pi, 8)
        symbol = linear_symbol(ks1d(), grid)
        assert symbol[1] == pytest.approx(0.0, abs=1e-14)
        assert symbol[0] == 0.0

    def test_ks_generic_values(self):
        grid = make_grid(2 * np.pi, 8)
        symbol = linear_symbol(ks1d(), grid)
        assert symbol[2] == pytest.approx(4 - 16, rel=1e-14)

    def test_cahn_hilliard_zero_crossing(self):
        # gamma=0.5: |k|^2 - 0.5|k|^4 = 0 at |k|^2 = 2, e.g. mode (1,1)
        grid = make_grid(2 * np.pi, 8, dims=2)
        symbol = linear_symbol(cahn_hilliard(0.5), grid)
        assert symbol[1, 1] == pytest.approx(0.0, abs=1e-13)

    def test_forms_share_linear_part(self):
        grid = make_grid(3.0, 16, dims=2)
        a = linear_symbol(cahn_hilliard(0.5, ChForm.STANDARD), grid)
        b = linear_symbol(cahn_hilliard(0.5, ChForm.LITERAL), grid)
        assert np.array_equal(a, b)

    def test_dims_mismatch(self):
        with pytest.raises(ValueError):
            linear_symbol(ks2d(), make_grid(1.0, 8, dims=1))


class TestNonlinearTerm:
    def test_ks1d_constant_is_zero(self):
        grid = make_grid(5.0, 16)
        out = nonlinear_term(ks1d(), Field(grid, np.full(16, 3.0)))
        assert np.abs(out.values).max() < 1e-12

    def test_ks2d_zero_is_zero(self):
        grid = make_grid(5.0, 16, dims=2)
        out = nonlinear_term(ks2d(), Field(grid, np.zeros(grid.shape)))
        assert np.abs(out.values).max() == 0.0

    def test_forcing_sampled_at_nodes(self):
        # Table setup: mu=0.05, lambda=50 on L=200; at v=0 only the forcing remains
        grid = make_grid(200.0, 512)
        out = nonlinear_term(ks1d_forced(0.05, 50.0), Field(grid, np.zeros(512)))
        x = grid.axis_coordinates()
        assert np.abs(out.values - 0.05 * np.cos(2 * np.pi * x / 50.0)).max() < 1e-12

    def test_ks1d_matches_conservative_form_oracle(self):
        # -1/2 d/dx of the dealiased square, assembled from public transforms
        grid = make_grid(7.0, 32)
        rng = np.random.default_rng(0)
        v = Field(grid, rng.normal(size=32))
        squared = dealias(to_spectral(Field(grid, v.values**2)))
        k = 2 * np.pi * np.fft.fftfreq(32, d=grid.dx)
        k[16] = 0.0
        oracle = to_physical(SpectralField(grid, -0.5j * k * squared.coeffs))
        out = nonlinear_term(ks1d(), v)
        assert np.abs(out.values - oracle.values).max() < 1e-12

    def test_ch_standard_is_laplacian_of_dealiased_cube(self):
        grid = make_grid(11.0, 16, dims=2)
        rng = np.random.default_rng(1)
        v = Field(grid, rng.normal(size=grid.shape))
        cubed = to_physical(dealias(to_spectral(Field(grid, v.values**3))))
        oracle = laplacian(cubed)
        out = nonlinear_term(cahn_hilliard(0.7), v)
        assert np.abs(out.values - oracle.values).max() < 1e-11

    def test_ch_literal_uses_biharmonic(self):
        from flowelm import biharmonic

        grid = make_grid(11.0, 16, dims=2)
        rng = np.random.default_rng(2)
        v = Field(grid, rng.normal(size=grid.shape))
        cubed = to_physical(dealias(to_spectral(Field(grid, v.values**3))))
        oracle = biharmonic(cubed)
        out = nonlinear_term(cahn_hilliard(0.7, ChForm.LITERAL), v)
        assert np.abs(out.values - oracle.values).max() < 1e-9


class TestEtdrk4:
    def test_pure_linear_is_exact_exponential(self):
        symbol = np.array([-3.0, -1.0, 0.0, 0.5])
        dt = 0.3
        stepper = Etdrk4(symbol, lambda c: np.zeros_like(c), dt)
        c0 = np.array([1.0 + 0.5j, 2.0, -1.0j, 0.25])
        out = stepper.step(c0)
        assert np.abs(out - c0 * np.exp(dt * symbol)).max() < 1e-10

    def test_zero_state_is_fixed_point(self):
        grid = make_grid(22.0, 32)
        zero = to_spectral(Field(grid, np.zeros(32)))
        out = etdrk4_step(zero, 0.05, ks1d())
        assert np.abs(out.coeffs).max() < 1e-15

    def test_fourth_order_on_embedded_scalar_ode(self):
        # dy/dt = c*y + y^2 as a one-mode problem vs a tight reference
        c, y0, horizon = -1.0, 0.4, 1.0
        ref = solve_ivp(lambda t, y: c * y + y * y, (0, horizon), [y0],
                        rtol=1e-13, atol=1e-14).y[0, -1]
        errors = []
        for n in (8, 16, 32, 64, 128):
            stepper = Etdrk4(np.array([c]), lambda y: y * y, horizon / n)
            y = np.array([complex(y0)])
            for _ in range(n):
                y = stepper.step(y)
            errors.append(abs(y[0].real - ref))
        rates = np.log2(np.array(errors[:-1]) / errors[1:])
        assert rates.min() >= 3.7

    def test_rejects_non_positive_dt(self):
        with pytest.raises(ValueError):
            Etdrk4(np.zeros(4), lambda c: c, 0.0)

    def test_single_spectral_step_matches_simulate(self):
        grid = make_grid(20.0, 64)
        rng = np.random.default_rng(3)
        v0 = Field(grid, rng.normal(size=64))
        stepped = to_physical(etdrk4_step(to_spectral(v0), 0.05, ks1d()))
        traj = simulate(ks1d(), v0, 0.05, 1)
        assert np.abs(stepped.values - traj.states[-1].values).max() < 1e-12


class TestSimulate:
    def test_zero_steps_keeps_initial_state(self):
        grid = make_grid(10.0, 16)
        v0 = Field(grid, np.sin(grid.axis_coordinates()))
        traj = simulate(ks1d(), v0, 0.05, 0)
        assert len(traj) == 1
        assert np.array_equal(traj.states[0].values, v0.values)

    def test_snapshot_schedule(self):
        grid = make_grid(10.0, 16)
        v0 = Field(grid, 0.1 * np.sin(grid.axis_coordinates()))
        traj = simulate(ks1d(), v0, 0.05, 10, snapshot_every=5)
        assert len(traj) == 3
        assert traj.dt_snapshot == pytest.approx(0.25)

    def test_snapshot_every_must_divide(self):
        grid = make_grid(10.0, 16)
        v0 = Field(grid, np.zeros(16))
        with pytest.raises(ValueError):
            simulate(ks1d(), v0, 0.05, 10, snapshot_every=3)

    def test_ks1d_mean_conserved_at_table_scale(self):
        grid = make_grid(200.0, 512)
        v0 = attractor_init(ks1d(), grid, seed=0, burn_in_steps=500, dt=0.05)
        traj = simulate(ks1d(), v0, 0.05, 1000, snapshot_every=100)
        means = [s.mean() for s in traj.states]
        assert max(abs(m - means[0]) for m in means) < 1e-8

    def test_ch2d_mean_conserved(self):
        grid = make_grid(30.0, 64, dims=2)
        rng = np.random.default_rng(4)
        v0 = Field(grid, rng.uniform(-1, 1, grid.shape))
        traj = simulate(cahn_hilliard(0.5), v0, 0.05, 200, snapshot_every=20)
        means = [s.mean() for s in traj.states]
        assert max(abs(m - means[0]) for m in means) < 1e-8

    def test_ks2d_wrap_pins_snapshot_means(self):
        grid = make_grid(10 * np.pi, 32, dims=2)
        rng = np.random.default_rng(5)
        v0 = Field(grid, 0.3 + 0.1 * rng.normal(size=grid.shape))
        traj = simulate(ks2d(), v0, 0.05, 20, zero_mean_wrap=True)
        for state in traj.states:
            assert state.mean() == pytest.approx(v0.mean(), abs=1e-10)

    def test_ks2d_mean_non_increasing_without_wrap(self):
        grid = make_grid(10 * np.pi, 32, dims=2)
        rng = np.random.default_rng(6)
        v0 = Field(grid, 0.5 * rng.normal(size=grid.shape))
        traj = simulate(ks2d(), v0, 0.05, 20)
        means = [s.mean() for s in traj.states]
        assert all(b <= a + 1e-12 for a, b in zip(means, means[1:]))

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_reports_step_index(self):
        # the literal cubic placement is unstable around v = 1
        eq = cahn_hilliard(0.5, form=ChForm.LITERAL)
        grid = make_grid(10.0, 16, dims=2)
        rng = np.random.default_rng(7)
        v0 = Field(grid, 0.9 + 0.1 * rng.uniform(-1, 1, grid.shape))
        with pytest.raises(DivergenceError) as info:
            simulate(eq, v0, 0.05, 200)
        assert info.value.step is not None and info.value.step >= 1


class TestAttractorInit:
    def test_zero_burn_in_is_uniform_draw(self):
        grid = make_grid(100.0, 64, dims=2)
        v0 = attractor_init(cahn_hilliard(0.5), grid, seed=3, burn_in_steps=0, dt=0.05)
        assert v0.values.min() >= -1.0 and v0.values.max() <= 1.0
        assert v0.values.std() > 0.4  # uniform on [-1, 1] has std ~0.577

    def test_seed_determinism(self):
        grid = make_grid(50.0, 64)
        a = attractor_init(ks1d(), grid, seed=11, burn_in_steps=50, dt=0.05)
        b = attractor_init(ks1d(), grid, seed=11, burn_in_steps=50, dt=0.05)
        assert np.array_equal(a.values, b.values)

    def test_ks1d_lands_in_typical_amplitude_range(self):
        grid = make_grid(100.0, 256)
        v0 = attractor_init(ks1d(), grid, seed=1, burn_in_steps=4000, dt=0.05)
        amplitude = np.abs(v0.values).max()
        assert 1.0 < amplitude < 4.5

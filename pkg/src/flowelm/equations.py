"""Spectral right-hand sides of four stiff periodic PDEs and their integrator.

All four equations share the semilinear structure dv/dt = linear + nonlinear
with a diagonal linear part in Fourier space.  Time stepping uses the
fourth-order exponential integrator ETDRK4 with the contour-averaged
phi-coefficients of Kassam & Trefethen (SIAM J. Sci. Comput. 26, 2005),
which avoids cancellation where the linear symbol is near zero.

Nonlinear products are formed in physical space and dealiased (2/3 rule)
before any derivative multiplier is applied; first-derivative multipliers
zero the Nyquist mode.  Because states are real, the integrator works on
the half spectrum internally; the full-complex layout of SpectralField
is converted only at module boundaries.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import fft as _fft

from .fields import (
    Field,
    Grid,
    SpectralField,
    _dealias_mask,
    _integer_freqs,
    to_physical,
    to_spectral,
    wavenumbers,
)


class EquationKind(enum.Enum):
    KS1D_HOM = "ks1d_hom"
    KS1D_INHOM = "ks1d_inhom"
    KS2D = "ks2d"
    CH2D = "ch2d"


class ChForm(enum.Enum):
    """Placement of the cubic term in the phase-separation equation.

    STANDARD applies the Laplacian to v^3 (the classical, linearly stable
    form); LITERAL applies the biharmonic operator instead and is retained
    for fidelity experiments only -- it is unstable around v = +/-1.
    """

    STANDARD = "standard"
    LITERAL = "literal"


class DivergenceError(RuntimeError):
    """Raised when time stepping produces a non-finite state."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class Equation:
    kind: EquationKind
    gamma: float | None = None
    mu: float | None = None
    lam: float | None = None
    ch_form: ChForm = ChForm.STANDARD

    def __post_init__(self) -> None:
        if self.kind is EquationKind.CH2D:
            if self.gamma is None or self.gamma <= 0:
                raise ValueError("CH2D requires gamma > 0")
        elif self.kind is EquationKind.KS1D_INHOM:
            if self.mu is None:
                raise ValueError("inhomogeneous KS requires mu")
            if self.lam is None or self.lam <= 0:
                raise ValueError("inhomogeneous KS requires lam > 0")

    @property
    def dims(self) -> int:
        return 2 if self.kind in (EquationKind.KS2D, EquationKind.CH2D) else 1

    @property
    def needs_zero_mean(self) -> bool:
        """True for the 2D KS equation, whose mean drifts without projection."""
        return self.kind is EquationKind.KS2D


def ks1d() -> Equation:
    return Equation(EquationKind.KS1D_HOM)


def ks1d_forced(mu: float, lam: float) -> Equation:
    return Equation(EquationKind.KS1D_INHOM, mu=float(mu), lam=float(lam))


def ks2d() -> Equation:
    return Equation(EquationKind.KS2D)


def cahn_hilliard(gamma: float, form: ChForm = ChForm.STANDARD) -> Equation:
    return Equation(EquationKind.CH2D, gamma=float(gamma), ch_form=form)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States recorded at times 0, dt_snapshot, 2*dt_snapshot, ..."""

    grid: Grid
    dt_snapshot: float
    states: tuple[Field, ...]

    def __post_init__(self) -> None:
        if not self.states:
            raise ValueError("trajectory must contain at least one state")
        if any(s.grid != self.grid for s in self.states):
            raise ValueError("all trajectory states must share one grid")
        object.__setattr__(self, "states", tuple(self.states))

    def __len__(self) -> int:
        return len(self.states)

    def stack(self) -> np.ndarray:
        """(n_snapshots, m) or (n_snapshots, m, m) array of values."""
        return np.stack([s.values for s in self.states])

    def times(self) -> np.ndarray:
        return np.arange(len(self.states)) * self.dt_snapshot


# -- full-spectrum operators (public contracts) ------------------------------


@lru_cache(maxsize=None)
def _k_squared(grid: Grid) -> np.ndarray:
    if grid.dims == 1:
        k = wavenumbers(grid)
        k2 = k * k
    else:
        kx, ky = wavenumbers(grid)
        k2 = kx[:, None] ** 2 + ky[None, :] ** 2
    k2.flags.writeable = False
    return k2


def linear_symbol(eq: Equation, grid: Grid) -> np.ndarray:
    """Diagonal Fourier multiplier of the linear part, per mode.

    KS variants: |k|^2 - |k|^4.  Cahn-Hilliard: |k|^2 - gamma*|k|^4
    (the two cubic placements share the same linear part).
    """
    if eq.dims != grid.dims:
        raise ValueError(f"equation dims {eq.dims} != grid dims {grid.dims}")
    k2 = _k_squared(grid)
    if eq.kind is EquationKind.CH2D:
        return k2 - eq.gamma * k2**2
    return k2 - k2**2


def laplacian(f: Field) -> Field:
    spec = to_spectral(f)
    return to_physical(SpectralField(f.grid, -_k_squared(f.grid) * spec.coeffs))


def biharmonic(f: Field) -> Field:
    spec = to_spectral(f)
    return to_physical(SpectralField(f.grid, _k_squared(f.grid) ** 2 * spec.coeffs))


def gradient_squared(f: Field) -> Field:
    """|grad f|^2 with spectral first derivatives (Nyquist zeroed)."""
    grid = f.grid
    cr = _rfftn(f.values, grid)
    out = np.zeros(grid.shape)
    for axis in range(grid.dims):
        g = _irfftn(1j * _half_k_derivative(grid, axis) * cr, grid)
        out += g * g
    return Field(grid, out)


# -- half-spectrum machinery (integrator internals) --------------------------


def _rfftn(values: np.ndarray, grid: Grid) -> np.ndarray:
    return _fft.rfftn(values, norm="forward")


def _irfftn(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    return _fft.irfftn(coeffs, s=grid.shape, norm="forward")


@lru_cache(maxsize=None)
def _half_k_squared(grid: Grid) -> np.ndarray:
    k2 = _k_squared(grid)
    half = np.array(k2[..., : grid.m // 2 + 1])
    half.flags.writeable = False
    return half


@lru_cache(maxsize=None)
def _half_k_derivative(grid: Grid, axis: int) -> np.ndarray:
    """First-derivative wavenumbers, Nyquist zeroed, half-spectrum layout."""
    k = np.array(wavenumbers(grid) if grid.dims == 1 else wavenumbers(grid)[axis])
    k[grid.m // 2] = 0.0
    if grid.dims == 1:
        k = k[: grid.m // 2 + 1]
    elif axis == 0:
        k = k[:, None]
    else:
        k = k[: grid.m // 2 + 1][None, :]  # rfft axis holds 0..m/2, Nyquist zeroed
    k.flags.writeable = False
    return k


@lru_cache(maxsize=None)
def _half_dealias_mask(grid: Grid) -> np.ndarray:
    mask = np.array(_dealias_mask(grid.m, grid.dims)[..., : grid.m // 2 + 1])
    mask.flags.writeable = False
    return mask


def _half_linear_symbol(eq: Equation, grid: Grid) -> np.ndarray:
    return np.array(linear_symbol(eq, grid)[..., : grid.m // 2 + 1])


@lru_cache(maxsize=None)
def _half_forcing(eq: Equation, grid: Grid) -> np.ndarray:
    x = grid.axis_coordinates()
    spec = _fft.rfft(eq.mu * np.cos(2.0 * np.pi * x / eq.lam), norm="forward")
    spec.flags.writeable = False
    return spec


@lru_cache(maxsize=None)
def _half_nonlinear_multiplier(eq: Equation, grid: Grid) -> np.ndarray:
    """Dealiasing mask folded with the outer derivative operator."""
    mask = _half_dealias_mask(grid)
    if eq.kind in (EquationKind.KS1D_HOM, EquationKind.KS1D_INHOM):
        mult = -0.5j * _half_k_derivative(grid, 0) * mask
    elif eq.kind is EquationKind.KS2D:
        mult = -0.5 * mask.astype(float)
    elif eq.ch_form is ChForm.STANDARD:
        mult = -_half_k_squared(grid) * mask
    else:
        mult = _half_k_squared(grid) ** 2 * mask
    mult.flags.writeable = False
    return mult


def _half_nonlinear(eq: Equation, grid: Grid, cr: np.ndarray) -> np.ndarray:
    """Half-spectrum coefficients of the nonlinear term at state cr."""
    mult = _half_nonlinear_multiplier(eq, grid)
    if eq.kind in (EquationKind.KS1D_HOM, EquationKind.KS1D_INHOM):
        v = _irfftn(cr, grid)
        out = mult * _rfftn(v * v, grid)
        if eq.kind is EquationKind.KS1D_INHOM:
            out = out + _half_forcing(eq, grid)
        return out
    if eq.kind is EquationKind.KS2D:
        gx = _irfftn(1j * _half_k_derivative(grid, 0) * cr, grid)
        gy = _irfftn(1j * _half_k_derivative(grid, 1) * cr, grid)
        return mult * _rfftn(gx * gx + gy * gy, grid)
    v = _irfftn(cr, grid)
    return mult * _rfftn(v * v * v, grid)


def _to_half(s: SpectralField) -> np.ndarray:
    # enforce the conjugate-symmetric part, as the inverse transform would
    return _rfftn(_fft.ifftn(s.coeffs, norm="forward").real, s.grid)


def _to_full(cr: np.ndarray, grid: Grid) -> SpectralField:
    return SpectralField(grid, _fft.fftn(_irfftn(cr, grid), norm="forward"))


def nonlinear_term(eq: Equation, v: Field) -> Field:
    """Nonlinear part of dv/dt in physical space, dealiased."""
    if eq.dims != v.grid.dims:
        raise ValueError(f"equation dims {eq.dims} != grid dims {v.grid.dims}")
    out = _half_nonlinear(eq, v.grid, _rfftn(v.values, v.grid))
    if not np.isfinite(out).all():
        raise DivergenceError("nonlinear term produced non-finite values")
    return Field(v.grid, _irfftn(out, v.grid))


def time_derivative(eq: Equation, v: Field) -> Field:
    """Full right-hand side dv/dt = linear + nonlinear, in physical space."""
    cr = _rfftn(v.values, v.grid)
    rhs = _half_linear_symbol(eq, v.grid) * cr + _half_nonlinear(eq, v.grid, cr)
    return Field(v.grid, _irfftn(rhs, v.grid))


class Etdrk4:
    """Fourth-order exponential time differencing Runge-Kutta stepper.

    Integrates dc/dt = symbol * c + nonlinear(c) for a diagonal real
    symbol.  The phi-function coefficients are evaluated by averaging
    over ``n_contour`` points on a unit circle centered at each
    dt*symbol value (Kassam-Trefethen contour trick).
    """

    def __init__(
        self,
        symbol: np.ndarray,
        nonlinear: Callable[[np.ndarray], np.ndarray],
        dt: float,
        n_contour: int = 32,
    ):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.dt = dt
        self.nonlinear = nonlinear
        z = dt * np.asarray(symbol, dtype=float)
        self.exp_full = np.exp(z)
        self.exp_half = np.exp(z / 2.0)
        r = np.exp(2j * np.pi * (np.arange(n_contour) + 0.5) / n_contour)
        zr = z[..., None] + r
        exp_zr = np.exp(zr)
        zr3 = zr**3
        self.q = dt * ((np.exp(zr / 2.0) - 1.0) / zr).mean(axis=-1).real
        self.f1 = dt * ((-4.0 - zr + exp_zr * (4.0 - 3.0 * zr + zr**2)) / zr3).mean(axis=-1).real
        self.f2 = dt * ((2.0 + zr + exp_zr * (zr - 2.0)) / zr3).mean(axis=-1).real
        self.f3 = dt * ((-4.0 - 3.0 * zr - zr**2 + exp_zr * (4.0 - zr)) / zr3).mean(axis=-1).real

    def step(self, c: np.ndarray) -> np.ndarray:
        nv = self.nonlinear(c)
        a = self.exp_half * c + self.q * nv
        na = self.nonlinear(a)
        b = self.exp_half * c + self.q * na
        nb = self.nonlinear(b)
        cc = self.exp_half * a + self.q * (2.0 * nb - nv)
        nc = self.nonlinear(cc)
        return self.exp_full * c + self.f1 * nv + 2.0 * self.f2 * (na + nb) + self.f3 * nc


@lru_cache(maxsize=None)
def _stepper(eq: Equation, grid: Grid, dt: float) -> Etdrk4:
    return Etdrk4(
        _half_linear_symbol(eq, grid),
        lambda cr: _half_nonlinear(eq, grid, cr),
        dt,
    )


def etdrk4_step(v: SpectralField, dt: float, eq: Equation) -> SpectralField:
    """Advance one time step of dt; raises DivergenceError on blow-up."""
    if eq.dims != v.grid.dims:
        raise ValueError(f"equation dims {eq.dims} != grid dims {v.grid.dims}")
    out = _stepper(eq, v.grid, dt).step(_to_half(v))
    if not np.isfinite(out).all():
        raise DivergenceError("non-finite state after time step")
    return _to_full(out, v.grid)


def simulate(
    eq: Equation,
    v0: Field,
    dt: float,
    n_steps: int,
    snapshot_every: int = 1,
    zero_mean_wrap: bool = False,
) -> Trajectory:
    """Integrate n_steps from v0, recording every snapshot_every-th state.

    With zero_mean_wrap the spatial mean is subtracted before each step
    and restored afterwards (the step-generated mean is discarded), so
    every recorded snapshot carries exactly v0's mean.
    """
    if eq.dims != v0.grid.dims:
        raise ValueError(f"equation dims {eq.dims} != grid dims {v0.grid.dims}")
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if snapshot_every < 1 or n_steps % snapshot_every != 0:
        raise ValueError(
            f"snapshot_every ({snapshot_every}) must divide n_steps ({n_steps})"
        )
    grid = v0.grid
    stepper = _stepper(eq, grid, dt)
    zero_index = (0,) * grid.dims
    c = _rfftn(v0.values, grid)
    snapshots = [v0]
    for i in range(1, n_steps + 1):
        if zero_mean_wrap:
            saved_mean = c[zero_index]
            c[zero_index] = 0.0
            c = stepper.step(c)
            c[zero_index] = saved_mean
        else:
            c = stepper.step(c)
        if not np.isfinite(c).all():
            raise DivergenceError(f"simulation diverged at step {i}", step=i)
        if i % snapshot_every == 0:
            snapshots.append(Field(grid, _irfftn(c, grid)))
    return Trajectory(grid=grid, dt_snapshot=dt * snapshot_every, states=tuple(snapshots))


def attractor_init(
    eq: Equation,
    grid: Grid,
    seed: int,
    burn_in_steps: int,
    dt: float,
    zero_mean_wrap: bool | None = None,
) -> Field:
    """Seeded uniform [-1, 1] field evolved through a burn-in.

    With burn_in_steps = 0 this is the raw uniform draw (the
    phase-separation initial condition); otherwise the final burn-in
    state is returned.  zero_mean_wrap defaults per equation.
    """
    if burn_in_steps < 0:
        raise ValueError("burn_in_steps must be non-negative")
    rng = np.random.default_rng(seed)
    v0 = Field(grid, rng.uniform(-1.0, 1.0, grid.shape))
    if burn_in_steps == 0:
        return v0
    if zero_mean_wrap is None:
        zero_mean_wrap = eq.needs_zero_mean
    traj = simulate(eq, v0, dt, burn_in_steps, snapshot_every=burn_in_steps,
                    zero_mean_wrap=zero_mean_wrap)
    return traj.states[-1]

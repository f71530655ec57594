"""Tiling a trained window model over the grid, rollout, and diagnostics.

One surrogate step normalizes the state, predicts every stride-sized
block from its surrounding window with a single shared model, reassembles
the full grid, and undoes the normalization.  Rollouts iterate the step
autoregressively and stop early if the prediction leaves the normalized
range or turns non-finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .elm import (
    ElmParams,
    MomentAccumulator,
    Readout,
    embed,
    init_elm,
    predict_window,
    solve_readout,
)
from .equations import DivergenceError, Trajectory
from .fields import Field, Grid
from .symmetry import IDENTITY_ONLY, ONE_D_ELEMENTS, SymmetryConfig, act_batch, inverse
from .windows import (
    Normalizer,
    WindowGeometry,
    input_windows,
    scatter_blocks,
    target_windows,
    tile_anchors,
)

# a normalized prediction beyond this magnitude counts as divergence
NORMALIZED_DIVERGENCE_LIMIT = 10.0


@dataclass(frozen=True, eq=False)
class Surrogate:
    """Everything needed to advance a full state by one learned time step."""

    params: ElmParams
    readout: Readout
    normalizer: Normalizer
    geometry: WindowGeometry
    symmetry: SymmetryConfig = IDENTITY_ONLY
    zero_mean_wrap: bool = False
    dt: float = 1.0

    def __post_init__(self) -> None:
        if self.params.l_in != self.geometry.input_len:
            raise ValueError(
                f"model input width {self.params.l_in} != window input length "
                f"{self.geometry.input_len}"
            )
        if self.readout.l_out != self.geometry.output_len:
            raise ValueError(
                f"model output width {self.readout.l_out} != window output length "
                f"{self.geometry.output_len}"
            )


@dataclass(frozen=True, eq=False)
class RolloutResult:
    trajectory: Trajectory
    diverged_at: int | None = None

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None


def _check_symmetry_usage(geometry: WindowGeometry, symmetry: SymmetryConfig) -> None:
    active = len(symmetry) > 1 and (
        symmetry.use_for_training or symmetry.use_for_prediction
    )
    if not active:
        return
    if geometry.pe_len > 0:
        raise ValueError(
            "symmetry augmentation/averaging cannot be combined with a "
            "positional encoding"
        )
    if geometry.dims == 1 and not symmetry.elements <= ONE_D_ELEMENTS:
        raise ValueError("1D windows admit only the identity and the reflection")


def _pe_matrix(anchors: np.ndarray, grid: Grid, geometry: WindowGeometry) -> np.ndarray:
    x = anchors * grid.dx  # encoded position: coordinate of the anchor node
    freqs = 2.0 ** np.arange(geometry.pe_order + 1)
    return np.cos(np.pi * np.asarray(x, dtype=float)[:, None] * freqs[None, :] / grid.L)


def _predict_blocks(surrogate: Surrogate, windows: np.ndarray,
                    anchors: np.ndarray, grid: Grid) -> np.ndarray:
    """Predicted output blocks for a batch of raw (normalized) windows."""
    geom = surrogate.geometry
    params, readout = surrogate.params, surrogate.readout
    sym = surrogate.symmetry
    if sym.use_for_prediction and len(sym) > 1:
        n = windows.shape[0]
        d, s = geom.window_side, geom.stride
        shaped = windows if geom.dims == 1 else windows.reshape(n, d, d)
        total = None
        for g in sym.ordered():
            transformed = act_batch(g, shaped).reshape(n, -1)
            predicted = predict_window(params, readout, transformed)
            if geom.dims == 2:
                predicted = predicted.reshape(n, s, s)
            back = act_batch(inverse(g), predicted).reshape(n, -1)
            total = back.copy() if total is None else total + back
        return total / len(sym)
    if geom.pe_len > 0:
        windows = np.hstack([windows, _pe_matrix(anchors, grid, geom)])
    return predict_window(params, readout, windows)


def step_surrogate(surrogate: Surrogate, state: Field) -> Field:
    """Advance the full state by one learned time step."""
    grid = state.grid
    geom = surrogate.geometry
    if geom.dims != grid.dims:
        raise ValueError(f"geometry dims {geom.dims} != grid dims {grid.dims}")
    geom.check_grid(grid.m)
    _check_symmetry_usage(geom, surrogate.symmetry)

    values = state.values
    mean0 = values.mean() if surrogate.zero_mean_wrap else 0.0
    norm = surrogate.normalizer.normalize(values - mean0)

    anchors = np.asarray(tile_anchors(grid.m, geom.stride, geom.dims))
    blocks = _predict_blocks(surrogate, input_windows(norm, anchors, geom),
                             anchors, grid)

    out_norm = np.empty(grid.shape)
    scatter_blocks(out_norm, anchors, blocks, geom)
    if not np.isfinite(out_norm).all() or np.abs(out_norm).max() > NORMALIZED_DIVERGENCE_LIMIT:
        raise DivergenceError("surrogate prediction diverged")

    out = surrogate.normalizer.denormalize(out_norm)
    if surrogate.zero_mean_wrap:
        out = out - out.mean() + mean0
    return Field(grid, out)


def rollout(surrogate: Surrogate, v0: Field, n_steps: int) -> RolloutResult:
    """Iterate the surrogate from v0, recording every state.

    On divergence the partial trajectory is returned together with the
    failing step index.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    states = [v0]
    diverged_at = None
    state = v0
    for i in range(1, n_steps + 1):
        try:
            state = step_surrogate(surrogate, state)
        except DivergenceError:
            diverged_at = i
            break
        states.append(state)
    traj = Trajectory(grid=v0.grid, dt_snapshot=surrogate.dt, states=tuple(states))
    return RolloutResult(trajectory=traj, diverged_at=diverged_at)


def rse(sim: Trajectory, pred: Trajectory) -> np.ndarray:
    """Relative squared error per snapshot, in percent.

    100 * |sim - pred|^2 / |sim - mean(sim)|^2; the mean-field baseline
    scores 100 everywhere by construction.
    """
    if sim.grid != pred.grid:
        raise ValueError("trajectories live on different grids")
    if len(sim) != len(pred):
        raise ValueError(f"trajectory lengths differ: {len(sim)} vs {len(pred)}")
    if not math.isclose(sim.dt_snapshot, pred.dt_snapshot, rel_tol=1e-9):
        raise ValueError("trajectories have different snapshot spacing")
    out = np.empty(len(sim))
    for i, (a, b) in enumerate(zip(sim.states, pred.states)):
        centered = a.values - a.values.mean()
        denom = float((centered**2).sum())
        if denom == 0.0:
            raise ValueError(f"simulated state {i} is constant; RSE undefined")
        out[i] = 100.0 * float(((a.values - b.values) ** 2).sum()) / denom
    return out


def raw_moments(traj: Trajectory, orders: Sequence[int]) -> dict[int, np.ndarray]:
    """Time-averaged k-th power of the state at every location."""
    if any(k < 1 for k in orders):
        raise ValueError("moment orders must be >= 1")
    stack = traj.stack()
    return {int(k): (stack ** k).mean(axis=0) for k in orders}


def trajectory_pairs(traj: Trajectory, count: int | None = None
                     ) -> list[tuple[Field, Field]]:
    """Consecutive (state, next state) pairs, optionally the first ``count``."""
    pairs = list(zip(traj.states[:-1], traj.states[1:]))
    if count is not None:
        if count > len(pairs):
            raise ValueError(
                f"requested {count} training pairs but trajectory has {len(pairs)}"
            )
        pairs = pairs[:count]
    return pairs


def _gather(stacked: np.ndarray, pair_idx: np.ndarray, anchors: np.ndarray,
            side: int, offset: int, dims: int) -> np.ndarray:
    m = stacked.shape[1]
    span = np.arange(side) - offset
    if dims == 1:
        idx = (anchors[:, None] + span[None, :]) % m
        return stacked[pair_idx[:, None], idx]
    rows = (anchors[:, 0][:, None] + span[None, :]) % m
    cols = (anchors[:, 1][:, None] + span[None, :]) % m
    gathered = stacked[pair_idx[:, None, None], rows[:, :, None], cols[:, None, :]]
    return gathered.reshape(len(pair_idx), side * side)


def train_surrogate(
    pairs: Sequence[tuple[Field, Field]],
    *,
    geometry: WindowGeometry,
    hidden: int,
    seed: int,
    dt: float,
    noise_sigma: float = 0.0,
    ridge: float = 1e-8,
    symmetry: SymmetryConfig = IDENTITY_ONLY,
    zero_mean_wrap: bool = False,
    n_draws: int | None = None,
    chunk_size: int = 16384,
) -> Surrogate:
    """Fit the readout from randomly drawn input/output windows.

    Draws sample a snapshot pair and an anchor node uniformly, add
    Gaussian noise to the normalized window values, optionally expand
    each draw over the symmetry subgroup, and stream second moments
    until the closed-form readout is solved.  Deterministic for a fixed
    seed.  The default draw budget is 200 windows per output tile per
    snapshot pair.
    """
    if not pairs:
        raise ValueError("need at least one training pair")
    grid = pairs[0][0].grid
    if any(a.grid != grid or b.grid != grid for a, b in pairs):
        raise ValueError("all training states must share one grid")
    if geometry.dims != grid.dims:
        raise ValueError(f"geometry dims {geometry.dims} != grid dims {grid.dims}")
    geometry.check_grid(grid.m)
    _check_symmetry_usage(geometry, symmetry)
    if noise_sigma < 0:
        raise ValueError("noise std must be non-negative")

    if zero_mean_wrap:
        inputs = [a.values - a.values.mean() for a, _ in pairs]
        outputs = [b.values - b.values.mean() for _, b in pairs]
    else:
        inputs = [a.values for a, _ in pairs]
        outputs = [b.values for _, b in pairs]
    normalizer = Normalizer(v_min=min(float(a.min()) for a in inputs),
                            v_max=max(float(a.max()) for a in inputs))
    stacked_in = np.stack([normalizer.normalize(a) for a in inputs])
    stacked_out = np.stack([normalizer.normalize(b) for b in outputs])

    n_tiles = (grid.m // geometry.stride) ** geometry.dims
    if n_draws is None:
        n_draws = 200 * n_tiles * len(pairs)
    if n_draws < 1:
        raise ValueError("n_draws must be positive")

    params = init_elm(geometry.input_len, hidden, geometry.output_len, seed)
    acc = MomentAccumulator(hidden, geometry.output_len)
    rng = np.random.default_rng([seed, 1])
    augmenting = symmetry.use_for_training and len(symmetry) > 1
    d, s = geometry.window_side, geometry.stride

    remaining = n_draws
    while remaining > 0:
        n = min(chunk_size, remaining)
        remaining -= n
        pair_idx = rng.integers(0, len(pairs), size=n)
        if geometry.dims == 1:
            anchors = rng.integers(0, grid.m, size=n)
        else:
            anchors = rng.integers(0, grid.m, size=(n, 2))
        win = _gather(stacked_in, pair_idx, anchors, d, geometry.extent, geometry.dims)
        win = win + rng.normal(0.0, noise_sigma, win.shape)
        tgt = _gather(stacked_out, pair_idx, anchors, s, 0, geometry.dims)
        if augmenting:
            win_shaped = win if geometry.dims == 1 else win.reshape(n, d, d)
            tgt_shaped = tgt if geometry.dims == 1 else tgt.reshape(n, s, s)
            for g in symmetry.ordered():
                zg = act_batch(g, win_shaped).reshape(n, -1)
                tg = act_batch(g, tgt_shaped).reshape(n, -1)
                acc.add_batch(embed(params, zg), tg)
        else:
            if geometry.pe_len > 0:
                win = np.hstack([win, _pe_matrix(anchors, grid, geometry)])
            acc.add_batch(embed(params, win), tgt)

    readout = solve_readout(acc, ridge)
    return Surrogate(params=params, readout=readout, normalizer=normalizer,
                     geometry=geometry, symmetry=symmetry,
                     zero_mean_wrap=zero_mean_wrap, dt=dt)

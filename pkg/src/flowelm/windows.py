"""Periodic window extraction and tiling, positional encoding, normalization.

Input windows carry ``extent`` extra nodes of context on each side of an
``stride``-wide output block; extraction wraps periodically.  Flattening
is row-major throughout so that window vectors, tiling, and file formats
agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .fields import Field

Anchor = int | tuple[int, int]


@dataclass(frozen=True)
class WindowGeometry:
    """Window shape: predicted block side ``stride``, context half-width ``extent``.

    ``pe_order`` = 0 disables the positional encoding entirely; k >= 1
    appends k+1 cosine components (see positional_encoding).
    """

    dims: int
    extent: int
    stride: int
    pe_order: int = 0

    def __post_init__(self) -> None:
        if self.dims not in (1, 2):
            raise ValueError(f"dims must be 1 or 2, got {self.dims}")
        if self.extent < 0:
            raise ValueError("extent must be non-negative")
        if self.stride < 1:
            raise ValueError("stride must be positive")
        if self.pe_order < 0:
            raise ValueError("pe_order must be non-negative")
        if self.pe_order > 0 and self.dims != 1:
            raise ValueError("positional encoding is only supported on 1D grids")

    @property
    def window_side(self) -> int:
        return 2 * self.extent + self.stride

    @property
    def pe_len(self) -> int:
        return 0 if self.pe_order == 0 else self.pe_order + 1

    @property
    def input_len(self) -> int:
        return self.window_side**self.dims + self.pe_len

    @property
    def output_len(self) -> int:
        return self.stride**self.dims

    def check_grid(self, m: int) -> None:
        if m % self.stride != 0:
            raise ValueError(f"stride {self.stride} does not divide grid size {m}")
        if self.window_side > m:
            raise ValueError(
                f"window side {self.window_side} exceeds grid size {m}"
            )


def _as_anchor(anchor: Anchor, dims: int, m: int) -> tuple[int, ...]:
    a = (anchor,) if np.isscalar(anchor) else tuple(anchor)
    if len(a) != dims:
        raise ValueError(f"anchor {anchor!r} does not match dims {dims}")
    if any(not 0 <= ai < m for ai in a):
        raise ValueError(f"anchor {anchor!r} out of range [0, {m})")
    return a


def extract_window(state: Field, anchor: Anchor, geom: WindowGeometry) -> np.ndarray:
    """Input window around ``anchor``, wrapped periodically, flattened row-major."""
    grid = state.grid
    if geom.dims != grid.dims:
        raise ValueError(f"geometry dims {geom.dims} != grid dims {grid.dims}")
    geom.check_grid(grid.m)
    a = _as_anchor(anchor, geom.dims, grid.m)
    idx = [
        (ai - geom.extent + np.arange(geom.window_side)) % grid.m for ai in a
    ]
    if geom.dims == 1:
        return state.values[idx[0]]
    return state.values[np.ix_(idx[0], idx[1])].ravel()


def target_window(next_state: Field, anchor: Anchor, geom: WindowGeometry) -> np.ndarray:
    """Output block at ``anchor`` (stride nodes per axis), flattened row-major."""
    grid = next_state.grid
    if geom.dims != grid.dims:
        raise ValueError(f"geometry dims {geom.dims} != grid dims {grid.dims}")
    geom.check_grid(grid.m)
    a = _as_anchor(anchor, geom.dims, grid.m)
    idx = [(ai + np.arange(geom.stride)) % grid.m for ai in a]
    if geom.dims == 1:
        return next_state.values[idx[0]]
    return next_state.values[np.ix_(idx[0], idx[1])].ravel()


def tile_anchors(m: int, s: int, dims: int) -> list[int] | list[tuple[int, int]]:
    """Anchors 0, s, 2s, ... per axis; target blocks tile the grid exactly."""
    if s < 1 or m % s != 0:
        raise ValueError(f"stride {s} does not divide grid size {m}")
    axis = range(0, m, s)
    if dims == 1:
        return list(axis)
    if dims == 2:
        return list(product(axis, axis))
    raise ValueError(f"dims must be 1 or 2, got {dims}")


def positional_encoding(x: float, L: float, k: int) -> np.ndarray:
    """Cosines at dyadic frequencies: cos(2^j * pi * x / L) for j = 0..k."""
    if k < 0:
        raise ValueError("encoding order must be non-negative")
    return np.cos(np.pi * x * 2.0 ** np.arange(k + 1) / L)


@dataclass(frozen=True)
class Normalizer:
    """Affine map onto [0, 1] fit on training data; exact inverse available."""

    v_min: float
    v_max: float

    def __post_init__(self) -> None:
        if not self.v_max > self.v_min:
            raise ValueError(
                f"degenerate normalization range [{self.v_min}, {self.v_max}]"
            )

    def normalize(self, x):
        return (x - self.v_min) / (self.v_max - self.v_min)

    def denormalize(self, x):
        return x * (self.v_max - self.v_min) + self.v_min


def fit_normalizer(train_states: list[Field]) -> Normalizer:
    if not train_states:
        raise ValueError("need at least one training state")
    v_min = min(float(s.values.min()) for s in train_states)
    v_max = max(float(s.values.max()) for s in train_states)
    return Normalizer(v_min=v_min, v_max=v_max)


def add_noise(z: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """z plus i.i.d. Normal(0, sigma^2); training-time only, never on encodings."""
    if sigma < 0:
        raise ValueError("noise std must be non-negative")
    return np.asarray(z, dtype=float) + rng.normal(0.0, sigma, np.shape(z))


# -- batched window plumbing (used by training and tiled prediction) --------


def window_batch(values: np.ndarray, anchors: np.ndarray, geom: WindowGeometry,
                 side: int, offset: int) -> np.ndarray:
    """Windows of ``side`` nodes per axis at many anchors, flattened per row.

    ``offset`` shifts the window start left of each anchor (extent for
    input windows, 0 for target blocks).
    """
    m = values.shape[0]
    span = np.arange(side) - offset
    if geom.dims == 1:
        idx = (anchors[:, None] + span[None, :]) % m
        return values[idx]
    rows = (anchors[:, 0][:, None] + span[None, :]) % m
    cols = (anchors[:, 1][:, None] + span[None, :]) % m
    return values[rows[:, :, None], cols[:, None, :]].reshape(len(anchors), side * side)


def input_windows(values: np.ndarray, anchors: np.ndarray, geom: WindowGeometry) -> np.ndarray:
    return window_batch(values, anchors, geom, geom.window_side, geom.extent)


def target_windows(values: np.ndarray, anchors: np.ndarray, geom: WindowGeometry) -> np.ndarray:
    return window_batch(values, anchors, geom, geom.stride, 0)


def scatter_blocks(out: np.ndarray, anchors: np.ndarray, blocks: np.ndarray,
                   geom: WindowGeometry) -> None:
    """Write stride-sized blocks at tile anchors; anchors must tile the grid."""
    s = geom.stride
    if geom.dims == 1:
        for a, block in zip(anchors, blocks):
            out[a:a + s] = block
    else:
        for (i, j), block in zip(anchors, blocks):
            out[i:i + s, j:j + s] = block.reshape(s, s)

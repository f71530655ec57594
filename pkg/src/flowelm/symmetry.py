"""The eight symmetries of a square window: augmentation and group averaging.

Rotations are counterclockwise with the row index increasing downward;
reflections are named by their axis (horizontal, vertical, main
diagonal, anti-diagonal).  Composition and inversion go through the
elements' 2x2 orthogonal matrices, independently of the array
permutations used to act on windows.  1D windows admit only the
identity and the reflection.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np


class GroupElement(enum.Enum):
    R0 = "e"
    R90 = "r90"
    R180 = "r180"
    R270 = "r270"
    FH = "fh"
    FV = "fv"
    FD = "fd"
    FA = "fa"


# canonical enumeration order; group averages sum in this order
CAYLEY_ORDER: tuple[GroupElement, ...] = (
    GroupElement.R0,
    GroupElement.R90,
    GroupElement.R180,
    GroupElement.R270,
    GroupElement.FH,
    GroupElement.FV,
    GroupElement.FD,
    GroupElement.FA,
)

ONE_D_ELEMENTS = frozenset({GroupElement.R0, GroupElement.FH})

# 2x2 orthogonal matrix of each element, acting on centered (row, col)
# index offsets: entry (u, w) of g.w is entry A_g^{-1} (u, w) of w.
_MATRICES: dict[GroupElement, tuple[tuple[int, int], tuple[int, int]]] = {
    GroupElement.R0: ((1, 0), (0, 1)),
    GroupElement.R90: ((0, -1), (1, 0)),
    GroupElement.R180: ((-1, 0), (0, -1)),
    GroupElement.R270: ((0, 1), (-1, 0)),
    GroupElement.FH: ((-1, 0), (0, 1)),
    GroupElement.FV: ((1, 0), (0, -1)),
    GroupElement.FD: ((0, 1), (1, 0)),
    GroupElement.FA: ((0, -1), (-1, 0)),
}
_BY_MATRIX = {matrix: g for g, matrix in _MATRICES.items()}


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    """Element acting as g after h: act(compose(g, h), w) == act(g, act(h, w))."""
    a, b = _MATRICES[g], _MATRICES[h]
    prod = tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2))
        for i in range(2)
    )
    return _BY_MATRIX[prod]


def inverse(g: GroupElement) -> GroupElement:
    a = _MATRICES[g]
    return _BY_MATRIX[((a[0][0], a[1][0]), (a[0][1], a[1][1]))]


def _act_axes(g: GroupElement, w: np.ndarray, axes: tuple[int, int]) -> np.ndarray:
    if g is GroupElement.R0:
        return w
    if g is GroupElement.R90:
        return np.rot90(w, 1, axes=axes)
    if g is GroupElement.R180:
        return np.rot90(w, 2, axes=axes)
    if g is GroupElement.R270:
        return np.rot90(w, 3, axes=axes)
    if g is GroupElement.FH:
        return np.flip(w, axis=axes[0])
    if g is GroupElement.FV:
        return np.flip(w, axis=axes[1])
    if g is GroupElement.FD:
        return np.swapaxes(w, *axes)
    # FA: reflection across the anti-diagonal
    return np.rot90(np.swapaxes(w, *axes), 2, axes=axes)


def act(g: GroupElement, w: np.ndarray) -> np.ndarray:
    """Apply g to a window: a 1D vector or a square 2D array."""
    w = np.asarray(w)
    if w.ndim == 1:
        if g is GroupElement.R0:
            return w.copy()
        if g is GroupElement.FH:
            return w[::-1].copy()
        raise ValueError(f"1D windows support only R0 and FH, got {g.name}")
    if w.ndim == 2:
        if w.shape[0] != w.shape[1]:
            raise ValueError(f"2D window must be square, got shape {w.shape}")
        return np.ascontiguousarray(_act_axes(g, w, (0, 1)))
    raise ValueError(f"window must be 1D or 2D, got ndim {w.ndim}")


def act_batch(g: GroupElement, stack: np.ndarray) -> np.ndarray:
    """Apply g to a stack of windows, shape (n, d) or (n, d, d)."""
    stack = np.asarray(stack)
    if stack.ndim == 2:
        if g is GroupElement.R0:
            return stack
        if g is GroupElement.FH:
            return stack[:, ::-1]
        raise ValueError(f"1D windows support only R0 and FH, got {g.name}")
    return _act_axes(g, stack, (1, 2))


@dataclass(frozen=True)
class SymmetryConfig:
    """A subgroup of the eight square symmetries plus usage flags."""

    elements: frozenset[GroupElement] = field(
        default_factory=lambda: frozenset({GroupElement.R0})
    )
    use_for_training: bool = False
    use_for_prediction: bool = False

    def __post_init__(self) -> None:
        elems = frozenset(self.elements)
        object.__setattr__(self, "elements", elems)
        if GroupElement.R0 not in elems:
            raise ValueError("subgroup must contain the identity")
        for g in elems:
            if inverse(g) not in elems:
                raise ValueError(f"subgroup not closed under inversion: {g.name}")
            for h in elems:
                gh = compose(g, h)
                if gh not in elems:
                    raise ValueError(
                        f"subgroup not closed: {g.name} * {h.name} = {gh.name} missing"
                    )

    def ordered(self) -> tuple[GroupElement, ...]:
        return tuple(g for g in CAYLEY_ORDER if g in self.elements)

    def __len__(self) -> int:
        return len(self.elements)


def symmetry_config(tokens: Iterable[str] | str, use_for_training: bool = False,
                    use_for_prediction: bool = False) -> SymmetryConfig:
    """Build a config from tokens e, r90, r180, r270, fh, fv, fd, fa."""
    if isinstance(tokens, str):
        tokens = [t.strip() for t in tokens.split(",") if t.strip()]
    try:
        elems = frozenset(GroupElement(t) for t in tokens)
    except ValueError as err:
        raise ValueError(f"unknown symmetry token: {err}") from err
    return SymmetryConfig(elements=elems, use_for_training=use_for_training,
                          use_for_prediction=use_for_prediction)


FULL_GROUP = SymmetryConfig(elements=frozenset(CAYLEY_ORDER))
IDENTITY_ONLY = SymmetryConfig()


def augment(pairs: list[tuple[np.ndarray, np.ndarray]],
            cfg: SymmetryConfig) -> list[tuple[np.ndarray, np.ndarray]]:
    """Orbit of each (input, output) window pair under the subgroup.

    Windows must be raw values without positional-encoding components;
    output size is len(pairs) * len(cfg).
    """
    out = []
    for z, z_next in pairs:
        for g in cfg.ordered():
            out.append((act(g, z), act(g, z_next)))
    return out


def equivariant_predict(predict: Callable[[np.ndarray], np.ndarray],
                        window: np.ndarray, cfg: SymmetryConfig) -> np.ndarray:
    """Average act(g^-1, predict(act(g, window))) over the subgroup.

    ``predict`` maps a flattened input window to a flattened output
    block; ``window`` is shaped ((d,) or (d, d), no positional
    encoding).  With the full eight-element subgroup the averaged map is
    exactly equivariant by construction.  Summation follows the fixed
    enumeration order.
    """
    window = np.asarray(window)
    members = cfg.ordered()
    total = None
    for g in members:
        raw = np.asarray(predict(act(g, window).ravel()))
        if window.ndim == 2:
            side = round(len(raw) ** 0.5)
            raw = raw.reshape(side, side)
        back = act(inverse(g), raw)
        total = back if total is None else total + back
    return (total / len(members)).ravel()

"""Extreme learning machine: frozen random first layer, closed-form readout.

Only the linear readout is trained.  Its normal equations are assembled
from two streamed moment matrices, C = E[target * features^T] and
D = E[features * features^T], and solved as a symmetric positive
definite system (optionally ridge-stabilized) rather than by explicit
inversion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as _linalg


class ReadoutSolveError(RuntimeError):
    """Raised when the readout's normal equations cannot be factorized."""


def softplus(u):
    """log(1 + exp(u)) with the overflow-safe large-u branch."""
    return np.logaddexp(0.0, u)


@dataclass(frozen=True, eq=False)
class ElmParams:
    """Random frozen first layer: weights (l_hid, l_in), biases (l_hid,)."""

    weights: np.ndarray
    biases: np.ndarray
    l_out: int
    seed: int

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        b = np.array(self.biases, dtype=float)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ValueError("weights must be (l_hid, l_in) with matching biases")
        w.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def l_in(self) -> int:
        return self.weights.shape[1]

    @property
    def l_hid(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class Readout:
    """Trained linear output layer, (l_out, l_hid)."""

    theta: np.ndarray

    def __post_init__(self) -> None:
        t = np.array(self.theta, dtype=float)
        if t.ndim != 2 or not np.isfinite(t).all():
            raise ValueError("readout must be a finite (l_out, l_hid) matrix")
        t.flags.writeable = False
        object.__setattr__(self, "theta", t)

    @property
    def l_out(self) -> int:
        return self.theta.shape[0]

    @property
    def l_hid(self) -> int:
        return self.theta.shape[1]


def init_elm(l_in: int, l_hid: int, l_out: int, seed: int) -> ElmParams:
    """First-layer entries i.i.d. uniform on [-sqrt(1/l_in), sqrt(1/l_in)]."""
    if min(l_in, l_hid, l_out) < 1:
        raise ValueError("all layer sizes must be >= 1")
    rng = np.random.default_rng(seed)
    bound = np.sqrt(1.0 / l_in)
    weights = rng.uniform(-bound, bound, (l_hid, l_in))
    biases = rng.uniform(-bound, bound, l_hid)
    return ElmParams(weights=weights, biases=biases, l_out=l_out, seed=seed)


def embed(params: ElmParams, z: np.ndarray) -> np.ndarray:
    """softplus(W z + b); accepts a single vector or a (n, l_in) batch."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != params.l_in:
        raise ValueError(f"input length {z.shape[-1]} != l_in {params.l_in}")
    return softplus(z @ params.weights.T + params.biases)


class MomentAccumulator:
    """Running means of target/feature cross and feature Gram matrices.

    Supports per-sample streaming (``add``), batched updates
    (``add_batch``), and exact count-weighted merging of independent
    accumulators (``merge``) for parallel reduction.
    """

    def __init__(self, l_hid: int, l_out: int):
        self.C = np.zeros((l_out, l_hid))
        self.D = np.zeros((l_hid, l_hid))
        self.count = 0

    def add(self, features: np.ndarray, target: np.ndarray) -> None:
        features = np.asarray(features, dtype=float)
        target = np.asarray(target, dtype=float)
        if features.shape != (self.D.shape[0],) or target.shape != (self.C.shape[0],):
            raise ValueError("sample dimensions do not match accumulator")
        w = 1.0 / (self.count + 1)
        self.C += (np.outer(target, features) - self.C) * w
        self.D += (np.outer(features, features) - self.D) * w
        self.count += 1

    def add_batch(self, features: np.ndarray, targets: np.ndarray) -> None:
        features = np.asarray(features, dtype=float)
        targets = np.asarray(targets, dtype=float)
        n = features.shape[0]
        if n == 0:
            return
        if features.shape[1] != self.D.shape[0] or targets.shape != (n, self.C.shape[0]):
            raise ValueError("batch dimensions do not match accumulator")
        w = n / (self.count + n)
        self.C += (targets.T @ features / n - self.C) * w
        self.D += (features.T @ features / n - self.D) * w
        self.count += n

    def merge(self, other: "MomentAccumulator") -> None:
        if other.C.shape != self.C.shape or other.D.shape != self.D.shape:
            raise ValueError("accumulator dimensions do not match")
        if other.count == 0:
            return
        w = other.count / (self.count + other.count)
        self.C += (other.C - self.C) * w
        self.D += (other.D - self.D) * w
        self.count += other.count


def accumulate(acc: MomentAccumulator, features: np.ndarray,
               target: np.ndarray) -> MomentAccumulator:
    """Streaming running-mean update; returns the updated accumulator."""
    acc.add(features, target)
    return acc


def solve_readout(acc: MomentAccumulator, ridge: float = 1e-8) -> Readout:
    """Solve theta (D + ridge*I) = C by Cholesky factorization.

    ridge = 0 reproduces the plain normal equations; a singular Gram
    matrix then raises ReadoutSolveError.
    """
    if acc.count < 1:
        raise ValueError("cannot solve readout from an empty accumulator")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    system = acc.D + ridge * np.eye(acc.D.shape[0])
    try:
        factor = _linalg.cho_factor(system)
    except _linalg.LinAlgError as err:
        raise ReadoutSolveError(
            f"feature Gram matrix is singular (ridge={ridge}): {err}"
        ) from err
    return Readout(theta=_linalg.cho_solve(factor, acc.C.T).T)


def predict_window(params: ElmParams, readout: Readout, z: np.ndarray) -> np.ndarray:
    """theta @ softplus(W z + b); vector or (n, l_in) batch."""
    if readout.l_hid != params.l_hid:
        raise ValueError("readout width does not match hidden layer")
    return embed(params, z) @ readout.theta.T

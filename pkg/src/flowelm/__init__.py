"""Sliding-window extreme learning machine surrogates for periodic PDEs."""

from .elm import (
    ElmParams,
    MomentAccumulator,
    Readout,
    ReadoutSolveError,
    accumulate,
    embed,
    init_elm,
    predict_window,
    solve_readout,
    softplus,
)
from .equations import (
    ChForm,
    DivergenceError,
    Equation,
    EquationKind,
    Etdrk4,
    Trajectory,
    attractor_init,
    biharmonic,
    cahn_hilliard,
    etdrk4_step,
    gradient_squared,
    ks1d,
    ks1d_forced,
    ks2d,
    laplacian,
    linear_symbol,
    nonlinear_term,
    simulate,
    time_derivative,
)
from .fields import (
    Field,
    Grid,
    SpectralField,
    dealias,
    make_grid,
    to_physical,
    to_spectral,
    wavenumbers,
)
from .surrogate import (
    RolloutResult,
    Surrogate,
    raw_moments,
    rollout,
    rse,
    step_surrogate,
    train_surrogate,
    trajectory_pairs,
)
from .symmetry import (
    CAYLEY_ORDER,
    FULL_GROUP,
    IDENTITY_ONLY,
    GroupElement,
    SymmetryConfig,
    act,
    augment,
    compose,
    equivariant_predict,
    inverse,
    symmetry_config,
)
from .windows import (
    Normalizer,
    WindowGeometry,
    add_noise,
    extract_window,
    fit_normalizer,
    positional_encoding,
    target_window,
    tile_anchors,
)

__version__ = "0.1.0"

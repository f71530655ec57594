"""Experiment configuration: flat key=value text with section prefixes.

A config fully determines one experiment: equation and grid, simulation
schedule, window geometry, model size, training knobs, symmetry usage,
and rollout length.  Named presets reproduce the four benchmark setups;
a config file overlays a preset key by key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .equations import ChForm, Equation, EquationKind
from .fields import Grid, make_grid
from .symmetry import SymmetryConfig, symmetry_config
from .windows import WindowGeometry


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


_PI = math.pi

DEFAULTS: dict[str, str] = {
    "pde.ch_form": "standard",
    "sim.dt": "0.05",
    "sim.seed": "0",
    "sim.burn_in": "4000",
    "sim.snapshot_every": "1",
    "sim.zero_mean": "auto",
    "window.pe_order": "0",
    "elm.seed": "0",
    "elm.ridge": "1e-8",
    "train.sigma": "0.0",
    "train.draws_per_tile": "200",
    "train.start": "0",
    "symmetry.subgroup": "e",
    "symmetry.train": "false",
    "symmetry.predict": "false",
    "rollout.steps": "400",
}

PRESETS: dict[str, dict[str, str]] = {
    "ks1d-hom": {
        "pde.kind": "ks1d_hom",
        "grid.L": "200.0",
        "grid.m": "512",
        "sim.dt": "0.05",
        "sim.steps": "20",
        "window.extent": "7",
        "window.stride": "4",
        "window.pe_order": "0",
        "elm.hidden": "150",
        "train.sigma": "1e-4",
        "train.samples": "20",
        "rollout.steps": "2000",
    },
    "ks1d-inhom": {
        "pde.kind": "ks1d_inhom",
        "pde.mu": "0.05",
        "pde.lambda": "50.0",
        "grid.L": "200.0",
        "grid.m": "512",
        "sim.dt": "0.05",
        "sim.steps": "200",
        "window.extent": "7",
        "window.stride": "4",
        "window.pe_order": "3",
        "elm.hidden": "150",
        "train.sigma": "1e-4",
        "train.samples": "200",
        "rollout.steps": "2000",
    },
    "ks2d": {
        "pde.kind": "ks2d",
        "grid.L": repr(60 * _PI),
        "grid.m": "256",
        "sim.dt": "0.05",
        "sim.steps": "400",
        "window.extent": "2",
        "window.stride": "4",
        "window.pe_order": "0",
        "elm.hidden": "600",
        "train.sigma": "1e-4",
        "train.samples": "1",
        "rollout.steps": "400",
    },
    "ch2d": {
        "pde.kind": "ch2d",
        "pde.gamma": "0.5",
        "grid.L": "100.0",
        "grid.m": "512",
        "sim.dt": "0.05",
        "sim.burn_in": "0",
        "sim.steps": "450",
        "window.extent": "4",
        "window.stride": "4",
        "window.pe_order": "0",
        "elm.hidden": "500",
        "train.sigma": "1e-3",
        "train.samples": "1",
        "train.start": "50",
        "rollout.steps": "400",
    },
}

_KINDS = {k.value: k for k in EquationKind}
_CH_FORMS = {f.value: f for f in ChForm}


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blanks are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _as_int(entries: dict[str, str], key: str) -> int:
    try:
        return int(entries[key])
    except ValueError as err:
        raise ConfigError(f"{key}: not an integer: {entries[key]!r}") from err


def _as_float(entries: dict[str, str], key: str) -> float:
    try:
        return float(entries[key])
    except ValueError as err:
        raise ConfigError(f"{key}: not a number: {entries[key]!r}") from err


def _as_bool(entries: dict[str, str], key: str) -> bool:
    value = entries[key].lower()
    if value in ("true", "1", "yes", "on"):
        return True
    if value in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: not a boolean: {entries[key]!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: EquationKind
    L: float
    m: int
    dt: float
    extent: int
    stride: int
    hidden: int
    train_samples: int
    gamma: float | None = None
    mu: float | None = None
    lam: float | None = None
    ch_form: ChForm = ChForm.STANDARD
    sim_seed: int = 0
    burn_in: int = 4000
    sim_steps: int | None = None
    snapshot_every: int = 1
    zero_mean: bool | None = None  # None = per-equation default
    pe_order: int = 0
    elm_seed: int = 0
    ridge: float = 1e-8
    sigma: float = 0.0
    draws_per_tile: int = 200
    train_start: int = 0
    subgroup: str = "e"
    sym_train: bool = False
    sym_predict: bool = False
    rollout_steps: int = 400

    @property
    def dims(self) -> int:
        return 2 if self.kind in (EquationKind.KS2D, EquationKind.CH2D) else 1

    @property
    def zero_mean_wrap(self) -> bool:
        if self.zero_mean is None:
            return self.kind is EquationKind.KS2D
        return self.zero_mean

    @property
    def steps(self) -> int:
        return self.train_samples + self.train_start if self.sim_steps is None else self.sim_steps

    def equation(self) -> Equation:
        return Equation(kind=self.kind, gamma=self.gamma, mu=self.mu,
                        lam=self.lam, ch_form=self.ch_form)

    def grid(self) -> Grid:
        return make_grid(self.L, self.m, self.dims)

    def geometry(self) -> WindowGeometry:
        return WindowGeometry(dims=self.dims, extent=self.extent,
                              stride=self.stride, pe_order=self.pe_order)

    def symmetry(self) -> SymmetryConfig:
        return symmetry_config(self.subgroup, use_for_training=self.sym_train,
                               use_for_prediction=self.sym_predict)

    def n_draws(self) -> int:
        tiles = (self.m // self.stride) ** self.dims
        return self.draws_per_tile * tiles * self.train_samples


def build_config(entries: dict[str, str]) -> ExperimentConfig:
    """Validate a merged key=value mapping and build the typed config."""
    merged = dict(DEFAULTS)
    merged.update(entries)

    known = {
        "pde.kind", "pde.gamma", "pde.mu", "pde.lambda", "pde.ch_form",
        "grid.L", "grid.m",
        "sim.dt", "sim.seed", "sim.burn_in", "sim.steps", "sim.snapshot_every",
        "sim.zero_mean",
        "window.extent", "window.stride", "window.pe_order",
        "elm.hidden", "elm.seed", "elm.ridge",
        "train.sigma", "train.samples", "train.draws_per_tile", "train.start",
        "symmetry.subgroup", "symmetry.train", "symmetry.predict",
        "rollout.steps",
    }
    unknown = sorted(set(merged) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    for key in ("pde.kind", "grid.L", "grid.m", "window.extent", "window.stride",
                "elm.hidden", "train.samples"):
        if key not in merged:
            raise ConfigError(f"{key}: required")

    kind_token = merged["pde.kind"].lower()
    if kind_token not in _KINDS:
        raise ConfigError(
            f"pde.kind: unknown equation {kind_token!r} "
            f"(expected one of {', '.join(sorted(_KINDS))})"
        )
    kind = _KINDS[kind_token]

    form_token = merged["pde.ch_form"].lower()
    if form_token not in _CH_FORMS:
        raise ConfigError(f"pde.ch_form: expected standard or literal, got {form_token!r}")

    zero_mean_raw = merged["sim.zero_mean"].lower()
    if zero_mean_raw == "auto":
        zero_mean = None
    else:
        zero_mean = _as_bool(merged, "sim.zero_mean")

    cfg = ExperimentConfig(
        kind=kind,
        gamma=_as_float(merged, "pde.gamma") if "pde.gamma" in merged else None,
        mu=_as_float(merged, "pde.mu") if "pde.mu" in merged else None,
        lam=_as_float(merged, "pde.lambda") if "pde.lambda" in merged else None,
        ch_form=_CH_FORMS[form_token],
        L=_as_float(merged, "grid.L"),
        m=_as_int(merged, "grid.m"),
        dt=_as_float(merged, "sim.dt"),
        sim_seed=_as_int(merged, "sim.seed"),
        burn_in=_as_int(merged, "sim.burn_in"),
        sim_steps=_as_int(merged, "sim.steps") if "sim.steps" in merged else None,
        snapshot_every=_as_int(merged, "sim.snapshot_every"),
        zero_mean=zero_mean,
        extent=_as_int(merged, "window.extent"),
        stride=_as_int(merged, "window.stride"),
        pe_order=_as_int(merged, "window.pe_order"),
        hidden=_as_int(merged, "elm.hidden"),
        elm_seed=_as_int(merged, "elm.seed"),
        ridge=_as_float(merged, "elm.ridge"),
        sigma=_as_float(merged, "train.sigma"),
        train_samples=_as_int(merged, "train.samples"),
        draws_per_tile=_as_int(merged, "train.draws_per_tile"),
        train_start=_as_int(merged, "train.start"),
        subgroup=merged["symmetry.subgroup"],
        sym_train=_as_bool(merged, "symmetry.train"),
        sym_predict=_as_bool(merged, "symmetry.predict"),
        rollout_steps=_as_int(merged, "rollout.steps"),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.L <= 0:
        raise ConfigError(f"grid.L: must be positive, got {cfg.L}")
    if cfg.m < 8 or cfg.m % 2 != 0:
        raise ConfigError(f"grid.m: must be an even integer >= 8, got {cfg.m}")
    if cfg.dt <= 0:
        raise ConfigError(f"sim.dt: must be positive, got {cfg.dt}")
    if cfg.burn_in < 0:
        raise ConfigError("sim.burn_in: must be non-negative")
    if cfg.snapshot_every < 1:
        raise ConfigError("sim.snapshot_every: must be >= 1")
    if cfg.steps < 0:
        raise ConfigError("sim.steps: must be non-negative")
    if cfg.steps % cfg.snapshot_every != 0:
        raise ConfigError(
            f"sim.steps: {cfg.steps} is not a multiple of "
            f"sim.snapshot_every {cfg.snapshot_every}"
        )
    if cfg.stride < 1 or cfg.m % cfg.stride != 0:
        raise ConfigError(
            f"window.stride: {cfg.stride} does not divide grid.m {cfg.m}"
        )
    if cfg.extent < 0:
        raise ConfigError("window.extent: must be non-negative")
    if 2 * cfg.extent + cfg.stride > cfg.m:
        raise ConfigError(
            f"window.extent: window side {2 * cfg.extent + cfg.stride} "
            f"exceeds grid.m {cfg.m}"
        )
    if cfg.pe_order < 0:
        raise ConfigError("window.pe_order: must be non-negative")
    if cfg.pe_order > 0 and cfg.kind is not EquationKind.KS1D_INHOM:
        raise ConfigError(
            "window.pe_order: positional encoding applies only to the "
            "spatially inhomogeneous 1D equation"
        )
    if cfg.hidden < 1:
        raise ConfigError("elm.hidden: must be >= 1")
    if cfg.ridge < 0:
        raise ConfigError("elm.ridge: must be non-negative")
    if cfg.sigma < 0:
        raise ConfigError("train.sigma: must be non-negative")
    if cfg.train_samples < 1:
        raise ConfigError("train.samples: must be >= 1")
    if cfg.draws_per_tile < 1:
        raise ConfigError("train.draws_per_tile: must be >= 1")
    if cfg.train_start < 0:
        raise ConfigError("train.start: must be non-negative")
    if cfg.rollout_steps < 0:
        raise ConfigError("rollout.steps: must be non-negative")

    if cfg.kind is EquationKind.CH2D:
        if cfg.gamma is None or cfg.gamma <= 0:
            raise ConfigError("pde.gamma: required and positive for ch2d")
    elif cfg.gamma is not None:
        raise ConfigError(f"pde.gamma: not a parameter of {cfg.kind.value}")
    if cfg.kind is EquationKind.KS1D_INHOM:
        if cfg.mu is None:
            raise ConfigError("pde.mu: required for ks1d_inhom")
        if cfg.lam is None or cfg.lam <= 0:
            raise ConfigError("pde.lambda: required and positive for ks1d_inhom")
    else:
        if cfg.mu is not None:
            raise ConfigError(f"pde.mu: not a parameter of {cfg.kind.value}")
        if cfg.lam is not None:
            raise ConfigError(f"pde.lambda: not a parameter of {cfg.kind.value}")

    try:
        sym = cfg.symmetry()
    except ValueError as err:
        raise ConfigError(f"symmetry.subgroup: {err}") from err
    if len(sym) > 1 and (sym.use_for_training or sym.use_for_prediction):
        if cfg.dims != 2:
            raise ConfigError(
                "symmetry.subgroup: window symmetries are only usable on 2D grids"
            )
        if cfg.pe_order > 0:
            raise ConfigError(
                "symmetry.subgroup: cannot be combined with a positional encoding"
            )


def load_config(preset: str | None = None, text: str | None = None,
                overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Compose preset < config text < explicit overrides, then validate."""
    entries: dict[str, str] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset!r} (expected one of {', '.join(sorted(PRESETS))})"
            )
        entries.update(PRESETS[preset])
    if text is not None:
        entries.update(parse_kv_text(text))
    if overrides:
        entries.update(overrides)
    if not entries:
        raise ConfigError("no configuration given (use a preset or a config file)")
    return build_config(entries)


def with_seed(cfg: ExperimentConfig, sim_seed: int | None = None,
              elm_seed: int | None = None) -> ExperimentConfig:
    out = cfg
    if sim_seed is not None:
        out = replace(out, sim_seed=sim_seed)
    if elm_seed is not None:
        out = replace(out, elm_seed=elm_seed)
    return out

"""Command-line driver: simulate, train, predict, evaluate, sweep.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, with_seed
from .equations import DivergenceError, attractor_init, simulate
from .storage import (
    StorageError,
    read_model,
    read_trajectory,
    write_csv,
    write_model,
    write_moments_csv,
    write_rse_csv,
    write_trajectory,
    write_trajectory_heatmaps,
)
from .surrogate import raw_moments, rollout, rse, train_surrogate, trajectory_pairs

TRAJECTORY_FILE = "sim.traj"
PREDICTION_FILE = "pred.traj"
MODEL_FILE = "model.elm"


def _load_experiment(args) -> ExperimentConfig:
    text = None
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as handle:
            text = handle.read()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides[args.seed_key] = str(args.seed)
    if getattr(args, "steps", None) is not None and args.steps_key:
        overrides[args.steps_key] = str(args.steps)
    return load_config(preset=args.preset, text=text, overrides=overrides)


def _simulate_trajectory(cfg: ExperimentConfig, seed: int, n_steps: int):
    eq = cfg.equation()
    grid = cfg.grid()
    v0 = attractor_init(eq, grid, seed=seed, burn_in_steps=cfg.burn_in, dt=cfg.dt,
                        zero_mean_wrap=cfg.zero_mean_wrap)
    return simulate(eq, v0, cfg.dt, n_steps, snapshot_every=cfg.snapshot_every,
                    zero_mean_wrap=cfg.zero_mean_wrap)


def cmd_simulate(args) -> int:
    cfg = _load_experiment(args)
    traj = _simulate_trajectory(cfg, cfg.sim_seed, cfg.steps)
    path = os.path.join(args.out, TRAJECTORY_FILE)
    write_trajectory(path, traj)
    print(f"wrote {path} ({len(traj)} snapshots, dt_snapshot="
          f"{traj.dt_snapshot:g})")
    return 0


def _train_from_config(cfg: ExperimentConfig, traj):
    start = cfg.train_start
    pairs = trajectory_pairs(traj)[start:start + cfg.train_samples]
    if len(pairs) < cfg.train_samples:
        raise ConfigError(
            f"train.samples: trajectory provides {len(pairs)} pairs from "
            f"index {start}, need {cfg.train_samples}"
        )
    return train_surrogate(
        pairs,
        geometry=cfg.geometry(),
        hidden=cfg.hidden,
        seed=cfg.elm_seed,
        dt=traj.dt_snapshot,
        noise_sigma=cfg.sigma,
        ridge=cfg.ridge,
        symmetry=cfg.symmetry(),
        zero_mean_wrap=cfg.zero_mean_wrap,
        n_draws=cfg.n_draws(),
    )


def cmd_train(args) -> int:
    cfg = _load_experiment(args)
    traj = read_trajectory(args.trajectory)
    surrogate = _train_from_config(cfg, traj)
    path = os.path.join(args.out, MODEL_FILE)
    write_model(path, surrogate)
    print(f"wrote {path} (hidden={surrogate.params.l_hid}, "
          f"input={surrogate.params.l_in}, output={surrogate.readout.l_out})")
    return 0


def cmd_predict(args) -> int:
    surrogate = read_model(args.model)
    init = read_trajectory(args.init)
    if not 0 <= args.index < len(init):
        raise ConfigError(
            f"--index {args.index} out of range for {len(init)} snapshots"
        )
    result = rollout(surrogate, init.states[args.index], args.steps)
    path = os.path.join(args.out, PREDICTION_FILE)
    write_trajectory(path, result.trajectory)
    if result.diverged:
        print(f"wrote {path} (diverged at step {result.diverged_at}, "
              f"{len(result.trajectory)} snapshots kept)", file=sys.stderr)
        return 3
    print(f"wrote {path} ({len(result.trajectory)} snapshots)")
    return 0


def cmd_evaluate(args) -> int:
    sim = read_trajectory(args.sim)
    pred = read_trajectory(args.pred)
    values = rse(sim, pred)
    times = sim.times()
    os.makedirs(args.out, exist_ok=True)

    rse_path = os.path.join(args.out, "rse.csv")
    write_rse_csv(rse_path, times, values)
    coords = (sim.grid.axis_coordinates() if sim.grid.dims == 1
              else np.arange(sim.grid.n_nodes, dtype=float))
    write_moments_csv(os.path.join(args.out, "moments.csv"), coords,
                      raw_moments(pred, (1, 2, 3)))
    write_moments_csv(os.path.join(args.out, "moments_sim.csv"), coords,
                      raw_moments(sim, (1, 2, 3)))
    written = [rse_path, os.path.join(args.out, "moments.csv"),
               os.path.join(args.out, "moments_sim.csv")]

    if args.heatmaps:
        lo = min(sim.stack().min(), pred.stack().min())
        hi = max(sim.stack().max(), pred.stack().max())
        written += write_trajectory_heatmaps(args.out, "sim", sim, lo, hi)
        written += write_trajectory_heatmaps(args.out, "pred", pred, lo, hi)
    if not args.no_figures:
        from .report import render_report_figures

        written += render_report_figures(args.out, sim, pred, times, values)
    for path in written:
        print(f"wrote {path}")
    return 0


def _parse_seed_range(spec: str) -> range:
    try:
        a, b = spec.split("..", 1)
        lo, hi = int(a), int(b)
    except ValueError as err:
        raise ConfigError(f"--seeds: expected a..b, got {spec!r}") from err
    if hi < lo:
        raise ConfigError(f"--seeds: empty range {spec!r}")
    return range(lo, hi + 1)


def cmd_sweep(args) -> int:
    cfg = _load_experiment(args)
    seeds = _parse_seed_range(args.seeds)
    train_traj = _simulate_trajectory(cfg, cfg.sim_seed, cfg.steps)
    steps = cfg.rollout_steps
    eval_traj = _simulate_trajectory(cfg, cfg.sim_seed + 1, steps)
    times = eval_traj.times()

    per_seed = []
    diverged = 0
    for seed in seeds:
        surrogate = _train_from_config(with_seed(cfg, elm_seed=seed), train_traj)
        seed_dir = os.path.join(args.out, f"seed-{seed}")
        write_model(os.path.join(seed_dir, MODEL_FILE), surrogate)
        result = rollout(surrogate, eval_traj.states[0], steps)
        write_trajectory(os.path.join(seed_dir, PREDICTION_FILE),
                         result.trajectory)
        if result.diverged:
            diverged += 1
            print(f"seed {seed}: diverged at step {result.diverged_at}",
                  file=sys.stderr)
            continue
        values = rse(eval_traj, result.trajectory)
        write_rse_csv(os.path.join(seed_dir, "rse.csv"), times, values)
        per_seed.append(values)
        print(f"seed {seed}: final RSE {values[-1]:.1f}%")

    if not per_seed:
        print("all seeds diverged", file=sys.stderr)
        return 3
    stacked = np.stack(per_seed)
    write_csv(
        os.path.join(args.out, "sweep.csv"),
        ("t", "median_rse", "q25_rse", "q75_rse"),
        zip(times.tolist(), np.median(stacked, axis=0).tolist(),
            np.percentile(stacked, 25, axis=0).tolist(),
            np.percentile(stacked, 75, axis=0).tolist()),
    )
    if not args.no_figures:
        from .report import figure_rse_band

        figure_rse_band(os.path.join(args.out, "sweep.png"), times, stacked)
    print(f"wrote {os.path.join(args.out, 'sweep.csv')} "
          f"({len(per_seed)} seeds, {diverged} diverged)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowelm",
        description="Sliding-window ELM surrogates for periodic PDEs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p, seed_key, steps_key=None):
        p.add_argument("--config", help="key=value experiment config file")
        p.add_argument("--preset", help="named preset "
                       "(ks1d-hom, ks1d-inhom, ks2d, ch2d)")
        p.add_argument("--seed", type=int, help=f"override {seed_key}")
        p.set_defaults(seed_key=seed_key, steps_key=steps_key)
        if steps_key:
            p.add_argument("--steps", type=int, help=f"override {steps_key}")

    p = sub.add_parser("simulate", help="integrate the configured equation")
    add_config_flags(p, "sim.seed", "sim.steps")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="fit a surrogate from a trajectory file")
    add_config_flags(p, "elm.seed")
    p.add_argument("--trajectory", required=True, help="training trajectory file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="roll out a trained surrogate")
    p.add_argument("--model", required=True)
    p.add_argument("--init", required=True,
                   help="trajectory file providing the initial state")
    p.add_argument("--index", type=int, default=0,
                   help="snapshot index of the initial state (default 0)")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="RSE, moments, heatmaps, figures")
    p.add_argument("--sim", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--heatmaps", action="store_true",
                   help="also write PGM heatmaps")
    p.add_argument("--no-figures", action="store_true",
                   help="skip matplotlib figure rendering")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="train/predict/evaluate over a seed range")
    add_config_flags(p, "sim.seed")
    p.add_argument("--seeds", required=True, help="inclusive range a..b")
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except DivergenceError as err:
        print(f"numerical divergence: {err}", file=sys.stderr)
        return 3
    except (StorageError, OSError) as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

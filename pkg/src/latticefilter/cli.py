"""Benchmark command line interface."""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import click

from .config import PRESETS, RunConfig, config_to_dict, parse_config
from .errors import LatticeFilterError
from .harness import read_trajectory, run_experiment, write_trajectory
from .model import build_paper_model, simulate_trajectory
from .rng import substream

_OVERRIDE_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="YAML/JSON config file (or an emitted manifest)."),
    click.option("--seed", type=int, default=None, help="Master seed."),
    click.option("--out", type=click.Path(), default=None, help="Output directory."),
    click.option("--preset", type=click.Choice(PRESETS), default=None),
    click.option("--algos", default=None, help="Comma-separated algorithm list."),
    click.option("--threads", type=int, default=None, envvar="LATTICEFILTER_THREADS"),
    click.option("--runs", type=int, default=None),
    click.option("--L", "L", type=int, default=None),
    click.option("--T", "T", type=int, default=None),
    click.option("--stride", type=int, default=None),
    click.option("--M-fink", "M_fink", type=int, default=None),
    click.option("--M-boot", "M_boot", type=int, default=None),
    click.option("--M-block", "M_block", type=int, default=None),
    click.option("--H", "H", type=int, default=None),
    click.option("--r", "r", type=int, default=None),
    click.option("--zone-size", "zone_size", type=int, default=None),
    click.option("--sweeps", type=int, default=None),
    click.option("--g", type=click.Choice(["uniform", "bentlog"]), default=None),
    click.option("--rho", type=click.Choice(["full", "local", "sampled"]), default=None),
    click.option("--denominator-mode", "denominator_mode",
                 type=click.Choice(["stored", "fresh"]), default=None),
    click.option("--plots/--no-plots", "plots", default=None),
]


def _with_options(fn):
    for option in reversed(_OVERRIDE_OPTIONS):
        fn = option(fn)
    return fn


def _resolve(config_path, preset, **overrides) -> RunConfig:
    try:
        return parse_config(config_path, overrides, preset=preset)
    except LatticeFilterError as exc:
        raise click.ClickException(str(exc)) from exc


@click.group()
def main():
    """Lattice-model filtering benchmarks with an exact oracle."""


@main.command()
@_with_options
def simulate(config_path, preset, **overrides):
    """Simulate a trajectory and write it with a sidecar manifest."""
    cfg = _resolve(config_path, preset, **overrides)
    model = build_paper_model(cfg.L, cfg.stride)
    states, obs = simulate_trajectory(model, cfg.T, substream(cfg.master_seed, "trajectory"))
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "trajectory.csv"
    write_trajectory(path, states, obs)
    manifest = {"config": config_to_dict(cfg), "seed": cfg.master_seed}
    (out_dir / "trajectory_manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    click.echo(f"wrote {path}")


@main.command("filter")
@click.option("--trajectory", "trajectory_path", type=click.Path(exists=True), required=True)
@click.option("--algo", type=click.Choice(["bootstrap", "block", "finkelstein"]), required=True)
@_with_options
def filter_cmd(trajectory_path, algo, config_path, preset, **overrides):
    """Run one algorithm against a stored trajectory."""
    cfg = _resolve(config_path, preset, **overrides)
    cfg = replace(cfg, algorithms=("kalman", algo))
    try:
        trajectory = read_trajectory(Path(trajectory_path))
        result = run_experiment(cfg, trajectory=trajectory)
    except LatticeFilterError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"wrote {len(result.files)} files to {cfg.out_dir}")


@main.command()
@_with_options
def compare(config_path, preset, **overrides):
    """Run all configured algorithms and emit metrics."""
    cfg = _resolve(config_path, preset, **overrides)
    try:
        result = run_experiment(cfg)
    except LatticeFilterError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"wrote {len(result.files)} files to {cfg.out_dir}")


@main.command("reproduce-paper")
@_with_options
def reproduce_paper(config_path, preset, **overrides):
    """Chain the three figure presets into out/figure{3,4,5}."""
    if preset is not None:
        raise click.ClickException("reproduce-paper runs all presets; drop --preset")
    base = _resolve(config_path, None, **overrides)
    for name in PRESETS:
        cfg = _resolve(config_path, name, **overrides)
        cfg = replace(cfg, out_dir=str(Path(base.out_dir) / name))
        try:
            result = run_experiment(cfg)
        except LatticeFilterError as exc:
            raise click.ClickException(f"{name}: {exc}") from exc
        click.echo(f"{name}: wrote {len(result.files)} files to {cfg.out_dir}")


@main.command()
@click.option("--param", type=click.Choice(["L", "H"]), default="L")
@click.option("--values", default="30,60,90", help="Comma-separated grid.")
@_with_options
def sweep(param, values, config_path, preset, **overrides):
    """Repeat the experiment over a parameter grid, one block per value."""
    base = _resolve(config_path, preset, **overrides)
    try:
        grid = [int(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise click.ClickException(f"--values: {exc}") from exc
    for value in grid:
        if param == "L":
            cfg = replace(base, L=value)
        else:
            cfg = replace(base, fink=replace(base.fink, history_count=value))
        cfg = replace(cfg, out_dir=str(Path(base.out_dir) / f"{param}={value}"))
        try:
            result = run_experiment(cfg)
        except LatticeFilterError as exc:
            raise click.ClickException(f"{param}={value}: {exc}") from exc
        click.echo(f"{param}={value}: wrote {len(result.files)} files to {cfg.out_dir}")


if __name__ == "__main__":
    main()

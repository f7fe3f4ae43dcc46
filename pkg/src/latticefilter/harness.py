"""Experiment runner: shared trajectory, algorithm replicates, CSV emission.

One experiment simulates a single trajectory, computes the exact filtering
distribution, then runs each selected particle algorithm R times with
distinct substreams against the same observations. Metrics are computed
per replicate and written to delimited files, optionally with rendered
figures alongside.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .block import block_filter, make_partition
from .bootstrap import bootstrap_filter
from .config import RunConfig, config_to_dict
from .errors import ConfigError, InvalidDimensionError
from .finkelstein import finkelstein_filter
from .kalman import GaussianBelief, kalman_filter
from .metrics import (
    classify_loci,
    ensemble_gaussian_fit,
    gaussian_kl,
    per_locus_sq_err,
    summed_locus_trace,
    variance_ratio,
)
from .model import build_paper_model, simulate_trajectory
from .rng import substream


@dataclass
class AlgRunResult:
    algorithm: str
    run: int
    g_variant: str | None
    means: np.ndarray  # (T, L)
    sq_err: np.ndarray  # (T, L)
    var_ratio: np.ndarray  # (T, L)
    kl: np.ndarray | None = None  # (T,) oracle-first
    kl_rev: np.ndarray | None = None  # (T,) fit-first
    degeneracy: list | None = None  # [(max_weight, ess)] per step
    diagnostics: list | None = None  # per-step ChainDiagnostics
    wall_time: float = 0.0


@dataclass
class ExperimentResult:
    config: RunConfig
    states: np.ndarray
    observations: np.ndarray
    beliefs: list[GaussianBelief]  # T entries, aligned with observations
    runs: list[AlgRunResult]
    locus_class: tuple[str, ...]
    files: list[Path]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    """Strict reader: one header row, fixed column count, finite numerics."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for row in reader:
            if len(row) != len(header):
                raise ValueError(f"{path}: ragged row {row!r}")
            for cell in row:
                try:
                    value = float(cell)
                except ValueError:
                    continue
                if not np.isfinite(value):
                    raise ValueError(f"{path}: non-finite value {cell!r}")
            rows.append(row)
    return header, rows


def write_trajectory(path: Path, states: np.ndarray, observations: np.ndarray) -> None:
    rows = []
    T, L = states.shape
    for t in range(T):
        for locus in range(L):
            rows.append((t + 1, locus, states[t, locus], observations[t, locus]))
    write_csv(path, ["time", "locus", "truth", "observation"], rows)


def read_trajectory(path: Path) -> tuple[np.ndarray, np.ndarray]:
    header, rows = read_csv(path)
    if header != ["time", "locus", "truth", "observation"]:
        raise ConfigError(f"{path}: unexpected trajectory header {header}")
    times = sorted({int(r[0]) for r in rows})
    loci = sorted({int(r[1]) for r in rows})
    T, L = len(times), len(loci)
    states = np.empty((T, L))
    obs = np.empty((T, L))
    for r in rows:
        t, locus = int(r[0]) - 1, int(r[1])
        states[t, locus] = float(r[2])
        obs[t, locus] = float(r[3])
    return states, obs


def _fink_cfg_for(cfg: RunConfig, g_variant: str):
    return replace(cfg.fink, g_variant=g_variant)


def run_algorithm(
    alg: str,
    run: int,
    g_variant: str | None,
    observations: np.ndarray,
    model,
    beliefs: list[GaussianBelief],
    cfg: RunConfig,
) -> AlgRunResult:
    """One replicate of one algorithm on fixed observations."""
    started = time.perf_counter()
    T = observations.shape[0]
    if alg == "bootstrap":
        rng = substream(cfg.master_seed, "bootstrap", run)
        steps = bootstrap_filter(observations, model, cfg.m_boot, rng)
        ensembles = [e for e, _ in steps]
        degeneracy = [(s.max_weight, s.ess) for _, s in steps]
        diagnostics = None
        kl = kl_rev = None
    elif alg == "block":
        rng = substream(cfg.master_seed, "block", run)
        partition = make_partition(cfg.L, cfg.zone_size)
        ensembles = block_filter(observations, partition, model, cfg.m_block, rng)
        degeneracy = diagnostics = None
        kl = kl_rev = None
    elif alg == "finkelstein":
        g = g_variant or cfg.fink.g_variant
        rng = substream(cfg.master_seed, "finkelstein", run, g)
        steps = finkelstein_filter(observations, model, _fink_cfg_for(cfg, g), rng)
        ensembles = [e for e, _ in steps]
        diagnostics = [d for _, d in steps]
        degeneracy = None
        kl = np.empty(T)
        kl_rev = np.empty(T)
        for t, e in enumerate(ensembles):
            fit = ensemble_gaussian_fit(e)
            kl[t] = gaussian_kl(beliefs[t], fit)
            kl_rev[t] = gaussian_kl(fit, beliefs[t])
    else:
        raise ConfigError(f"algorithms: cannot run {alg!r} as a particle method")

    means = np.stack([e.mean(axis=0) for e in ensembles])
    sq_err = np.stack([per_locus_sq_err(e, beliefs[t]) for t, e in enumerate(ensembles)])
    var_ratio = np.stack(
        [variance_ratio(e, beliefs[t]) for t, e in enumerate(ensembles)]
    )
    return AlgRunResult(
        algorithm=alg,
        run=run,
        g_variant=g_variant,
        means=means,
        sq_err=sq_err,
        var_ratio=var_ratio,
        kl=kl,
        kl_rev=kl_rev,
        degeneracy=degeneracy,
        diagnostics=diagnostics,
        wall_time=time.perf_counter() - started,
    )


def _job_list(cfg: RunConfig) -> list[tuple[str, int, str | None]]:
    jobs = []
    fink_variants: tuple[str | None, ...]
    if cfg.emit_kl:
        fink_variants = cfg.kl_g_variants
    else:
        fink_variants = (cfg.fink.g_variant,)
    for alg in cfg.algorithms:
        if alg == "kalman":
            continue  # always computed as the oracle
        if alg == "finkelstein":
            for g in fink_variants:
                for run in range(cfg.runs):
                    jobs.append((alg, run, g))
        else:
            for run in range(cfg.runs):
                jobs.append((alg, run, None))
    return jobs


def display_variant(cfg: RunConfig) -> str:
    variants = cfg.kl_g_variants if cfg.emit_kl else (cfg.fink.g_variant,)
    return cfg.fink.g_variant if cfg.fink.g_variant in variants else variants[0]


def run_experiment(
    cfg: RunConfig,
    trajectory: tuple[np.ndarray, np.ndarray] | None = None,
) -> ExperimentResult:
    """Run the configured experiment and write all requested outputs.

    A supplied ``trajectory`` (states, observations) replaces simulation;
    substream derivation is unchanged so results match the simulated path
    bit-for-bit when the trajectory came from the same seed.
    """
    model = build_paper_model(cfg.L, cfg.stride)
    if trajectory is None:
        traj_rng = substream(cfg.master_seed, "trajectory")
        states, observations = simulate_trajectory(model, cfg.T, traj_rng)
    else:
        states, observations = trajectory
        if observations.shape[1] != cfg.L:
            raise InvalidDimensionError(
                f"trajectory has {observations.shape[1]} loci, config says {cfg.L}"
            )
    beliefs = kalman_filter(observations, model)[1:]
    partition = make_partition(cfg.L, cfg.zone_size)
    locus_class = classify_loci(partition)

    jobs = _job_list(cfg)
    if cfg.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = {
                job: pool.submit(
                    run_algorithm, job[0], job[1], job[2], observations, model, beliefs, cfg
                )
                for job in jobs
            }
            results = [futures[job].result() for job in jobs]
    else:
        results = [
            run_algorithm(job[0], job[1], job[2], observations, model, beliefs, cfg)
            for job in jobs
        ]

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        _emit_outputs(cfg, out_dir, states, observations, beliefs, results, locus_class, written)
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return ExperimentResult(
        config=cfg,
        states=states,
        observations=observations,
        beliefs=beliefs,
        runs=results,
        locus_class=locus_class,
        files=written,
    )


def _emit_outputs(cfg, out_dir, states, observations, beliefs, results, locus_class, written):
    T, L = states.shape
    display_g = display_variant(cfg)

    def is_display(r: AlgRunResult) -> bool:
        return r.algorithm != "finkelstein" or r.g_variant == display_g

    def emit(name, header, rows):
        path = out_dir / name
        write_csv(path, header, rows)
        written.append(path)

    # Exact filter means/variances are always exported.
    kalman_rows = [
        (t + 1, locus, beliefs[t].mean[locus], beliefs[t].covariance[locus, locus])
        for t in range(T)
        for locus in range(L)
    ]
    emit("kalman.csv", ["time", "locus", "mean", "variance"], kalman_rows)

    if cfg.emit_trace:
        series = {
            "truth": states,
            "observation": observations,
            "kalman": np.stack([b.mean for b in beliefs]),
        }
        for r in results:
            if r.run == 0 and is_display(r) and r.algorithm not in series:
                series[r.algorithm] = r.means
        sums = summed_locus_trace(series, cfg.trace_from, cfg.trace_to)
        rows = [
            (t + 1, name, sums[name][t]) for t in range(T) for name in sums
        ]
        emit("trace.csv", ["time", "series", "value"], rows)

    if cfg.emit_sqerr:
        rows = []
        ratio_rows = []
        for r in results:
            if not is_display(r):
                continue
            for t in range(T):
                for locus in range(L):
                    rows.append(
                        (r.run, t + 1, r.algorithm, locus, locus_class[locus], r.sq_err[t, locus])
                    )
                    ratio_rows.append(
                        (r.run, t + 1, r.algorithm, locus, r.var_ratio[t, locus])
                    )
        emit("sqerr.csv", ["run", "time", "algorithm", "locus", "class", "sq_err"], rows)
        emit("varratio.csv", ["run", "time", "algorithm", "locus", "ratio"], ratio_rows)

    if cfg.emit_kl:
        rows = []
        alt_rows = []
        for r in results:
            if r.kl is None:
                continue
            for t in range(T):
                rows.append((r.run, t + 1, r.g_variant, r.kl[t]))
                alt_rows.append((r.run, t + 1, r.g_variant, r.kl_rev[t]))
        emit("kl.csv", ["run", "time", "g_variant", "kl"], rows)
        emit("kl_alt.csv", ["run", "time", "g_variant", "kl"], alt_rows)

    if cfg.emit_degeneracy:
        rows = [
            (r.run, t + 1, r.algorithm, stats[0], stats[1])
            for r in results
            if r.degeneracy is not None
            for t, stats in enumerate(r.degeneracy)
        ]
        emit("degeneracy.csv", ["run", "time", "algorithm", "max_weight", "m_eff"], rows)

    diag = next(
        (r for r in results if r.diagnostics is not None and r.run == 0 and is_display(r)),
        None,
    )
    if diag is not None:
        rows = [
            (t + 1, chain, d.acceptance_rate[chain], d.modal_history_fraction[chain])
            for t, d in enumerate(diag.diagnostics)
            for chain in range(d.acceptance_rate.size)
        ]
        emit(
            "diagnostics.csv",
            ["time", "chain", "acceptance_rate", "modal_history_fraction"],
            rows,
        )

    manifest = {
        "config": config_to_dict(cfg),
        "seed": cfg.master_seed,
        "versions": {
            "latticefilter": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "wall_times": {
            f"{r.algorithm}/{r.g_variant or '-'}/run{r.run}": round(r.wall_time, 3)
            for r in results
        },
        "files": [p.name for p in written],
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    written.append(manifest_path)

    if cfg.plots:
        from .figures import render_available

        written.extend(render_available(out_dir))

"""Render report figures from the emitted delimited files."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .harness import read_csv

_SAVEFIG_KW = dict(dpi=150, metadata={"Software": None})


def _save(fig, path: Path):
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)


def render_trace(csv_path: Path, out_path: Path) -> Path:
    """Two-panel time trace: truth/observation/exact mean on top, all
    filter means below."""
    _, rows = read_csv(csv_path)
    series = defaultdict(dict)
    for t, name, value in rows:
        series[name][int(t)] = float(value)

    def xy(name):
        pts = sorted(series[name].items())
        return [p[0] for p in pts], [p[1] for p in pts]

    fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for name in ("truth", "observation", "kalman"):
        if name in series:
            top.plot(*xy(name), marker="o", label=name)
    top.set_ylabel("summed locus band")
    top.legend()
    for name in sorted(series):
        if name in ("truth", "observation"):
            continue
        bottom.plot(*xy(name), marker="o", label=name)
    bottom.set_xlabel("time step")
    bottom.set_ylabel("filter mean")
    bottom.legend()
    fig.tight_layout()
    _save(fig, out_path)
    return out_path


def render_sqerr(csv_path: Path, out_path: Path) -> Path:
    """Per-locus mean squared error for each algorithm, central loci marked."""
    _, rows = read_csv(csv_path)
    acc = defaultdict(list)
    central = set()
    for run, t, alg, locus, cls, err in rows:
        acc[(alg, int(locus))].append(float(err))
        if cls == "zone_central":
            central.add(int(locus))
    algs = sorted({alg for alg, _ in acc})
    fig, ax = plt.subplots(figsize=(8, 4))
    for alg in algs:
        loci = sorted(l for a, l in acc if a == alg)
        means = [np.mean(acc[(alg, l)]) for l in loci]
        ax.plot(loci, means, marker="o", label=alg)
    for l in sorted(central):
        ax.axvline(l, color="0.85", zorder=0)
    ax.set_xlabel("locus (grey lines: zone-central)")
    ax.set_ylabel("mean squared error vs exact mean")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    _save(fig, out_path)
    return out_path


def render_kl(csv_path: Path, out_path: Path) -> Path:
    """KL divergence from the exact filter over time, one line per g variant."""
    _, rows = read_csv(csv_path)
    acc = defaultdict(lambda: defaultdict(list))
    for run, t, g, kl in rows:
        acc[g][int(t)].append(float(kl))
    fig, ax = plt.subplots(figsize=(7, 4))
    for g in sorted(acc):
        times = sorted(acc[g])
        ax.plot(times, [np.mean(acc[g][t]) for t in times], marker="o", label=g)
    ax.set_xlabel("time step")
    ax.set_ylabel("KL(exact || fitted)")
    ax.legend(title="history weights")
    fig.tight_layout()
    _save(fig, out_path)
    return out_path


_RENDERERS = {
    "trace.csv": ("trace.png", render_trace),
    "sqerr.csv": ("sqerr.png", render_sqerr),
    "kl.csv": ("kl.png", render_kl),
}


def render_available(out_dir: Path) -> list[Path]:
    """Render a figure next to every known delimited file in ``out_dir``."""
    rendered = []
    for name, (png, renderer) in _RENDERERS.items():
        csv_path = out_dir / name
        if csv_path.exists():
            rendered.append(renderer(csv_path, out_dir / png))
    return rendered

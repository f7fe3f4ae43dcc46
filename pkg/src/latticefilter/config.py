"""Run configuration: file parsing, flag overrides, presets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .errors import ConfigError
from .finkelstein import (
    DENOMINATOR_MODES,
    G_VARIANTS,
    RHO_VARIANTS,
    FinkelsteinConfig,
)

ALGORITHMS = ("kalman", "bootstrap", "block", "finkelstein")
PRESETS = ("figure3", "figure4", "figure5")

# Benchmark defaults: L=30, T=10, M_fink=400, M_boot=160000, M_block=32000,
# H=45, r=1, zone size 3, R=5 averaged runs.
DEFAULT_M_BOOT = 160000
DEFAULT_M_BLOCK = 32000
DEFAULT_ZONE_SIZE = 3
DEFAULT_RUNS = 5


@dataclass(frozen=True)
class RunConfig:
    L: int = 30
    T: int = 10
    stride: int = 4
    algorithms: tuple[str, ...] = ALGORITHMS
    m_boot: int = DEFAULT_M_BOOT
    m_block: int = DEFAULT_M_BLOCK
    zone_size: int = DEFAULT_ZONE_SIZE
    fink: FinkelsteinConfig = field(default_factory=FinkelsteinConfig)
    kl_g_variants: tuple[str, ...] = ("uniform", "bentlog")
    runs: int = DEFAULT_RUNS
    master_seed: int = 0
    out_dir: str = "out"
    threads: int = 1
    emit_trace: bool = True
    emit_sqerr: bool = True
    emit_kl: bool = True
    emit_degeneracy: bool = True
    plots: bool = True
    trace_from: int = 2  # 0-based band of loci summed in the trace report
    trace_to: int = 4

    def __post_init__(self):
        _check(self.L >= 2, "model.L", "must be >= 2")
        _check(self.T >= 1, "model.T", "must be >= 1")
        _check(self.stride >= 1, "model.stride", "must be >= 1")
        _check(self.runs >= 1, "runs", "must be >= 1")
        _check(self.m_boot >= 1, "bootstrap.particles", "must be >= 1")
        _check(self.m_block >= 1, "block.particles", "must be >= 1")
        _check(self.zone_size >= 1, "block.zone_size", "must be >= 1")
        _check(self.threads >= 1, "threads", "must be >= 1")
        for alg in self.algorithms:
            _check(alg in ALGORITHMS, "algorithms", f"unknown algorithm {alg!r}")
        for g in self.kl_g_variants:
            _check(g in G_VARIANTS, "kl_g_variants", f"unknown g variant {g!r}")
        _check(
            0 <= self.trace_from <= self.trace_to < self.L,
            "output.trace_band",
            "must satisfy 0 <= from <= to < L",
        )


def _check(ok: bool, path: str, message: str):
    if not ok:
        raise ConfigError(f"{path}: {message}")


_SCHEMA = {
    "model": {"L": int, "T": int, "stride": int},
    "algorithms": list,
    "bootstrap": {"particles": int},
    "block": {"particles": int, "zone_size": int},
    "finkelstein": {
        "particles": int,
        "histories": int,
        "radius": int,
        "sweeps": int,
        "rho": str,
        "g": str,
        "bentlog_a": float,
        "bentlog_b": float,
        "denominator_mode": str,
    },
    "kl_g_variants": list,
    "runs": int,
    "seed": int,
    "threads": int,
    "output": {
        "dir": str,
        "trace": bool,
        "sqerr": bool,
        "kl": bool,
        "degeneracy": bool,
        "plots": bool,
        "trace_from": int,
        "trace_to": int,
    },
}


def _validate_keys(data: dict, schema: dict, prefix: str = ""):
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(f"{path}: unknown key")
        expected = schema[key]
        if isinstance(expected, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: expected a mapping")
            _validate_keys(value, expected, prefix=f"{path}.")
        elif expected is float:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{path}: expected a number, got {value!r}")
        elif expected is int:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{path}: expected an integer, got {value!r}")
        elif not isinstance(value, expected):
            raise ConfigError(
                f"{path}: expected {expected.__name__}, got {type(value).__name__}"
            )


def config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from a (validated) nested mapping."""
    _validate_keys(data, _SCHEMA)
    model = data.get("model", {})
    fink_raw = data.get("finkelstein", {})
    fink_kwargs = {}
    renames = {
        "particles": "particle_count",
        "histories": "history_count",
        "rho": "rho_variant",
        "g": "g_variant",
    }
    for key, value in fink_raw.items():
        fink_kwargs[renames.get(key, key)] = value
    if "rho_variant" in fink_kwargs:
        _check(
            fink_kwargs["rho_variant"] in RHO_VARIANTS,
            "finkelstein.rho",
            f"must be one of {RHO_VARIANTS}",
        )
    if "g_variant" in fink_kwargs:
        _check(
            fink_kwargs["g_variant"] in G_VARIANTS,
            "finkelstein.g",
            f"must be one of {G_VARIANTS}",
        )
    if "denominator_mode" in fink_kwargs:
        _check(
            fink_kwargs["denominator_mode"] in DENOMINATOR_MODES,
            "finkelstein.denominator_mode",
            f"must be one of {DENOMINATOR_MODES}",
        )
    output = data.get("output", {})
    block = data.get("block", {})
    kwargs = dict(
        L=model.get("L", 30),
        T=model.get("T", 10),
        stride=model.get("stride", 4),
        m_boot=data.get("bootstrap", {}).get("particles", DEFAULT_M_BOOT),
        m_block=block.get("particles", DEFAULT_M_BLOCK),
        zone_size=block.get("zone_size", DEFAULT_ZONE_SIZE),
        fink=FinkelsteinConfig(**fink_kwargs),
        runs=data.get("runs", DEFAULT_RUNS),
        master_seed=data.get("seed", 0),
        threads=data.get("threads", 1),
        out_dir=output.get("dir", "out"),
        emit_trace=output.get("trace", True),
        emit_sqerr=output.get("sqerr", True),
        emit_kl=output.get("kl", True),
        emit_degeneracy=output.get("degeneracy", True),
        plots=output.get("plots", True),
        trace_from=output.get("trace_from", 2),
        trace_to=output.get("trace_to", 4),
    )
    if "algorithms" in data:
        kwargs["algorithms"] = tuple(data["algorithms"])
    if "kl_g_variants" in data:
        kwargs["kl_g_variants"] = tuple(data["kl_g_variants"])
    try:
        return RunConfig(**kwargs)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def config_to_dict(cfg: RunConfig) -> dict:
    """Inverse of config_from_dict; round-trips exactly."""
    return {
        "model": {"L": cfg.L, "T": cfg.T, "stride": cfg.stride},
        "algorithms": list(cfg.algorithms),
        "bootstrap": {"particles": cfg.m_boot},
        "block": {"particles": cfg.m_block, "zone_size": cfg.zone_size},
        "finkelstein": {
            "particles": cfg.fink.particle_count,
            "histories": cfg.fink.history_count,
            "radius": cfg.fink.radius,
            "sweeps": cfg.fink.sweeps,
            "rho": cfg.fink.rho_variant,
            "g": cfg.fink.g_variant,
            "bentlog_a": cfg.fink.bentlog_a,
            "bentlog_b": cfg.fink.bentlog_b,
            "denominator_mode": cfg.fink.denominator_mode,
        },
        "kl_g_variants": list(cfg.kl_g_variants),
        "runs": cfg.runs,
        "seed": cfg.master_seed,
        "threads": cfg.threads,
        "output": {
            "dir": cfg.out_dir,
            "trace": cfg.emit_trace,
            "sqerr": cfg.emit_sqerr,
            "kl": cfg.emit_kl,
            "degeneracy": cfg.emit_degeneracy,
            "plots": cfg.plots,
            "trace_from": cfg.trace_from,
            "trace_to": cfg.trace_to,
        },
    }


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix == ".json":
        data = json.loads(text)
    else:
        data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    # Manifests embed the config under a "config" key.
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return data


def apply_preset(cfg: RunConfig, preset: str) -> RunConfig:
    """Figure presets: single-run trace, per-locus error, KL stability."""
    if preset == "figure3":
        return replace(
            cfg,
            runs=1,
            algorithms=("kalman", "bootstrap", "block", "finkelstein"),
            emit_trace=True,
            emit_sqerr=False,
            emit_kl=False,
            emit_degeneracy=True,
        )
    if preset == "figure4":
        return replace(
            cfg,
            algorithms=("kalman", "block", "finkelstein"),
            emit_trace=False,
            emit_sqerr=True,
            emit_kl=False,
            emit_degeneracy=False,
        )
    if preset == "figure5":
        return replace(
            cfg,
            algorithms=("kalman", "finkelstein"),
            emit_trace=False,
            emit_sqerr=False,
            emit_kl=True,
            emit_degeneracy=False,
        )
    raise ConfigError(f"preset: unknown preset {preset!r}")


def parse_config(
    path: str | Path | None = None,
    overrides: dict | None = None,
    preset: str | None = None,
) -> RunConfig:
    """Resolve a RunConfig: file values, then preset, then flag overrides.

    Overrides use flat CLI names (L, T, M_fink, H, r, zone_size, sweeps, g,
    rho, denominator_mode, seed, out, threads, algos, M_boot, M_block) and
    win over file and preset values.
    """
    data = load_config_file(path) if path is not None else {}
    cfg = config_from_dict(data)
    if preset is not None:
        cfg = apply_preset(cfg, preset)
    if not overrides:
        return cfg
    return apply_overrides(cfg, overrides)


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    fink_kwargs = {}
    top = {}
    mapping = {
        "L": ("L", int),
        "T": ("T", int),
        "stride": ("stride", int),
        "seed": ("master_seed", int),
        "out": ("out_dir", str),
        "threads": ("threads", int),
        "runs": ("runs", int),
        "M_boot": ("m_boot", int),
        "M_block": ("m_block", int),
        "zone_size": ("zone_size", int),
    }
    fink_mapping = {
        "M_fink": ("particle_count", int),
        "H": ("history_count", int),
        "r": ("radius", int),
        "sweeps": ("sweeps", int),
        "g": ("g_variant", str),
        "rho": ("rho_variant", str),
        "denominator_mode": ("denominator_mode", str),
    }
    for key, value in overrides.items():
        if value is None:
            continue
        if key in mapping:
            name, cast = mapping[key]
            top[name] = cast(value)
        elif key in fink_mapping:
            name, cast = fink_mapping[key]
            fink_kwargs[name] = cast(value)
        elif key == "algos":
            algos = value if isinstance(value, (list, tuple)) else str(value).split(",")
            top["algorithms"] = tuple(a.strip() for a in algos if a.strip())
        elif key == "plots":
            top["plots"] = bool(value)
        else:
            raise ConfigError(f"{key}: unknown override")
    if "denominator_mode" in fink_kwargs:
        # CLI uses the short forms "stored" / "fresh".
        short = {"stored": "stored_eta", "fresh": "fresh_eta"}
        fink_kwargs["denominator_mode"] = short.get(
            fink_kwargs["denominator_mode"], fink_kwargs["denominator_mode"]
        )
    if fink_kwargs:
        top["fink"] = replace(cfg.fink, **fink_kwargs)
    try:
        return replace(cfg, **top)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

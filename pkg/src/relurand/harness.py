"""Experiment orchestration: config validation, deterministic trial fan-out,
CSV/JSON emission.

A config is a flat record; run_experiment dispatches per trial with
stream_id = trial index, so output is a pure function of the config bytes
and identical under any worker count (results are merged in trial-index
order).
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .adversarial import dimension_sweep, flip_search
from .collapse import collapse_simulate, kernel_iterate
from .errors import ConfigError
from .network import Architecture, InitMode, TiePolicy, build_network, forward, gradient
from .probes import (
    probe_activation_margin,
    probe_dist_equiv,
    probe_gaussian_spectral,
    probe_gradient_smoothness,
    probe_scale_preservation,
    probe_segment_spectral,
    probe_sign_flip,
    probe_value_gradient,
)
from .rng import RngStream

__all__ = ["ExperimentConfig", "TrialRecord", "run_experiment",
           "write_csv", "write_summary_json", "PROBE_NAMES"]

PROBE_NAMES = (
    "value_gradient",
    "scale_preservation",
    "activation_margin",
    "gradient_smoothness",
    "segment_spectral",
    "sign_flip",
    "dist_equiv",
    "gaussian_spectral",
)

_KINDS = ("attack", "sweep", "collapse", "kernel") + tuple(f"probe:{n}" for n in PROBE_NAMES)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    master_seed: int = 0
    d: int = 64
    widths: tuple[int, ...] = ()
    trials: int = 100
    radius: float = 1.0
    alpha: float = 0.1
    delta: float = 0.1
    t_max: Optional[float] = None
    dims: tuple[int, ...] = ()
    theta_0: float = float(np.pi / 2)
    steps: int = 100
    n_pairs: int = 20
    width: int = 256
    depth: int = 50
    n_samples: int = 20
    n_draws: int = 100_000
    workers: int = 1
    alert_level: float = 0.05

    def validate(self) -> None:
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown experiment kind '{self.kind}'")
        for key in ("d", "trials", "steps", "n_pairs", "width", "depth",
                    "n_samples", "n_draws", "workers"):
            if getattr(self, key) < 1:
                raise ConfigError(f"'{key}' must be positive")
        if not (0.0 < self.delta < 1.0):
            raise ConfigError("'delta' must lie in (0, 1)")
        if self.radius < 0.0:
            raise ConfigError("'radius' must be >= 0")
        if self.kind == "sweep" and not self.dims:
            raise ConfigError("'dims' must be a nonempty list for sweep")
        if self.kind == "probe:gaussian_spectral" and len(self.dims) != 2:
            raise ConfigError("'dims' must be [m, n] for probe:gaussian_spectral")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        data = dict(data)
        for key in ("widths", "dims"):
            if key in data:
                data[key] = tuple(data[key])
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["widths"] = list(d["widths"])
        d["dims"] = list(d["dims"])
        return d


@dataclass
class TrialRecord:
    index: int
    seed: int
    values: dict
    status: str = "ok"


def _arch(cfg: ExperimentConfig) -> Architecture:
    widths = cfg.widths if cfg.widths else (cfg.d,)
    return Architecture(cfg.d, widths)


def _map_trials(cfg: ExperimentConfig, fn, n: int) -> list:
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(fn, range(n)))
    return [fn(i) for i in range(n)]


def _run_attack(cfg: ExperimentConfig):
    arch = _arch(cfg)

    def trial(i: int) -> TrialRecord:
        rng = RngStream(cfg.master_seed, i)
        net = build_network(arch, InitMode.STANDARD, rng)
        x = rng.sphere_point(arch.input_dim, norm=np.sqrt(arch.input_dim))
        res = flip_search(net, x, cfg.t_max, delta=cfg.delta, rng=rng)
        vals = {"f_x": res.f_x, "grad_norm": res.grad_norm,
                "paper_eta": res.paper_eta, "evaluations": res.evaluations}
        if res.flipped:
            vals.update(t_star=res.t_star, ratio=res.ratio)
            return TrialRecord(i, i, vals)
        return TrialRecord(i, i, vals, status="not_flipped")

    rows = _map_trials(cfg, trial, cfg.trials)
    ratios = [r.values["ratio"] for r in rows if r.status == "ok"]
    summary = {
        "flip_rate": len(ratios) / cfg.trials,
        "ratio_median": float(np.median(ratios)) if ratios else None,
        "ratio_q95": float(np.quantile(ratios, 0.95)) if ratios else None,
    }
    return rows, summary


def _run_sweep(cfg: ExperimentConfig):
    ell = len(cfg.widths) if cfg.widths else 2
    res = dimension_sweep(cfg.dims, ell, cfg.trials, cfg.master_seed, delta=cfg.delta)
    rows = [
        TrialRecord(i, i, {
            "d": r.d, "trials": r.trials, "flips": r.flips, "flip_rate": r.flip_rate,
            "ratio_median": r.ratio_median, "ratio_q05": r.ratio_q05,
            "ratio_q95": r.ratio_q95,
        })
        for i, r in enumerate(res.rows)
    ]
    summary = {"slope": res.slope, "intercept": res.intercept}
    return rows, summary


def _run_kernel(cfg: ExperimentConfig):
    trace = kernel_iterate(cfg.theta_0, cfg.steps)
    rows = [TrialRecord(t, t, {"theta": float(trace.thetas[t]), "rho": float(trace.rhos[t])})
            for t in range(cfg.steps)]
    summary = {"theta_0": cfg.theta_0, "rho_final": float(trace.rhos[-1])}
    return rows, summary


def _run_collapse(cfg: ExperimentConfig):
    rep = collapse_simulate(cfg.d, cfg.width, cfg.depth, cfg.n_pairs, cfg.master_seed)
    rows = []
    for t in range(cfg.depth):
        rows.append(TrialRecord(t, t, {
            "layer": t + 1,
            "cosine_median": float(np.nanmedian(rep.layer_cosines[:, t])),
            "kernel_rho_median": float(np.median(rep.kernel_track[:, t])),
            "norm_median": float(np.median(rep.layer_norms[:, t])),
            "norm_ratio_median": float(np.median(rep.norm_ratios[:, t])),
        }))
    ckpt = {f"constancy_median_depth_{t}": float(np.median(rep.constancy_ratios[:, j]))
            for j, t in enumerate(rep.checkpoint_depths)}
    summary = {"n_pairs": rep.n_pairs, **ckpt}
    return rows, summary


def _run_probe(cfg: ExperimentConfig):
    name = cfg.kind.split(":", 1)[1]
    arch = _arch(cfg)

    if name == "value_gradient":
        rep = probe_value_gradient(arch, cfg.trials, cfg.delta, cfg.master_seed)
        rows = [TrialRecord(i, i + 1, {"abs_f": float(rep.measurements["abs_f"][i]),
                                       "grad_norm": float(rep.measurements["grad_norm"][i])})
                for i in range(cfg.trials)]
        return rows, {**rep.summary, "violation_frequency": rep.violation_frequency}

    if name == "dist_equiv":
        out = probe_dist_equiv(arch, cfg.trials, cfg.master_seed)
        rows = [TrialRecord(0, 0, out)]
        return rows, {**out, "violation_frequency": 0.0 if out["pass"] else 1.0}

    if name == "gaussian_spectral":
        m, n = cfg.dims
        out = probe_gaussian_spectral(m, n, cfg.delta, cfg.trials, cfg.master_seed)
        rows = [TrialRecord(0, 0, out)]
        return rows, {**out, "violation_frequency": out["violations"] / cfg.trials}

    if name == "sign_flip":
        def trial(i: int) -> TrialRecord:
            rng = RngStream(cfg.master_seed, i)
            x = rng.sphere_point(arch.input_dim, norm=np.sqrt(arch.input_dim))
            y = x + rng.sphere_point(arch.input_dim, norm=cfg.radius)
            out = probe_sign_flip(x, y, cfg.n_draws, rng)
            out = {k: v for k, v in out.items() if k != "n_draws"}
            return TrialRecord(i, i, out)
        rows = _map_trials(cfg, trial, cfg.trials)
        excess = [r.values["empirical"] - r.values["bound"]
                  for r in rows if r.values["bound"] is not None]
        freq = float(np.mean([e > 0 for e in excess])) if excess else 0.0
        return rows, {"bound_violation_frequency": freq, "violation_frequency": freq}

    # per-net probes
    def trial(i: int) -> TrialRecord:
        rng = RngStream(cfg.master_seed, i)
        net = build_network(arch, InitMode.STANDARD, rng)
        x = rng.sphere_point(arch.input_dim, norm=np.sqrt(arch.input_dim))
        if name == "scale_preservation":
            rep = probe_scale_preservation(net, x, cfg.radius, cfg.n_samples, rng)
            return TrialRecord(i, i, {
                "norm_violations": rep.summary["norm_violations"],
                "layers": arch.ell,
                "violation_frequency": rep.violation_frequency})
        if name == "activation_margin":
            rep = probe_activation_margin(net, x, cfg.alpha, rng)
            return TrialRecord(i, i, {
                "violations": rep.summary["violations"],
                "layers": rep.summary["layers"],
                "violation_frequency": rep.violation_frequency})
        if name == "gradient_smoothness":
            rep = probe_gradient_smoothness(net, x, cfg.radius, cfg.n_samples, rng)
            return TrialRecord(i, i, {
                "max_drift": rep.summary["max_drift"],
                "max_drift_ratio": rep.summary["max_drift_ratio"],
                "violation_frequency": 0.0})
        if name == "segment_spectral":
            rep = probe_segment_spectral(net, x, cfg.radius, cfg.n_samples, rng)
            return TrialRecord(i, i, {
                "violations": rep.summary["violations"],
                "fitted_c": rep.summary["fitted_c"],
                "violation_frequency": rep.violation_frequency})
        raise ConfigError(f"unknown probe '{name}'")

    rows = _map_trials(cfg, trial, cfg.trials)
    freq = float(np.mean([r.values["violation_frequency"] for r in rows]))
    summary = {"violation_frequency": freq}
    if rows and "max_drift_ratio" in rows[0].values:
        summary["median_max_drift_ratio"] = float(
            np.median([r.values["max_drift_ratio"] for r in rows]))
    return rows, summary


def run_experiment(config: ExperimentConfig) -> dict:
    config.validate()
    if config.kind == "attack":
        rows, summary = _run_attack(config)
    elif config.kind == "sweep":
        rows, summary = _run_sweep(config)
    elif config.kind == "kernel":
        rows, summary = _run_kernel(config)
    elif config.kind == "collapse":
        rows, summary = _run_collapse(config)
    else:
        rows, summary = _run_probe(config)
    summary = {"config": config.to_dict(), "version": f"relurand-{__version__}",
               **summary}
    return {"rows": rows, "summary": summary}


def _render(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(rows: list[TrialRecord], path) -> None:
    """Header row plus one row per trial; floats at 17 significant digits
    so every value round-trips exactly through text."""
    columns: list[str] = []
    for r in rows:
        for k in r.values:
            if k not in columns:
                columns.append(k)
    header = ["trial", "seed", "status"] + columns
    lines = [",".join(header)]
    for r in rows:
        cells = [str(r.index), str(r.seed), r.status]
        cells += [_render(r.values.get(c)) for c in columns]
        lines.append(",".join(cells))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary_json(summary: dict, path) -> None:
    def clean(v):
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, (np.floating,)):
            return float(v)
        if isinstance(v, (np.integer,)):
            return int(v)
        if isinstance(v, np.bool_):
            return bool(v)
        return v

    with open(path, "w") as fh:
        json.dump(clean(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")

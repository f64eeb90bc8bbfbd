"""Command line interface.

Subcommands: sample, attack, sweep, probe <name>, collapse, kernel.
A JSON config file provides the same flat keys as the CLI flags; flags
override config keys one-for-one.  Exit codes: 0 success, 1 config
error, 2 I/O error, 3 a probe's violation frequency exceeded the
configured alert level.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, RelurandError
from .harness import (
    PROBE_NAMES,
    ExperimentConfig,
    run_experiment,
    write_csv,
    write_summary_json,
)
from .network import Architecture, InitMode, build_network, save_network
from .rng import RngStream

__all__ = ["main"]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--config", type=Path, default=None, help="JSON config file")
    p.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--format", choices=["csv", "json", "both"], default="both")
    p.add_argument("--d", type=int, default=None, help="input dimension")
    p.add_argument("--widths", type=int, nargs="*", default=None, help="hidden widths")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--dims", type=int, nargs="*", default=None, help="dimension list (sweep)")
    p.add_argument("--theta0", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--n-pairs", type=int, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--n-samples", type=int, default=None)
    p.add_argument("--n-draws", type=int, default=None)
    p.add_argument("--alert-level", type=float, default=None)


_FLAG_TO_KEY = {
    "seed": "master_seed",
    "workers": "workers",
    "d": "d",
    "widths": "widths",
    "trials": "trials",
    "radius": "radius",
    "alpha": "alpha",
    "delta": "delta",
    "t_max": "t_max",
    "dims": "dims",
    "theta0": "theta_0",
    "steps": "steps",
    "n_pairs": "n_pairs",
    "width": "width",
    "depth": "depth",
    "n_samples": "n_samples",
    "n_draws": "n_draws",
    "alert_level": "alert_level",
}


def _build_config(kind: str, args: argparse.Namespace) -> ExperimentConfig:
    data = {"kind": kind}
    if args.config is not None:
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        loaded.pop("kind", None)
        data.update(loaded)
    for flag, key in _FLAG_TO_KEY.items():
        v = getattr(args, flag, None)
        if v is not None:
            data[key] = v
    return ExperimentConfig.from_dict(data)


def _emit(result: dict, out_dir: Path, fmt: str, stem: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt in ("csv", "both"):
        write_csv(result["rows"], out_dir / f"{stem}.csv")
    if fmt in ("json", "both"):
        write_summary_json(result["summary"], out_dir / f"{stem}_summary.json")


def _cmd_sample(args: argparse.Namespace) -> int:
    d = args.d if args.d is not None else 64
    widths = tuple(args.widths) if args.widths else (d,)
    seed = args.seed if args.seed is not None else 0
    mode = InitMode.DEPTH_COLLAPSE if args.mode == "depth-collapse" else InitMode.STANDARD
    net = build_network(Architecture(d, widths), mode, RngStream(seed, 0))
    out = args.out if args.out else args.out_dir / "network.rrnn"
    save_network(net, out)
    print(f"wrote {out} (d={d}, widths={list(widths)}, mode={mode.name}, seed={seed})")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="relurand",
        description="Random ReLU networks: adversarial flips, bound probes, depth collapse.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sample = sub.add_parser("sample", help="build and save a random network")
    _add_common(p_sample)
    p_sample.add_argument("--mode", choices=["standard", "depth-collapse"],
                          default="standard")
    p_sample.add_argument("--out", type=Path, default=None)

    for name, help_text in [
        ("attack", "single-configuration flip searches"),
        ("sweep", "flip-ratio scaling across input dimensions"),
        ("collapse", "deep-network collapse simulation"),
        ("kernel", "closed-form kernel iteration"),
    ]:
        _add_common(sub.add_parser(name, help=help_text))

    p_probe = sub.add_parser("probe", help="Monte Carlo bound probes")
    p_probe.add_argument("name", choices=list(PROBE_NAMES))
    _add_common(p_probe)

    args = parser.parse_args(argv)

    try:
        if args.command == "sample":
            return _cmd_sample(args)
        kind = f"probe:{args.name}" if args.command == "probe" else args.command
        config = _build_config(kind, args)
        result = run_experiment(config)
        stem = kind.replace(":", "_")
        _emit(result, args.out_dir, args.format, stem)
        freq = result["summary"].get("violation_frequency")
        alert = config.alert_level
        print(json.dumps(
            {k: v for k, v in result["summary"].items() if k != "config"},
            default=str, sort_keys=True))
        if freq is not None and freq > alert:
            return 3
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except RelurandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

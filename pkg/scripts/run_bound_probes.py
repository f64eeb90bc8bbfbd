#!/usr/bin/env python3
"""Run every Monte Carlo bound probe at a moderate default scale.

Prints one line per probe with its violation frequency and writes the
per-probe CSV/JSON outputs into --out-dir.  Exit code 3 if any probe's
violation frequency exceeds --alert-level, mirroring the CLI contract.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from relurand.harness import (
    PROBE_NAMES,
    ExperimentConfig,
    run_experiment,
    write_csv,
    write_summary_json,
)

DEFAULTS = {
    "value_gradient": {"d": 256, "widths": [256, 256], "trials": 200},
    "scale_preservation": {"d": 256, "widths": [256, 256], "trials": 50,
                           "radius": 1.6, "n_samples": 10},
    "activation_margin": {"d": 256, "widths": [256, 256, 256], "trials": 50},
    "gradient_smoothness": {"d": 256, "widths": [256, 256], "trials": 50,
                            "radius": 0.8, "n_samples": 10},
    "segment_spectral": {"d": 256, "widths": [256, 64, 256], "trials": 20,
                         "radius": 1.6, "n_samples": 5},
    "sign_flip": {"d": 200, "trials": 50, "radius": 0.7, "n_draws": 100_000},
    "dist_equiv": {"d": 128, "widths": [128, 128], "trials": 1000},
    "gaussian_spectral": {"dims": [200, 300], "trials": 100, "delta": 0.01},
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--alert-level", type=float, default=0.05)
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    rc = 0
    for name in PROBE_NAMES:
        cfg = ExperimentConfig.from_dict({
            "kind": f"probe:{name}", "master_seed": args.seed,
            "alert_level": args.alert_level, **DEFAULTS[name],
        })
        out = run_experiment(cfg)
        write_csv(out["rows"], args.out_dir / f"probe_{name}.csv")
        write_summary_json(out["summary"], args.out_dir / f"probe_{name}_summary.json")
        freq = out["summary"]["violation_frequency"]
        flag = " ALERT" if freq > args.alert_level else ""
        print(f"{name:22s} violation_frequency={freq:.4f}{flag}")
        if freq > args.alert_level:
            rc = 3
    return rc


if __name__ == "__main__":
    sys.exit(main())

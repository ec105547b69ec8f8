"""Command-line experiment driver.

Subcommands:
  run             run a Monte-Carlo experiment from a JSON config
  sweep-antennas  repeat an experiment across antenna counts

The output directory resolves as: --out flag, then the MIMO_PAPR_OUT
environment variable, then the config's out_dir.
"""
from __future__ import annotations

import argparse
import importlib.resources
import json
import os
import sys

from .harness import ExperimentConfig, emit_results, emit_sweep, run_experiment, sweep_antennas


def load_config(name_or_path: str) -> ExperimentConfig:
    """Load a config from a file path or a shipped preset name (paper, desk)."""
    if os.path.exists(name_or_path):
        return ExperimentConfig.from_json(name_or_path)
    preset = importlib.resources.files("mimo_papr.presets").joinpath(f"{name_or_path}.json")
    if preset.is_file():
        return ExperimentConfig.from_dict(json.loads(preset.read_text(encoding="utf-8")))
    raise FileNotFoundError(f"no config file or preset named {name_or_path!r}")


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    raw = cfg.to_dict()
    if args.trials is not None:
        raw["trials"] = args.trials
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    if args.solvers is not None:
        wanted = [s.strip() for s in args.solvers.split(",") if s.strip()]
        keep = [s for s in raw["solvers"]
                if s.get("label", s["name"]) in wanted or s["name"] in wanted]
        if not keep:
            raise ValueError(f"no configured solver matches {wanted}")
        raw["solvers"] = keep
    if args.out is not None:
        raw["out_dir"] = args.out
    elif os.environ.get("MIMO_PAPR_OUT"):
        raw["out_dir"] = os.environ["MIMO_PAPR_OUT"]
    return ExperimentConfig.from_dict(raw)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mimo-papr",
                                description="OFDM massive-MIMO peak-power reduction experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True,
                        help="path to a JSON config, or a preset name (paper, desk)")
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--solvers", default=None,
                        help="comma-separated subset of configured solver labels")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)

    run_p = sub.add_parser("run", help="run the configured experiment")
    common(run_p)

    sweep_p = sub.add_parser("sweep-antennas", help="repeat across antenna counts")
    common(sweep_p)
    sweep_p.add_argument("--m-values", required=True,
                         help="comma-separated antenna counts, e.g. 20,40,60")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "run":
            res = run_experiment(cfg)
            paths = emit_results(res, cfg.out_dir)
            for row in res.summary:
                print(f"{row['solver']}: PAPR(1%) {row['papr_db_at_ccdf_1pct']:.2f} dB, "
                      f"MUI {row['mean_mui_db']:.1f} dB, OBR {row['mean_obr_db']:.1f} dB")
            print(f"wrote {', '.join(str(p) for p in paths.values())}")
        else:
            m_values = [int(v) for v in args.m_values.split(",") if v.strip()]
            if not m_values:
                raise ValueError("--m-values must list at least one antenna count")
            rows = sweep_antennas(cfg, m_values)
            path = emit_sweep(rows, cfg.out_dir)
            print(f"wrote {path}")
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

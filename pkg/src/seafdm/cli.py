"""Command-line entry point: ``seafdm <subcommand> [--config FILE] ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .errors import ConfigurationError, SeafdmError

DEFAULT_OUT = {
    "ber-sweep": "ber.csv",
    "sinr-sweep": "sinr.csv",
    "search-sweep": "search.csv",
    "sync-demo": "sync.csv",
    "lppn-dump": "lppn.csv",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seafdm", description="Chirp-hopping AFDM experiment runner.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("ber-sweep", "BER of Bob, Eve and baseline AFDM versus SNR"),
        ("sinr-sweep", "analytic eavesdropper SINR versus c2_max"),
        ("search-sweep", "eavesdropper BER versus search interval"),
        ("sync-demo", "frame detection and chirp-generator handover, stage by stage"),
        ("lppn-dump", "export the chip stream as CSV"),
    ]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", type=Path, help="flat key = value experiment file")
        s.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
        s.add_argument("--out", type=Path, help=f"output CSV path (default {DEFAULT_OUT[name]})")
        s.add_argument("--threads", type=int, help="worker threads")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = harness.load_config(args.config, seed=args.seed, threads=args.threads)
        default = harness.ExperimentConfig.output
        out = args.out or Path(cfg.output if cfg.output != default else DEFAULT_OUT[args.command])
        if args.command == "ber-sweep":
            harness.run_ber_sweep(cfg).write(out)
        elif args.command == "sinr-sweep":
            harness.run_sinr_sweep(cfg).write(out, logy=False)
        elif args.command == "search-sweep":
            harness.run_search_interval_sweep(cfg).write(out)
        elif args.command == "sync-demo":
            logs, summary = harness.run_sync_demo(cfg)
            for lg in logs:
                print(lg.to_text())
            summary.to_csv(out)
        elif args.command == "lppn-dump":
            harness.lppn_dump(cfg, out)
    except ConfigurationError as exc:
        print(f"seafdm: configuration error: {exc}", file=sys.stderr)
        return 2
    except (SeafdmError, OSError) as exc:
        print(f"seafdm: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())

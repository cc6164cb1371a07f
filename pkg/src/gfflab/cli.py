"""Command-line entry points ``gff`` and ``bridge``.

Exit codes: 0 when every check passes, 1 when a check fails (the report is
still written), 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigInvalid, GffLabError
from .experiments import EXPERIMENTS, load_toml, resolve_config, run

GFF_COMMANDS = [name for name in EXPERIMENTS if name != "bridge-suite"]
BRIDGE_COMMANDS = {"suite": "bridge-suite"}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="TOML file with experiment settings")
    p.add_argument("--seed", type=int, help="64-bit seed (overrides the file)")
    p.add_argument("--samples", type=int, help="number of Monte-Carlo samples")
    p.add_argument("--mesh", type=float, help="lattice spacing (time step for the bridge suite)")
    p.add_argument("--out", metavar="DIR", help="output directory for report.json and data.csv")
    p.add_argument("--threads", type=int, help="cap on BLAS threads")


def _parser(prog: str, commands) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=prog, description="Run a Gaussian free field lab experiment.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in commands:
        exp = EXPERIMENTS[commands[name] if isinstance(commands, dict) else name]
        _add_common(sub.add_parser(name, help=exp.probes))
    return parser


def _dispatch(args: argparse.Namespace, experiment: str) -> int:
    try:
        file_cfg = load_toml(args.config) if args.config else {}
        overrides = {k: getattr(args, k) for k in ("seed", "samples", "mesh", "out", "threads")}
        cfg = resolve_config(experiment, file_cfg, overrides)
        code = run(cfg)
    except ConfigInvalid as exc:
        print(f"config error: key '{exc.key}': {exc.reason}", file=sys.stderr)
        return 2
    except GffLabError as exc:
        print(f"experiment error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    status = "PASS" if code == 0 else "FAIL"
    print(f"{experiment}: {status} (report in {cfg['out']})")
    return code


def gff_main(argv=None) -> int:
    args = _parser("gff", GFF_COMMANDS).parse_args(argv)
    return _dispatch(args, args.command)


def bridge_main(argv=None) -> int:
    args = _parser("bridge", BRIDGE_COMMANDS).parse_args(argv)
    return _dispatch(args, BRIDGE_COMMANDS[args.command])


def main(argv=None) -> int:
    """``python -m gfflab gff ...`` or ``python -m gfflab bridge ...``."""
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in ("gff", "bridge"):
        print("usage: python -m gfflab {gff,bridge} COMMAND [options]", file=sys.stderr)
        return 2
    return gff_main(argv[1:]) if argv[0] == "gff" else bridge_main(argv[1:])

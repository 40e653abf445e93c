"""Command line entry point: `trotterlab <mode> [--config path] [--flag ...]`.

Exit codes: 0 success, 2 configuration error, 3 partial-failure budget
exceeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from trotterlab.sweep import MODES, ConfigError, PartialFailureError, SweepConfig, load_config, run


def _add_field_flags(parser: argparse.ArgumentParser) -> None:
    for f in dataclasses.fields(SweepConfig):
        if f.name == "mode":
            continue
        flag = "--" + f.name.replace("_", "-")
        if f.name == "delta_taus":
            parser.add_argument(
                flag,
                type=lambda s: [float(x) for x in s.split(",") if x.strip()],
                default=None,
                help="comma-separated offsets from tau*",
            )
        elif f.name == "inits":
            parser.add_argument(
                flag,
                type=json.loads,
                default=None,
                help='explicit initial states as JSON, e.g. "[[1,0,0],[0,1,0]]"',
            )
        elif f.type in ("int", "int | None"):
            parser.add_argument(flag, type=int, default=None)
        elif f.type == "float":
            parser.add_argument(flag, type=float, default=None)
        else:
            parser.add_argument(flag, type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trotterlab",
        description="Deterministic sweeps for kicked collective-spin simulator diagnostics.",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode, help=f"run a {mode} sweep")
        sp.add_argument("--config", type=str, default=None, help="JSON config file")
        _add_field_flags(sp)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    mode = args.pop("mode")
    config_path = args.pop("config")
    try:
        cfg = load_config(config_path, {**args, "mode": mode})
        run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PartialFailureError as exc:
        print(f"sweep failed: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

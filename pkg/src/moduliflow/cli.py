"""Command-line entry point: ``moduliflow <kind> --config PATH [...]``.

Exit status: 0 success, 1 invalid input, 2 runtime failure, 3 blow-up.
Failures print a one-line JSON object on stdout and, when an output
directory is available, also write it to ``error.json``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import KINDS, ConfigError, load_config
from .experiments import run_experiment, write_json
from .flow import BlowUpError
from .io import CheckpointError, checkpoint_write

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_BLOWUP = 0, 1, 2, 3


def thread_cap(environ=os.environ) -> int:
    """Parse ``MFLOW_THREADS``; 0 or unset means sequential."""
    raw = environ.get("MFLOW_THREADS", "").strip()
    if not raw:
        return 0
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"MFLOW_THREADS must be a non-negative integer, got {raw!r}", key="MFLOW_THREADS") from None
    if value < 0:
        raise ConfigError("MFLOW_THREADS must be >= 0", key="MFLOW_THREADS")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moduliflow", description="Run a moduli-flow experiment.")
    parser.add_argument("kind", choices=KINDS, help="experiment kind")
    parser.add_argument("--config", required=True, type=Path, help="experiment configuration file")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory (default: current)")
    parser.add_argument("--checkpoint", type=Path, help="write the final state here")
    parser.add_argument("--resume", type=Path, help="restart from this checkpoint")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    return parser


def _fail(code: int, kind: str, exc: BaseException, out: Path | None, **extra) -> int:
    payload = {"status": "error", "exit_code": code, "error": type(exc).__name__, "message": str(exc), **extra}
    print(json.dumps(payload, sort_keys=True))
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / "error.json", payload)
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID

    try:
        thread_cap()
        config = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be a 64-bit unsigned integer", key="seed")
            config = replace(config, seed=args.seed)
    except (ConfigError, OSError) as exc:
        return _fail(EXIT_INVALID, args.kind, exc, None)

    try:
        summary = run_experiment(config, args.out, kind=args.kind, checkpoint=args.checkpoint, resume=args.resume)
    except (ConfigError, CheckpointError) as exc:
        return _fail(EXIT_INVALID, args.kind, exc, args.out)
    except BlowUpError as exc:
        extra = {"t": exc.state.t, "step": exc.state.step}
        if args.checkpoint is not None:
            checkpoint_write(exc.state, args.checkpoint, controller=exc.controller)
            extra["checkpoint"] = str(args.checkpoint)
        return _fail(EXIT_BLOWUP, args.kind, exc, args.out, **extra)
    except Exception as exc:  # noqa: BLE001 - every other failure maps to the runtime exit code
        return _fail(EXIT_RUNTIME, args.kind, exc, args.out)

    print(json.dumps({"status": "ok", "kind": summary["kind"], "out": str(args.out)}, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

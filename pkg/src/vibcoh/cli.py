"""Command-line runner: ``vibcoh <experiment> [--config F] [--out D] [--seed N] [--override k=v ...]``.

Exit codes: 0 success, 2 configuration error, 3 numerical guard violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .dynamics import IntegrationError, NonHermitianError
from .experiments import EXPERIMENTS, ConfigError, run_experiment, write_result
from .gates import GuardError
from .hilbert import TruncationError

__all__ = ["main", "parse_config", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_GUARD = 0, 2, 3
GUARD_ERRORS = (TruncationError, GuardError, IntegrationError, NonHermitianError)

log = logging.getLogger("vibcoh")


def parse_config(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise ConfigError(f"line {lineno}: empty key")
        if k in out:
            raise ConfigError(f"line {lineno}: duplicate key {k!r}")
        out[k] = v
    return out


def _parse_override(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    k, v = item.split("=", 1)
    return k.strip(), v.strip()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vibcoh", description="Run a vibrational-mode quantum computing experiment.")
    p.add_argument("experiment", choices=sorted(EXPERIMENTS))
    p.add_argument("--config", type=Path, help="flat key = value file")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="set one parameter; may be repeated and wins over --config")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s",
                        stream=sys.stderr)
    try:
        values = {}
        if args.config is not None:
            try:
                values.update(parse_config(args.config.read_text()))
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        for item in args.override:
            k, v = _parse_override(item)
            values[k] = v
        t0 = time.perf_counter()
        res = run_experiment(args.experiment, values, seed=args.seed)
        paths = write_result(res, args.out, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GUARD_ERRORS as exc:
        print(f"numerical guard: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GUARD
    for k, v in res.summary.items():
        if k != "children":
            print(f"{k} = {v}")
    log.info("wrote %d file(s) to %s in %.2f s", len(paths), args.out, time.perf_counter() - t0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``warpdirac run <preset|config.json> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
import warnings

from . import scenarios
from .analysis import GridCoverageError
from .evolution import KrylovNotConverged, NormDrift, StepTooLarge
from .states import GridResolutionError, TruncationInsufficient

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="warpdirac", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a preset or a JSON scenario file")
    run.add_argument("target", help="preset name (%s) or config path" % ", ".join(scenarios.PRESET_NAMES))
    run.add_argument("--backend", choices=["exact", "timeordered", "oracle"])
    run.add_argument("--nmax", type=int, help="Fock truncation (disables an n_max sweep)")
    run.add_argument("--dt", type=float, help="time step in seconds (timeordered backend)")
    run.add_argument("--tmax", type=float, help="run length in seconds")
    run.add_argument("--out", default="out", help="output directory (default: %(default)s)")
    run.add_argument("--svg", dest="svg", action="store_true", default=True, help="write SVG figures (default)")
    run.add_argument("--no-svg", dest="svg", action="store_false")
    run.add_argument("--verify", action="store_true", help="cross-check against an independent backend")
    sub.add_parser("presets", help="list preset names")
    return parser


def _err(msg):
    print(f"warpdirac: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        print("\n".join(scenarios.PRESET_NAMES))
        return EXIT_OK
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg = scenarios.resolve(args.target)
            if any(v is not None for v in (args.backend, args.nmax, args.dt, args.tmax)):
                cfg = cfg.with_overrides(args.backend, args.nmax, args.dt, args.tmax)
        for w in caught:
            _err(f"warning: {w.message}")
    except scenarios.ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        result = scenarios.run_scenario(cfg, args.out, svg=args.svg, verify=args.verify)
    except (StepTooLarge, GridResolutionError, TruncationInsufficient) as exc:
        _err(f"configuration cannot be run: {exc}")
        return EXIT_CONFIG
    except scenarios.VerificationFailed as exc:
        _err(str(exc))
        return EXIT_NUMERIC
    except (NormDrift, KrylovNotConverged, GridCoverageError, ArithmeticError) as exc:
        _err(f"numerical invariant violated: {exc}")
        return EXIT_NUMERIC
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    s = result.summary
    brief = {k: s[k] for k in ("lightcone", "rwa", "nmax_convergence", "dispersion_zb_frequency_rad_s") if k in s}
    brief["convergence"] = s["provenance"]["convergence"]
    print(f"wrote {len(result.files)} files to {result.out_dir}")
    print(json.dumps(scenarios._jsonable(brief), indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

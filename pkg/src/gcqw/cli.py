"""
Command-line runner. Every subcommand writes one CSV (``#``-prefixed
metadata header) or JSON document to ``--out`` or stdout.

Exit status: 0 on success, 2 for invalid parameters, 3 when a gated
validation fails (a JSON diagnostic is printed to stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__
from .errors import DomainError, GCQWError, ValidationError
from .experiments import (bloch_compare, evolve_dump, localization, multi_recurrence,
                          recurrence_sweep, sigma_dynamics, spectrum_levels, write_csv, write_json)
from .walk import CoinSpec, InitialState, PhaseProfile, WalkConfig, choose_cycle_size

EXIT_USAGE = 2
EXIT_VALIDATION = 3


def parse_values(text: str) -> list[float]:
    """Comma-separated numbers, or ``start:stop:step`` with ``stop`` included."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"range must be start:stop:step, got {text!r}")
        start, stop, inc = (float(x) for x in parts)
        if inc <= 0:
            raise argparse.ArgumentTypeError("range step must be positive")
        n = int(math.floor((stop - start) / inc + 1e-9))
        return [round(start + i * inc, 12) for i in range(n + 1)]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def parse_initial(text: str) -> InitialState:
    """``site:c0re,c0im,c1re,c1im``; amplitudes are normalized."""
    try:
        site, amps = text.split(":")
        vals = [float(x) for x in amps.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"initial state must look like site:c0re,c0im,c1re,c1im, got {text!r}") from None
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("initial state needs four amplitude components")
    try:
        return InitialState.localized(int(site), complex(vals[0], vals[1]), complex(vals[2], vals[3]),
                                      normalize=True)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _probability(args, required=True) -> float:
    if args.D is not None and args.d is not None:
        raise DomainError("give either --D or --d, not both")
    if args.d is not None:
        return args.d ** 2
    if args.D is None:
        if required:
            raise DomainError("--D or --d is required")
        return None
    return args.D


def _phi(args) -> float:
    if args.phi is not None:
        return args.phi
    if args.p is not None:
        return 2 * math.pi * args.q / args.p
    raise DomainError("give --phi, or --p (with --q) for a commensurate phase")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--coin", choices=["standard", "symmetric"], default="standard")
    common.add_argument("--initial", type=parse_initial,
                        help="site:c0re,c0im,c1re,c1im (default 0:0.7071,0,-0.7071,0)")
    common.add_argument("--N", type=int, help="cycle length (default: smallest safe multiple of p)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    parser = argparse.ArgumentParser(prog="gcqw", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"gcqw {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("recurrence-sweep", parents=[common], help="P(T) against D")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--D", type=parse_values, required=True, help="list a,b,c or range start:stop:step")

    p = sub.add_parser("multi-recurrence", parents=[common], help="P(kT) against k")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--D", type=float)
    p.add_argument("--d", type=float)
    p.add_argument("--k-max", type=int, default=30)

    p = sub.add_parser("sigma-dynamics", parents=[common], help="sigma(t) against the ballistic law")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--D", type=float)
    p.add_argument("--d", type=float)
    p.add_argument("--t-max", type=int, required=True)
    p.add_argument("--cadence", type=int, default=1)

    p = sub.add_parser("spectrum", parents=[common], help="quasi-energy levels over a d grid")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--d", type=parse_values, required=True, help="list a,b,c or range start:stop:step")
    p.add_argument("--even-form", choices=["printed", "corrected"], default="printed")

    for name, help_ in (("bloch-compare", "discrete P(t) against the coupled-mode model"),
                        ("localization", "sigma(t) for a linear phase")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--D", type=float)
        p.add_argument("--d", type=float)
        p.add_argument("--phi", type=float, help="phase gradient in radians")
        p.add_argument("--p", type=int)
        p.add_argument("--q", type=int, default=1)
        p.add_argument("--t-max", type=int, required=True)

    p = sub.add_parser("evolve", parents=[common], help="raw amplitude dump")
    p.add_argument("--D", type=float)
    p.add_argument("--d", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--t-max", type=int, required=True)
    p.add_argument("--cadence", type=int, default=1)
    return parser


def run(args) -> object:
    coin = args.coin
    initial = args.initial or InitialState()
    if args.command == "recurrence-sweep":
        return recurrence_sweep(args.p, args.D, args.q, args.N, coin, initial, jobs=args.jobs)
    if args.command == "multi-recurrence":
        return multi_recurrence(args.p, _probability(args), args.q, args.k_max, args.N, coin, initial)
    if args.command == "sigma-dynamics":
        return sigma_dynamics(args.p, _probability(args), args.q, args.t_max, args.N, coin, initial,
                              args.cadence)
    if args.command == "spectrum":
        N = args.N if args.N is not None else 7 * args.p
        return spectrum_levels(args.p, args.q, N, args.d, args.even_form, jobs=args.jobs)
    if args.command == "bloch-compare":
        return bloch_compare(_probability(args), _phi(args), args.t_max, args.N)
    if args.command == "localization":
        return localization(_probability(args), _phi(args), args.t_max, args.N, coin, initial)
    if args.command == "evolve":
        D = _probability(args)
        if args.phi is not None:
            phase = PhaseProfile.irrational(args.phi)
            N = args.N or choose_cycle_size(1, args.t_max)
        elif args.p is not None:
            phase = PhaseProfile.harmonic(args.q, args.p)
            N = args.N or choose_cycle_size(args.p, args.t_max)
        else:
            phase = PhaseProfile.constant()
            N = args.N or choose_cycle_size(1, args.t_max)
        config = WalkConfig(N, CoinSpec.from_probability(D, coin), phase, initial)
        return evolve_dump(config, args.t_max, args.cadence)
    raise DomainError(f"unknown command {args.command}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        table = run(args)
    except ValidationError as exc:
        print(json.dumps({"status": "validation_failed", **exc.as_dict()}, sort_keys=True,
                         default=float), file=sys.stderr)
        return EXIT_VALIDATION
    except (GCQWError, ValueError) as exc:
        print(f"gcqw {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    writer = write_json if args.format == "json" else write_csv
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            writer(table, fh)
    else:
        writer(table, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())

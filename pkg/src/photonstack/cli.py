"""Command-line front end.

Subcommands:
  validate  check a stack config: structural invariants, then a
            single-frequency mode-density closure identity at
            representative points; exit 0 iff clean.
  scan      run a grid scan from a YAML spec and write its CSV.
  balance   run the self-consistent temperature solver alone and emit
            per-slice temperatures as CSV.

Exit codes: 0 success, 1 validation failure, 2 solver non-convergence,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, ConvergenceError, PhotonStackError
from .greens import solve_bases
from .scan import ScanSpec, run_scan
from .spectral import ldos_closure_residuals
from .stack import load_stack
from .thermo import solve_self_consistent
from .units import MICRON, omega_from_ev

_CLOSURE_EV = 0.11
_CLOSURE_TOL = 1e-6
_OUTER_DEPTH = 2.0 * MICRON


def _validate(args) -> int:
    try:
        stack = load_stack(args.config)
    except ConfigError as exc:
        for problem in str(exc).split("; "):
            print(f"invalid: {problem}")
        return 1

    omega = omega_from_ev(np.array([_CLOSURE_EV]))
    bases = solve_bases(stack, omega)
    lo, hi = stack.span
    points = [lo - _OUTER_DEPTH, hi + _OUTER_DEPTH]
    for j in range(1, len(stack.layers) - 1):
        a, b = stack.layer_bounds(j)
        points.append(0.5 * (a + b))
    clean = True
    for x in sorted(points):
        res_e, res_m = ldos_closure_residuals(stack, bases, x)
        worst = float(max(res_e.max(), res_m.max()))
        if worst > _CLOSURE_TOL:
            j = stack.layer_index(x)
            print(
                f"invalid: layer {j}: greens-closure residual {worst:.2e} "
                f"at x = {x / MICRON:g} um exceeds {_CLOSURE_TOL:g}"
            )
            clean = False
    if clean:
        print(f"{args.config}: clean ({len(stack.layers)} layers, "
              f"closure checked at {len(points)} points)")
        return 0
    return 1


def _scan(args) -> int:
    spec = ScanSpec.from_file(args.spec)
    if args.units is not None:
        spec = dataclasses.replace(spec, units=args.units)
    result = run_scan(
        spec,
        output=args.output,
        threads=args.threads,
        fd_check=args.fd_check,
    )
    na, ne, nq = result.data.shape
    print(f"wrote {result.path}: {na * ne} rows "
          f"({result.axis_name} x E_eV = {na} x {ne}), "
          f"quantities: {', '.join(result.quantities)}")
    if result.fd_residual_max is not None:
        print(f"fd-check: max relative residual {result.fd_residual_max:.3e}")
    return 0


def _balance(args) -> int:
    stack = load_stack(args.config)
    result = solve_self_consistent(stack, slices=args.slices)
    lines = [
        f"# photonstack {__version__} balance",
        f"# slices: {args.slices}",
        f"# iterations: {result.iterations}",
        "x_um,T_K",
    ]
    for x, t in zip(result.slice_positions, result.temperatures):
        lines.append(f"{x / MICRON:.9g},{t:.9g}")
    text = "\n".join(lines) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"wrote {args.output}: {len(result.temperatures)} slice temperatures")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonstack",
        description="Photon-number statistics, temperatures, and forces "
                    "of the thermal field in layered structures.",
    )
    parser.add_argument("--version", action="version",
                        version=f"photonstack {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a stack config")
    p.add_argument("config", help="stack YAML file")
    p.set_defaults(handler=_validate)

    p = sub.add_parser("scan", help="run a grid scan from a YAML spec")
    p.add_argument("spec", help="scan spec YAML file")
    p.add_argument("--output", help="override the spec's output path")
    p.add_argument("--threads", type=int, default=1,
                   help="worker processes (default 1)")
    p.add_argument("--fd-check", action="store_true",
                   help="cross-check force densities against finite differences")
    p.add_argument("--units", choices=("paper", "si"),
                   help="override the spec's unit system")
    p.set_defaults(handler=_scan)

    p = sub.add_parser("balance", help="solve self-consistent temperatures")
    p.add_argument("config", help="stack YAML file")
    p.add_argument("--slices", type=int, default=16,
                   help="slices per self-consistent layer (default 16)")
    p.add_argument("--output", help="write CSV here instead of stdout")
    p.set_defaults(handler=_balance)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PhotonStackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

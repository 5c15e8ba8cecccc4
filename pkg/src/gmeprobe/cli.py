"""Command-line drivers that print experiment tables as CSV.

Exit codes: 0 success, 2 validation failure (bad arguments or a failed
check), 3 solver non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .errors import ConvergenceError, DimensionError
from .experiments import (
    GaussianScanConfig,
    TransitionScanConfig,
    emit_csv,
    run_gaussian_scan,
    run_ghz_validate,
    run_transition_scan,
)
from .witness import dump_matrix, ghz_witness

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NOT_CONVERGED = 3
EXIT_IO = 4


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on its own; raising keeps main() testable
    def error(self, message):
        raise _ArgumentError(message)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gmeprobe", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ghz-validate", help="check the padded-witness identities on a GHZ chain")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("gaussian-scan", help="window scan over a double-Gaussian coupling chain")
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--g", type=float, default=1.1)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--xa", type=float, default=10.0)
    p.add_argument("--a", type=float, default=3.0)
    p.add_argument("--xb", type=float, default=30.0)
    p.add_argument("--b", type=float, default=5.0)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--optimize-contrast", type=_bool, default=True)
    _solver_flags(p)

    p = sub.add_parser("transition-scan", help="central-window value versus transverse field")
    p.add_argument("--lengths", type=_int_list, default=(10, 20, 40))
    p.add_argument("--g-min", type=float, default=0.2)
    p.add_argument("--g-max", type=float, default=2.0)
    p.add_argument("--g-steps", type=int, default=37)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--mode", choices=("contrast", "rdm"), default="contrast")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--symmetric-contrast", type=_bool, default=True,
                   help="use one direction on every outside site (default true)")
    _solver_flags(p)

    p = sub.add_parser("dump-witness", help="print the GHZ projector witness matrix")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--out")
    return parser


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--chi", type=int, default=64, help="maximum bond dimension")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--max-sweeps", type=int, default=20)
    p.add_argument("--cutoff", type=float, default=1e-10)
    p.add_argument("--energy-tol", type=float, default=1e-10)
    p.add_argument("--parity", choices=("even", "none"), default="even",
                   help="project the ground state onto a Z2 sector (default even)")
    p.add_argument("--out")


def _write(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w") as fh:
        fh.write(text)


def _ghz_validate(args) -> int:
    checks = run_ghz_validate(args.n, args.m)
    lines = ["identity,window_start,value,expected,passed"]
    lines += [f"{c.name},{c.window_start},{c.value!r},{c.expected!r},{str(c.passed).lower()}" for c in checks]
    _write("\n".join(lines) + "\n", args.out)
    failed = [c for c in checks if not c.passed]
    for c in failed:
        print(f"FAILED {c.name} at window {c.window_start}: {c.value} != {c.expected}", file=sys.stderr)
    return EXIT_VALIDATION if failed else EXIT_OK


def _gaussian_scan(args) -> int:
    cfg = GaussianScanConfig(
        n=args.n, g=args.g, window=args.window, xa=args.xa, a=args.a, xb=args.xb, b=args.b,
        chi=args.chi, seed=args.seed, optimize_contrast=args.optimize_contrast, stride=args.stride,
        parity=args.parity, max_sweeps=args.max_sweeps, cutoff=args.cutoff, energy_tol=args.energy_tol,
    )
    out = run_gaussian_scan(cfg)
    text = emit_csv(out.records, out.header, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK if out.converged else EXIT_NOT_CONVERGED


def _transition_scan(args) -> int:
    cfg = TransitionScanConfig(
        lengths=args.lengths, g_min=args.g_min, g_max=args.g_max, g_steps=args.g_steps,
        window=args.window, mode=args.mode, chi=args.chi, seed=args.seed, threads=args.threads,
        parity=args.parity, symmetric_contrast=args.symmetric_contrast, max_sweeps=args.max_sweeps,
        cutoff=args.cutoff, energy_tol=args.energy_tol,
    )
    out = run_transition_scan(cfg)
    text = emit_csv(out.records, out.header, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK if out.converged else EXIT_NOT_CONVERGED


def _dump_witness(args) -> int:
    if args.m < 2:
        raise ValueError("genuine multipartite witnesses need at least two sites")
    _write(dump_matrix(ghz_witness(args.m).q), args.out)
    return EXIT_OK


_COMMANDS = {
    "ghz-validate": _ghz_validate,
    "gaussian-scan": _gaussian_scan,
    "transition-scan": _transition_scan,
    "dump-witness": _dump_witness,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _ArgumentError as err:
        print(f"gmeprobe: error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, DimensionError) as err:
        print(f"gmeprobe: invalid input: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as err:
        print(f"gmeprobe: solver did not converge: {err}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except OSError as err:
        print(f"gmeprobe: I/O error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

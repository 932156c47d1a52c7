"""Command-line front end: ``bri2d <subcommand> ...``.

Exit codes: 0 success (or all gates passed), 1 verification failure,
2 usage error.  ``BRI2D_SEED`` sets the default seed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import List, Optional

from . import __version__
from .capacity import CapResult, cap_disk, cap_mc_estimate, cap_pair, cap_union_numerical
from .diffusion import SimParams
from .distance_process import simulate_phix, simulate_y
from .geometry import Disk, DiskUnion, GeometryError, Point2
from .interlacements import sample_moustache, sample_soup
from .io import (dumps_json, jump_path_to_csv, moustache_svg, moustache_to_dict, soup_svg, soup_to_dict,
                 write_bytes)
from .potential import DomainError
from .rng import ENV_SEED, seed_or_default, stream
from .verify import run_suite, suite_names

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser, formats: List[str], default: str) -> None:
    p.add_argument("--seed", type=int, default=None, help=f"random seed (default: ${ENV_SEED} or built-in)")
    p.add_argument("--format", choices=formats, default=default, help="output format")
    p.add_argument("--out", default="-", help="output file ('-' for stdout)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bri2d", description="Brownian random interlacements in the plane.")
    ap.add_argument("--version", action="version", version=f"bri2d {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moustache", help="sample one Wiener moustache")
    p.add_argument("--trunc", type=float, default=50.0, help="truncation radius (> 1)")
    p.add_argument("--dt", type=float, default=1e-3, help="base Euler step")
    _common(p, ["svg", "json"], "svg")

    p = sub.add_parser("bri", help="sample a BRI(alpha; b) soup")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--window", type=float, nargs=2, default=[1.0, 50.0], metavar=("RHO_MIN", "RHO_MAX"))
    p.add_argument("--trunc", type=float, default=None, help="moustache truncation radius in frame units")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--levels-only", action="store_true", help="omit the trajectories")
    _common(p, ["json", "svg"], "json")

    p = sub.add_parser("capacity", help="capacity of a union of disks containing B(1)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--disk", type=float, metavar="R", help="centred disk B(R)")
    g.add_argument("--pair", type=float, nargs=3, metavar=("X", "Y", "R"), help="B(1) u B((X,Y), R)")
    g.add_argument("--disks", metavar="SPEC", help="'cx,cy,r;cx,cy,r;...'")
    p.add_argument("--method", choices=["auto", "numerical", "monte-carlo"], default="auto")
    p.add_argument("--samples", type=int, default=10_000, help="Monte Carlo trajectories")
    _common(p, ["json"], "json")

    p = sub.add_parser("phi", help="simulate the distance process Phi_x(alpha)")
    p.add_argument("--x", type=float, nargs=2, default=[0.0, 0.0], metavar=("X", "Y"))
    p.add_argument("--alpha", type=float, nargs=2, required=True, metavar=("ALPHA0", "ALPHA1"))
    _common(p, ["csv", "json"], "csv")

    p = sub.add_parser("y", help="simulate the stationary process Y(beta)")
    p.add_argument("--beta", type=float, nargs=2, required=True, metavar=("BETA0", "BETA1"))
    s = p.add_mutually_exclusive_group()
    s.add_argument("--stationary", action="store_true", help="start from the negative Gumbel law")
    s.add_argument("--y0", type=float, default=None)
    _common(p, ["csv", "json"], "csv")

    p = sub.add_parser("verify", help="run an acceptance suite")
    p.add_argument("suite", help="one of: " + ", ".join(suite_names()))
    p.add_argument("--budget", choices=["quick", "full"], default="quick")
    _common(p, ["json"], "json")
    return ap


def _parse_disks(spec: str) -> DiskUnion:
    disks = []
    try:
        for part in filter(None, (s.strip() for s in spec.split(";"))):
            cx, cy, r = (float(v) for v in part.split(","))
            disks.append(Disk(Point2(cx, cy), r))
    except ValueError:
        raise UsageError(f"cannot parse disk list {spec!r}; expected 'cx,cy,r;...'")
    if not disks:
        raise UsageError("empty disk list")
    return DiskUnion(disks)


def _contains_unit_disk(A: DiskUnion) -> bool:
    return any(d.center.norm + 1.0 <= d.radius + 1e-12 for d in A.disks) or any(
        d.center.norm == 0.0 and d.radius >= 1.0 for d in A.disks)


def _capacity(args, rng) -> CapResult:
    if args.disk is not None:
        if args.disk < 1.0:
            raise UsageError("the disk must contain B(1): need R >= 1")
        if args.method == "monte-carlo":
            return cap_mc_estimate(DiskUnion.single((0.0, 0.0), args.disk), args.samples, rng=rng)
        return CapResult(cap_disk(args.disk), "closed-form")
    if args.pair is not None:
        x, y, r = args.pair
        if r <= 0:
            raise UsageError("radius must be positive")
        if math.hypot(x, y) == 0.0 and r < 1.0:
            raise UsageError("the union must contain B(1): a concentric disk needs r >= 1")
        return cap_pair((x, y), r, method=args.method, rng=rng, n_samples=args.samples)
    A = _parse_disks(args.disks)
    if not _contains_unit_disk(A):
        A = DiskUnion((Disk(Point2(0.0, 0.0), 1.0),) + tuple(A.disks))
    if args.method == "monte-carlo":
        return cap_mc_estimate(A, args.samples, rng=rng)
    try:
        return cap_union_numerical(A)
    except GeometryError:
        if args.method == "numerical":
            raise
        return cap_mc_estimate(A, args.samples, rng=rng)


def _jump_output(path, fmt: str, sub: str, seed: int, **params) -> bytes:
    if fmt == "csv":
        return jump_path_to_csv(path, sub, seed, **params).encode()
    doc = {"format": "bri2d-jumppath/1", "subcommand": sub, "seed": seed, "process": path.process,
           "params": params, "times": path.times.tolist(), "values": path.values.tolist()}
    return dumps_json(doc).encode()


def run(args) -> int:
    seed = seed_or_default(args.seed)
    rng = stream(seed, 0)
    if getattr(args, "workers", 1) < 1:
        raise UsageError("--workers must be >= 1")
    cmd = args.command
    if cmd == "moustache":
        if not args.trunc > 1.0:
            raise UsageError("--trunc must exceed 1")
        if not args.dt > 0:
            raise UsageError("--dt must be positive")
        m = sample_moustache(args.trunc, SimParams(dt0=args.dt, rel_step=True), rng)
        data = moustache_svg(m) if args.format == "svg" else dumps_json(moustache_to_dict(m))
        write_bytes(args.out, data.encode())
        return EXIT_OK
    if cmd == "bri":
        lo, hi = args.window
        if not args.alpha > 0:
            raise UsageError("--alpha must be positive")
        if args.b < 0:
            raise UsageError("--b must be non-negative")
        if not 0 < lo < hi:
            raise UsageError("--window needs 0 < RHO_MIN < RHO_MAX")
        if args.format == "svg" and max(lo, args.b) < 1.0:
            raise UsageError("SVG rendering needs levels >= 1 (raise --b or RHO_MIN)")
        if args.trunc is not None and not args.trunc > 1.0:
            raise UsageError("--trunc must exceed 1")
        s = sample_soup(args.alpha, args.b, (lo, hi), rng, trunc_radius=args.trunc,
                        params=SimParams(dt0=args.dt, rel_step=True), with_paths=not args.levels_only)
        data = soup_svg(s) if args.format == "svg" else dumps_json(soup_to_dict(s))
        write_bytes(args.out, data.encode())
        return EXIT_OK
    if cmd == "capacity":
        res = _capacity(args, rng)
        write_bytes(args.out, dumps_json({"format": "bri2d-capacity/1", **res.to_dict()}).encode())
        return EXIT_OK
    if cmd == "phi":
        a0, a1 = args.alpha
        if not 0 < a0 < a1:
            raise UsageError("--alpha needs 0 < ALPHA0 < ALPHA1")
        path = simulate_phix(tuple(args.x), a0, a1, rng)
        write_bytes(args.out, _jump_output(path, args.format, "phi", seed, x=args.x, alpha0=a0, alpha1=a1))
        return EXIT_OK
    if cmd == "y":
        b0, b1 = args.beta
        if not b0 < b1:
            raise UsageError("--beta needs BETA0 < BETA1")
        y0 = "stationary" if args.stationary or args.y0 is None else args.y0
        path = simulate_y(b0, b1, y0, rng)
        write_bytes(args.out, _jump_output(path, args.format, "y", seed, beta0=b0, beta1=b1,
                                           start="stationary" if y0 == "stationary" else y0))
        return EXIT_OK
    if cmd == "verify":
        if args.suite not in suite_names():
            raise UsageError(f"unknown suite {args.suite!r}; available: {', '.join(suite_names())}")
        report = run_suite(args.suite, args.budget, seed)
        write_bytes(args.out, (json.dumps(report, indent=2) + "\n").encode())
        return EXIT_OK if report["pass"] else EXIT_FAIL
    raise UsageError(f"unknown command {cmd!r}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    try:
        return run(args)
    except (UsageError, DomainError, GeometryError) as e:
        print(f"bri2d: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"bri2d: I/O error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``crlab study|maximizer|mesh|matrix``."""

from __future__ import annotations

import argparse
import logging
import sys

from .study import MODES, SKIPPABLE, StudyConfig, dump_maximizer, loglog_slope, run_study, write_csv, write_svg

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


class ConfigError(ValueError):
    pass


def _pairs(text: str):
    out = []
    for item in filter(None, text.split(",")):
        try:
            n, m = item.split(":")
            out.append((int(n), int(m)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad pair {item!r}, expected n:m") from None
    return out


def _skip(text: str):
    items = frozenset(filter(None, text.split(",")))
    bad = items - set(SKIPPABLE)
    if bad:
        raise argparse.ArgumentTypeError(f"cannot skip {sorted(bad)}; choose from {SKIPPABLE}")
    return items


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crlab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("study", help="sweep (n, m) and write a CSV table")
    s.add_argument("--mode", choices=[*MODES, "custom"], default="m_eq_n")
    s.add_argument("--n-min", type=int, default=4)
    s.add_argument("--n-max", type=int, default=None)
    s.add_argument("--pairs", type=_pairs, default=[], help="explicit n:m list for --mode custom")
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--csv", default="-", help="output path, '-' for stdout")
    s.add_argument("--svg", default=None)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--skip", type=_skip, default=frozenset(), help="comma list of witness,rt,friedrichs")

    mx = sub.add_parser("maximizer", help="dump consistency maximizer and Galerkin midpoint values")
    mx.add_argument("--n", type=int, required=True)
    mx.add_argument("--m", type=int, required=True)
    mx.add_argument("--out", required=True)
    mx.add_argument("--tol", type=float, default=1e-12)

    me = sub.add_parser("mesh", help="export T(n, m) as JSON")
    me.add_argument("--n", type=int, required=True)
    me.add_argument("--m", type=int, required=True)
    me.add_argument("--out", required=True)

    ma = sub.add_parser("matrix", help="export the stiffness matrix in coordinate format")
    ma.add_argument("--n", type=int, required=True)
    ma.add_argument("--m", type=int, required=True)
    ma.add_argument("--out", required=True)
    return p


def _study(args) -> int:
    try:
        cfg = StudyConfig(mode=args.mode, n_min=args.n_min, n_max=args.n_max, pairs=args.pairs,
                          tol=args.tol, skip=args.skip, threads=args.threads)
        if not 0 < cfg.tol <= 1e-6:
            raise ConfigError("--tol must lie in (0, 1e-6]")
        points = cfg.points()
    except ValueError as exc:
        print(f"crlab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not points:
        print("crlab: sweep is empty", file=sys.stderr)
        return EXIT_CONFIG
    rows = run_study(cfg)
    write_csv(rows, sys.stdout if args.csv == "-" else args.csv)
    if args.svg:
        write_svg(rows, args.svg, title=f"mode {cfg.mode}")
    ok = [r for r in rows if not r["error"]]
    if len(ok) >= 2:
        print(f"slope of E vs n: {loglog_slope([r['n'] for r in ok], [r['E'] for r in ok]):.3f}", file=sys.stderr)
    return EXIT_OK if len(ok) == len(rows) else EXIT_PARTIAL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "study":
        return _study(args)
    try:
        if args.command == "maximizer":
            dump_maximizer(args.n, args.m, args.out, tol=args.tol)
        elif args.command in ("mesh", "matrix"):
            from .mesh import MeshParams, build_mesh

            tri = build_mesh(MeshParams(args.n, args.m))
            if args.command == "mesh":
                tri.to_json(args.out)
            else:
                from .cr_space import assemble_stiffness, build_dof_map, write_coo

                write_coo(assemble_stiffness(tri, build_dof_map(tri)), args.out)
    except ValueError as exc:
        print(f"crlab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

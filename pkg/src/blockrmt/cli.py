"""Command-line front end.

Exit codes: 0 success, 1 bad arguments, 2 invalid model, 3 solver failures
(the partial density is still written, with a ``.failures.csv`` sidecar).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from . import density as dens
from . import mcsim, oracle
from .model import SpecError, WishartSpec, load_spec
from .presets import PRESET_NAMES, get_preset

EXIT_ARGS, EXIT_SPEC, EXIT_SOLVER = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def _add_model(p):
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--spec", help="model description (JSON)")
    g.add_argument("--preset", help="built-in model: " + ", ".join(PRESET_NAMES))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="blockrmt", description="Limiting spectra of Gaussian block random matrices.")
    ap.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="density curve by Stieltjes inversion")
    _add_model(p)
    p.add_argument("--xmin", type=float)
    p.add_argument("--xmax", type=float)
    p.add_argument("--points", type=int, default=dens.DEFAULT_POINTS)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--extrapolate", action="store_true",
                   help="Richardson extrapolation over 4e, 2e, e")
    p.add_argument("--out", default="density.csv")
    p.add_argument("--gnuplot", help="also write a gnuplot script")

    p = sub.add_parser("moments", help="limiting (or finite-size) moments")
    _add_model(p)
    p.add_argument("--max-order", type=int, default=8)
    p.add_argument("--finite-n", type=int, help="exact expectation at this total size")
    p.add_argument("--method", choices=("recursive", "enumerate", "contour"), default="recursive")
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("simulate", help="Monte Carlo eigenvalue histogram")
    _add_model(p)
    p.add_argument("--N", type=int, default=100, help="base block size")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="hist.csv")

    p = sub.add_parser("compare", help="distance between a density and a histogram")
    p.add_argument("--density", required=True)
    p.add_argument("--hist", required=True)
    p.add_argument("--out", default="report.json")
    return ap


def _model(args):
    if args.preset:
        return get_preset(args.preset).spec
    return load_spec(args.spec)


def _report_path(out) -> Path:
    return Path(out).with_suffix(".json")


def _gnuplot(path, csv_path, title):
    text = (f"set datafile separator ','\n"
            f"set key off\nset title '{title}'\nset xlabel 'x'\nset ylabel 'density'\n"
            f"plot '{csv_path}' every ::1 using 1:2 with lines lw 2\n")
    Path(path).write_text(text)


def cmd_solve(args) -> int:
    spec = _model(args)
    if args.points < 2 or args.epsilon <= 0:
        raise SpecError("need --points >= 2 and --epsilon > 0")
    res = dens.density_curve(spec, args.points, args.epsilon, args.xmin, args.xmax,
                             extrapolate=args.extrapolate, threads=args.threads)
    dens.write_csv(res.curve, args.out)
    report = dens.curve_report(res)
    report["model"] = getattr(spec, "name", "") or (args.preset or args.spec)
    dens.write_report(report, _report_path(args.out))
    if args.gnuplot:
        _gnuplot(args.gnuplot, args.out, report["model"])
    if res.failures:
        side = Path(args.out).with_suffix(".failures.csv")
        with open(side, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "epsilon", "reason"])
            for z, why in res.failures:
                w.writerow([f"{z.real:.17g}", f"{z.imag:.17g}", why])
        print(f"{len(res.failures)} grid points failed; see {side}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"wrote {args.out} (mass {report['mass']:.6f})")
    return 0


def cmd_moments(args) -> int:
    spec = _model(args)
    k = args.max_order
    if k < 0:
        raise SpecError("--max-order must be nonnegative")
    if args.finite_n is not None:
        if isinstance(spec, WishartSpec):
            raise SpecError("--finite-n applies to self-adjoint models only")
        vals = [oracle.finite_n_moment(spec, m, args.finite_n) for m in range(k + 1)]
        kind = f"finite n={args.finite_n}"
    elif args.method == "contour":
        vals = list(oracle.contour_moments(spec, k))
        kind = "contour"
    else:
        vals = list(oracle.spec_moments(spec, k, args.method))
        kind = f"limit ({args.method})"
    doc = {"kind": kind, "moments": {str(m): float(v) for m, v in enumerate(vals)}}
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_simulate(args) -> int:
    spec = _model(args)
    cfg = mcsim.SimConfig(N=args.N, reps=args.reps, seed=args.seed, bins=args.bins,
                          threads=args.threads)
    t0 = time.perf_counter()
    hist = mcsim.empirical_spectrum(spec, cfg)
    meta = {"seed": cfg.seed, "reps": cfg.reps, "N": cfg.N,
            "wall_time": round(time.perf_counter() - t0, 3)}
    mcsim.write_histogram(hist, args.out, meta)
    print(f"wrote {args.out} ({hist.n_samples} eigenvalues)")
    return 0


def cmd_compare(args) -> int:
    eps, atom = float("nan"), 0.0
    rp = _report_path(args.density)
    if rp.exists():
        rep = json.loads(rp.read_text())
        eps, atom = rep.get("epsilon", eps), rep.get("atom0", 0.0)
    curve = dens.read_csv(args.density, eps, atom)
    hist = mcsim.read_histogram(args.hist)
    out = mcsim.compare(curve, hist)
    Path(args.out).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(f"l1 = {out['l1']:.4f}, sup_bin = {out['sup_bin']:.4f}")
    return 0


COMMANDS = {"solve": cmd_solve, "moments": cmd_moments,
            "simulate": cmd_simulate, "compare": cmd_compare}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("blockrmt: error: --threads must be positive", file=sys.stderr)
        return EXIT_ARGS
    try:
        return COMMANDS[args.command](args)
    except (SpecError, ValueError, json.JSONDecodeError) as exc:
        print(f"blockrmt: invalid model: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except OSError as exc:
        print(f"blockrmt: {exc}", file=sys.stderr)
        return EXIT_ARGS


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line workflows: simulate, unmix, eval, gridsearch, wilcoxon, render.

Exit codes: 0 success, 1 usage or bad parameters, 2 file I/O or format
problems, 3 numerical failure.  All randomness flows through explicit
``--seed`` flags, so every command is deterministic given its arguments.
"""

import argparse
import csv
import json
import os
import statistics
import sys
import time

import numpy as np

from .datagen import PATTERNS, SceneSpec, gen_scene
from .exceptions import (FileFormatError, NumericalError, ParameterError)
from .fcls import fcls_map
from .fileio import (read_cube, read_endmembers_csv, read_value_csv,
                     write_cube, write_endmembers_csv)
from .metrics import reconstruction_rmse, sre, wilcoxon_signed_rank_one_tailed
from .ultra import UltraConfig, evaluate_cost, ultra

__all__ = ["build_parser", "main", "entry"]


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; this project uses 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_problem(cube_path, endmembers_path):
    cube = read_cube(cube_path)
    M = read_endmembers_csv(endmembers_path)
    if cube.shape[2] != M.shape[0]:
        raise ParameterError(
            f"cube {cube.shape} has {cube.shape[2]} bands but endmember "
            f"matrix {M.shape} has {M.shape[0]} rows"
        )
    return cube, M


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(args):
    spec = SceneSpec(rows=args.rows, cols=args.cols,
                     n_endmembers=args.endmembers_count, n_bands=args.bands,
                     pattern=args.pattern, smoothness=args.smoothness,
                     endmember_coherence=args.coherence, snr_db=args.snr_db,
                     seed=args.seed)
    gt = gen_scene(spec)
    write_cube(args.out_cube, gt.noisy_cube)
    write_cube(args.out_truth, gt.abundances)
    write_endmembers_csv(args.out_endmembers, gt.endmembers)
    _write_json(args.out_cube + ".json",
                {"spec": spec.to_dict(), "realized_snr_db": gt.realized_snr_db})
    print(f"wrote {args.out_cube} ({spec.rows}x{spec.cols}x{spec.n_bands}), "
          f"realized SNR {gt.realized_snr_db:.3f} dB")
    return 0


def cmd_unmix(args):
    cube, M = _load_problem(args.cube, args.endmembers)
    n1, n2, L = cube.shape
    report_path = args.report or (args.out + ".report.json")
    if args.method == "fcls":
        t0 = time.perf_counter()
        A = fcls_map(cube.reshape(n1 * n2, L), M).reshape(n1, n2, M.shape[1])
        seconds = time.perf_counter() - t0
        j = evaluate_cost(cube, M, A, A, 0.0)
        payload = {"method": "fcls", "objective_history": [j],
                   "iterations": 1, "termination": "direct",
                   "a_step_seconds": [seconds], "q_step_seconds": [],
                   "total_seconds": seconds}
    else:
        if args.lambda_a is None or args.rank is None:
            raise ParameterError("--method ultra requires --lambda and --rank")
        cfg = UltraConfig(lambda_a=args.lambda_a, rank_q=args.rank,
                          outer_max_iters=args.max_outer,
                          outer_rel_tol=args.tol, seed=args.seed)
        A, _, report = ultra(cube, M, cfg)
        payload = report.to_dict()
        payload.update({"method": "ultra", "lambda_a": args.lambda_a,
                        "rank_q": args.rank, "seed": args.seed})
        if args.cpd_history:
            with open(args.cpd_history, "w") as fh:
                for v in report.cpd_fit_history:
                    fh.write(f"{v!r}\n")
    write_cube(args.out, A)
    _write_json(report_path, payload)
    print(f"wrote {args.out} and {report_path}")
    return 0


def cmd_eval(args):
    if args.metric == "sre":
        if not args.truth:
            raise ParameterError("--metric sre requires --truth")
        est = read_cube(args.est)
        truth = read_cube(args.truth)
        value = sre(truth, est)
    else:
        if not (args.cube and args.endmembers):
            raise ParameterError("--metric rmse requires --cube and --endmembers")
        est = read_cube(args.est)
        cube, M = _load_problem(args.cube, args.endmembers)
        value = reconstruction_rmse(cube, M, est)
    print(f"{value:.6f}")
    if args.csv:
        run_id = args.run_id or os.path.splitext(os.path.basename(args.est))[0]
        with open(args.csv, "a", newline="") as fh:
            csv.writer(fh).writerow([run_id, args.metric, f"{value:.10g}"])
    return 0


def _parse_grid(text, cast, flag):
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise ParameterError(f"{flag} must list at least one value")
    try:
        return [cast(t) for t in items]
    except ValueError as err:
        raise ParameterError(f"bad value in {flag}: {err}") from err


def cmd_gridsearch(args):
    cube, M = _load_problem(args.cube, args.endmembers)
    truth = read_cube(args.truth)
    lam_grid = _parse_grid(args.lambda_grid, float, "--lambda-grid")
    rank_grid = _parse_grid(args.rank_grid, int, "--rank-grid")
    if args.runs < 1:
        raise ParameterError("--runs must be >= 1")
    cells = {}
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "rank", "seed", "sre_db", "rmse", "seconds"])
        for lam in lam_grid:
            for rank in rank_grid:
                values = []
                for i in range(args.runs):
                    seed = args.seed + i
                    cfg = UltraConfig(lambda_a=lam, rank_q=rank, seed=seed)
                    A, _, report = ultra(cube, M, cfg)
                    sre_db = sre(truth, A)
                    rmse = reconstruction_rmse(cube, M, A)
                    writer.writerow([f"{lam:.10g}", rank, seed,
                                     f"{sre_db:.10g}", f"{rmse:.10g}",
                                     f"{report.total_seconds:.6f}"])
                    values.append(sre_db)
                cells[(lam, rank)] = statistics.median(values)
    best = max(cells, key=lambda k: cells[k])
    print(f"best lambda={best[0]:.10g} rank={best[1]} "
          f"median_sre_db={cells[best]:.6f}")
    return 0


def cmd_wilcoxon(args):
    a = read_value_csv(args.a)
    b = read_value_csv(args.b)
    if a.size != b.size:
        raise ParameterError(
            f"paired files differ in length: {a.size} vs {b.size}"
        )
    res = wilcoxon_signed_rank_one_tailed(a, b, alpha=args.alpha)
    print(f"statistic {res.statistic:.6g}")
    print(f"p-value {res.p_value:.6g}")
    print(f"n-effective {res.n_effective}")
    print("decision reject" if res.reject_at_alpha else "decision accept")
    return 0


def cmd_render(args):
    import matplotlib
    matplotlib.use("Agg")
    from matplotlib import image as mpimage

    A = read_cube(args.abundances)
    os.makedirs(args.out_dir, exist_ok=True)
    n_clamped = int(np.count_nonzero((A < 0.0) | (A > 1.0)))
    if n_clamped:
        print(f"warning: clamped {n_clamped} value(s) outside [0, 1]",
              file=sys.stderr)
    A = np.clip(A, 0.0, 1.0)
    for r in range(A.shape[2]):
        path = os.path.join(args.out_dir, f"abundance_{r + 1:02d}.png")
        mpimage.imsave(path, A[:, :, r], cmap="jet", vmin=0.0, vmax=1.0)
    print(f"wrote {A.shape[2]} image(s) to {args.out_dir}")
    return 0


def build_parser():
    parser = _Parser(prog="ultra-unmix",
                     description="Hyperspectral unmixing workflows")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scene")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--bands", type=int, required=True)
    p.add_argument("--endmembers-count", type=int, required=True)
    p.add_argument("--pattern", choices=PATTERNS, default="gauss-fields")
    p.add_argument("--smoothness", type=float, default=3.0)
    p.add_argument("--coherence", type=float, default=0.8)
    p.add_argument("--snr-db", type=float, default=25.0,
                   help="global SNR in dB; 'inf' disables noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-cube", required=True)
    p.add_argument("--out-truth", required=True)
    p.add_argument("--out-endmembers", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("unmix", help="estimate abundances from a cube")
    p.add_argument("--cube", required=True)
    p.add_argument("--endmembers", required=True)
    p.add_argument("--method", choices=("fcls", "ultra"), required=True)
    p.add_argument("--lambda", dest="lambda_a", type=float, default=None,
                   help="prior weight (ultra only)")
    p.add_argument("--rank", type=int, default=None,
                   help="prior CPD rank (ultra only)")
    p.add_argument("--max-outer", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="abundances.hcube")
    p.add_argument("--report", default=None,
                   help="report path (default: OUT.report.json)")
    p.add_argument("--cpd-history", default=None,
                   help="dump CPD fit history, one value per line")
    p.set_defaults(func=cmd_unmix)

    p = sub.add_parser("eval", help="score an abundance estimate")
    p.add_argument("--metric", choices=("sre", "rmse"), required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--cube", default=None)
    p.add_argument("--endmembers", default=None)
    p.add_argument("--csv", default=None, help="append a run-id,metric,value row")
    p.add_argument("--run-id", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gridsearch", help="sweep prior weight and rank")
    p.add_argument("--cube", required=True)
    p.add_argument("--endmembers", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--lambda-grid", required=True, help="comma list, e.g. 0.1,1,10")
    p.add_argument("--rank-grid", required=True, help="comma list, e.g. 5,15,30")
    p.add_argument("--runs", type=int, default=1, help="seeds per grid cell")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("wilcoxon", help="paired one-tailed signed-rank test")
    p.add_argument("--a", required=True, help="CSV of baseline values")
    p.add_argument("--b", required=True, help="CSV of challenger values")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_wilcoxon)

    p = sub.add_parser("render", help="write one PNG per abundance slice")
    p.add_argument("--abundances", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return int(args.func(args) or 0)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry():
    sys.exit(main(sys.argv[1:]))

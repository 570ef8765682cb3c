"""Command-line interface.

    sylvrank generate   --benchmark NAME --out DIR
    sylvrank fit        DATA --alphas SPEC --out DIR
    sylvrank compress   SOLUTION (--order R | --tol T) --out MODEL
    sylvrank evaluate   MODEL TEST --out PREFIX
    sylvrank reproduce  EXPERIMENT --out DIR
    sylvrank svd-report SOLUTION --out CSV

Exit codes: 0 success, 2 usage or invalid input, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .benchmarks import gen_delay_rod, gen_scalar_delay, gen_thermal_block, sample_frequencies, sample_parameters
from .compression import compress_model, numerical_rank_rmin, realify, select_order, stacked_svds, uncompressed_model
from .constraints import assemble_constraints, normalize
from .errors import SylvrankError
from .experiments import EXPERIMENTS, SCALES, reproduce
from .metrics import evaluate_model
from .model import parse_alphas
from .optimizer import MODES, SolverConfig, solve_rsmi

log = logging.getLogger("sylvrank")

EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 2, 3, 4
BENCHMARKS = ("scalar-delay", "delay-rod", "thermal-block")

# solver flags that may also come from a config file
SOLVER_KEYS = ("mode", "lambda0", "lr0", "inner_iters", "lr_drop_every", "lr_drop_factor", "outer_iters",
               "epsilon", "max_val", "seed", "init_scale")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _unit_interval(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text}")
    return v


# --- generate ---------------------------------------------------------------

def cmd_generate(args) -> int:
    out = Path(args.out)
    name = args.benchmark
    if name == "scalar-delay":
        pts = [complex(p) for p in args.points] if args.points else [0.5, 1.0]
        truth, train = gen_scalar_delay(pts, conjugate_close=args.conjugate_close)
        test = sample_frequencies(truth, args.test or 50, *(args.test_range or (1e-2, 1e2)))
        validation = None
    elif name == "delay-rod":
        truth = gen_delay_rod(args.n or 101, args.tau)
        d = truth.defaults
        train = sample_frequencies(truth, args.train or d["train_count"], *(args.train_range or d["train_range"]),
                                   conjugate_close=args.conjugate_close)
        test = sample_frequencies(truth, args.test or d["test_count"], *(args.test_range or d["test_range"]))
        validation = None
    else:
        truth = gen_thermal_block(args.grid)
        lo, hi = args.param_range
        train = sample_parameters(truth, args.train_per_axis, lo, hi)
        test = sample_parameters(truth, args.test_per_axis, lo, hi)
        validation = None
        if args.validation:
            if not 0 < args.validation < train.N:
                raise ValueError(f"--validation must lie in (0, {train.N})")
            perm = np.random.default_rng(args.seed).permutation(train.N)
            cut = train.N - args.validation
            train, validation = train.subset(np.sort(perm[:cut])), train.subset(np.sort(perm[cut:]))
    io.save_samples(out / "train.json", train)
    io.save_samples(out / "test.json", test)
    if validation is not None:
        io.save_samples(out / "validation.json", validation)
    io.save_model(out / "truth.json", truth.model)
    print(f"{name}: {train.N} train, {test.N} test"
          + (f", {validation.N} validation" if validation is not None else "") + f" samples in {out}")
    return 0


# --- fit --------------------------------------------------------------------

def _solver_options(args) -> dict:
    opts = {}
    if args.config:
        cfg = io.load_config(args.config)
        cfg = cfg.get("fit", cfg)
        for k, v in cfg.items():
            key = k.replace("-", "_")
            if key in SOLVER_KEYS or key in ("alphas", "symmetric", "normalize"):
                opts[key] = v
            else:
                raise ValueError(f"unknown config key {k!r}")
    for key in SOLVER_KEYS + ("alphas",):
        v = getattr(args, key, None)
        if v is not None:
            opts[key] = v
    if args.symmetric:
        opts["symmetric"] = True
    if args.normalize:
        opts["normalize"] = True
    return opts


def cmd_fit(args) -> int:
    opts = _solver_options(args)
    if "alphas" not in opts:
        raise ValueError("no coefficient functions given (use --alphas or a config file)")
    alphas = parse_alphas(opts.pop("alphas"))
    symmetric = bool(opts.pop("symmetric", False))
    do_norm = bool(opts.pop("normalize", False))
    opts.setdefault("mode", "reweighted")
    config = SolverConfig(**opts)
    samples = io.load_samples(args.data)
    scale = 1.0
    if do_norm:
        samples, scale = normalize(samples)
    system = assemble_constraints(samples, alphas, symmetric=symmetric)
    t0 = time.perf_counter()
    state = solve_rsmi(system, config)
    wall = time.perf_counter() - t0
    model = uncompressed_model(system, state.A)
    if scale != 1.0:
        model.C = model.C * scale
    model.meta.update({"mode": config.mode, "output_scale": scale, "data": str(args.data),
                       "conjugate_closed": samples.conjugate_closed})
    out = Path(args.out)
    io.save_model(out / "solution.json", model)
    io.save_trace(out / "trace.csv", state.trace)
    _, report = compress_model(model, order=1)
    io.save_spectra(out / "spectra.csv", report)
    echo = config.to_dict()
    echo.update({"symmetric": symmetric, "normalize": do_norm, "alphas": [str(f) for f in alphas]})
    io.write_json(out / "config.json", io.jsonable(echo))
    s = report.sv_horizontal
    print(f"fit ({config.mode}): N={system.N}, q={system.q}, {state.steps} steps in {wall:.1f}s, "
          f"final objective {state.objective_trace[-1]:.4e}, s2/s1={s[1] / s[0] if len(s) > 1 and s[0] else 0:.3e}")
    return 0


# --- compress / svd-report ----------------------------------------------------

def cmd_compress(args) -> int:
    model = io.load_model(args.solution)
    if args.real:
        if not args.data:
            raise ValueError("--real needs --data (the conjugate-closed training samples)")
        samples = io.load_samples(args.data)
        if not samples.conjugate_closed:
            raise ValueError("--real needs conjugate-closed training data")
        model = realify(model, samples)
    reduced, report = compress_model(model, order=args.order, tol=args.tol)
    reduced.meta.update({k: v for k, v in model.meta.items() if k != "compressed_from"})
    io.save_model(args.out, reduced)
    if args.spectra:
        io.save_spectra(args.spectra, report)
    print(f"compressed order {model.order} -> {reduced.order}"
          f" (captured energy {report.energy_h:.6f} / {report.energy_v:.6f})")
    return 0


def cmd_svd_report(args) -> int:
    model = io.load_model(args.solution)
    _, S1, _, _, S2, _ = stacked_svds(np.array(model.A))
    _, report = compress_model(model, order=1)
    io.save_spectra(args.out, report)
    msg = f"numerical rank (rel. tol {args.rank_tol:g}): {numerical_rank_rmin(model.A, args.rank_tol)}"
    if args.tol:
        msg += f"; order for tol {args.tol:g}: {select_order(S1, S2, args.tol)}"
    print(msg)
    return 0


# --- evaluate -----------------------------------------------------------------

def cmd_evaluate(args) -> int:
    model = io.load_model(args.model)
    test = io.load_samples(args.test)
    rep = evaluate_model(model, test, mode=str(model.meta.get("mode", "")), absolute=args.absolute)
    prefix = Path(args.out)
    io.save_errors(prefix.with_suffix(".csv"), rep.points, rep.errors, absolute=args.absolute)
    summary = rep.summary()
    summary.update({"model": str(args.model), "test": str(args.test)})
    io.write_json(prefix.with_suffix(".json"), io.jsonable(summary))
    flag = f" ({rep.n_failed} points failed to evaluate)" if rep.n_failed else ""
    print(f"order {rep.order_used}: median error {rep.median_error:.4e}, max {rep.max_error:.4e}{flag}")
    return 0


# --- reproduce ------------------------------------------------------------------

def cmd_reproduce(args) -> int:
    overrides = {}
    if args.inner_iters is not None:
        overrides.update(inner_iters=args.inner_iters, lr_drop_every=max(1, args.inner_iters // 4))
    summary = reproduce(args.experiment, args.out, scale=args.scale, seed=args.seed,
                        modes=args.modes or MODES, overrides=overrides)
    for tag, s in summary["modes"].items():
        print(f"{tag:>24s}: r={s['order_used']} median error {s['median_error']:.3e}, "
              f"s2/s1={s['sv_ratio_2']:.2e}, s4/s1={s['sv_ratio_4']:.2e}")
    for key in ("rank1_recovered", "symmetric_vs_nonsymmetric_ratio", "ordering_holds"):
        if key in summary:
            print(f"{key}: {summary[key]}")
    return 0


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sylvrank", description="Learn low-order structured models from "
                                "transfer-function data via rank-regularized Sylvester constraints.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write ground truth and sample sets of a benchmark")
    g.add_argument("--benchmark", required=True, choices=BENCHMARKS)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--n", type=_positive_int, help="delay rod: number of nodes (default 101)")
    g.add_argument("--tau", type=float, default=1.0, help="delay rod: delay (default 1)")
    g.add_argument("--train", type=_positive_int, help="delay rod: training points (default 150)")
    g.add_argument("--test", type=_positive_int, help="number of test frequencies")
    g.add_argument("--train-range", type=float, nargs=2, metavar=("LO", "HI"))
    g.add_argument("--test-range", type=float, nargs=2, metavar=("LO", "HI"))
    g.add_argument("--points", nargs="+", help="scalar delay: training points (complex literals)")
    g.add_argument("--conjugate-close", action="store_true", help="add the conjugate of every point")
    g.add_argument("--grid", type=_positive_int, default=31, help="thermal block: interior nodes per side")
    g.add_argument("--train-per-axis", type=_positive_int, default=4)
    g.add_argument("--test-per-axis", type=_positive_int, default=5)
    g.add_argument("--param-range", type=float, nargs=2, default=(0.1, 10.0), metavar=("LO", "HI"))
    g.add_argument("--validation", type=int, default=0,
                   help="thermal block: hold out this many training samples (uniform draw)")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="solve the regularized constraint problem on a sample set")
    f.add_argument("data", help="sample set JSON")
    f.add_argument("--alphas", help="coefficient functions, e.g. 's,1,exp(-1s)' or a preset "
                   "(delay, delay:TAU, second-order, affine:D, thermal-block)")
    f.add_argument("--mode", choices=MODES)
    f.add_argument("--symmetric", action="store_true", help="parametrize A_i = K_i + K_i^T")
    f.add_argument("--lambda0", type=float, help="regularization (default 5e-3)")
    f.add_argument("--lr", dest="lr0", type=float, help="initial learning rate (default 5e-3)")
    f.add_argument("--inner-iters", type=_positive_int, help="optimizer steps per solve (default 50000)")
    f.add_argument("--lr-drop-every", type=_positive_int, help="default 12500")
    f.add_argument("--lr-drop-factor", type=float, help="default 5")
    f.add_argument("--outer-iters", type=int, help="reweighting iterations (default 4 for reweighted)")
    f.add_argument("--epsilon", type=float, help="weight update offset (default 1e-12)")
    f.add_argument("--max-val", type=float, help="weight cap (default 1e4)")
    f.add_argument("--seed", type=int)
    f.add_argument("--init-scale", type=float, help="initial parameter scale (default 1e-2)")
    f.add_argument("--normalize", action="store_true", help="divide the data by its largest magnitude first")
    f.add_argument("--config", help="TOML or JSON file with the same options (flags win)")
    f.add_argument("--out", required=True, help="output directory")
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("compress", help="project a solution onto its dominant subspaces")
    c.add_argument("solution", help="model JSON written by fit")
    grp = c.add_mutually_exclusive_group(required=True)
    grp.add_argument("--order", type=int, help="reduced order r >= 1")
    grp.add_argument("--tol", type=_unit_interval, help="discarded-energy tolerance")
    c.add_argument("--real", action="store_true", help="return an equivalent real model first")
    c.add_argument("--data", help="training samples (needed with --real)")
    c.add_argument("--spectra", help="write the singular values to this CSV")
    c.add_argument("--out", required=True, help="reduced model JSON")
    c.set_defaults(func=cmd_compress)

    e = sub.add_parser("evaluate", help="per-point errors of a model against test data")
    e.add_argument("model")
    e.add_argument("test")
    e.add_argument("--absolute", action="store_true", help="absolute instead of relative errors")
    e.add_argument("--out", required=True, help="output prefix (.csv and .json are written)")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("reproduce", help="run an experiment in all modes and write its reports")
    r.add_argument("experiment", choices=EXPERIMENTS)
    r.add_argument("--out", required=True)
    r.add_argument("--scale", choices=SCALES, default="desk")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--modes", nargs="+", choices=MODES)
    r.add_argument("--inner-iters", type=_positive_int, help="override the optimizer budget")
    r.set_defaults(func=cmd_reproduce)

    s = sub.add_parser("svd-report", help="stacked singular values of a model")
    s.add_argument("solution")
    s.add_argument("--out", required=True, help="CSV (index, sv_horizontal, sv_vertical)")
    s.add_argument("--tol", type=_unit_interval, help="also report the order selected for this tolerance")
    s.add_argument("--rank-tol", type=_unit_interval, default=1e-8)
    s.set_defaults(func=cmd_svd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "compress" and args.order is not None and args.order < 1:
        parser.error("--order must be a positive integer")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ArithmeticError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, SylvrankError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

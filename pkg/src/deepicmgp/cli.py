"""Command-line interface: ``deepicmgp {fit,predict,design,bench}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import benchfns
from .acquisition import (
    AcquisitionConfig,
    SimulatorError,
    design_loop,
    save_design,
    select_next,
    write_step_log,
)
from .baseline import alc_indep, fit_indep
from .bundle import load_chain, save_chain
from .data import Dataset, columns, read_csv, write_csv
from .doe import grid, maximin_lhd, rescale
from .errors import (
    DataError,
    DegenerateLikelihoodError,
    DomainError,
    EmptyCandidateError,
    FactorizationError,
    ShapeError,
    UnknownFunctionError,
)
from .metrics import evaluate
from .predictor import predict
from .sampler import ModelSpec, SamplerConfig, run_chain

log = logging.getLogger("deepicmgp")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
TEST_SEED_SALT = 0x7E57


class UsageError(Exception):
    pass


def _bounds(values):
    """Parse ``LO:HI`` strings, one per input dimension."""
    if values is None:
        return None
    out = []
    for v in values:
        try:
            lo, hi = (float(p) for p in v.split(":"))
        except ValueError:
            raise UsageError(f"bad --bounds entry {v!r}; expected LO:HI") from None
        out.append((lo, hi))
    return np.array(out)


def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=5000, help="MCMC iterations")
    p.add_argument("--burnin", type=int, default=1000)
    p.add_argument("--thin", type=int, default=2)
    p.add_argument("--layers", type=int, choices=(1, 2), default=2)
    p.add_argument("--latent-dim", type=int, default=None, help="latent width (default max(d, Q))")
    p.add_argument("--jitter", type=float, default=1e-8)
    p.add_argument("--out", required=False)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="deepicmgp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a chain and write a bundle directory")
    _common(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--bounds", nargs="+", metavar="LO:HI")

    p = sub.add_parser("predict", help="predict from a bundle")
    _common(p)
    p.add_argument("--bundle", required=True)
    p.add_argument("--x", required=True, help="test inputs CSV")
    p.add_argument("--truth", help="test outputs CSV; enables the metric report")
    p.add_argument("--metrics", help="metric JSON path (default: <out stem>_metrics.json)")
    p.add_argument("--latent-mapping", choices=("sample", "mean"), default="sample")
    p.add_argument("--latent-dist", choices=("normal", "student"), default="normal")
    p.add_argument("--no-timing", action="store_true", help="report seconds as 0")

    p = sub.add_parser("design", help="sequential design with ALC")
    _common(p)
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--fn", help="benchmark simulator for the closed loop")
    p.add_argument("--n0", type=int, help="initial LHD size when --x/--y are not given")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--grid", type=int, default=20, help="grid points per dimension")
    p.add_argument("--candidates", help="candidate CSV (overrides the grid)")
    p.add_argument("--reference", help="reference CSV (overrides the grid)")
    p.add_argument("--bounds", nargs="+", metavar="LO:HI")
    p.add_argument("--acq", choices=("alc", "random"), default="alc")
    p.add_argument("--model", choices=("deep", "indep"), default="deep")
    p.add_argument("--suggest-only", action="store_true")
    p.add_argument("--n-test", type=int, default=0, help="held-out test size for step metrics")
    p.add_argument("--lhd-iters", type=int, default=10_000)
    p.add_argument("--no-timing", action="store_true")

    p = sub.add_parser("bench", help="repeated fit/predict/score on a benchmark")
    _common(p)
    p.add_argument("--fn", required=True)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-test", type=int)
    p.add_argument("--lhd-iters", type=int, default=10_000)
    p.add_argument("--no-timing", action="store_true")
    return parser


def _sampler_config(args, seed=None):
    return SamplerConfig(
        iterations=args.iters,
        burn_in=args.burnin,
        thinning=args.thin,
        seed=args.seed if seed is None else seed,
        jitter=args.jitter,
    )


def _model(args):
    return ModelSpec(layers=args.layers, latent_dim=args.latent_dim)


def _load_xy(x_path, y_path, bounds):
    _, x = read_csv(x_path)
    _, y = read_csv(y_path)
    return Dataset.from_arrays(x, y, bounds=bounds)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m for m in missing))


def cmd_fit(args):
    _require(args, "out")
    data = _load_xy(args.x, args.y, _bounds(args.bounds))
    chain = run_chain(data, _sampler_config(args), _model(args))
    save_chain(args.out, chain, data)
    acc = chain.acceptance
    print(
        f"samples={len(chain)} accept_theta_w={acc['theta_w']:.3f} "
        f"accept_theta_y={acc['theta_y']:.3f} ess_mean_shrinks={acc['ess_mean_shrinks']:.2f}"
    )
    return EXIT_OK


def write_prediction(path, pred):
    q = pred.mean.shape[1]
    iu = np.triu_indices(q, k=1)
    head = columns("mean", q) + columns("var", q) + [f"cov_{i + 1}{j + 1}" for i, j in zip(*iu)]
    rows = np.hstack([pred.mean, pred.var, pred.cov[:, iu[0], iu[1]]])
    write_csv(path, head, rows)


def write_json(path, record):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(record) + "\n")


def cmd_predict(args):
    _require(args, "out")
    chain, train = load_chain(args.bundle)
    header, x_test = read_csv(args.x)
    if x_test.shape[1] != train.d:
        raise ShapeError(f"bundle has d={train.d} but {args.x} has {x_test.shape[1]} columns")
    t0 = time.perf_counter()
    pred = predict(chain, x_test, train, args.seed, args.latent_mapping, args.latent_dist)
    seconds = time.perf_counter() - t0
    write_prediction(args.out, pred)
    if args.truth:
        _, truth = read_csv(args.truth)
        if truth.shape != pred.mean.shape:
            raise ShapeError(f"truth has shape {truth.shape}, predictions {pred.mean.shape}")
        report = evaluate(pred, truth, 0.0 if args.no_timing else seconds)
        path = args.metrics or os.path.splitext(args.out)[0] + "_metrics.json"
        write_json(path, report.as_record(args.seed))
    return EXIT_OK


def _acq_sets(args, d, lower, upper):
    if args.candidates:
        _, cand = read_csv(args.candidates)
    else:
        cand = rescale(grid(args.grid, d), lower, upper)
    if args.reference:
        _, ref = read_csv(args.reference)
    else:
        ref = rescale(grid(args.grid, d), lower, upper)
    return AcquisitionConfig(candidates=cand, reference=ref)


def cmd_design(args):
    _require(args, "out")
    bounds = _bounds(args.bounds)
    spec = benchfns.spec(args.fn) if args.fn else None
    if spec is not None and bounds is None:
        bounds = spec.bounds
    if args.x and args.y:
        data = _load_xy(args.x, args.y, bounds)
    elif spec is not None and args.n0:
        x0 = rescale(maximin_lhd(args.n0, spec.d, args.lhd_iters, seed=args.seed), *bounds.T)
        data = Dataset.from_arrays(x0, benchfns.evaluate(args.fn, x0), bounds=bounds)
    else:
        raise UsageError("give --x and --y, or --fn with --n0")
    if not args.suggest_only and spec is None:
        raise UsageError("the closed loop needs --fn (or use --suggest-only)")
    acq_config = _acq_sets(args, data.d, data.x_bounds[:, 0], data.x_bounds[:, 1])
    os.makedirs(args.out, exist_ok=True)

    if args.suggest_only:
        cfg = _sampler_config(args)
        if args.model == "deep":
            res = select_next(run_chain(data, cfg, _model(args)), acq_config, data, args.seed)
        else:
            res = alc_indep(fit_indep(data, cfg), acq_config.candidates, acq_config.reference)
        head = columns("x", data.d) + ["score"]
        row = np.append(res.selected_point, res.scores[res.selected_index])[None, :]
        write_csv(os.path.join(args.out, "next.csv"), head, row)
        return EXIT_OK

    test = None
    if args.n_test:
        design = maximin_lhd(args.n_test, spec.d, args.lhd_iters, seed=args.seed ^ TEST_SEED_SALT)
        xt = rescale(design, *bounds.T)
        test = (xt, benchfns.evaluate(args.fn, xt))
    save_design(args.out, data)
    write_step_log(os.path.join(args.out, "steps.csv"), [], data.d, data.q, test is not None)
    design_loop(
        lambda x: benchfns.evaluate(args.fn, x),
        args.steps,
        _sampler_config(args),
        acq_config,
        data,
        model=_model(args),
        acq=args.acq,
        surrogate=args.model,
        test=test,
        out_dir=args.out,
        timing=not args.no_timing,
    )
    return EXIT_OK


def bench_records(fn, reps, seed, sampler_config, model, n_train=None, n_test=None,
                  lhd_iters=10_000, timing=True):
    """Yield one metric record per repetition."""
    spec = benchfns.spec(fn)
    n_train = n_train or spec.default_n_train
    n_test = n_test or spec.default_n_test
    lo, hi = spec.lower, spec.upper
    x_test = rescale(maximin_lhd(n_test, spec.d, lhd_iters, seed=seed ^ TEST_SEED_SALT), lo, hi)
    y_test = benchfns.evaluate(fn, x_test)
    for rep in range(reps):
        rep_seed = seed ^ rep
        try:
            t0 = time.perf_counter()
            x = rescale(maximin_lhd(n_train, spec.d, lhd_iters, seed=rep_seed), lo, hi)
            data = Dataset.from_arrays(x, benchfns.evaluate(fn, x), bounds=spec.bounds)
            chain = run_chain(data, replace(sampler_config, seed=rep_seed), model)
            pred = predict(chain, x_test, data, rep_seed)
            seconds = time.perf_counter() - t0 if timing else 0.0
            yield evaluate(pred, y_test, seconds).as_record(rep_seed)
        except Exception as exc:
            exc.args = (f"rep {rep}: {exc}",) + exc.args[1:]
            raise


def cmd_bench(args):
    records = bench_records(
        args.fn,
        args.reps,
        args.seed,
        _sampler_config(args),
        _model(args),
        args.n_train,
        args.n_test,
        args.lhd_iters,
        timing=not args.no_timing,
    )
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for rec in records:
            out.write(json.dumps(rec) + "\n")
            out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "predict": cmd_predict, "design": cmd_design, "bench": cmd_bench}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    try:
        return COMMANDS[args.command](args)
    except (UsageError, UnknownFunctionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ShapeError, DomainError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (
        FactorizationError,
        DegenerateLikelihoodError,
        EmptyCandidateError,
        SimulatorError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: gof-test, sample-quality, benchmark, efficiency.  Every
output document embeds a manifest (command, resolved config, seed, code
version, backend) and is deterministic for a fixed seed, so re-running a
command reproduces the file bit for bit.  Wall-clock numbers appear only
in the benchmark tables, which exist to be non-deterministic.
"""

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import __version__
from ._backends import backend_name, get_backend
from .discrepancy import efficiency_experiment, rphisd
from .goftest import run_test
from .hyper import default_config
from .kernels import imq_kernel, ksd_squared
from .models import (SampleSet, gaussian_model, gmm_posterior_model,
                     model_from_spec, read_sample_csv, welling_teh_data)
from .sgld import SgldConfig, select_step_size


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message)


def _manifest(command: str, args: argparse.Namespace, config: dict) -> dict:
    return {
        "command": command,
        "argv": sys.argv[1:],
        "config": config,
        "seed": getattr(args, "seed", 0),
        "threads": getattr(args, "threads", 1),
        "version": __version__,
        "backend": backend_name(),
    }


def _emit(payload, out_path):
    if out_path is None:
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
        return
    if out_path.endswith(".csv") and "rows" in payload:
        rows = payload["rows"]
        with open(out_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        meta = {k: v for k, v in payload.items() if k != "rows"}
        with open(out_path[:-4] + ".json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)


def _family(arg: str) -> str:
    name = arg.replace("-", "_")
    if name not in ("l1_imq", "l2_sechexp"):
        raise CliError(f"unknown family {arg!r}")
    return name


def _resolve_model(arg: str, dim: int):
    if arg == "gaussian":
        return gaussian_model(dim)
    if arg == "gmm-posterior":
        return gmm_posterior_model(welling_teh_data())
    return model_from_spec(arg)


def cmd_gof_test(args) -> int:
    try:
        sample = read_sample_csv(args.sample)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read sample: {exc}", file=sys.stderr)
        return 1
    model = _resolve_model(args.model, sample.dim)
    if model.dim != sample.dim:
        print(f"error: model dimension {model.dim} != sample dimension {sample.dim}",
              file=sys.stderr)
        return 1
    overrides = {}
    if args.r is not None:
        overrides["r"] = args.r
    if args.a_prime is not None:
        overrides["a_prime"] = args.a_prime
    cfg = default_config(args.gamma, sample.dim, _family(args.family),
                         sample=sample, preset=args.preset, M=args.M,
                         seed=args.seed, overrides=overrides or None)
    result, null_draws = run_test(sample, model, cfg, args.alpha,
                                  n_sims=args.n_sims,
                                  cov_from_null_draws=args.cov_from_null_draws,
                                  return_null_draws=True)
    if args.null_draws_csv:
        np.savetxt(args.null_draws_csv, null_draws, delimiter=",", fmt="%.17g")
    payload = {
        "result": result.to_dict(),
        "manifest": _manifest("gof-test", args, cfg.to_dict()),
    }
    _emit(payload, args.out)
    return 0


def cmd_sample_quality(args) -> int:
    model = _resolve_model(args.model, 2)
    steps = [float(s) for s in args.steps.split(",")]
    m_list = [int(m) for m in args.M_list.split(",")]
    measures = []
    for m in m_list:
        for family in ("l1_imq", "l2_sechexp"):
            measures.append({"kind": "rphisd", "family": family, "M": m,
                             "gamma": args.gamma, "preset": "sample-quality"})
    measures.append({"kind": "imq_ksd", "c": 1.0, "beta": -0.5})
    cfg = SgldConfig(step=steps[0], n_iters=1, minibatch=args.minibatch,
                     init=np.zeros(model.dim), seed=args.seed)
    rows = select_step_size(steps, model, cfg, measures, n_keep=args.n_keep,
                            replicates=args.replicates, seed=args.seed)
    payload = {"rows": rows,
               "manifest": _manifest("sample-quality", args,
                                     {"steps": steps, "M_list": m_list,
                                      "gamma": args.gamma})}
    _emit(payload, args.out)
    return 0


def _time_call(fn, reps):
    best = np.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cmd_benchmark(args) -> int:
    n_grid = [int(n) for n in args.n_grid.split(",")]
    dim = args.dim
    rng = np.random.default_rng(args.seed)
    model = gaussian_model(dim)
    kern = imq_kernel(1.0, -0.5)
    rows = []
    for n in n_grid:
        sample = SampleSet(rng.standard_normal((n, dim)))
        for family in ("l1_imq", "l2_sechexp"):
            cfg = default_config(args.gamma, dim, family, sample=sample,
                                 preset="sample-quality", M=args.M, seed=args.seed)
            rphisd(sample, model, cfg)  # warm-up/compile
            secs = _time_call(lambda: rphisd(sample, model, cfg), args.reps)
            rows.append({"op": f"rphisd_{family}", "backend": backend_name(),
                         "n": n, "dim": dim, "seconds": secs})
        ksd_squared(sample, model, kern)
        secs = _time_call(lambda: ksd_squared(sample, model, kern), args.reps)
        rows.append({"op": "ksd_imq", "backend": backend_name(),
                     "n": n, "dim": dim, "seconds": secs})
        if args.compare_backends:
            rows.extend(_backend_comparison_rows(sample, model, args))
    payload = {"rows": rows,
               "manifest": _manifest("benchmark", args,
                                     {"n_grid": n_grid, "dim": dim, "M": args.M})}
    _emit(payload, args.out)
    return 0


def _backend_comparison_rows(sample, model, args):
    """Time the raw hot kernels under both backends on the same inputs."""
    pts = sample.canonical_points()
    scores = np.ascontiguousarray(model.score(pts), dtype=np.float64)
    cfg = default_config(args.gamma, sample.dim, "l1_imq", sample=sample,
                         preset="sample-quality", M=args.M, seed=args.seed)
    z = np.asarray(
        np.random.default_rng(args.seed).standard_normal((args.M, sample.dim)))
    kind, p1, p2 = cfg.feature_spec(sample.mean).backend_args()
    rows = []
    for name in ("numba", "numpy"):
        impl = get_backend(name)
        impl.stein_feature_sums(pts, scores, z, sample.mean, kind, p1, p2, 0.0)
        secs = _time_call(lambda: impl.stein_feature_sums(
            pts, scores, z, sample.mean, kind, p1, p2, 0.0), args.reps)
        rows.append({"op": "feature_sums_kernel", "backend": name,
                     "n": sample.n, "dim": sample.dim, "seconds": secs})
        impl.stein_kernel_total(pts, scores, 0, 1.0, -0.5, 0.0, sample.mean)
        secs = _time_call(lambda: impl.stein_kernel_total(
            pts, scores, 0, 1.0, -0.5, 0.0, sample.mean), args.reps)
        rows.append({"op": "ksd_kernel", "backend": name,
                     "n": sample.n, "dim": sample.dim, "seconds": secs})
    return rows


def cmd_efficiency(args) -> int:
    dim = args.dim
    model = gaussian_model(dim)
    rng = np.random.default_rng(args.seed)
    sample = SampleSet(rng.standard_normal((args.n, dim)))
    gammas = [float(g) for g in args.gammas.split(",")]
    m_grid = [int(m) for m in args.M_grid.split(",")]
    rows = []
    for family in args.families.split(","):
        rows.extend(efficiency_experiment(sample, model, gammas, m_grid,
                                          args.trials, _family(family),
                                          seed=args.seed, preset=args.preset,
                                          threads=args.threads))
    payload = {"rows": rows,
               "manifest": _manifest("efficiency", args,
                                     {"gammas": gammas, "M_grid": m_grid,
                                      "n": args.n, "dim": dim})}
    _emit(payload, args.out)
    return 0


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1,
                   help="workers for experiment trial loops; results are "
                        "identical at any count")
    p.add_argument("--out", default=None, help="output path (.json, or .csv for tables)")


def build_parser() -> _Parser:
    parser = _Parser(prog="steindisc")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gof-test", help="goodness-of-fit test on a sample CSV")
    p.add_argument("--sample", required=True)
    p.add_argument("--model", default="gaussian",
                   help="gaussian | gmm-posterior | path to a model spec JSON")
    p.add_argument("--family", default="l1-imq")
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--M", type=int, default=10)
    p.add_argument("--r", type=float, default=None, help="override the power r")
    p.add_argument("--a-prime", dest="a_prime", type=float, default=None,
                   help="tilt strength for the l2-sechexp family (default 1.0)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--n-sims", dest="n_sims", type=int, default=4000)
    p.add_argument("--cov-from-null-draws", dest="cov_from_null_draws",
                   action="store_true",
                   help="estimate the null covariance from fresh target draws "
                        "instead of the test sample")
    p.add_argument("--null-draws-csv", dest="null_draws_csv", default=None,
                   help="also write the sorted simulated null draws to this CSV")
    p.add_argument("--preset", default="gof", choices=["gof", "sample-quality", "rbm"])
    _add_common(p)
    p.set_defaults(fn=cmd_gof_test)

    p = sub.add_parser("sample-quality", help="SGLD step-size selection table")
    p.add_argument("--model", default="gmm-posterior")
    p.add_argument("--steps", default="0.05,0.01,0.005,0.001")
    p.add_argument("--M-list", dest="M_list", default="10,25,75")
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--n-keep", dest="n_keep", type=int, default=1000)
    p.add_argument("--replicates", type=int, default=5)
    p.add_argument("--minibatch", type=int, default=30)
    _add_common(p)
    p.set_defaults(fn=cmd_sample_quality)

    p = sub.add_parser("benchmark", help="wall-clock of the quadratic KSD vs the estimator")
    p.add_argument("--n-grid", dest="n_grid", default="500,1000,2000,3500,5000")
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--M", type=int, default=10)
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--compare-backends", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_benchmark)

    p = sub.add_parser("efficiency", help="Pr[estimate > reference/4] by importance sample size")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--gammas", default="0.25")
    p.add_argument("--M-grid", dest="M_grid", default="5,10,20,40")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--families", default="l1-imq,l2-sechexp")
    p.add_argument("--preset", default="sample-quality")
    _add_common(p)
    p.set_defaults(fn=cmd_efficiency)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``shtauc {generate,train,theory,eval}``.

Exit codes: 0 success, 1 config error, 2 data error, 3 some sweep cells failed.
"""
import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import theory
from .data import SyntheticSpec, generate_synthetic, load_libsvm, save_libsvm
from .errors import (ArgumentError, ConfigError, DegenerateDataError, ParseError,
                     TheoryDomainError)
from .experiment import (CONFIG_VERSION, config_hash, derive_seed, load_config,
                         model_from_dict, normalize_config, parse_grid,
                         read_results_csv, run_experiment, summarize,
                         write_results)
from .metrics import DENSE_TRUNCATE_EPS, evaluate
from .objective import make_blocks

log = logging.getLogger("shtauc")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_PARTIAL = 0, 1, 2, 3


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)!r}")


def _clean(obj):
    # strict JSON: NaN/inf become null
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return None
    return obj


def _dump(obj, path):
    text = json.dumps(_clean(obj), indent=2, default=_json_default, allow_nan=False) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)


# generate ------------------------------------------------------------------

def cmd_generate(args):
    raw = load_config(args.config)
    version = raw.pop("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported spec version {version!r}")
    seed = args.seed if args.seed is not None else raw.pop("seed", 0)
    raw.pop("seed", None)
    out_dir = args.output or raw.pop("output", "data")
    raw.pop("output", None)
    k_grid = parse_grid(raw.pop("k_star", 20), "k_star")
    r_grid = parse_grid(raw.pop("r", 0.05), "r")
    base = {"n": raw.pop("n", 1000), "d": raw.pop("d", 1000), "mu": raw.pop("mu", 0.3)}
    if raw:
        raise ConfigError(f"unknown spec keys {sorted(raw)}")

    specs = []
    for ik, k_star in enumerate(k_grid):
        for r in r_grid:
            spec = SyntheticSpec(n=int(base["n"]), d=int(base["d"]), k_star=int(k_star),
                                 r=float(r), mu=float(base["mu"]),
                                 seed=derive_seed(int(seed), ik))
            try:
                spec.validate()
            except ArgumentError as exc:
                raise ConfigError(str(exc)) from None
            specs.append(spec)

    os.makedirs(out_dir, exist_ok=True)
    for spec in specs:
        data, truth = generate_synthetic(spec)
        stem = os.path.join(out_dir, f"synthetic_kstar{spec.k_star}_r{spec.r:.2f}")
        save_libsvm(data, stem + ".libsvm")
        _dump({"support": truth.support.tolist(), "mu": truth.mu, "seed": spec.seed,
               "master_seed": int(seed), "spec": spec.to_dict()}, stem + ".truth.json")
        log.info("wrote %s.libsvm", stem)
    print(f"generated {len(specs)} dataset(s) in {out_dir}")
    return EXIT_OK


# train ---------------------------------------------------------------------

def cmd_train(args):
    raw = load_config(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    out_dir = args.output or raw.get("output") or "results"
    cfg = normalize_config(raw)
    threads = args.threads or int(raw.get("threads", 1))
    results = run_experiment(cfg, threads=threads)
    write_results(cfg, results, out_dir)
    failed = sum(r.status != "ok" for r, _, _, _ in results)
    print(f"{len(results)} run(s), {failed} failed; config {config_hash(cfg)}; wrote {out_dir}")
    return EXIT_PARTIAL if failed else EXIT_OK


# theory --------------------------------------------------------------------

def theory_report(raw):
    """Evaluate every theory calculator on a params mapping."""
    raw = dict(raw)
    raw.pop("version", None)
    try:
        params = theory.TheoryParams(
            k=int(raw.pop("k")), k_star=int(raw.pop("k_star")), d=float(raw.pop("d")),
            n=float(raw.pop("n")), b=float(raw.pop("b", 1)), r=float(raw.pop("r")),
            lam=float(raw.pop("lambda", raw.pop("lam", 1.0))))
    except KeyError as exc:
        raise ConfigError(f"missing theory parameter {exc}") from None
    except ArgumentError as exc:
        raise ConfigError(str(exc)) from None

    report = {"params": params.to_dict(), "high_probability_bounds": True}
    nu_value = theory.nu(params.k, params.k_star)
    report["nu"] = nu_value

    rho = raw.pop("rho", None)
    consts = theory.gaussian_rsc_rss(params)
    report["gaussian"] = consts.to_dict()
    if rho is not None:
        kap = theory.kappa(nu_value, float(rho))
        report["kappa_at_rho"] = {"rho": float(rho), "kappa": kap,
                                  "contraction": theory.is_contraction(kap)}
        report["contraction"] = theory.is_contraction(kap)
    else:
        report["contraction"] = consts.contraction

    grid = parse_grid(raw.pop("r_grid", "0.05:0.05:0.5"), "r_grid")
    curve = theory.condition_number_curve(params, [float(r) for r in grid])
    cdict = curve.to_dict()
    past = [p.rho for p in curve.points if p.valid and math.sqrt(p.r) >= curve.sqrt_r_star]
    cdict["non_increasing_past_axis"] = all(a >= b for a, b in zip(past, past[1:]))
    report["condition_curve"] = cdict

    norm_w_star = float(raw.pop("norm_w_star", 1.0))
    sigma_bound = float(raw.pop("sigma_spectral_bound", 1.0))
    try:
        report["tolerance_error"] = {
            "value": theory.tolerance_error(params, norm_w_star, sigma_bound),
            "kappa": theory.tolerance_kappa(params)}
    except TheoryDomainError as exc:
        report["tolerance_error"] = {"value": None, "error": str(exc)}

    ds = raw.pop("dataset", None)
    if ds is not None:
        if isinstance(ds, str):
            ds = {"path": ds}
        data = load_libsvm(ds["path"], ds.get("d_hint"))
        s = int(ds.get("s", min(params.s, data.d)))
        probes = int(ds.get("probes", 100))
        seed = int(ds.get("seed", 0))
        part = None
        if ds.get("block_size"):
            part = make_blocks(data.n, int(ds["block_size"]), np.random.default_rng(seed))
        eigs = theory.empirical_restricted_eigs(data, s, probes, seed, part)
        report["empirical"] = {"s": s, "probes": probes, "seed": seed,
                               "rho_minus_hat": eigs.rho_minus_hat,
                               "rho_plus_hat": eigs.rho_plus_hat,
                               "ordered": eigs.rho_minus_hat <= eigs.rho_plus_hat}
    if raw:
        raise ConfigError(f"unknown theory keys {sorted(raw)}")
    return report


def cmd_theory(args):
    report = theory_report(load_config(args.config))
    _dump(report, args.output)
    return EXIT_OK


# eval ----------------------------------------------------------------------

def cmd_eval(args):
    if args.results:
        rows = read_results_csv(args.results)
        _dump({"summary": summarize(rows)}, args.output)
        return EXIT_OK
    if not (args.model and args.data):
        raise ConfigError("eval needs --model and --data (or --results)")
    with open(args.model) as fh:
        payload = json.load(fh)
    w = model_from_dict(payload)
    # models written by `train` come from hard thresholding, so their support is exact
    sparse = args.sparse_model or "trace" in payload
    data = load_libsvm(args.data, d_hint=w.size)
    if data.d != w.size:
        raise DegenerateDataError(f"model has d={w.size} but data has d={data.d}")
    truth = None
    if args.truth:
        with open(args.truth) as fh:
            truth = json.load(fh)["support"]
    eps = args.truncate_eps
    if eps is None:
        eps = 0.0 if sparse else DENSE_TRUNCATE_EPS
    report = evaluate(w, data.features, data.labels, truth, eps)
    _dump(report.to_dict(), args.output)
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the master seed")
    common.add_argument("--threads", type=int, default=None, help="worker processes")
    common.add_argument("--output", "-o", default=None, help="output file or directory")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(prog="shtauc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write synthetic datasets")
    p.add_argument("--config", "-c", required=True, help="generator spec (YAML/JSON)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", parents=[common], help="run a training sweep")
    p.add_argument("--config", "-c", required=True, help="experiment config (YAML/JSON)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("theory", parents=[common], help="evaluate convergence constants")
    p.add_argument("--config", "-c", required=True, help="theory params (YAML/JSON)")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("eval", parents=[common], help="score a model or aggregate results")
    p.add_argument("--config", "-c", default=None, help=argparse.SUPPRESS)
    p.add_argument("--model", help="model JSON (or a trace JSON)")
    p.add_argument("--data", help="libsvm dataset")
    p.add_argument("--truth", help="truth sidecar JSON with a 'support' list")
    p.add_argument("--results", help="results.csv to aggregate instead")
    p.add_argument("--truncate-eps", type=float, default=None)
    p.add_argument("--sparse-model", action="store_true",
                   help="model is exactly sparse; use truncate-eps 0")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, TheoryDomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, DegenerateDataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

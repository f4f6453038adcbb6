"""Experiment configs, sweep execution and result emission.

A config file (YAML or JSON, ``version: 1``) looks like::

    version: 1
    method: sht_auc              # or stoiht_logistic
    seed: 2024                   # master seed
    trials: 10
    folds: 5
    test_folds: 1                # outer folds evaluated per trial (default: all)
    data:
      synthetic: {n: 1000, d: 1000, k_star: 40, r: 0.05, mu: 0.3}
      # libsvm: path/to/file.libsvm
    optimizer:
      sparsity_k: 40
      step_size: 0.003
      block_size: 50             # or block_count: 20
      epochs: 30                 # or iterations: 600
    sweep:                       # optional grids
      r: [0.05, 0.25, 0.5]       # data axes: r, k_star
      k: "20:20:80"              # optimizer axes: k, step_size, block_size
      step_size: [0.001, 0.003]
    tune: auto                   # auto | true | false
    truncate_eps: 0.0

Grids accept a scalar, a list, or an inclusive ``"start:step:stop"`` range.

Seeds for every random choice derive from the master seed and the position
of the choice in the sweep (see :func:`derive_seed`), so cells can run in
any order or in parallel and still reproduce exactly.
"""
import copy
import csv
import hashlib
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .data import SyntheticSpec, generate_synthetic, load_libsvm, split_and_shuffle
from .errors import ConfigError, ShtAucError
from .metrics import auc_score, evaluate
from .optimizer import OptimizerConfig, sht_auc_train, stoiht_logistic_train

__all__ = [
    "CONFIG_VERSION",
    "ResultRow",
    "derive_seed",
    "parse_grid",
    "load_config",
    "normalize_config",
    "config_hash",
    "run_experiment",
    "write_results",
    "read_results_csv",
    "summarize",
    "model_to_dict",
    "model_from_dict",
]

CONFIG_VERSION = 1
METHODS = {"sht_auc": sht_auc_train, "stoiht_logistic": stoiht_logistic_train}
DATA_AXES = ("r", "k_star")
OPT_AXES = ("k", "step_size", "block_size")

# integer tags mixed into derived seeds
_DATA, _FOLDS, _RUN, _INNER = 0, 1, 2, 3


def derive_seed(master, *path):
    """64-bit seed from the master seed and an integer path (trial, tag, ...)."""
    ss = np.random.SeedSequence([int(master), *(int(p) for p in path)])
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)


def parse_grid(value, name="grid"):
    """Turn a scalar, list or inclusive ``"start:step:stop"`` string into a list."""
    if isinstance(value, str) and ":" in value:
        try:
            start, step, stop = (float(p) for p in value.split(":"))
        except ValueError:
            raise ConfigError(f"{name}: bad range {value!r}") from None
        if step <= 0 or stop < start:
            raise ConfigError(f"{name}: bad range {value!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        vals = [round(start + i * step, 12) for i in range(count)]
        if all(float(v).is_integer() for v in (start, step, stop)):
            vals = [int(v) for v in vals]
        return vals
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigError(f"{name}: grid must be nonempty")
        return list(value)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [value]
    raise ConfigError(f"{name}: cannot read grid from {value!r}")


def load_config(path):
    import yaml

    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return raw


def _int(value, name, low=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if low is not None and value < low:
        raise ConfigError(f"{name} must be >= {low}, got {value}")
    return value


def normalize_config(raw):
    """Validate a raw config mapping and fill in defaults.

    The result is plain JSON-compatible data; it is what gets hashed and
    echoed into every output.
    """
    cfg = copy.deepcopy(raw)
    version = cfg.pop("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r}")
    cfg.pop("output", None)
    cfg.pop("threads", None)
    out = {"version": CONFIG_VERSION}

    method = cfg.pop("method", "sht_auc")
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    out["method"] = method
    out["seed"] = _int(cfg.pop("seed", 0), "seed", 0)
    if out["seed"] >= 2 ** 64:
        raise ConfigError("seed must fit in 64 bits")
    out["trials"] = _int(cfg.pop("trials", 1), "trials", 1)
    out["folds"] = _int(cfg.pop("folds", 5), "folds", 2)
    test_folds = cfg.pop("test_folds", None)
    out["test_folds"] = out["folds"] if test_folds is None else _int(test_folds, "test_folds", 1)
    if out["test_folds"] > out["folds"]:
        raise ConfigError("test_folds cannot exceed folds")
    out["truncate_eps"] = float(cfg.pop("truncate_eps", 0.0))

    data = cfg.pop("data", None)
    if not isinstance(data, dict) or len(data) != 1:
        raise ConfigError("data must hold exactly one of 'synthetic' or 'libsvm'")
    if "synthetic" in data:
        syn = dict(data["synthetic"] or {})
        unknown = set(syn) - {"n", "d", "k_star", "r", "mu"}
        if unknown:
            raise ConfigError(f"unknown synthetic keys {sorted(unknown)}")
        base = SyntheticSpec()
        out["data"] = {"synthetic": {
            "n": _int(syn.get("n", base.n), "n", 2),
            "d": _int(syn.get("d", base.d), "d", 1),
            "k_star": _int(syn.get("k_star", base.k_star), "k_star", 1),
            "r": float(syn.get("r", base.r)),
            "mu": float(syn.get("mu", base.mu)),
        }}
    elif "libsvm" in data:
        src = data["libsvm"]
        if isinstance(src, str):
            src = {"path": src}
        if not isinstance(src, dict) or "path" not in src:
            raise ConfigError("libsvm data needs a path")
        out["data"] = {"libsvm": {"path": str(src["path"]),
                                  "d_hint": src.get("d_hint")}}
    else:
        raise ConfigError("data must hold 'synthetic' or 'libsvm'")

    opt = dict(cfg.pop("optimizer", None) or {})
    o = {}
    o["sparsity_k"] = _int(opt.pop("sparsity_k", opt.pop("k", 10)), "sparsity_k", 1)
    o["step_size"] = float(opt.pop("step_size", 0.001))
    if "block_count" in opt and "block_size" in opt:
        raise ConfigError("give block_size or block_count, not both")
    if "block_count" in opt:
        o["block_count"] = _int(opt.pop("block_count"), "block_count", 1)
    else:
        o["block_size"] = _int(opt.pop("block_size", 50), "block_size", 1)
    if "epochs" in opt and "iterations" in opt:
        raise ConfigError("give epochs or iterations, not both")
    if "iterations" in opt:
        o["iterations"] = _int(opt.pop("iterations"), "iterations", 0)
    else:
        o["epochs"] = _int(opt.pop("epochs", 10), "epochs", 0)
    ev = opt.pop("eval_every", None)
    o["eval_every"] = None if ev is None else _int(ev, "eval_every", 1)
    if opt:
        raise ConfigError(f"unknown optimizer keys {sorted(opt)}")
    out["optimizer"] = o

    sweep = dict(cfg.pop("sweep", None) or {})
    s = {}
    for axis in DATA_AXES + OPT_AXES:
        if axis in sweep:
            s[axis] = parse_grid(sweep.pop(axis), f"sweep.{axis}")
    if sweep:
        raise ConfigError(f"unknown sweep axes {sorted(sweep)}")
    if ("r" in s or "k_star" in s) and "synthetic" not in out["data"]:
        raise ConfigError("sweeps over r / k_star need synthetic data")
    if "block_size" in s and "block_count" in o:
        raise ConfigError("sweep.block_size conflicts with optimizer.block_count")
    out["sweep"] = s

    tune = cfg.pop("tune", "auto")
    if tune not in ("auto", True, False):
        raise ConfigError("tune must be auto, true or false")
    out["tune"] = tune
    if cfg:
        raise ConfigError(f"unknown config keys {sorted(cfg)}")
    return out


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ResultRow:
    config_hash: str
    master_seed: int
    method: str
    trial: int
    fold: int
    role: str  # "cell" (untuned), "grid" (candidate), "selected" or "rejected" (refit failed)
    cell: int
    r: float
    k_star: int
    n_train: int
    d: int
    sparsity_k: int
    step_size: float
    block_size: int
    iterations: int
    run_seed: int
    status: str
    error: str
    val_auc: float
    final_auc: float
    best_epoch_auc: float
    best_epoch: float
    f1: float
    jaccard: float
    ratio: float
    support_size: int
    trace_file: str


ROW_FIELDS = [f.name for f in fields(ResultRow)]


def model_to_dict(w):
    w = np.asarray(w, dtype=np.float64)
    idx = np.flatnonzero(w)
    return {"d": int(w.size), "indices": idx.tolist(), "values": w[idx].tolist()}


def model_from_dict(obj):
    if "model" in obj:
        obj = obj["model"]
    if "w" in obj:
        return np.asarray(obj["w"], dtype=np.float64)
    w = np.zeros(int(obj["d"]))
    w[np.asarray(obj["indices"], dtype=np.int64)] = obj["values"]
    return w


def _data_points(cfg):
    if "synthetic" not in cfg["data"]:
        return [{"r": None, "k_star": None}]
    syn = cfg["data"]["synthetic"]
    rs = cfg["sweep"].get("r", [syn["r"]])
    ks = cfg["sweep"].get("k_star", [syn["k_star"]])
    return [{"r": float(r), "k_star": int(k)} for r, k in itertools.product(rs, ks)]


def _opt_cells(cfg):
    o = cfg["optimizer"]
    ks = cfg["sweep"].get("k", [o["sparsity_k"]])
    gs = cfg["sweep"].get("step_size", [o["step_size"]])
    bs = cfg["sweep"].get("block_size", [o.get("block_size")])
    return [{"k": int(k), "step_size": float(g), "block_size": b}
            for k, g, b in itertools.product(ks, gs, bs)]


def _tuning(cfg):
    if cfg["tune"] == "auto":
        return len(_opt_cells(cfg)) > 1
    return bool(cfg["tune"])


def _load_data(cfg, trial, point):
    if "synthetic" in cfg["data"]:
        syn = dict(cfg["data"]["synthetic"])
        syn["r"], syn["k_star"] = point["r"], point["k_star"]
        spec = SyntheticSpec(seed=derive_seed(cfg["seed"], trial, _DATA), **syn)
        data, truth = generate_synthetic(spec)
        return data, truth.support
    src = cfg["data"]["libsvm"]
    return load_libsvm(src["path"], src.get("d_hint")), None


def _opt_config(cfg, cell, n_train, seed):
    o = cfg["optimizer"]
    if cell["block_size"] is not None:
        b = min(int(cell["block_size"]), n_train)
    else:
        b = math.ceil(n_train / o["block_count"])
    m = math.ceil(n_train / b)
    iters = o["iterations"] if "iterations" in o else o["epochs"] * m
    return OptimizerConfig(cell["k"], cell["step_size"], b, iters, seed, o["eval_every"])


def _fit(cfg, train, evalset, test, truth, cell, seed):
    """Train one cell; returns (row fields, trace dict, model, seconds)."""
    opt = _opt_config(cfg, cell, train.n, seed)
    info = {"sparsity_k": opt.sparsity_k, "step_size": opt.step_size,
            "block_size": opt.block_size, "iterations": opt.iterations,
            "run_seed": seed, "n_train": train.n}
    nan = float("nan")
    start = time.perf_counter()
    try:
        w, trace = METHODS[cfg["method"]](train, opt, test=evalset)
    except ShtAucError as exc:
        info.update(status="failed", error=str(exc), val_auc=nan, final_auc=nan,
                    best_epoch_auc=nan, best_epoch=nan, f1=nan, jaccard=nan,
                    ratio=nan, support_size=0)
        return info, None, None, time.perf_counter() - start
    elapsed = time.perf_counter() - start
    best = trace.best_auc_record()
    rep = evaluate(w, test.features, test.labels, truth, cfg["truncate_eps"])
    info.update(status="ok", error="", final_auc=rep.auc,
                best_epoch_auc=best.test_auc, best_epoch=best.epoch,
                f1=rep.f1, jaccard=rep.jaccard, ratio=rep.ratio,
                support_size=rep.support_size)
    info["val_auc"] = (auc_score(evalset.features @ w, evalset.labels)
                       if evalset is not test else nan)
    return info, trace.to_dict(), w, elapsed


def _run_unit(cfg, trial, p_idx, point, fold):
    """All cells for one (trial, data point, outer fold)."""
    chash = config_hash(cfg)
    data, truth = _load_data(cfg, trial, point)
    splits = split_and_shuffle(data, cfg["folds"], derive_seed(cfg["seed"], trial, _FOLDS))
    tr_idx, te_idx = splits[fold]
    train, test = data.subset(tr_idx), data.subset(te_idx)
    run_seed = derive_seed(cfg["seed"], trial, _RUN, fold)
    cells = _opt_cells(cfg)
    base = {"config_hash": chash, "master_seed": cfg["seed"], "method": cfg["method"],
            "trial": trial, "fold": fold,
            "r": data.ratio if point["r"] is None else point["r"],
            "k_star": -1 if point["k_star"] is None else point["k_star"], "d": data.d}
    out = []

    def emit(role, c_idx, cell, info, trace, w, secs):
        name = f"trace_t{trial}_p{p_idx}_f{fold}_{role}_c{c_idx}.json"
        row = ResultRow(**base, role=role, cell=c_idx,
                        trace_file=name if trace is not None else "", **info)
        payload = None
        if trace is not None:
            payload = {"config_hash": chash, "config": cfg, "row": _row_dict(row),
                       "cell": cell, "trace": trace, "model": model_to_dict(w)}
        out.append((row, name, payload, secs))

    if not _tuning(cfg):
        for c_idx, cell in enumerate(cells):
            info, trace, w, secs = _fit(cfg, train, test, test, truth, cell, run_seed)
            emit("cell", c_idx, cell, info, trace, w, secs)
        return out

    inner = split_and_shuffle(train, cfg["folds"], derive_seed(cfg["seed"], trial, _INNER, fold))
    in_tr, in_val = inner[0]
    sub_train, val = train.subset(in_tr), train.subset(in_val)
    ranked = []
    for c_idx, cell in enumerate(cells):
        info, trace, w, secs = _fit(cfg, sub_train, val, test, truth, cell, run_seed)
        emit("grid", c_idx, cell, info, trace, w, secs)
        if info["status"] == "ok":
            ranked.append((-info["val_auc"], c_idx))
    # best validation AUC first, lowest cell index on ties; a refit that
    # fails disqualifies the cell and the next one is tried
    for neg_val, c_idx in sorted(ranked):
        info, trace, w, secs = _fit(cfg, train, test, test, truth, cells[c_idx], run_seed)
        info["val_auc"] = -neg_val
        if info["status"] == "ok":
            emit("selected", c_idx, cells[c_idx], info, trace, w, secs)
            break
        emit("rejected", c_idx, cells[c_idx], info, trace, w, secs)
    return out


def _units(cfg):
    for trial in range(cfg["trials"]):
        for p_idx, point in enumerate(_data_points(cfg)):
            for fold in range(cfg["test_folds"]):
                yield trial, p_idx, point, fold


def _run_unit_star(args):
    return _run_unit(*args)


def run_experiment(cfg, threads=1):
    """Run every sweep cell; results come back in grid order.

    Returns a list of ``(ResultRow, trace_name, trace_payload, seconds)``.
    Failing cells produce rows with ``status="failed"`` instead of raising.
    """
    units = [(cfg, *u) for u in _units(cfg)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_run_unit_star, units))
    else:
        chunks = [_run_unit_star(u) for u in units]
    return [item for chunk in chunks for item in chunk]


def _fmt(value):
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def _row_dict(row):
    d = {}
    for name in ROW_FIELDS:
        v = getattr(row, name)
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        if isinstance(v, float) and math.isnan(v):
            v = None
        d[name] = v
    return d


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(ROW_FIELDS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, f)) for f in ROW_FIELDS])
    return buf.getvalue()


def summarize(rows):
    """Mean and standard deviation of the headline metrics per data point.

    Uses ``selected`` rows when tuning was done, ``cell`` rows otherwise;
    untuned sweeps also group by the optimizer settings.
    """
    groups = {}
    for row in rows:
        if not isinstance(row, dict):
            row = _row_dict(row)
        if row["role"] == "grid" or row["status"] != "ok":
            continue
        key = (row["method"], float(row["r"]), int(row["k_star"]))
        if row["role"] == "cell":
            key += (int(row["sparsity_k"]), float(row["step_size"]), int(row["block_size"]))
        groups.setdefault(key, []).append(row)
    out = []
    for key, members in groups.items():
        entry = {"method": key[0], "r": key[1], "k_star": key[2], "runs": len(members)}
        if len(key) > 3:
            entry.update(sparsity_k=key[3], step_size=key[4], block_size=key[5])
        for metric in ("final_auc", "best_epoch_auc", "f1", "jaccard", "ratio"):
            vals = np.array([np.nan if m[metric] is None else float(m[metric])
                             for m in members])
            vals = vals[~np.isnan(vals)]
            entry[metric] = {
                "mean": float(vals.mean()) if vals.size else None,
                "std": float(vals.std()) if vals.size else None,
            }
        out.append(entry)
    return out


def write_results(cfg, results, output_dir):
    """Write results.csv, results.json, summary.json, config.json, traces/
    and timings.csv under ``output_dir``."""
    os.makedirs(os.path.join(output_dir, "traces"), exist_ok=True)
    rows = [r for r, _, _, _ in results]
    with open(os.path.join(output_dir, "config.json"), "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(output_dir, "results.csv"), "w", newline="") as fh:
        fh.write(rows_to_csv(rows))
    with open(os.path.join(output_dir, "results.json"), "w") as fh:
        json.dump({"config_hash": config_hash(cfg), "config": cfg,
                   "rows": [_row_dict(r) for r in rows]}, fh, indent=2)
        fh.write("\n")
    with open(os.path.join(output_dir, "summary.json"), "w") as fh:
        json.dump({"config_hash": config_hash(cfg), "config": cfg,
                   "summary": summarize(rows)}, fh, indent=2)
        fh.write("\n")
    for _, name, payload, _ in results:
        if payload is not None:
            with open(os.path.join(output_dir, "traces", name), "w") as fh:
                json.dump(payload, fh, indent=1)
                fh.write("\n")
    with open(os.path.join(output_dir, "timings.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["trial", "fold", "role", "cell", "r", "k_star", "wall_time_s"])
        for row, _, _, secs in results:
            writer.writerow([row.trial, row.fold, row.role, row.cell, _fmt(row.r),
                             row.k_star, f"{secs:.6f}"])


_INT_FIELDS = {"master_seed", "trial", "fold", "cell", "k_star", "n_train", "d",
               "sparsity_k", "block_size", "iterations", "run_seed", "support_size"}
_STR_FIELDS = {"config_hash", "method", "role", "status", "error", "trace_file"}


def read_results_csv(path):
    """Rows of a results.csv as dicts with numeric columns converted."""
    with open(path, newline="") as fh:
        rows = []
        for raw in csv.DictReader(fh):
            row = {}
            for k, v in raw.items():
                if k in _STR_FIELDS:
                    row[k] = v
                elif k in _INT_FIELDS:
                    row[k] = int(v)
                else:
                    row[k] = float(v) if v != "" else float("nan")
            rows.append(row)
    return rows

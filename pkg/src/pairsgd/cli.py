"""Command-line entry point.

    pairsgd train      --data FILE --loss hinge --eta 0.1 --diameter 10 --out model.txt
    pairsgd benchmark  --data builtin:diabetes --repeats 25 --folds 5 --out auc.csv
    pairsgd stability  --mode smooth --out stability.csv
    pairsgd dp-train   --data builtin:german --loss logistic --epsilon 1 --out model.txt
    pairsgd converge   --schedule strongly-convex --out curve.csv

Settings may also come from ``--config FILE`` (``key = value`` lines, ``#``
comments); command-line flags override the file.  Exit codes: 0 success,
2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .data import DataError, load_builtin, load_libsvm, standard_pipeline
from .eval import (BENCHMARK_HEADER, CURVE_HEADER, GRID, Trainer, atomic_write, auc_score,
                   benchmark, convergence_experiment, csv_text, default_grid)
from .losses import LOSSES, HingeAUC, ProxRegularized, RejectedInput, SquareAUC
from .optimizer import PL, Constant, NumericalFailure, ProjectionBall, StronglyConvex
from .rng import parse_seed
from .stability import STABILITY_HEADER, mean_stability_estimate
from .synthetic import gaussian_classes, pl_instance

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

COMMANDS = ("train", "benchmark", "stability", "dp-train", "converge")


class ConfigError(ValueError):
    pass


# (type, default) for every setting; None default = unset
SETTINGS = {
    "data": (str, None),
    "loss": (str, "hinge"),
    "algo": (str, None),
    "eta": (float, None),
    "diameter": (float, None),
    "steps": (int, None),
    "epsilon": (float, None),
    "delta": (float, None),
    "repeats": (int, 25),
    "folds": (int, 5),
    "seed": (parse_seed, 0),
    "jobs": (int, 1),
    "out": (str, None),
    "gamma": (float, 1.0),
    "train_size": (int, None),
    "mode": (str, "smooth"),
    "schedule": (str, "convex"),
    "n_seeds": (int, 500),
    "timing": (lambda v: str(v).lower() in ("1", "true", "yes", "on"), False),
}


def parse_config_file(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pairsgd", description="Pairwise-learning SGD toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key=value settings file (flags override it)")
    for key in SETTINGS:
        flag = "--" + key.replace("_", "-")
        if key == "timing":
            p.add_argument(flag, action="store_const", const="1", default=None)
        else:
            p.add_argument(flag, dest=key, default=None)
    return p


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags; convert and range-check every value."""
    raw = parse_config_file(args.config) if args.config else {}
    unknown = set(raw) - set(SETTINGS)
    if unknown:
        raise ConfigError(f"config: unknown key(s) {sorted(unknown)}")
    for key in SETTINGS:
        v = getattr(args, key)
        if v is not None:
            raw[key] = v
    cfg = {"command": args.command}
    for key, (conv, default) in SETTINGS.items():
        if key in raw:
            try:
                cfg[key] = conv(raw[key])
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: invalid value {raw[key]!r}") from None
        else:
            cfg[key] = default
    _validate(cfg)
    return cfg


def _validate(cfg):
    cmd = cfg["command"]
    if cfg["loss"] not in LOSSES:
        raise ConfigError(f"loss: choose from {sorted(LOSSES)}")
    for key in ("eta", "diameter", "epsilon", "gamma"):
        v = cfg[key]
        if v is not None and not (v > 0 and math.isfinite(v)):
            raise ConfigError(f"{key}: must be a positive finite number")
    if cfg["delta"] is not None and not 0 < cfg["delta"] < 1:
        raise ConfigError("delta: must lie in (0, 1)")
    for key in ("repeats", "jobs", "n_seeds"):
        if cfg[key] < 1:
            raise ConfigError(f"{key}: must be >= 1")
    if cfg["steps"] is not None and cfg["steps"] < 1:
        raise ConfigError("steps: must be >= 1")
    if cfg["folds"] < 2:
        raise ConfigError("folds: must be >= 2")
    if cmd in ("train", "benchmark", "dp-train") and not cfg["data"]:
        raise ConfigError("data: a dataset path (or builtin:NAME) is required")
    if cfg["data"] and not cfg["data"].startswith("builtin:") and not Path(cfg["data"]).is_file():
        raise ConfigError(f"data: file not found: {cfg['data']}")
    if not cfg["out"]:
        raise ConfigError("out: an output path is required")
    algo = cfg["algo"]
    if cmd == "dp-train":
        cfg["algo"] = algo = algo or "dp-smooth"
        if algo not in ("dp-smooth", "dp-nonsmooth"):
            raise ConfigError("algo: dp-train needs dp-smooth or dp-nonsmooth")
        if cfg["epsilon"] is None:
            raise ConfigError("epsilon: required for dp-train")
    elif cmd in ("train", "benchmark"):
        cfg["algo"] = algo = algo or "sgd"
        if algo not in ("sgd", "ogd", "localized", "dp-smooth", "dp-nonsmooth"):
            raise ConfigError(f"algo: unknown algorithm {algo!r}")
        if algo.startswith("dp-") and cfg["epsilon"] is None:
            raise ConfigError(f"epsilon: required for {algo}")
    if cmd == "train" and cfg["algo"] in ("sgd", "ogd") and cfg["eta"] is None:
        raise ConfigError("eta: required for train with sgd/ogd")
    if cmd == "stability" and cfg["mode"] not in ("smooth", "nonsmooth", "identical"):
        raise ConfigError("mode: choose smooth, nonsmooth or identical")
    if cmd == "stability" and cfg["n_seeds"] < 10:
        raise ConfigError("n_seeds: must be >= 10")
    if cmd == "converge" and cfg["schedule"] not in ("convex", "strongly-convex", "pl"):
        raise ConfigError("schedule: choose convex, strongly-convex or pl")


def config_hash(cfg: dict) -> str:
    canon = json.dumps({k: cfg[k] for k in sorted(cfg) if k not in ("out", "jobs")},
                       sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


# ---------------------------------------------------------------- helpers


def load_data(source: str):
    ds = load_builtin(source.split(":", 1)[1]) if source.startswith("builtin:") else load_libsvm(source)
    return standard_pipeline(ds)


def model_text(w) -> str:
    return f"{len(w)}\n" + "".join(format(float(v), ".17g") + "\n" for v in w)


def read_model(path) -> np.ndarray:
    lines = Path(path).read_text(encoding="utf-8").split()
    d = int(lines[0])
    w = np.array([float(v) for v in lines[1:]])
    if len(w) != d:
        raise DataError(f"model file declares {d} coordinates but holds {len(w)}")
    return w


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def write_meta(path, cfg, **extra):
    meta = {"config": cfg, "config_hash": config_hash(cfg), "version": __version__, **extra}
    atomic_write(str(path) + ".meta.json",
                 json.dumps(_jsonable(meta), indent=2, sort_keys=True, default=str) + "\n")


def _params(cfg):
    return {"eta": cfg["eta"], "D": cfg["diameter"] if cfg["diameter"] is not None else 2.0}


def _trainer(cfg):
    return Trainer(algo=cfg["algo"], loss=cfg["loss"], steps=cfg["steps"], epsilon=cfg["epsilon"],
                   delta=cfg["delta"],
                   loss_params=(("gamma", cfg["gamma"]),) if cfg["loss"] == "mee" else ())


# ---------------------------------------------------------------- commands


def cmd_train(cfg) -> int:
    ds = load_data(cfg["data"])
    trainer = _trainer(cfg)
    params = _params(cfg)
    res = trainer.fit_result(ds, params, cfg["seed"])
    w = res.averaged if hasattr(res, "averaged") else res.weights
    out = Path(cfg["out"])
    atomic_write(out, model_text(w))
    csv_path = out.with_suffix(out.suffix + ".csv")
    atomic_write(csv_path, csv_text(BENCHMARK_HEADER, [(0, cfg["seed"], auc_score(ds.X @ w, ds.y))]))
    loss = trainer.make_loss(params["D"])
    extra = {"n": ds.n, "d": ds.d, "params": params, "constants": loss.constants.__dict__,
             "dataset": ds.meta}
    if hasattr(res, "plan"):
        extra["plan"] = res.meta
    else:
        extra["steps"] = res.steps
    write_meta(out, cfg, **extra)
    return EXIT_OK


def cmd_dp_train(cfg) -> int:
    ds = load_data(cfg["data"])
    trainer = _trainer(cfg)
    params = _params(cfg)
    res = trainer.fit_result(ds, params, cfg["seed"])
    out = Path(cfg["out"])
    atomic_write(out, model_text(res.weights))
    write_meta(out, cfg, n=ds.n, d=ds.d, privacy=res.meta, dataset=ds.meta)
    return EXIT_OK


def cmd_benchmark(cfg) -> int:
    ds = load_data(cfg["data"])
    trainer = _trainer(cfg)
    if cfg["eta"] is not None or cfg["diameter"] is not None:
        etas = (cfg["eta"],) if cfg["eta"] is not None else GRID
        Ds = (cfg["diameter"],) if cfg["diameter"] is not None else GRID
        grid = default_grid(trainer.algo, etas, Ds)
    else:
        grid = default_grid(trainer.algo)
    rep = benchmark(ds, trainer, grid, repeats=cfg["repeats"], seed=cfg["seed"], folds=cfg["folds"],
                    train_size=cfg["train_size"], jobs=cfg["jobs"])
    out = Path(cfg["out"])
    atomic_write(out, csv_text(BENCHMARK_HEADER, rep.rows()))
    write_meta(out, cfg, mean=rep.mean, std=rep.std, chosen=list(rep.params), report=rep.config)
    return EXIT_OK


def _stability_instance(cfg):
    mode = cfg["mode"]
    if cfg["data"]:
        S = load_data(cfg["data"])
    else:
        S = gaussian_classes(100 if mode == "nonsmooth" else 50, 5, seed=cfg["seed"])
    D = cfg["diameter"] or 2.0
    if mode == "nonsmooth":
        loss = HingeAUC(D / 2)
        eta = cfg["eta"] or 0.005
        T = cfg["steps"] or 400
    else:
        loss = SquareAUC(D / 2)
        eta = cfg["eta"] or 1.0 / loss.constants.smoothness_L
        T = cfg["steps"] or 500
    return S, loss, Constant(eta), T, ProjectionBall.from_diameter(D)


def cmd_stability(cfg) -> int:
    S, loss, sched, T, ball = _stability_instance(cfg)
    mode = cfg["mode"]
    kw = {}
    if mode == "identical":
        kw = {"S_prime": S, "mode": "smooth"}
    else:
        kw = {"mode": mode}
    st = mean_stability_estimate(S, loss, sched, T, ball, cfg["n_seeds"], seed=cfg["seed"], **kw)
    rows = list(st.rows)
    rows.append(("summary", T, st.mean, st.bound, "pass" if st.passed else "fail"))
    out = Path(cfg["out"])
    atomic_write(out, csv_text(STABILITY_HEADER, rows))
    write_meta(out, cfg, mode=mode, mean=st.mean, stderr=st.stderr, bound=st.bound,
               violations=st.violations, passed=st.passed, details=st.meta)
    return EXIT_OK


def cmd_converge(cfg) -> int:
    sched_kind = cfg["schedule"]
    T = cfg["steps"] or 2**14
    if sched_kind == "pl":
        inst = pl_instance(seed=cfg["seed"] + 1)
        ds, loss, ball = inst.data, inst.loss, inst.ball
        sched, avg = PL(inst.mu), "last"
    else:
        ds = load_data(cfg["data"]) if cfg["data"] else gaussian_classes(200, 5, seed=cfg["seed"] + 1)
        ball = ProjectionBall.from_diameter(cfg["diameter"] or 2.0)
        if sched_kind == "convex":
            loss = HingeAUC(ball.radius)
            sched, avg = Constant((cfg["eta"] or 0.3) / math.sqrt(T)), "eta"
        else:
            loss = ProxRegularized(SquareAUC(ball.radius), 0.05, np.zeros(ds.d))
            sched, avg = StronglyConvex(loss.constants.strong_convexity_alpha), "index"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        curve = convergence_experiment(ds, loss, sched, T, seed=cfg["seed"], ball=ball, avg=avg,
                                       runs=5 if sched_kind == "pl" else 3, timing=cfg["timing"])
    out = Path(cfg["out"])
    atomic_write(out, csv_text(CURVE_HEADER, curve.rows()))
    write_meta(out, cfg, slope=curve.slope, reference=curve.reference, exact=curve.exact,
               schedule=repr(sched), averaging=avg)
    return EXIT_OK


HANDLERS = {"train": cmd_train, "benchmark": cmd_benchmark, "stability": cmd_stability,
            "dp-train": cmd_dp_train, "converge": cmd_converge}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        return HANDLERS[cfg["command"]](cfg)
    except ConfigError as exc:
        print(f"pairsgd: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, RejectedInput, OSError) as exc:
        print(f"pairsgd: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalFailure, FloatingPointError) as exc:
        print(f"pairsgd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"pairsgd: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

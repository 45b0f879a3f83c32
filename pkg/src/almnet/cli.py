"""Command-line harness.

Subcommands: ``gen-data``, ``train-alm``, ``train-baseline``, ``benchmark``,
``selfcheck``.  Every run writes a resolved-config snapshot (canonical JSON)
into its output directory; a JSON config file can preseed any option and
explicit flags override it.  Exit codes: 0 success, 1 solver failure,
2 configuration error, 3 property failure.
"""

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import figures
from .alm import TRACE_COLUMNS, AlmConfig, alm_run
from .baseline import FirstOrderConfig, train_first_order
from .datagen import (
    TeacherConfig,
    gen_teacher_student,
    kaiming_init,
    load_dataset_csv,
    save_dataset_csv,
    write_sidecar,
)
from .errors import AlmnetError, ConfigError
from .network import NetworkSpec, mse, unpack
from .selfcheck import run_all

SCHEMA_VERSION = 1

BENCHMARK_COLUMNS = (
    "d0", "delta0",
    "alm_train_mse", "alm_test_mse", "alm_L_evals", "alm_grad_evals",
    "alm_outer_iters", "gn_iters", "alm_time_ms",
    "adam_train_mse", "adam_test_mse", "adam_time_ms",
    "sgd_train_mse", "sgd_test_mse", "sgd_time_ms",
)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(path, columns, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def _resolve(args, defaults, config_section):
    """Layer option values: defaults, then config file, then explicit flags."""
    resolved = dict(defaults)
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        section = raw.get(config_section, raw)
        for key, val in section.items():
            if key == "schema_version":
                continue
            if key not in resolved:
                raise ConfigError(f"unknown config key {key!r} for {config_section}")
            resolved[key] = val
    for key in defaults:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            resolved[key] = flag_val
    return resolved

def _snapshot(out_dir, command, resolved):
    payload = {"schema_version": SCHEMA_VERSION, "command": command, **resolved}
    (Path(out_dir) / "config_resolved.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )


def _int_list(text):
    return [int(t) for t in str(text).split(",") if t != ""]


def _float_list(text):
    return [float(t) for t in str(text).split(",") if t != ""]


def _build_spec(d0, hidden, d_out, m, mu_w, final_activation):
    dims = (d0, *hidden, d_out)
    acts = ("softplus",) * len(hidden) + (final_activation,)
    return NetworkSpec(dims, acts, m=m, mu_w=mu_w)


def _save_weights(path, spec, weights):
    arrays = {f"W{j}": W for j, W in enumerate(weights, start=1)}
    np.savez(path, dims=np.array(spec.dims), **arrays)


# ---------------------------------------------------------------- gen-data

GEN_DEFAULTS = {
    "d0": 5, "dout": 1, "hidden": "20,5", "noise": 0.0, "m": 100, "seed": 0,
}


def cmd_gen_data(args):
    opts = _resolve(args, GEN_DEFAULTS, "gen_data")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = TeacherConfig(
        d0=int(opts["d0"]), hidden=tuple(_int_list(opts["hidden"])),
        d_out=int(opts["dout"]), noise=float(opts["noise"]),
        m=int(opts["m"]), seed=int(opts["seed"]),
    )
    train, test, teacher = gen_teacher_student(cfg)
    save_dataset_csv(out / "train.csv", train)
    save_dataset_csv(out / "test.csv", test)
    write_sidecar(out / "dataset.json", cfg, teacher)
    _snapshot(out, "gen-data", opts)
    print(f"wrote {out}/train.csv and {out}/test.csv ({cfg.m} samples each)")
    return 0


# ---------------------------------------------------------------- train-alm

ALM_DEFAULTS = {
    "hidden": "20,5", "mw": 0.1, "final_activation": "identity",
    "gamma": 0.5, "alpha": 2.0, "xi": 2.0,
    "epsilon": 1e-3, "epsilon_bar": 1e-2, "epsilon0": 1e-1,
    "beta0": None, "max_outer": 50, "max_inner": 200,
    "eta1": 0.8, "eta2": 0.1, "seed": 0, "figures": True,
}


def _load_pair(args):
    train = load_dataset_csv(args.train)
    test = load_dataset_csv(args.test) if args.test else None
    return train, test


def cmd_train_alm(args):
    opts = _resolve(args, ALM_DEFAULTS, "train_alm")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train, test = _load_pair(args)
    hidden = tuple(_int_list(opts["hidden"]))
    spec = _build_spec(
        train.A.shape[0], hidden, train.Y.shape[0], train.m,
        float(opts["mw"]), opts["final_activation"],
    )
    config = AlmConfig(
        gamma=float(opts["gamma"]), alpha=float(opts["alpha"]), xi=float(opts["xi"]),
        eps=float(opts["epsilon"]), eps_bar=float(opts["epsilon_bar"]),
        eps0=float(opts["epsilon0"]),
        beta0=None if opts["beta0"] is None else float(opts["beta0"]),
        max_outer=int(opts["max_outer"]), max_inner=int(opts["max_inner"]),
        eta1=float(opts["eta1"]), eta2=float(opts["eta2"]),
    )
    init = kaiming_init(spec, int(opts["seed"]))
    t0 = time.perf_counter()
    result = alm_run(spec, train, config, init)
    wall_ms = (time.perf_counter() - t0) * 1e3
    write_csv(out / "trace.csv", TRACE_COLUMNS, result.trace)
    weights, _ = unpack(spec, result.point)
    _save_weights(out / "weights.npz", spec, weights)
    summary = {
        "status": result.status,
        "train_mse": mse(spec, weights, train),
        "test_mse": mse(spec, weights, test) if test is not None else None,
        "outer_iters": result.outer_iters,
        "gn_iters": result.counters.gn_iters,
        "L_evals": result.counters.l_evals,
        "grad_evals": result.counters.grad_evals,
        "feas_inf": result.trace[-1]["feas_inf"] if result.trace else None,
        "grad_inf": result.trace[-1]["grad_inf"] if result.trace else None,
        "wall_ms": wall_ms,
        "gamma": config.gamma, "alpha": config.alpha, "xi": config.xi,
        "epsilon": config.eps, "epsilon_bar": config.eps_bar,
        "mu_w": spec.mu_w, "dims": list(spec.dims),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _snapshot(out, "train-alm", {**opts, "train": args.train, "test": args.test})
    if opts["figures"]:
        figures.render_alm_trace(result.trace, str(out))
    mins, secs = divmod(wall_ms / 1e3, 60.0)
    print(
        f"status={result.status} train_mse={summary['train_mse']:.6g} "
        f"outer={result.outer_iters} gn={result.counters.gn_iters} "
        f"time={int(mins)}:{secs:04.1f}"
    )
    return 0 if result.status == "converged" else 1


# ---------------------------------------------------------------- train-baseline

BASELINE_DEFAULTS = {
    "hidden": "20,5", "mw": 0.1, "final_activation": "identity",
    "method": "adam", "lr": None, "batch_size": 10, "epochs": 1000, "seed": 0,
    "figures": True,
}


def cmd_train_baseline(args):
    opts = _resolve(args, BASELINE_DEFAULTS, "train_baseline")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train, test = _load_pair(args)
    hidden = tuple(_int_list(opts["hidden"]))
    spec = _build_spec(
        train.A.shape[0], hidden, train.Y.shape[0], train.m,
        float(opts["mw"]), opts["final_activation"],
    )
    cfg = FirstOrderConfig(
        method=opts["method"],
        lr=None if opts["lr"] is None else float(opts["lr"]),
        batch_size=int(opts["batch_size"]), epochs=int(opts["epochs"]),
        seed=int(opts["seed"]),
    )
    init = kaiming_init(spec, int(opts["seed"]))
    weights, trace, status = train_first_order(spec, train, cfg, init, test=test)
    write_csv(out / "loss_trace.csv", ("epoch", "train_mse", "test_mse", "wall_ms"), trace)
    _save_weights(out / "weights.npz", spec, weights)
    summary = {
        "status": status,
        "method": cfg.method,
        "lr": cfg.lr,
        "train_mse": mse(spec, weights, train),
        "test_mse": mse(spec, weights, test) if test is not None else None,
        "epochs": len(trace),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _snapshot(out, "train-baseline", {**opts, "train": args.train, "test": args.test})
    if opts["figures"]:
        figures.render_baseline_trace(trace, str(out))
    print(f"status={status} method={cfg.method} train_mse={summary['train_mse']:.6g}")
    return 0 if status == "completed" else 1


# ---------------------------------------------------------------- benchmark

# default seed calibrated on reference runs of the default grid and frozen
BENCH_DEFAULTS = {
    "d0_grid": "5,10", "noise_grid": "0,0.2", "m": 100, "reps": 3,
    "hidden": "20,5", "mw": 0.1, "epochs": 1000, "batch_size": 10,
    "seed": 58, "workers": 1, "figures": True,
}


def _benchmark_cell(payload):
    """One (d0, noise, rep) cell: matched data for ALM, Adam and SGD."""
    (d0, noise, rep, m, hidden, mw, epochs, batch_size, base_seed) = payload
    cell_seed = np.random.SeedSequence([int(base_seed), int(d0), int(round(noise * 1000)), rep])
    data_seed, init_seed = cell_seed.spawn(2)
    cfg = TeacherConfig(
        d0=d0, hidden=hidden, d_out=1, noise=noise, m=m,
        seed=int(data_seed.generate_state(1)[0]),
    )
    train, test, _ = gen_teacher_student(cfg)
    spec = _build_spec(d0, hidden, 1, m, mw, "identity")
    init = kaiming_init(spec, init_seed)
    row = {"d0": d0, "delta0": noise, "rep": rep}

    t0 = time.perf_counter()
    alm_result = alm_run(spec, train, AlmConfig(), init)
    row["alm_time_ms"] = (time.perf_counter() - t0) * 1e3
    alm_weights, _ = unpack(spec, alm_result.point)
    row["alm_train_mse"] = mse(spec, alm_weights, train)
    row["alm_test_mse"] = mse(spec, alm_weights, test)
    row["alm_L_evals"] = alm_result.counters.l_evals
    row["alm_grad_evals"] = alm_result.counters.grad_evals
    row["alm_outer_iters"] = alm_result.outer_iters
    row["gn_iters"] = alm_result.counters.gn_iters
    row["alm_status"] = alm_result.status
    row["alm_trace"] = alm_result.trace

    for method in ("adam", "sgd"):
        fo_cfg = FirstOrderConfig(
            method=method, batch_size=min(batch_size, m), epochs=epochs,
            seed=int(init_seed.generate_state(1)[0]),
        )
        t0 = time.perf_counter()
        weights, _, status = train_first_order(
            spec, train, fo_cfg, [W.copy() for W in init], test=None
        )
        row[f"{method}_time_ms"] = (time.perf_counter() - t0) * 1e3
        row[f"{method}_train_mse"] = mse(spec, weights, train)
        row[f"{method}_test_mse"] = mse(spec, weights, test)
        row[f"{method}_status"] = status
    return row


def cmd_benchmark(args):
    opts = _resolve(args, BENCH_DEFAULTS, "benchmark")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d0_grid = _int_list(opts["d0_grid"])
    noise_grid = _float_list(opts["noise_grid"])
    hidden = tuple(_int_list(opts["hidden"]))
    reps = int(opts["reps"])
    payloads = [
        (d0, noise, rep, int(opts["m"]), hidden, float(opts["mw"]),
         int(opts["epochs"]), int(opts["batch_size"]), int(opts["seed"]))
        for d0 in d0_grid for noise in noise_grid for rep in range(reps)
    ]
    workers = int(opts["workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rep_rows = list(pool.map(_benchmark_cell, payloads))
    else:
        rep_rows = [_benchmark_cell(p) for p in payloads]

    cells_dir = out / "cells"
    cells_dir.mkdir(exist_ok=True)
    for row in rep_rows:
        stem = f"d0_{row['d0']}_noise_{row['delta0']:g}_rep{row['rep']}"
        write_csv(cells_dir / f"{stem}_alm_trace.csv", TRACE_COLUMNS, row.pop("alm_trace"))

    mean_rows = []
    for d0 in d0_grid:
        for noise in noise_grid:
            members = [r for r in rep_rows if r["d0"] == d0 and r["delta0"] == noise]
            ok = [r for r in members if r["alm_status"] == "converged"]
            row = {"d0": d0, "delta0": noise}
            src = ok if ok else members
            failed = not ok
            for col in BENCHMARK_COLUMNS[2:]:
                row[col] = float("nan") if failed else float(np.mean([r[col] for r in src]))
            mean_rows.append(row)
    write_csv(out / "benchmark.csv", BENCHMARK_COLUMNS, mean_rows)
    _snapshot(out, "benchmark", opts)
    if opts["figures"]:
        figures.render_benchmark(mean_rows, str(out))
    for row in mean_rows:
        print(
            f"d0={row['d0']} noise={row['delta0']:g}: "
            f"alm={row['alm_train_mse']:.4g} adam={row['adam_train_mse']:.4g} "
            f"sgd={row['sgd_train_mse']:.4g}"
        )
    # directional gate: on noiseless cells the ALM fit must beat SGD
    for row in mean_rows:
        if row["delta0"] == 0 and not (row["alm_train_mse"] < row["sgd_train_mse"]):
            print(
                f"FAIL: ALM training MSE {row['alm_train_mse']:.6g} does not beat "
                f"SGD {row['sgd_train_mse']:.6g} at d0={row['d0']}, noise=0 "
                f"(traces in {cells_dir})",
                file=sys.stderr,
            )
            return 1
    return 0


# ---------------------------------------------------------------- selfcheck

def cmd_selfcheck(args):
    results = run_all(seed=args.seed, inject_fault=args.inject_fault)
    any_fail = False
    for res in results:
        mark = "PASS" if res.passed else "FAIL"
        print(f"[{mark}] {res.name}: max deviation {res.max_dev:.3e} "
              f"(tolerance {res.tol:g}, seed {res.seed})")
        any_fail |= not res.passed
    if any_fail:
        print("selfcheck failed; rerun with the printed seed to reproduce", file=sys.stderr)
        return 3
    print("all properties passed")
    return 0


# ---------------------------------------------------------------- parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog="almnet",
        description="Constrained training of feedforward networks by an augmented "
                    "Lagrangian outer loop with Gauss-Newton inner iterations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate teacher-student regression data")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--d0", type=int)
    p.add_argument("--dout", type=int)
    p.add_argument("--hidden")
    p.add_argument("--noise", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-alm", help="train by the constrained formulation")
    p.add_argument("--config")
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    p.add_argument("--out", required=True)
    p.add_argument("--hidden")
    p.add_argument("--mw", type=float)
    p.add_argument("--final-activation", dest="final_activation",
                   choices=("identity", "softplus", "tanh"))
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--xi", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--epsilon-bar", dest="epsilon_bar", type=float)
    p.add_argument("--epsilon0", type=float)
    p.add_argument("--beta0", type=float)
    p.add_argument("--max-outer", dest="max_outer", type=int)
    p.add_argument("--max-inner", dest="max_inner", type=int)
    p.add_argument("--eta1", type=float)
    p.add_argument("--eta2", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-figures", dest="figures", action="store_false", default=None)
    p.set_defaults(func=cmd_train_alm)

    p = sub.add_parser("train-baseline", help="train by SGD or Adam backpropagation")
    p.add_argument("--config")
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    p.add_argument("--out", required=True)
    p.add_argument("--hidden")
    p.add_argument("--mw", type=float)
    p.add_argument("--final-activation", dest="final_activation",
                   choices=("identity", "softplus", "tanh"))
    p.add_argument("--method", choices=("adam", "sgd"))
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-figures", dest="figures", action="store_false", default=None)
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("benchmark", help="grid comparison of ALM against Adam and SGD")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--d0-grid", dest="d0_grid")
    p.add_argument("--noise-grid", dest="noise_grid")
    p.add_argument("--m", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--hidden")
    p.add_argument("--mw", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--no-figures", dest="figures", action="store_false", default=None)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("selfcheck", help="run the release-gate property suites")
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--inject-fault", dest="inject_fault", choices=("apply-s-sign",))
    p.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except AlmnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

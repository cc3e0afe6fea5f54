"""Command line front end: ``wifi-rta {model,simulate,optimize,sweep,validate}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .efficiency import InfeasibleLoad, efficiency
from .model import AnalyticModel
from .optimizer import (OptimizationResult, crossover_period, optimal_tb_pca,
                        optimal_txop_simple, pca_result, resolve_tb, simple_result)
from .params import (SCHEMA, Approach, Config, ConfigError, load_config, ns_to_us,
                     parse_overrides, us_to_ns)
from .simulator import SimulationError, empirical_quantile, run, write_trace
from .validation import validate

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4

SIG_DIGITS = 9
SWEEP_AXES = ("T_period", "txop", "T_b", "sigma", "D_max")
SWEEP_COLUMNS = ("axis_value", "approach", "T_s_us", "T_b_us", "Q_us", "E", "feasible")


def num(x):
    """Round a number to the output precision; leave other values alone."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(x, dict):
        return {k: num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [num(v) for v in x]
    return x


def fmt(x) -> str:
    x = num(x)
    if x is None:
        return "nan"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.{SIG_DIGITS}g}"
    return str(x)


def write_csv(rows: list[dict], columns, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])


def _parse_cell(text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low == "nan":
        return math.nan
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(source) -> list[dict]:
    """Parse a CSV written by this tool back into typed rows."""
    text = Path(source).read_text() if not hasattr(source, "read") else source.read()
    reader = csv.DictReader(io.StringIO(text))
    return [{k: _parse_cell(v) for k, v in row.items()} for row in reader]


def read_json(source):
    text = Path(source).read_text() if not hasattr(source, "read") else source.read()
    return json.loads(text)


class _Output:
    def __init__(self, path: str | None):
        self.path = path

    def __enter__(self):
        self.fh = open(self.path, "w", newline="") if self.path else sys.stdout
        return self.fh

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()


def _emit_json(obj, path: str | None) -> None:
    with _Output(path) as fh:
        json.dump(num(obj), fh, indent=2)
        fh.write("\n")


# -- commands ------------------------------------------------------------------


def _model_tb(model: AnalyticModel, cfg: Config, txop: int) -> float:
    return ns_to_us(resolve_tb(model, txop, cfg.optimizer))


def _eff_or_nan(model: AnalyticModel, T_RTA: float, txop: int) -> float:
    try:
        return model.efficiency(T_RTA, txop)
    except InfeasibleLoad:
        return math.nan


def cmd_model(cfg: Config, args) -> int:
    model = AnalyticModel(cfg.scenario)
    txop = cfg.scenario.legacy.txop_limit
    T_b = _model_tb(model, cfg, txop)
    simple = model.simple_delay(txop)
    pca = model.pca_delay(T_b, txop)
    st = model.stats
    summary = {
        "T_s_us": ns_to_us(txop), "T_b_us": T_b, "level": model.level,
        "Q_simple_us": model.q_simple(txop), "Q_pca_us": model.q_pca(T_b, txop),
        "T_RTA_simple_us": model.t_rta_simple(txop),
        "T_RTA_pca_us": model.t_rta_pca(T_b, txop),
        "E_wo_rta": model.e_wo(txop),
        "E_simple": _eff_or_nan(model, model.t_rta_simple(txop), txop),
        "E_pca": _eff_or_nan(model, model.t_rta_pca(T_b, txop), txop),
        "P_e": st.P_e, "P_s": st.P_s, "P_c": st.P_c,
        "p": st.fixed_point.p, "tau": st.fixed_point.tau,
    }
    hi = max(simple.upper, pca.upper) * 1.05
    t = np.union1d(np.linspace(0.0, hi, args.points or 201), [simple.lower])
    table = {"t_us": t, "F_simple": simple.cdf_many(t), "F_pca": pca.cdf_many(t)}
    if args.format == "json":
        _emit_json({"summary": summary, "cdf": {k: v.tolist() for k, v in table.items()}},
                   args.output)
    else:
        rows = [dict(zip(table, vals)) for vals in zip(*table.values())]
        with _Output(args.output) as fh:
            write_csv(rows, list(table), fh)
        if args.summary:
            _emit_json(summary, args.summary)
        else:
            sys.stderr.write(json.dumps(num(summary)) + "\n")
    return EXIT_OK


def _sim_tb(cfg: Config, approach: Approach) -> int | None:
    if approach is not Approach.PCA:
        return None
    if cfg.scenario.rta.T_b is not None:
        return cfg.scenario.rta.T_b
    if cfg.scenario.N < 1:
        raise ConfigError("rta.T_b = auto needs a legacy load (N >= 1); set it explicitly",
                          "rta.T_b")
    model = AnalyticModel(cfg.scenario)
    return resolve_tb(model, cfg.scenario.legacy.txop_limit, cfg.optimizer)


def cmd_simulate(cfg: Config, args) -> int:
    approach = Approach.parse(args.approach) if args.approach else cfg.scenario.approach
    tb = _sim_tb(cfg, approach)
    trace_rows = args.trace_limit if args.trace else 0
    res = run(cfg.scenario, approach, seed=args.seed, n_rta_frames=args.frames or 10_000,
              T_b=tb, trace=trace_rows)
    if args.trace:
        write_trace(args.trace, res.trace)
    level = cfg.scenario.qos.level
    q = empirical_quantile(res, level)
    summary = {
        "approach": approach.value, "seed": args.seed, "frames": len(res.delays_ns),
        "T_b_us": ns_to_us(tb or 0), "efficiency": res.efficiency,
        "total_time_us": ns_to_us(res.total_time),
        "payload_time_us": ns_to_us(res.busy_time_success_payload),
        "empty_time_us": ns_to_us(res.empty_time),
        "success_time_us": ns_to_us(res.success_time),
        "collision_time_us": ns_to_us(res.collision_time),
        "rta_time_us": ns_to_us(res.rta_channel_time),
        "T_RTA_us": res.rta_time_per_frame(),
        "mean_delay_us": float(np.mean(res.delay_samples)),
        "max_delay_us": float(np.max(res.delay_samples)),
        "deadline_missed": int(np.count_nonzero(res.deadline_missed)),
        "quantile": {"level": level, "status": q.status, "value_us": q.value,
                     "ci_low_us": q.ci_low, "ci_high_us": q.ci_high},
        "counts": res.counts, "digest": res.digest(),
    }
    if args.format == "json":
        _emit_json(summary, args.output)
    else:
        rows = [{"frame": i, "arrival_us": a / 1000.0, "delay_us": d / 1000.0,
                 "flags": int(f), "missed": bool(d > res.D_max)}
                for i, (a, d, f) in enumerate(zip(res.arrivals_ns.tolist(),
                                                  res.delays_ns.tolist(), res.flags.tolist()))]
        with _Output(args.output) as fh:
            write_csv(rows, ("frame", "arrival_us", "delay_us", "flags", "missed"), fh)
    return EXIT_OK


def _result_row(r: OptimizationResult) -> dict:
    return {"approach": r.approach.value, "T_s_us": r.T_s_opt, "T_b_us": r.T_b_opt,
            "Q_us": r.Q_at_opt, "E": r.E_at_opt, "E_wo_rta": r.E_wo_rta,
            "T_RTA_us": r.T_RTA, "feasible": r.feasible,
            "constraint_active": r.constraint_active, "message": r.message}


def cmd_optimize(cfg: Config, args) -> int:
    model = AnalyticModel(cfg.scenario)
    simple = optimal_txop_simple(model, settings=cfg.optimizer)
    pca = optimal_tb_pca(model, settings=cfg.optimizer)
    cross = crossover_period(simple, pca)
    rows = [_result_row(simple), _result_row(pca)]
    if args.format == "json":
        _emit_json({"results": rows, "crossover": {
            "T_star_us": cross.T_star, "message": cross.message,
            "sign_changes": cross.sign_changes}}, args.output)
    else:
        with _Output(args.output) as fh:
            write_csv(rows, list(rows[0]), fh)
    return EXIT_OK if simple.feasible and pca.feasible else EXIT_INFEASIBLE


def sweep_values(lo: float, hi: float, points: int, spacing: str) -> np.ndarray:
    if points < 1:
        raise ConfigError("--points must be at least 1")
    if lo <= 0 or hi <= 0:
        raise ConfigError("sweep range must be positive")
    if points == 1:
        return np.array([lo])
    if spacing == "log":
        return np.geomspace(lo, hi, points)
    return np.linspace(lo, hi, points)


def _sweep_row(axis_value: float, r: OptimizationResult, T_period: float | None = None) -> dict:
    E = r.E_at_opt
    feasible = r.feasible
    if T_period is not None:
        try:
            E = efficiency(r.E_wo_rta, r.T_RTA, T_period)
        except InfeasibleLoad:
            E = math.nan
    if not math.isfinite(E):
        feasible = False
    return {"axis_value": axis_value, "approach": r.approach.value, "T_s_us": r.T_s_opt,
            "T_b_us": r.T_b_opt, "Q_us": r.Q_at_opt, "E": E, "feasible": bool(feasible)}


def sweep_rows(cfg: Config, axis: str, values) -> list[dict]:
    """One row per (value, approach), sorted by value then approach."""
    sc, opt = cfg.scenario, cfg.optimizer
    rows = []
    if axis == "T_period":
        model = AnalyticModel(sc)
        simple = optimal_txop_simple(model, settings=opt)
        pca = optimal_tb_pca(model, settings=opt)
        for v in values:
            rows += [_sweep_row(v, simple, v), _sweep_row(v, pca, v)]
    elif axis == "txop":
        model = AnalyticModel(sc)
        for v in values:
            txop = us_to_ns(round(float(v), 3))
            rows.append(_sweep_row(v, simple_result(model, txop)))
            rows.append(_sweep_row(v, optimal_tb_pca(model, txop, opt)))
    elif axis == "T_b":
        model = AnalyticModel(sc)
        simple = optimal_txop_simple(model, settings=opt)
        for v in values:
            tb = us_to_ns(round(float(v), 3))
            rows += [_sweep_row(v, simple), _sweep_row(v, pca_result(model, opt.pca_txop, tb))]
    elif axis in ("sigma", "D_max"):
        for v in values:
            ns = us_to_ns(round(float(v), 3))
            if axis == "sigma":
                s = replace(sc, rta=replace(sc.rta, sigma=ns))
            else:
                s = replace(sc, qos=replace(sc.qos, D_max=ns))
            model = AnalyticModel(s)
            rows.append(_sweep_row(v, optimal_txop_simple(model, settings=opt)))
            rows.append(_sweep_row(v, optimal_tb_pca(model, settings=opt)))
    else:
        raise ConfigError(f"unknown sweep axis {axis!r} (one of {', '.join(SWEEP_AXES)})")
    rows.sort(key=lambda r: (r["axis_value"], r["approach"]))
    return rows


def cmd_sweep(cfg: Config, args) -> int:
    if args.axis is None or args.lo is None or args.hi is None:
        raise ConfigError("sweep needs --axis, --from and --to")
    spacing = args.spacing or ("log" if args.axis == "T_period" else "lin")
    values = sweep_values(args.lo, args.hi, args.points or 50, spacing)
    rows = sweep_rows(cfg, args.axis, values)
    if args.format == "json":
        _emit_json({"axis": args.axis, "rows": rows}, args.output)
    else:
        with _Output(args.output) as fh:
            write_csv(rows, SWEEP_COLUMNS, fh)
    return EXIT_OK


def cmd_validate(cfg: Config, args) -> int:
    frames = args.frames or 100_000
    if frames < 100_000:
        sys.stderr.write(f"warning: {frames} frames; tail statistics will be coarse\n")
    if args.approach in (None, "both"):
        approaches = (Approach.SIMPLE, Approach.PCA)
    else:
        approaches = (Approach.parse(args.approach),)
    model_sc = None
    if args.model_set:
        model_sc = load_config(args.config, {**parse_overrides(args.set or []),
                                             **parse_overrides(args.model_set)},
                               require_all=args.config is not None).scenario
    report = validate(cfg, approaches, frames, args.seed, model_sc)
    _emit_json(report, args.output)
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


COMMANDS = {"model": cmd_model, "simulate": cmd_simulate, "optimize": cmd_optimize,
            "sweep": cmd_sweep, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    keys = ", ".join(f"{s}.{k}" for s, ks in SCHEMA.items() for k in ks)
    p = argparse.ArgumentParser(
        prog="wifi-rta", description="RTA channel access: model, simulator, optimizer.",
        epilog=f"config keys: {keys}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="INI config file (all scenario keys required)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key, e.g. rta.sigma=500 (repeatable)")
    p.add_argument("--output", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, help="RTA frames to simulate")
    p.add_argument("--axis", choices=SWEEP_AXES)
    p.add_argument("--from", dest="lo", type=float, help="sweep start (us)")
    p.add_argument("--to", dest="hi", type=float, help="sweep end (us)")
    p.add_argument("--points", type=int, help="sweep points / CDF grid points")
    p.add_argument("--spacing", choices=("lin", "log"),
                   help="sweep spacing (default log for T_period, else lin)")
    p.add_argument("--approach", choices=("simple", "pca", "both"))
    p.add_argument("--summary", help="model: write the JSON summary here (csv format)")
    p.add_argument("--trace", help="simulate: write the event trace (TSV) here")
    p.add_argument("--trace-limit", type=int, default=1_000_000,
                   help="simulate: most recent events kept in the trace")
    p.add_argument("--model-set", action="append", metavar="KEY=VALUE",
                   help="validate: override applied to the model side only")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.approach == "both" and args.command != "validate":
            raise ConfigError("--approach both is only valid for validate")
        if args.frames is not None and args.frames < 1:
            raise ConfigError("--frames must be at least 1")
        cfg = load_config(args.config, args.set or [], require_all=args.config is not None)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except SimulationError as exc:
        sys.stderr.write(f"simulation error: {exc}\n")
        return EXIT_RUNTIME
    except ValueError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

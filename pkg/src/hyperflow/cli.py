"""Experiment runner: ``hyperflow run|sweep|restart|certify``.

Configs are flat ``key = value`` text; several pairs may share a line and
``#`` starts a comment. Example::

    n = 2
    p = 1.5
    a = 0.5
    init = offcenter(1.2, 0.5)
    T_end = 30
    N = 512

Exit codes: 0 all theorem-mode runs healthy, 2 config error, 3 convexity
lost, 4 stability failure (including unreadable snapshots).
"""

import argparse
import csv
import dataclasses
import itertools
import json
import logging
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from hyperflow.curvfun import (
    CurvatureFunctionSpec,
    DomainError,
    concavity_check,
    epsilon0_estimate,
    eval_F,
    exact_structure_constants,
    grad_F,
)
from hyperflow.diagnostics import CSV_COLUMNS, InsufficientData, boundedness_monitor, decay_rate_fit
from hyperflow.flow import FlowConfig, default_safety, parse_init, run
from hyperflow.geometry import SnapshotError, build_jet, read_snapshot, write_snapshot

log = logging.getLogger("hyperflow")

EXIT_OK, EXIT_CONFIG, EXIT_CONVEXITY, EXIT_STABILITY = 0, 2, 3, 4
RATE_QUANTITIES = ("v_max_minus_1", "coth_u_minus_1_max")


class ConfigError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    flow: FlowConfig
    out_dir: str = "hyperflow_out"
    p_values: tuple = ()
    a_values: tuple = ()
    workers: int = 1
    checkpoint_every: float = 0.0

    def grid(self):
        """FlowConfigs of the sweep grid (a single point without sweep axes)."""
        ps = self.p_values or (self.flow.p,)
        as_ = self.a_values or (self.flow.a,)
        return [dataclasses.replace(self.flow, p=p, a=a) for p, a in itertools.product(ps, as_)]

    def summary(self):
        """Every parameter, defaults resolved, for the JSON summary."""
        f = self.flow
        d = dataclasses.asdict(f)
        d.update(T_end=f.t_end, safety=f.safety if f.safety is not None else default_safety(f.n),
                 fit_window=list(f.window), p0=exact_structure_constants(f.spec).p0,
                 out_dir=self.out_dir, p_values=list(self.p_values), a_values=list(self.a_values),
                 workers=self.workers, checkpoint_every=self.checkpoint_every)
        return d


_PAIR = re.compile(r"([A-Za-z_][\w]*)\s*=\s*(\w+\s*\([^)]*\)|\[[^\]]*\]|[^\s#]+)")


def _floats(text):
    return tuple(float(x) for x in re.split(r"[,\s]+", text.strip("[]() ")) if x)


_CONVERT = {
    "n": int, "N": int, "seed": int, "workers": int,
    "p": float, "a": float, "T_end": float, "safety": float, "dt_out": float,
    "checkpoint_every": float,
    "init": lambda s: re.sub(r"\s+", "", s), "mode": str, "out_dir": str,
    "fit_window": _floats, "p_values": _floats, "a_values": _floats,
}


def parse_config(text):
    """Parse and validate experiment config text into an :class:`ExperimentConfig`."""
    values, where = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        pairs = _PAIR.findall(line)
        leftover = _PAIR.sub("", line).strip()
        if leftover or not pairs:
            raise ConfigError(f"line {lineno}: cannot parse {raw.strip()!r}")
        for key, val in pairs:
            if key not in _CONVERT:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {where[key]})")
            try:
                values[key] = _CONVERT[key](val)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key!r}: {val!r} ({exc})") from None
            where[key] = lineno
    for key in ("n", "p"):
        if key not in values:
            raise ConfigError(f"missing required field {key!r}")
    if "a" not in values:
        values["a"] = 1.0 / values["n"]

    def at(key):
        return f"line {where[key]}: " if key in where else ""

    flow_keys = {f.name for f in dataclasses.fields(FlowConfig)}
    flow_kw = {k: v for k, v in values.items() if k in flow_keys}
    exp_kw = {k: v for k, v in values.items() if k not in flow_keys}
    try:
        CurvatureFunctionSpec(values["n"], values["a"])
    except ValueError as exc:
        raise ConfigError(f"{at('a')}{exc}") from None
    if "init" in values:
        try:
            parse_init(values["init"])
        except ValueError as exc:
            raise ConfigError(f"{at('init')}{exc}") from None
    mode = values.get("mode", "theorem")
    for p in exp_kw.get("p_values", ()) or (values["p"],):
        for a in exp_kw.get("a_values", ()) or (values["a"],):
            try:
                FlowConfig(**{**flow_kw, "p": p, "a": a})
            except ValueError as exc:
                key = "p" if "p0" in str(exc) else "mode" if "mode" in str(exc) else None
                raise ConfigError(f"{at(key) if key else ''}{exc}") from None
    cfg = ExperimentConfig(flow=FlowConfig(**flow_kw), **exp_kw)
    if mode == "theorem":
        for fc in cfg.grid():
            if not build_jet(fc.initial_field()).convex:
                raise ConfigError(f"{at('init')}theorem mode needs strictly convex initial data; "
                                  f"{fc.init} is not convex on the mesh")
    return cfg


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


# -- single runs ----------------------------------------------------------------

def _exit_code(result):
    if result.status == "convexity_lost":
        return EXIT_CONVEXITY
    if result.status == "unstable" or not result.barrier_ok:
        return EXIT_STABILITY
    return EXIT_OK


def _fit_rates(series, window):
    rates = {}
    for q in RATE_QUANTITIES:
        try:
            rates[q] = decay_rate_fit(series, q, window).as_dict()
        except InsufficientData as exc:
            rates[q] = {"error": str(exc)}
    return rates


def _write_csv(path, series):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in series:
            w.writerow([repr(float(x)) for x in rec.csv_row()])


def run_single(exp, flow, out_dir, initial=None, t0=0.0):
    """Run one grid point, write its CSV, JSON summary and snapshots; return a summary dict."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    next_ckpt = [exp.checkpoint_every]

    def on_record(rec, state):
        if exp.checkpoint_every > 0 and state.t >= next_ckpt[0] - 1e-12:
            write_snapshot(out_dir / f"checkpoint_t{state.t:g}.snap", state.field, state.t)
            next_ckpt[0] += exp.checkpoint_every

    result = run(flow, initial=initial, t0=t0, on_record=on_record)
    _write_csv(out_dir / "diagnostics.csv", result.series)
    write_snapshot(out_dir / "final.snap", result.final.field, result.final.t)
    exp_point = dataclasses.replace(exp, flow=flow)
    summary = {
        "config": exp_point.summary(),
        "rates": _fit_rates(result.series, flow.window),
        "health": {
            "status": result.status,
            "reason": result.reason,
            "convex": result.convex,
            "barrier_ok": result.barrier_ok,
            "t_reached": result.final.t,
            "monitor": boundedness_monitor(result.series, rate_window=flow.window),
        },
        "runtime_seconds": time.perf_counter() - start,
    }
    if t0:
        summary["config"]["restart_t0"] = t0
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default), encoding="utf-8")
    code = _exit_code(result)
    if code and flow.mode != "theorem":
        log.warning("exploratory run p=%g a=%g ended with %s: %s", flow.p, flow.a, result.status, result.reason)
        code = EXIT_OK
    summary["exit_code"] = code
    return summary


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")


def run_experiment(exp, sweep=False):
    """Execute a config (one run, or the whole grid with ``sweep``); return the exit code."""
    grid = exp.grid() if sweep else [exp.flow]
    if not sweep:
        return run_single(exp, exp.flow, exp.out_dir)["exit_code"]
    out = Path(exp.out_dir)
    dirs = [out / f"p{f.p:g}_a{f.a:.6g}" for f in grid]
    workers = int(os.environ.get("HYPERFLOW_WORKERS", exp.workers))
    if workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(run_single, [exp] * len(grid), grid, dirs))
    else:
        summaries = [run_single(exp, f, d) for f, d in zip(grid, dirs)]
    _write_rates_table(out / "rates.csv", grid, summaries)
    codes = [s["exit_code"] for s in summaries]
    return max(codes) if any(codes) else EXIT_OK


def _write_rates_table(path, grid, summaries):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "p", "a", "p0", "status", "target_rate",
                    "lambda_v_max_minus_1", "lambda_coth_u_minus_1_max"])
        for f, s in zip(grid, summaries):
            lam = [s["rates"][q].get("lambda_hat", float("nan")) for q in RATE_QUANTITIES]
            w.writerow([f.n, repr(f.p), repr(f.a), repr(exact_structure_constants(f.spec).p0),
                        s["health"]["status"], repr(2.0 / f.n**f.p)] + [repr(x) for x in lam])


def restart_experiment(snapshot_path, exp):
    try:
        field, t0 = read_snapshot(snapshot_path)
    except (SnapshotError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_STABILITY
    if (field.mesh.n, field.mesh.N) != (exp.flow.n, exp.flow.N):
        raise ConfigError(f"snapshot has n={field.mesh.n}, N={field.mesh.N}; config has "
                          f"n={exp.flow.n}, N={exp.flow.N}")
    if not t0 < exp.flow.t_end:
        raise ConfigError(f"snapshot time {t0} is not before T_end = {exp.flow.t_end}")
    return run_single(exp, exp.flow, exp.out_dir, initial=field, t0=t0)["exit_code"]


# -- curvature-function certification -------------------------------------------

def certify(n, a, samples=10_000, seed=0):
    """Numerical certification of the structure assumptions for F_a."""
    spec = CurvatureFunctionSpec(n, a)
    rng = np.random.default_rng(seed)
    kappa = np.exp(rng.uniform(-3, 3, size=(samples, n)))
    F = eval_F(spec, kappa)
    dF = grad_F(spec, kappa)
    euler = float(np.max(np.abs(np.sum(dF * kappa, axis=1) - F) / F))
    lam = 2.0
    homog = float(np.max(np.abs(eval_F(spec, lam * kappa) - lam * F) / (lam * F)))
    concave = [concavity_check(spec, k, 64, seed=i) for i, k in enumerate(kappa[:200])]
    est = epsilon0_estimate(spec)
    exact = exact_structure_constants(spec)
    ks = np.arange(0, 64, 4)
    eps_seq = np.array([float(eval_F(spec, np.r_[2.0**-k, np.ones(n - 1)])) for k in ks])
    # F ~ eps^a near the face, so the log-log tail slope must be a > 0
    tail_slope = float(np.polyfit(-ks[-4:] * np.log(2.0), np.log(eps_seq[-4:]), 1)[0])
    report = {
        "n": n, "a": a,
        "normalization": float(eval_F(spec, np.ones(n))),
        "euler_max_rel_dev": euler,
        "homogeneity_max_rel_dev": homog,
        "monotone": bool(np.all(dF > 0.0)),
        "concave": all(c.passed for c in concave),
        "concavity_worst": max(c.worst for c in concave),
        "boundary_vanishing": bool(np.all(np.diff(eps_seq) < 0.0)) and abs(tail_slope - a) < 1e-3,
        "boundary_exponent": tail_slope,
        "epsilon0_estimate": est.epsilon0,
        "epsilon0_exact": exact.epsilon0,
        "p0": exact.p0,
        "p0_estimate": est.p0,
    }
    report["passed"] = bool(
        abs(report["normalization"] - n) <= 1e-12 * n and euler <= 1e-12 and homog <= 1e-12
        and report["monotone"] and report["concave"] and report["boundary_vanishing"]
        and exact.epsilon0 <= est.epsilon0 <= 1.0 / n
    )
    return report


# -- entry point ------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="hyperflow", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a single flow")
    p.add_argument("config")
    p = sub.add_parser("sweep", help="run every (p, a) grid point of the config")
    p.add_argument("config")
    p = sub.add_parser("restart", help="continue from a snapshot")
    p.add_argument("snapshot")
    p.add_argument("config")
    p = sub.add_parser("certify", help="certify structure assumptions of F_a")
    p.add_argument("n", type=int)
    p.add_argument("a", type=float)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "certify":
            try:
                CurvatureFunctionSpec(args.n, args.a)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            report = certify(args.n, args.a)
            print(json.dumps(report, indent=2))
            return EXIT_OK if report["passed"] else 1
        exp = load_config(args.config)
        if args.command == "restart":
            return restart_experiment(args.snapshot, exp)
        return run_experiment(exp, sweep=args.command == "sweep")
    except (ConfigError, DomainError) as exc:
        print(f"hyperflow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

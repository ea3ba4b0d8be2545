"""Command-line front end: cut-offs, risks, curves, sampling, certification,
the verification suite, and one-command reproduction of the numerical study.

Exit codes: 0 success, 1 validation error (or failed certification/suite),
2 numerical failure.
"""

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import _fastpath, lemma_lab
from ._quad import IntegrationError
from .cutoffs import closed_form, cutoff_ell, cutoff_rho
from .densities import DivergentMomentError, parse_model
from .estimators import (certify_multiplier, constant_one, parse_estimator,
                         ratio)
from .losses import BalancedLoss, certify_C1, certify_C3, parse_loss
from .risk import benchmark_risk, default_lambda_grid, risk_curve, risk_mc, risk_quadrature


# -- output helpers ----------------------------------------------------------


def _sig12(x):
    if isinstance(x, float):
        return float(f"{x:.12g}") if math.isfinite(x) else x
    return x


def _round_floats(obj):
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    return _sig12(obj)


def emit_json(obj, path=None):
    text = json.dumps(_round_floats(obj), indent=2, sort_keys=True) + "\n"
    _write(text, path)


def emit_csv(header, rows, path=None):
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if cell is None or (isinstance(cell, float) and math.isnan(cell)):
                cells.append("")
            elif isinstance(cell, float):
                cells.append(f"{cell:.12g}")
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    _write("\n".join(lines) + "\n", path)


def _write(text, path):
    if path in (None, "", "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def curve_rows(curve):
    for lam, val, se in curve.rows():
        yield (float(lam), float(val), float(se), curve.method)


# -- experiment configuration -------------------------------------------------


@dataclass
class ExperimentConfig:
    """Round-trippable key=value bundle for risk/curve runs."""

    model: str = "normal"
    dim: int = 4
    loss: str = "identity"
    form: str = "rho"
    omega: float = 0.0
    estimator: str = "x"
    lam: str = ""
    lambda_grid: str = ""
    method: str = "quad"
    mc_n: int = 10**6
    seed: int = 0
    threads: int = 0
    out: str = ""

    def to_text(self):
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            lines.append(f"{f.name}={val}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        values = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line {line!r}; expected key=value")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
        cfg = cls()
        typed = {f.name: f.type for f in fields(cls)}
        for key, val in values.items():
            if key not in typed:
                raise ValueError(f"unknown config key {key!r}")
            kind = typed[key]
            if kind in (int, "int"):
                setattr(cfg, key, int(val))
            elif kind in (float, "float"):
                setattr(cfg, key, float(val))
            else:
                setattr(cfg, key, val)
        return cfg


def _load_config(args):
    cfg = ExperimentConfig()
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_text(fh.read())
    overrides = {
        "model": args.model, "dim": args.dim, "loss": args.loss,
        "form": args.form, "omega": args.omega, "estimator": args.estimator,
        "lam": None if getattr(args, "lam", None) is None else repr(args.lam),
        "lambda_grid": getattr(args, "lambda_grid", None),
        "method": getattr(args, "method", None),
        "mc_n": getattr(args, "mc_n", None), "seed": args.seed,
        "threads": getattr(args, "threads", None), "out": args.out,
    }
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    return cfg


def _build_problem(cfg):
    model = parse_model(cfg.model, cfg.dim)
    shape = parse_loss(cfg.loss)
    bl = BalancedLoss(cfg.form, cfg.omega, shape)
    est = parse_estimator(cfg.estimator)
    return model, bl, est


def _parse_grid(text):
    try:
        a, b, n = text.split(":")
        grid = np.linspace(float(a), float(b), int(n))
    except ValueError as exc:
        raise ValueError(f"bad lambda grid {text!r}; expected a:b:n") from exc
    if grid.size == 0:
        raise ValueError("lambda grid must be non-empty")
    return grid


def _threads(cfg_threads):
    if cfg_threads and cfg_threads > 0:
        return cfg_threads
    env = os.environ.get("BSHRINK_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# -- subcommands ---------------------------------------------------------------


def cmd_cutoff(args):
    if args.closed_form:
        name, _, rest = args.closed_form.partition(":")
        params = {}
        for piece in rest.split(",") if rest else []:
            key, _, val = piece.partition("=")
            params[key] = float(val)
        if "d" in params:
            params["d"] = int(params["d"])
        report = closed_form(name, **params)
    else:
        model = parse_model(args.model, args.dim)
        shape = parse_loss(args.loss)
        if args.form == "rho":
            report = cutoff_rho(model, shape, args.omega)
        else:
            report = cutoff_ell(model, shape, args.omega)
    emit_json(report.to_dict(), args.out)
    return 0


def cmd_risk(args):
    cfg = _load_config(args)
    model, bl, est = _build_problem(cfg)
    if cfg.lam != "":
        lam = float(cfg.lam)
        if cfg.method == "mc":
            value, se = risk_mc(model, bl, est, lam, cfg.mc_n, cfg.seed)
            rows = [(lam, value, se, "mc")]
        else:
            value = risk_quadrature(model, bl, est, lam)
            rows = [(lam, value, math.nan, "quadrature")]
        _emit_risk_output(cfg, rows)
        return 0
    if not cfg.lambda_grid:
        raise ValueError("risk needs --lambda or --lambda-grid")
    return _run_curve(cfg)


def cmd_curve(args):
    cfg = _load_config(args)
    if not cfg.lambda_grid:
        raise ValueError("curve needs --lambda-grid a:b:n")
    return _run_curve(cfg)


def _run_curve(cfg):
    model, bl, est = _build_problem(cfg)
    grid = _parse_grid(cfg.lambda_grid)
    method = "mc" if cfg.method == "mc" else "quadrature"
    curve = risk_curve(model, bl, est, grid, method=method, mc_n=cfg.mc_n,
                       seed=cfg.seed, threads=_threads(cfg.threads))
    if "errors" in curve.meta:
        raise IntegrationError(f"curve points failed: {curve.meta['errors']}")
    _emit_risk_output(cfg, list(curve_rows(curve)))
    return 0


def _emit_risk_output(cfg, rows):
    out = cfg.out or None
    if out and out.endswith(".json"):
        payload = [{"lambda": r[0], "risk": r[1],
                    "se": None if math.isnan(r[2]) else r[2],
                    "method": r[3]} for r in rows]
        emit_json({"config": cfg.to_text().strip().splitlines(),
                   "points": payload}, out)
    else:
        emit_csv(["lambda", "risk", "se", "method"], rows, out)


def cmd_sample(args):
    model = parse_model(args.model, args.dim)
    if args.theta:
        theta = np.array([float(v) for v in args.theta.split(",")])
    else:
        theta = np.zeros(args.dim)
    pts = model.sample(theta, args.n, args.seed)
    header = [f"x{i + 1}" for i in range(model.dim)]
    emit_csv(header, (tuple(float(v) for v in row) for row in pts), args.out)
    return 0


def cmd_certify(args):
    if args.loss:
        shape = parse_loss(args.loss)
        cert = certify_C1(shape) if args.condition == "c1" else certify_C3(shape)
    elif args.multiplier:
        cert = certify_multiplier(_parse_multiplier(args.multiplier))
    elif args.estimator:
        cert = certify_multiplier(parse_estimator(args.estimator).multiplier)
    else:
        raise ValueError("certify needs --loss, --multiplier, or --estimator")
    emit_json(cert.to_dict(), args.out)
    return 0 if cert.ok else 1


def _parse_multiplier(spec):
    spec = spec.strip()
    if spec in ("one", "constant_one"):
        return constant_one()
    head, _, rest = spec.partition(":")
    if head == "ratio":
        key, _, val = rest.partition("=")
        if key != "c":
            raise ValueError("ratio multiplier needs c=<f>")
        return ratio(float(val))
    raise ValueError(f"unknown multiplier spec {spec!r}")


def cmd_verify(args):
    reports = lemma_lab.run_suite(args.suite, seed=args.seed, mc_n=args.mc_n)
    ok = all(r.passed for r in reports)
    payload = {"passed": ok, "seed": args.seed, "mc_n": args.mc_n,
               "checks": [r.to_dict() for r in reports]}
    emit_json(payload, args.out)
    return 0 if ok else 1


def cmd_reproduce_fig1(args):
    """Kotz model study: cut-off, benchmark, origin gains, and the four risk
    curves over the default grid."""
    model = parse_model("kotz:r=1,s=1,nu=4", 6)
    shape = parse_loss("log1p")
    bl = BalancedLoss("rho", 0.5, shape)
    report = cutoff_rho(model, shape, bl.omega)
    bench = benchmark_risk(model, bl)

    named = [
        ("x", parse_estimator("x")),
        ("baranchik_b0.5_c1", parse_estimator("baranchik:b=0.5,c=1")),
        ("baranchik_b1_c1", parse_estimator("baranchik:b=1,c=1")),
        ("js_b0.5", parse_estimator("js:b=0.5")),
    ]
    grid = default_lambda_grid()
    threads = _threads(args.threads or 0)

    rows = []
    summary = {"cutoff": report.to_dict(), "half_cutoff": report.a0 / 2,
               "benchmark_risk": bench, "estimators": {},
               "lambda_grid": {"lo": float(grid[0]), "hi": float(grid[-1]),
                               "count": int(grid.size)}}
    for label, est in named:
        if est.shrink_b == 0:
            values = np.full(grid.size, bench)
            summary["estimators"][label] = {"constant": True,
                                            "origin_risk": bench}
        else:
            curve = risk_curve(model, bl, est, grid, threads=threads)
            if "errors" in curve.meta:
                raise IntegrationError(
                    f"curve points failed: {curve.meta['errors']}")
            values = curve.values
            origin = float(values[0])
            summary["estimators"][label] = {
                "max_risk": float(values.max()),
                "dominates_benchmark": bool(np.all(values <= bench + 1e-9)),
                "origin_risk": origin,
                "origin_gain_pct": 100.0 * (1 - origin / bench)}
        rows.extend((label, float(l), float(v), math.nan, "quadrature")
                    for l, v in zip(grid, values))

    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    emit_csv(["estimator", "lambda", "risk", "se", "method"], rows,
             os.path.join(out_dir, "fig1_curves.csv"))
    emit_json(summary, os.path.join(out_dir, "fig1_summary.json"))
    print(f"wrote {out_dir}/fig1_curves.csv and {out_dir}/fig1_summary.json "
          f"(backend: {_fastpath.active_backend()})")
    return 0


# -- parser --------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1) from None


def _add_problem_args(sub, with_estimator=True):
    sub.add_argument("--model", help="normal | kotz:r=,s=,nu= | ball:m= | mix:v:w,...")
    sub.add_argument("--dim", type=int)
    sub.add_argument("--loss", help="identity | log1p | refnorm:alpha= | power:q= "
                                    "| powshift:gamma=,beta= | rational:r= | atan "
                                    "| tanh | tnormcdf")
    sub.add_argument("--form", choices=["rho", "ell"])
    sub.add_argument("--omega", type=float)
    if with_estimator:
        sub.add_argument("--estimator", help="baranchik:b=,c= | js:b= | x")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out")
    sub.add_argument("--config", help="key=value config file; flags override")


def build_parser():
    parser = _Parser(prog="bshrink",
                     description="Shrinkage cut-offs and balanced-loss risks "
                                 "for spherically symmetric models")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("cutoff", help="dominance cut-off constant")
    p.add_argument("--model", default="normal")
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--loss", default="identity")
    p.add_argument("--form", choices=["rho", "ell"], default="rho")
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--closed-form", dest="closed_form",
                   help="ball_log_d4:m=,omega= | kotz_refnorm:r=,nu=,alpha=,omega=,d= "
                        "| ball_power:m=,q=,d= | kotz_power:r=,s=,nu=,q=,d=")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cutoff)

    p = subs.add_parser("risk", help="risk at one lambda (or a grid)")
    _add_problem_args(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--lambda-grid", dest="lambda_grid", help="a:b:n")
    p.add_argument("--method", choices=["quad", "mc"])
    p.add_argument("--mc-n", dest="mc_n", type=int)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_risk)

    p = subs.add_parser("curve", help="risk curve over a lambda grid")
    _add_problem_args(p)
    p.add_argument("--lambda-grid", dest="lambda_grid", help="a:b:n")
    p.add_argument("--method", choices=["quad", "mc"])
    p.add_argument("--mc-n", dest="mc_n", type=int)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_curve)

    p = subs.add_parser("sample", help="draw from a model")
    p.add_argument("--model", default="normal")
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta", help="comma-separated center (default origin)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = subs.add_parser("certify", help="certify a loss or multiplier")
    p.add_argument("--loss")
    p.add_argument("--condition", choices=["c1", "c3"], default="c1")
    p.add_argument("--multiplier", help="ratio:c=<f> | one")
    p.add_argument("--estimator")
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = subs.add_parser("verify", help="run the inequality verification suite")
    p.add_argument("--suite", default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mc-n", dest="mc_n", type=int, default=10**6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = subs.add_parser("reproduce-fig1",
                        help="recompute the bundled Kotz-model numerical study")
    p.add_argument("--out-dir", dest="out_dir", default="fig1_out")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_reproduce_fig1)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args) or 0
    except (ValueError, DivergentMomentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Exit status is 0 on success, 2 on usage errors and 1 on computational
errors; errors are written to stderr as one line of JSON with a ``code``.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, roots
from .butcher import available_methods, builtin, parse_tableau, validate
from .design import damping_reach, design_scheme
from .errors import RegionError, RKLearnError
from .grid import DEFAULT_LEVELS, DEFAULT_REGION, Metric, Region, evaluate_field, export_csv
from .grid import render_contours
from .learnability import ProblemSpec, RootPolicy, solve
from .trainer import (
    AdamConfig,
    MlpConfig,
    TrainingReport,
    compare_with_theory,
    fit_linear,
    fit_mlp,
    generate_dataset,
    trajectory_csv,
)


class UsageError(Exception):
    pass


_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_REAL = re.compile(rf"^[+-]?{_NUM}$")
_IMAG = re.compile(rf"^(?P<im>[+-]?(?:{_NUM})?)[ij]$")
_FULL = re.compile(rf"^(?P<re>[+-]?{_NUM})(?P<im>[+-](?:{_NUM})?)[ij]$")


def _imag(text: str) -> float:
    if text in ("", "+"):
        return 1.0
    if text == "-":
        return -1.0
    return float(text)


def parse_complex(text: str) -> complex:
    """Parse ``a+bi``, ``a-bi``, ``bi`` or ``a`` (no spaces)."""
    if _REAL.match(text):
        return complex(float(text), 0.0)
    m = _FULL.match(text)
    if m:
        return complex(float(m.group("re")), _imag(m.group("im")))
    m = _IMAG.match(text)
    if m:
        return complex(0.0, _imag(m.group("im")))
    raise argparse.ArgumentTypeError(f"bad complex literal {text!r} (use a+bi)")


def _floats(text: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} numbers, got {text!r}")
    return vals


def _policy(text: str) -> RootPolicy:
    try:
        return RootPolicy.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _cx(z):
    return None if z is None else [float(z.real), float(z.imag)]


def _load_method(args):
    if getattr(args, "tableau", None):
        return parse_tableau(Path(args.tableau).read_text())
    return builtin(args.method)


def _write(path: Path, data: bytes | str):
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.write_bytes(data)
    return str(path)


def _manifest(prefix: Path, command: str, argv, config: dict, seed, outputs, t0):
    doc = {
        "command": command,
        "argv": list(argv),
        "config": config,
        "seed": seed,
        "version": __version__,
        "backend": roots.BACKEND,
        "outputs": outputs,
        "wall_time": time.perf_counter() - t0,
    }
    path = prefix.with_name(prefix.name + ".manifest.json")
    _write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


# commands ----------------------------------------------------------------

def cmd_list(args, argv):
    lines = []
    for name in available_methods():
        t = builtin(name)
        rep = validate(t)
        kind = "explicit" if t.is_explicit else "implicit"
        lines.append(f"{name:<18} stages {t.p}  {kind:<8}  order {rep.detected_order}")
    print("\n".join(lines))


def _result_dict(result):
    out = {
        "method": result.method,
        "lambda": _cx(result.spec.lam),
        "h": result.spec.h,
        "z": _cx(result.spec.z),
        "policy": str(result.policy),
        "roots": [{"alpha": _cx(r.alpha), "residual": r.residual,
                   "multiplicity": r.multiplicity} for r in result.roots],
        "rejected": [{"alpha": _cx(r.alpha), "residual": r.residual} for r in result.rejected],
        "degree_deficiency": result.degree_deficiency,
        "selected": _cx(result.selected),
        "l_alpha": result.l_alpha,
        "l_real": result.l_real,
        "l_imag": result.l_imag,
        "mu": _cx(result.mu),
    }
    if result.selected is not None:
        reasons = {k: "undefined" for k in ("l_alpha", "l_real", "l_imag", "mu")
                   if out[k] is None}
        if reasons:
            out["reasons"] = reasons
    if result.notes:
        out["notes"] = list(result.notes)
    return out


def cmd_solve(args, argv):
    method = _load_method(args)
    result = solve(method, ProblemSpec(args.lam, args.h), args.policy)
    print(json.dumps(_result_dict(result), indent=2))


def cmd_analyze(args, argv):
    t0 = time.perf_counter()
    method = _load_method(args)
    if args.policy.kind == "all":
        raise UsageError("analyze needs a single-root policy (closest or index:K)")
    region = Region(*args.region, *args.resolution)
    field = evaluate_field(method, region, args.metric, args.policy)
    prefix = Path(args.out)
    outputs = [
        _write(prefix.with_name(prefix.name + ".csv"), export_csv(field)),
        _write(prefix.with_name(prefix.name + ".svg"), render_contours(field, args.levels)),
    ]
    config = {"method": method.name, "tableau": args.tableau, "region": region.to_dict(),
              "metric": field.metric.value, "policy": str(args.policy),
              "levels": list(args.levels), "h": 1.0}
    _manifest(prefix, "analyze", argv, config, None, outputs, t0)
    print(json.dumps({"outputs": outputs, "undefined_nodes": int(np.isnan(field.values).sum())}))


def cmd_design(args, argv):
    scheme = design_scheme(args.stages, args.tol)
    mid = damping_reach(builtin("explicit_midpoint"), args.tol)
    out = {
        "stages": scheme.stages,
        "coefficients": [str(c) for c in scheme.stability_poly],
        "tableau": scheme.realized_tableau.to_dict() if scheme.realized_tableau else None,
        "tol": args.tol,
        "damping_reach": scheme.damping_reach,
        "comparison": {"explicit_midpoint": {"damping_reach": mid}},
    }
    print(json.dumps(out, indent=2))


PRESETS = {
    "paper": {"hidden": 200, "n": 10000, "epochs": 3000, "lr": 1e-3},
    # 500 epochs at lr 1e-3 stops far from the root; lr 1e-2 converges
    "reduced": {"hidden": 32, "n": 2000, "epochs": 500, "lr": 1e-2},
    "smoke": {"hidden": 8, "n": 100, "epochs": 50, "lr": 1e-3},
}


def _train_config(args):
    preset = PRESETS[args.preset] if args.preset else {}
    def pick(key, default):
        val = getattr(args, key)
        return val if val is not None else preset.get(key, default)
    return {
        "method": args.method, "lambda": _cx(args.lam), "h": args.h, "model": args.model,
        "seed": args.seed, "n": pick("n", 10000), "box": args.box,
        "hidden": pick("hidden", 200), "epochs": pick("epochs", 3000),
        "batch_size": args.batch_size, "lr": pick("lr", None), "max_iter": args.max_iter,
        "init_alpha": _cx(args.init_alpha), "preset": args.preset,
        "t_max": args.t_max, "n_t": args.n_t,
    }


def cmd_train(args, argv):
    t0 = time.perf_counter()
    cfg = _train_config(args)
    tableau = _load_method(args)
    data = generate_dataset(args.lam, args.h, cfg["n"], cfg["box"], cfg["seed"])
    if args.model == "linear":
        lr = cfg["lr"] if cfg["lr"] is not None else 1e-2
        opt = AdamConfig(lr=lr, max_iter=cfg["max_iter"] or 20000)
        init = args.init_alpha if args.init_alpha is not None else args.lam
        report = fit_linear(tableau, data, init, opt)
    else:
        lr = cfg["lr"] if cfg["lr"] is not None else 1e-3
        opt = AdamConfig(lr=lr, max_iter=cfg["epochs"])
        mcfg = MlpConfig(hidden=cfg["hidden"], epochs=cfg["epochs"],
                         batch_size=cfg["batch_size"], seed=cfg["seed"])
        report, _ = fit_mlp(tableau, data, mcfg, opt)
    cfg["lr"] = lr
    comparison = compare_with_theory(report, tableau=tableau, t_max=args.t_max, n_t=args.n_t)
    prefix = Path(args.out)
    outputs = [
        _write(prefix.with_name(prefix.name + ".json"), report.to_json() + "\n"),
        _write(prefix.with_name(prefix.name + ".trajectory.csv"), trajectory_csv(comparison)),
        _write(prefix.with_name(prefix.name + ".comparison.json"),
               json.dumps(comparison.to_dict(), indent=2, sort_keys=True) + "\n"),
    ]
    _manifest(prefix, "train", argv, cfg, cfg["seed"], outputs, t0)
    summary = {"estimated_alpha": _cx(report.estimated_alpha),
               "matched_root": _cx(comparison.matched_root),
               "matched_distance": comparison.matched_distance,
               "final_loss": report.final_loss, "outputs": outputs}
    print(json.dumps(summary, indent=2))


def cmd_compare(args, argv):
    report = TrainingReport.from_dict(json.loads(Path(args.report).read_text()))
    tableau = parse_tableau(Path(args.tableau).read_text()) if args.tableau else None
    comparison = compare_with_theory(report, tableau=tableau, t_max=args.t_max, n_t=args.n_t)
    if args.out:
        prefix = Path(args.out)
        _write(prefix.with_name(prefix.name + ".trajectory.csv"), trajectory_csv(comparison))
    print(json.dumps(comparison.to_dict(), indent=2, sort_keys=True))


# parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rklearn", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rklearn {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("list", help="list built-in methods")
    s.set_defaults(func=cmd_list)

    def method_args(sp, required=True):
        g = sp.add_mutually_exclusive_group(required=required)
        g.add_argument("--method", choices=available_methods())
        g.add_argument("--tableau", help="path to a tableau JSON document")

    s = sub.add_parser("solve", help="solve the learnability equation at one point")
    method_args(s)
    s.add_argument("--lambda", dest="lam", type=parse_complex, required=True)
    s.add_argument("--h", type=float, default=1.0)
    s.add_argument("--policy", type=_policy, default=RootPolicy.closest())
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("analyze", help="coefficient field over the z-plane (CSV + SVG)")
    method_args(s)
    r = DEFAULT_REGION
    s.add_argument("--region", type=lambda t: _floats(t, 4),
                   default=[r.re_min, r.re_max, r.im_min, r.im_max],
                   help="re_min,re_max,im_min,im_max")
    s.add_argument("--resolution", type=lambda t: [int(v) for v in _floats(t, 2)],
                   default=[r.nx, r.ny], help="nx,ny")
    s.add_argument("--metric", choices=[m.value for m in Metric], default="l_alpha")
    s.add_argument("--policy", type=_policy, default=RootPolicy.closest())
    s.add_argument("--levels", type=_floats, default=list(DEFAULT_LEVELS))
    s.add_argument("--out", required=True, help="output prefix")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("design", help="Chebyshev stability polynomial and damping reach")
    s.add_argument("--stages", type=int, default=2)
    s.add_argument("--tol", type=float, default=0.2)
    s.set_defaults(func=cmd_design)

    s = sub.add_parser("train", help="train a model through the RK step and compare")
    s.add_argument("--method", choices=available_methods(), required=True)
    s.add_argument("--lambda", dest="lam", type=parse_complex, required=True)
    s.add_argument("--h", type=float, default=1.0)
    s.add_argument("--model", choices=["linear", "mlp"], default="linear")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--n", type=int)
    s.add_argument("--box", type=float, default=10.0)
    s.add_argument("--hidden", type=int)
    s.add_argument("--epochs", type=int)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--max-iter", type=int)
    s.add_argument("--init-alpha", type=parse_complex)
    s.add_argument("--t-max", type=float, default=20.0)
    s.add_argument("--n-t", type=int, default=201)
    s.add_argument("--out", required=True, help="output prefix")
    s.set_defaults(func=cmd_train, tableau=None)

    s = sub.add_parser("compare", help="compare a saved training report with theory")
    s.add_argument("--report", required=True)
    s.add_argument("--tableau", help="tableau JSON if the report used a custom method")
    s.add_argument("--t-max", type=float, default=20.0)
    s.add_argument("--n-t", type=int, default=201)
    s.add_argument("--out", help="prefix for the trajectory CSV")
    s.set_defaults(func=cmd_compare)
    return p


def _fail(code: str, message: str, status: int) -> int:
    sys.stderr.write(json.dumps({"code": code, "message": message}) + "\n")
    return status


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    try:
        args.func(args, argv)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except RegionError as exc:
        return _fail(exc.code, str(exc), 2)
    except RKLearnError as exc:
        return _fail(exc.code, str(exc), 1)
    except (ValueError, OSError) as exc:
        return _fail("invalid_input", str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())

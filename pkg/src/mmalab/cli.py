"""Command-line entry point ``mma-lab``.

Exit codes: 0 pass, 1 usage or I/O error, 2 a checked condition failed,
3 numerical quality budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from . import conditions as cond
from . import experiments as exp
from .config import ConfigError, ResolvedConfig, load
from .kernels import SupfOU
from .simulate import Engine, NumericalQualityError, simulate_paths, time_grid

EXIT_OK, EXIT_USAGE, EXIT_FAILED, EXIT_NUMERIC = 0, 1, 2, 3
OUT_ENV = "MMA_LAB_OUT"
COMMANDS = ("check", "classify", "existence", "fubini", "simulate", "experiment", "indices")


def jsonable(obj):
    """Replace non-finite floats by strings and numpy scalars by Python numbers."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resolve_out(out: str | None, default_name: str) -> Path | None:
    base = os.environ.get(OUT_ENV)
    if out is None:
        return Path(base) / default_name if base else None
    p = Path(out)
    return Path(base) / p if (base and not p.is_absolute()) else p


def emit(text: str, path: Path | None):
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write(path, text)


def write_manifest(path: Path | None, command: str, cfg: ResolvedConfig, params: dict, artifacts: list):
    if path is None:
        return
    config = cfg.record()
    # fold run parameters back into the config so the manifest can be replayed as a model file
    for key in ("seed", "n_paths", "gamma", "tol", "mode"):
        if params.get(key) is not None:
            config["run"][key] = params[key]
    for key in ("t_max", "points_per_decade"):
        if key in params:
            config["grid"][key] = params[key]
    manifest = {"tool": "mma-lab", "version": __version__, "command": command,
                "params": params, "config": config, "artifacts": [str(a) for a in artifacts]}
    atomic_write(path.with_name(path.name + ".manifest.json"), dumps(manifest))


def paths_csv(paths) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["path_id", "t", "xstar", "drift", "gaussian", "past_jumps", "window_jumps", "compensator"])
    for p in paths:
        for row in p.rows():
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    return buf.getvalue()


def curve_csv(curve: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = list(curve)
    w.writerow(keys)
    for row in zip(*(curve[k] for k in keys)):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


class ConditionFailed(RuntimeError):
    """A precondition check on the model failed."""


# -- commands -------------------------------------------------------------------

def _model_parts(cfg):
    m = cfg.model
    return m.a, m.b, m.levy, m.mixing, m.kernel


def cmd_check(args, cfg) -> tuple[dict, int, dict]:
    gamma = args.gamma if args.gamma is not None else cfg.run.get("gamma")
    if gamma is None:
        raise ConfigError("gamma", "required (--gamma or run.gamma)")
    a, b, lam, pi, k = _model_parts(cfg)
    rep = cond.evaluate_c_gamma(lam, pi, k, float(gamma), method=args.method)
    body = dict(rep.as_dict(), gamma=float(gamma), method=args.method)
    return body, (EXIT_OK if rep.convergent else EXIT_FAILED), {"gamma": float(gamma), "method": args.method}


def cmd_classify(args, cfg):
    a, b, lam, pi, k = _model_parts(cfg)
    rep = cond.classify_model(a, b, lam, pi, k, slack=args.slack)
    return rep.as_dict(), EXIT_OK, {"slack": args.slack}


def cmd_indices(args, cfg):
    a, b, lam, pi, k = _model_parts(cfg)
    return cond.compute_indices(lam, pi, k, args.slack).as_dict(), EXIT_OK, {"slack": args.slack}


def cmd_existence(args, cfg):
    a, b, lam, pi, k = _model_parts(cfg)
    rep = cond.check_existence(a, b, lam, pi, k)
    body = rep.as_dict()
    ok = rep.exists
    if isinstance(k, SupfOU):
        sf = cond.check_supfou_existence(k.kappa, lam, pi)
        body["supfou"] = sf.as_dict()
        ok = ok and sf.exists
    body["exists"] = ok
    return body, (EXIT_OK if ok else EXIT_FAILED), {}


def cmd_fubini(args, cfg):
    a, b, lam, pi, k = _model_parts(cfg)
    rep = cond.check_fubini(a, b, lam, pi, k)
    return rep.as_dict(), (EXIT_OK if rep.holds else EXIT_FAILED), {}


def _stoch_params(args, cfg) -> dict:
    seed = args.seed if args.seed is not None else cfg.run.get("seed")
    if seed is None:
        raise ConfigError("seed", "mandatory for stochastic commands (--seed or run.seed)")
    t_max = args.t_max if args.t_max is not None else cfg.grid["t_max"]
    n_paths = args.paths if args.paths is not None else int(cfg.run.get("n_paths", 200))
    ppd = args.points_per_decade if args.points_per_decade is not None else cfg.grid["points_per_decade"]
    return {"seed": int(seed), "t_max": float(t_max), "n_paths": int(n_paths), "points_per_decade": int(ppd)}


def _require_existence(cfg):
    a, b, lam, pi, k = _model_parts(cfg)
    rep = cond.check_existence(a, b, lam, pi, k)
    if not rep.exists:
        bad = [n for n, c in rep.conditions.items() if not c.convergent]
        raise ConditionFailed(f"the model does not exist: {', '.join(bad)} integral diverges")


def cmd_simulate(args, cfg):
    _require_existence(cfg)
    p = _stoch_params(args, cfg)
    t = time_grid(p["t_max"], p["points_per_decade"])
    eng = Engine(cfg.model, p["t_max"])
    paths = simulate_paths(cfg.model, p["n_paths"], t, p["seed"], workers=args.workers, engine=eng)
    p["format"] = args.format
    if args.format == "csv":
        return paths_csv(paths), EXIT_OK, p
    body = {"model": cfg.model.name, "seed": p["seed"], "t": t,
            "truncation_bound": float(eng.truncation_error_bound(t[-1:])[0]),
            "paths": [{"path_id": q.path_id, **{c: getattr(q, c) for c in q.COLUMNS}} for q in paths]}
    return body, EXIT_OK, p


def cmd_experiment(args, cfg):
    _require_existence(cfg)
    p = _stoch_params(args, cfg)
    m = cfg.model
    mode = args.mode or cfg.run.get("mode", "auto")
    if mode not in ("auto", "exponent", "lil"):
        raise ConfigError("run.mode", "must be one of auto, exponent, lil")
    if mode == "auto":
        mode = "lil" if (m.levy.is_zero and m.b > 0) else "exponent"
    p["mode"] = mode
    if mode == "lil":
        rep = exp.lil_statistic(m, p["n_paths"], p["t_max"], p["seed"], workers=args.workers,
                                points_per_decade=max(p["points_per_decade"], 50))
    else:
        rr = cond.classify_model(m.a, m.b, m.levy, m.mixing, m.kernel)
        tol = args.tol if args.tol is not None else cfg.run.get("tol")
        p["tol"] = tol
        rep = exp.mz_check(m, rr, p["n_paths"], p["t_max"], p["seed"], workers=args.workers,
                           tol=tol, points_per_decade=p["points_per_decade"])
    return rep, (EXIT_OK if rep.passed else EXIT_FAILED), p


HANDLERS = {"check": cmd_check, "classify": cmd_classify, "indices": cmd_indices,
            "existence": cmd_existence, "fubini": cmd_fubini, "simulate": cmd_simulate,
            "experiment": cmd_experiment}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mma-lab", description="Growth-rate analysis of integrated MMA processes.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", required=True, help="TOML model file or a run manifest")
    common.add_argument("--out", help="output file (default: stdout, or $MMA_LAB_OUT/<command>.<ext>)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--workers", type=int, default=None, help="worker processes (results do not depend on it)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--slack", type=float, default=cond.DEFAULT_SLACK)
    p = sub.add_parser("check", parents=[common], help="evaluate the moment condition at gamma")
    p.add_argument("--gamma", type=float)
    p.add_argument("--method", choices=("split", "direct"), default="split")
    for name, hlp in (("classify", "predicted growth rate"), ("indices", "alpha, beta, eta"),
                      ("existence", "integrability conditions"), ("fubini", "time-integral exchange conditions")):
        sub.add_parser(name, parents=[common], help=hlp)
    for name in ("simulate", "experiment"):
        hlp = "simulate sample paths" if name == "simulate" else "growth-exponent or LIL experiment"
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("--paths", type=int)
        p.add_argument("--t-max", type=float, dest="t_max")
        p.add_argument("--points-per-decade", type=int, dest="points_per_decade")
        if name == "experiment":
            p.add_argument("--mode", choices=("auto", "exponent", "lil"), default=None,
                           help="default: run.mode from the model file, else auto")
            p.add_argument("--tol", type=float)
    return ap


def _error(kind: str, message: str, code: int, **extra) -> int:
    sys.stdout.write(dumps({"error": {"type": kind, "message": message, "exit_code": code, **extra}}))
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = load(args.model)
        fmt = args.format or ("csv" if args.command == "simulate" else "json")
        if args.command != "simulate" and fmt != "json":
            raise ConfigError("format", f"{args.command} emits json only")
        args.format = fmt
        body, code, params = HANDLERS[args.command](args, cfg)
        ext = "csv" if fmt == "csv" else "json"
        out = resolve_out(args.out, f"{args.command}.{ext}")
        artifacts = [] if out is None else [out.name]
        if isinstance(body, exp.ExperimentReport):
            if out is not None:
                curve_path = out.with_name(out.stem + ".curve.csv")
                atomic_write(curve_path, curve_csv(body.curve))
                artifacts.append(curve_path.name)
            sys.stderr.write(f"runtime {body.runtime:.2f}s\n")
            body = body.as_dict()
        text = body if isinstance(body, str) else dumps(body)
        emit(text, out)
        write_manifest(out, args.command, cfg, params, artifacts)
        return code
    except ConfigError as exc:
        return _error("config", str(exc), EXIT_USAGE, key=exc.key, constraint=exc.constraint)
    except ConditionFailed as exc:
        return _error("condition", str(exc), EXIT_FAILED)
    except NumericalQualityError as exc:
        return _error("numerical", str(exc), EXIT_NUMERIC)
    except OSError as exc:
        return _error("io", str(exc), EXIT_USAGE)
    except ValueError as exc:
        return _error("model", str(exc), EXIT_USAGE)


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()

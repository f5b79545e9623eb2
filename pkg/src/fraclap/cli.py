"""Command-line front end.

Each subcommand builds a task payload from its flags, optionally merged over
a JSON config (``--config``), validates it and dispatches to the owning
module.  Exit codes: 0 ok, 1 usage/config, 2 numeric, 3 nonexistence regime,
4 unreliable Monte Carlo estimate.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import kernels, rates, semilinear, verify
from .linear import DirichletData, SolutionField, full_linear_solve
from .quadrature import AccuracyError
from .semilinear import IterationError, NonexistenceError
from .special import DomainError, FracParams
from .wos import UnreliableEstimateError, WosConfig, wos_with_rhs

CONFIG_VERSION = 1
EXIT_USAGE, EXIT_NUMERIC, EXIT_NONEXISTENCE, EXIT_UNRELIABLE = 1, 2, 3, 4

TASKS = ("constants", "eval-kernel", "solve-linear", "solve-semilinear", "rates", "wos", "verify-suite")


class ConfigError(ValueError):
    """Invalid configuration; ``pointer`` is a JSON pointer to the offending key."""

    def __init__(self, pointer: str, msg: str):
        super().__init__(f"{pointer or '/'}: {msg}")
        self.pointer = pointer


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

_num = {"type": "number"}
_points = {"type": "array", "items": {"type": "array", "items": _num, "minItems": 1, "maxItems": 3}, "minItems": 1}
_datum = {"oneOf": [
    {"enum": ["zero", "one"]},
    {"type": "object", "properties": {"power": _num}, "required": ["power"], "additionalProperties": False},
    {"type": "object", "properties": {"usigma": _num}, "required": ["usigma"], "additionalProperties": False},
]}
_nonlin = {"oneOf": [
    {"enum": ["sqrt"]},
    {"type": "object", "properties": {"power": {"type": "number", "exclusiveMinimum": 0}, "coef": _num},
     "required": ["power"], "additionalProperties": False},
]}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


TASK_SCHEMAS = {
    "constants": _obj({}),
    "eval-kernel": _obj({
        "kernel": {"enum": ["eta", "fundamental", "poisson", "martin", "martin-limit", "green", "torsion",
                            "usigma"]},
        "x": _points, "y": _points, "r": {"type": "number", "exclusiveMinimum": 0}, "sigma": _num,
    }, ["kernel", "x"]),
    "solve-linear": _obj({"f": _datum, "g": _datum, "h": {"enum": ["zero", "one"]}, "points": _points},
                         ["points"]),
    "solve-semilinear": _obj({
        "scheme": {"enum": ["damping", "sublinear", "superlinear", "lambda-bracket", "blowup"]},
        "nonlinearity": _nonlin, "g": {"enum": ["zero", "one"]}, "h": {"enum": ["zero", "one"]},
        "beta": _num, "lam": {"type": "number", "minimum": 0}, "q": _num,
        "k": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "grid": {"type": "integer", "minimum": 8},
    }, ["scheme", "nonlinearity"]),
    "rates": _obj({
        "kind": {"enum": ["rhs", "datum"]}, "beta": _num, "sigma": {"type": "number", "minimum": 0},
        "datum": {"enum": ["power", "usigma"]},
        "deltas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                   "minItems": 3},
    }, ["kind"]),
    "wos": _obj({
        "x": {"type": "array", "items": _num, "minItems": 1, "maxItems": 3},
        "g": {"oneOf": [{"enum": ["zero", "one"]},
                        {"type": "object", "properties": {"usigma": _num}, "required": ["usigma"],
                         "additionalProperties": False}]},
        "f": {"enum": ["zero", "one"]},
        "n_paths": {"type": "integer", "minimum": 1}, "max_steps": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0}, "block_size": {"type": "integer", "minimum": 1},
    }, ["x"]),
    "verify-suite": _obj({"filter": {"type": "string"}}),
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "n": {"type": "integer", "minimum": 1, "maximum": 3},
        "s": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "task": {"type": "object", "minProperties": 1, "maxProperties": 1,
                 "properties": TASK_SCHEMAS, "additionalProperties": False},
        "quad": _obj({"n_rad": {"type": "integer", "minimum": 2}, "sphere_degree": {"type": "integer", "minimum": 1},
                      "grid": {"type": "integer", "minimum": 8}}),
        "output": _obj({"path": {"type": "string"}, "format": {"enum": ["csv", "json"]}}),
    },
    "required": ["version", "task"],
    "additionalProperties": False,
}


@dataclass
class RunConfig:
    version: int
    params: FracParams | None
    task_name: str
    task: dict
    quad: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"version": self.version, "task": {self.task_name: self.task}}
        if self.params is not None:
            d.update(n=self.params.n, s=self.params.s)
        if self.quad:
            d["quad"] = self.quad
        if self.output:
            d["output"] = self.output
        return d


def _pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def validate_config(obj) -> RunConfig:
    if isinstance(obj, dict) and "version" in obj and obj["version"] != CONFIG_VERSION:
        raise ConfigError("/version", f"unsupported config version {obj['version']!r}; "
                                      f"this build reads version {CONFIG_VERSION} (set \"version\": 1 and "
                                      f"move task fields under \"task\")")
    errors = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(obj),
                    key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        e = errors[0]
        ptr = _pointer(e.absolute_path)
        if e.validator == "additionalProperties":
            extra = sorted(set(e.instance) - set(e.schema.get("properties", {})))
            ptr = ptr + _pointer(extra[:1])
            raise ConfigError(ptr, "unknown key")
        if e.validator in ("exclusiveMinimum", "exclusiveMaximum", "minimum", "maximum"):
            raise ConfigError(ptr, f"out of range: {e.message}")
        raise ConfigError(ptr, e.message)
    (name, task), = obj["task"].items()
    p = None
    if name != "verify-suite" or "n" in obj or "s" in obj:
        for key in ("n", "s"):
            if key not in obj:
                raise ConfigError(f"/{key}", f"required for task {name}")
        try:
            p = FracParams(obj["n"], obj["s"])
        except DomainError as exc:
            raise ConfigError("/s", str(exc)) from exc
    return RunConfig(obj["version"], p, name, task, obj.get("quad", {}), obj.get("output", {}))


def parse_config(text) -> RunConfig:
    """Parse UTF-8 JSON into a validated RunConfig."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError("", f"not UTF-8: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return validate_config(obj)


# ---------------------------------------------------------------------------
# field builders
# ---------------------------------------------------------------------------


def _g_field(p: FracParams, spec):
    """Exterior datum: returns (g, sigma, decay) or None."""
    if spec in (None, "zero"):
        return None
    if spec == "one":
        return (lambda y: np.ones(len(y))), 0.0, 0.0
    if "power" in spec:
        sig = float(spec["power"])
        return (lambda y: (np.linalg.norm(y, axis=1) - 1.0) ** (-sig)), sig, sig / 2
    sig = float(spec["usigma"])
    return kernels.g_sigma(p, sig), sig, sig


def _f_field(spec):
    """Right-hand side: returns (f, beta) or None."""
    if spec in (None, "zero"):
        return None
    if spec == "one":
        return (lambda y: np.ones(len(y))), 0.0
    if "power" in spec:
        b = float(spec["power"])
        return (lambda y: np.maximum(1.0 - np.linalg.norm(y, axis=1), 1e-300) ** (-b)), b
    raise ConfigError("/task/solve-linear/f", "usigma is an exterior datum, not a right-hand side")


def _nonlinearity(spec) -> semilinear.Nonlinearity:
    if spec == "sqrt":
        return semilinear.sqrt_nonlinearity()
    return semilinear.power_nonlinearity(float(spec["power"]), float(spec.get("coef", 1.0)))


# ---------------------------------------------------------------------------
# tasks; each returns (artifacts, summary, exit status)
# artifacts: list of (suffix, format, text)
# ---------------------------------------------------------------------------


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _pts(p, arr, key):
    X = np.asarray(arr, dtype=float)
    if X.shape[1] != p.n:
        raise ConfigError(key, f"points must have {p.n} coordinates")
    return X


def task_constants(cfg: RunConfig, opts):
    tab = cfg.params.table()
    return [("", "json", _json(tab))], f"constants n={cfg.params.n} s={cfg.params.s} c={tab['c']:.10g}", 0


def task_eval_kernel(cfg: RunConfig, opts):
    p, t = cfg.params, cfg.task
    X = _pts(p, t["x"], "/task/eval-kernel/x")
    k = t["kernel"]
    need_y = k in ("poisson", "martin", "martin-limit", "green")
    if need_y:
        if "y" not in t:
            raise ConfigError("/task/eval-kernel/y", f"kernel {k} needs second points y")
        Y = _pts(p, t["y"], "/task/eval-kernel/y")
        if len(Y) not in (1, len(X)):
            raise ConfigError("/task/eval-kernel/y", "y must have one point or as many as x")
        Y = np.broadcast_to(Y, X.shape)
    if k == "eta":
        vals = kernels.eta_r(p, float(t.get("r", 1.0)), X)
    elif k == "fundamental":
        vals = kernels.fundamental_solution(p, X)
    elif k == "torsion":
        vals = kernels.torsion(p, float(t.get("r", 1.0)), X)
    elif k == "usigma":
        vals = kernels.explicit_usigma(p, float(t.get("sigma", 0.5 * (1 - p.s))), X)
    elif k == "poisson":
        vals = kernels.ball_poisson(p, X, Y)
    elif k == "martin":
        vals = kernels.ball_martin(p, X, Y)
    elif k == "martin-limit":
        vals = kernels.martin_green_limit(p, X, Y)
    else:
        vals = kernels.ball_green(p, X, Y)
    vals = np.atleast_1d(np.asarray(vals, dtype=float))
    cols = [f"x{i}" for i in range(p.n)] + ([f"y{i}" for i in range(p.n)] if need_y else []) + ["delta", "value"]
    delta = np.abs(1.0 - np.linalg.norm(X, axis=1))
    lines = [",".join(cols)]
    for i in range(len(X)):
        row = list(X[i]) + (list(Y[i]) if need_y else []) + [delta[i], vals[i]]
        lines.append(",".join(repr(float(v)) for v in row))
    return [("", "csv", "\n".join(lines) + "\n")], f"eval-kernel {k}: {len(X)} values", 0


def task_solve_linear(cfg: RunConfig, opts):
    p, t = cfg.params, cfg.task
    X = _pts(p, t["points"], "/task/solve-linear/points")
    f = _f_field(t.get("f"))
    g = _g_field(p, t.get("g"))
    h = t.get("h", "zero")
    data = DirichletData(
        f=f[0] if f else None, beta_f=f[1] if f else 0.0,
        g=g[0] if g else None, sigma_g=g[1] if g else 0.0, g_decay=g[2] if g else 0.0,
        g_radial=g is not None,
        h=(lambda th: np.ones(len(th))) if h == "one" else None,
        description=json.dumps({k: t[k] for k in ("f", "g", "h") if k in t}, sort_keys=True),
    )
    fld = full_linear_solve(p, data, X)
    return [("", "csv", fld.to_csv())], f"solve-linear: {len(X)} points, max |u| = {np.max(np.abs(fld.values)):.6g}", 0


def task_solve_semilinear(cfg: RunConfig, opts):
    p, t = cfg.params, cfg.task
    f = _nonlinearity(t["nonlinearity"])
    scheme = t["scheme"]
    m = int(t.get("grid", cfg.quad.get("grid", 256)))
    tol = opts.tol if opts.tol is not None else 1e-8
    g = (lambda y: np.ones(len(y))) if t.get("g") == "one" else None
    h = 1.0 if t.get("h") == "one" else None
    beta = float(t.get("beta", 0.3))
    if scheme in ("damping", "sublinear"):
        kappa = 0.0
        if h:
            kappa = (f.power or 1.0) * (1 - p.s) if scheme == "damping" else 1 - p.s
        grid = semilinear.RadialGrid(p, m=m, kappa=kappa)
        solver = semilinear.solve_damping if scheme == "damping" else semilinear.solve_sublinear
        fld, rep = solver(p, f, g, h, grid, tol)
        status = 0 if rep.converged else EXIT_NUMERIC
        return ([("", "csv", fld.to_csv()), (".report", "json", _json(rep.to_dict()))],
                f"{scheme}: converged={rep.converged} iterations={rep.iterations} residual={rep.final_residual:.3g}", status)
    if scheme == "superlinear":
        lam = float(t.get("lam", 0.1))
        fld, rep = semilinear.solve_superlinear(p, f, beta, lam, q=t.get("q", f.power), tol=tol)
        status = 0 if rep.converged else EXIT_NUMERIC
        return ([("", "csv", fld.to_csv()), (".report", "json", _json(rep.to_dict()))],
                f"superlinear lambda={lam}: converged={rep.converged} diverged={rep.divergence_flag}", status)
    if scheme == "lambda-bracket":
        if t.get("q") is not None and float(t["q"]) * beta > 1 + p.s:
            raise NonexistenceError(f"q*beta = {float(t['q']) * beta:g} > 1+s: no solution for lambda > 0")
        lo, hi = semilinear.lambda_bracket(p, f, beta)
        return [("", "json", _json({"lambda_converge": lo, "lambda_diverge": hi}))], \
            f"lambda bracket ({lo:.6g}, {hi:.6g})", 0
    ser = semilinear.blowup_probe(p, f, beta, t.get("k", (1, 2, 4, 8, 16, 32, 64)))
    growth = ser.min_ratio[-1] / ser.min_ratio[0]
    return [("", "json", _json(ser.to_dict()))], f"blowup probe: min ratio grew {growth:.3g}x", 0


def task_rates(cfg: RunConfig, opts):
    p, t = cfg.params, cfg.task
    deltas = np.asarray(t["deltas"], dtype=float) if "deltas" in t else None
    if t["kind"] == "rhs":
        beta = float(t.get("beta", 0.5))
        d, v = rates.rhs_rate_samples(p, beta, deltas)
        extra = {"beta": beta, "expected": list(rates.expected_rhs_rate(p.s, beta))}
    else:
        sigma = float(t.get("sigma", 0.25))
        d, v = rates.datum_rate_samples(p, sigma, deltas, t.get("datum", "power"))
        extra = {"sigma": sigma, "expected": -sigma}
    fit = rates.fit_boundary_rate(d, v)
    X = np.zeros((len(d), p.n))
    X[:, 0] = 1.0 - d
    fld = SolutionField(X, v, None)
    out = dict(fit.to_dict(), **extra)
    return ([("", "csv", fld.to_csv()), (".fit", "json", _json(out))],
            f"rates {t['kind']}: exponent={fit.exponent:.4f} log_factor={fit.log_factor}", 0)


def task_wos(cfg: RunConfig, opts):
    p, t = cfg.params, cfg.task
    x = np.asarray(t["x"], dtype=float)
    if x.size != p.n:
        raise ConfigError("/task/wos/x", f"x must have {p.n} coordinates")
    gs = t.get("g", "one")
    if gs == "zero":
        g = None
    elif gs == "one":
        g = lambda y: np.ones(len(y))  # noqa: E731
    else:
        g = kernels.g_sigma(p, float(gs["usigma"]))
    f = (lambda y: np.ones(len(y))) if t.get("f") == "one" else None
    wc = WosConfig(n_paths=int(t.get("n_paths", 100_000)), max_steps=int(t.get("max_steps", 10_000)),
                   seed=int(t.get("seed", 0)), rhs_mode="center-approximation" if f else "off",
                   block_size=int(t.get("block_size", 8192)), workers=opts.threads)
    est = wos_with_rhs(p, f, g, x, wc)
    return [("", "json", _json(est.to_dict()))], f"wos: {est.mean:.6g} +- {est.stderr:.2g}", 0


def task_verify_suite(cfg: RunConfig, opts):
    reports = verify.run_suite(cfg.task.get("filter"), workers=opts.threads)
    failed = [r.identity_name for r in reports if not r.passed]
    body = {"passed": not failed, "reports": [r.to_dict() for r in reports]}
    summary = f"verify-suite: {len(reports) - len(failed)}/{len(reports)} passed"
    if failed:
        summary += " (failed: " + ", ".join(failed) + ")"
    return [("", "json", _json(body))], summary, EXIT_NUMERIC if failed else 0


RUNNERS = {
    "constants": task_constants, "eval-kernel": task_eval_kernel, "solve-linear": task_solve_linear,
    "solve-semilinear": task_solve_semilinear, "rates": task_rates, "wos": task_wos,
    "verify-suite": task_verify_suite,
}


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _artifact_path(base: str, suffix: str, fmt: str) -> str:
    if not suffix:
        return base
    stem, _ = os.path.splitext(base)
    return f"{stem}{suffix}.{fmt}"


def run(cfg: RunConfig, opts) -> int:
    artifacts, summary, status = RUNNERS[cfg.task_name](cfg, opts)
    out = opts.out or cfg.output.get("path")
    if out:
        for suffix, fmt, text in artifacts:
            _write(_artifact_path(out, suffix, fmt), text)
        print(summary)
    else:
        for _, _, text in artifacts:
            sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return status


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _points_arg(text: str):
    try:
        v = json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"expected a JSON list: {exc.msg}") from exc
    if isinstance(v, list) and v and not isinstance(v[0], list):
        v = [v]
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config (version 1); flags override its task fields")
    common.add_argument("--out", help="output path; extra artifacts get a suffix next to it")
    common.add_argument("--threads", type=int, default=None, help="worker cap (default: FRACLAP_THREADS or 1)")
    common.add_argument("--tol", type=float, default=None, help="iteration tolerance for solvers")
    common.add_argument("--n", type=int, help="dimension (1, 2 or 3)")
    common.add_argument("--s", type=float, help="order s in (0, 1)")

    ap = _Parser(prog="fraclap", description="Fractional Laplacian on the unit ball: kernels, solvers, checks.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("constants", parents=[common], help="normalisation constants")

    k = sub.add_parser("eval-kernel", parents=[common], help="evaluate a kernel at points")
    k.add_argument("--kernel", choices=TASK_SCHEMAS["eval-kernel"]["properties"]["kernel"]["enum"])
    k.add_argument("--x", type=_points_arg, help="JSON list of points")
    k.add_argument("--y", type=_points_arg, help="second points (boundary point for martin)")
    k.add_argument("--points", help="CSV file with columns x0..x(n-1) and optionally y0..y(n-1)")
    k.add_argument("--r", type=float)
    k.add_argument("--sigma", type=float)

    lin = sub.add_parser("solve-linear", parents=[common], help="linear Dirichlet problem at points")
    lin.add_argument("--points", type=_points_arg)
    lin.add_argument("--f", type=json.loads, help='"one", {"power": beta}')
    lin.add_argument("--g", type=json.loads, help='"one", {"power": sigma}, {"usigma": sigma}')
    lin.add_argument("--h", choices=["zero", "one"])

    sl = sub.add_parser("solve-semilinear", parents=[common], help="semilinear iteration schemes")
    sl.add_argument("--scheme", choices=TASK_SCHEMAS["solve-semilinear"]["properties"]["scheme"]["enum"])
    sl.add_argument("--power", type=float, help="f(t) = coef t^power")
    sl.add_argument("--coef", type=float)
    sl.add_argument("--g", choices=["zero", "one"])
    sl.add_argument("--h", choices=["zero", "one"])
    sl.add_argument("--beta", type=float)
    sl.add_argument("--lam", type=float)
    sl.add_argument("--q", type=float)
    sl.add_argument("--grid", type=int)

    r = sub.add_parser("rates", parents=[common], help="boundary rate experiments")
    r.add_argument("--kind", choices=["rhs", "datum"])
    r.add_argument("--beta", type=float)
    r.add_argument("--sigma", type=float)
    r.add_argument("--datum", choices=["power", "usigma"])

    w = sub.add_parser("wos", parents=[common], help="walk-on-spheres estimate")
    w.add_argument("--x", type=_points_arg)
    w.add_argument("--usigma", type=float, help="datum g_sigma instead of g = 1")
    w.add_argument("--f", choices=["zero", "one"])
    w.add_argument("--n-paths", dest="n_paths", type=int)
    w.add_argument("--max-steps", dest="max_steps", type=int)
    w.add_argument("--seed", type=int)

    v = sub.add_parser("verify-suite", parents=[common], help="identity suite")
    v.add_argument("--filter", help="substring of entry names")
    return ap


def _task_from_args(cmd: str, a) -> dict:
    t = {}

    def put(key, val):
        if val is not None:
            t[key] = val

    if cmd == "eval-kernel":
        for key in ("kernel", "x", "y", "r", "sigma"):
            put(key, getattr(a, key))
        if a.points:
            t.update(read_points_csv(a.points))
    elif cmd == "solve-linear":
        for key in ("points", "f", "g", "h"):
            put(key, getattr(a, key))
    elif cmd == "solve-semilinear":
        for key in ("scheme", "g", "h", "beta", "lam", "q", "grid"):
            put(key, getattr(a, key))
        if a.power is not None:
            t["nonlinearity"] = {"power": a.power} if a.coef is None else {"power": a.power, "coef": a.coef}
    elif cmd == "rates":
        for key in ("kind", "beta", "sigma", "datum"):
            put(key, getattr(a, key))
    elif cmd == "wos":
        if a.x is not None:
            t["x"] = a.x[0]
        if a.usigma is not None:
            t["g"] = {"usigma": a.usigma}
        for key in ("f", "n_paths", "max_steps", "seed"):
            put(key, getattr(a, key))
    elif cmd == "verify-suite":
        put("filter", a.filter)
    return t


def read_points_csv(path: str) -> dict:
    """Points from a CSV with an x0,... (and optional y0,...) header."""
    import csv

    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError("", f"cannot read points file: {exc}") from exc
    if not rows:
        raise ConfigError("", f"{path}: no rows")
    out = {}
    for pre in ("x", "y"):
        keys = sorted((k for k in rows[0] if k and k.startswith(pre) and k[1:].isdigit()), key=lambda k: int(k[1:]))
        if keys:
            try:
                out[pre] = [[float(r[k]) for k in keys] for r in rows]
            except (TypeError, ValueError) as exc:
                raise ConfigError("", f"{path}: bad number: {exc}") from exc
    if "x" not in out:
        raise ConfigError("", f"{path}: need columns x0[,x1[,x2]]")
    return out


def config_from_args(a) -> RunConfig:
    base: dict = {"version": CONFIG_VERSION}
    if a.config:
        try:
            with open(a.config, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise ConfigError("", f"cannot read config: {exc}") from exc
        try:
            base = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError("", f"syntax error: {exc}") from exc
        if not isinstance(base, dict):
            raise ConfigError("", "config must be a JSON object")
        tasks = base.get("task", {})
        if isinstance(tasks, dict) and tasks and a.command not in tasks:
            raise ConfigError("/task", f"config describes {sorted(tasks)} but the subcommand is {a.command}")
    if a.n is not None:
        base["n"] = a.n
    if a.s is not None:
        base["s"] = a.s
    task = dict((base.get("task") or {}).get(a.command, {}))
    task.update(_task_from_args(a.command, a))
    base["task"] = {a.command: task}
    return validate_config(base)


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    if a.threads is None:
        env = os.environ.get("FRACLAP_THREADS")
        try:
            a.threads = max(1, int(env)) if env else 1
        except ValueError:
            print(f"fraclap: error: FRACLAP_THREADS={env!r} is not an integer", file=sys.stderr)
            return EXIT_USAGE
    try:
        cfg = config_from_args(a)
        return run(cfg, a)
    except ConfigError as exc:
        print(f"fraclap: config error at {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonexistenceError as exc:
        print(f"fraclap: nonexistence regime: {exc}", file=sys.stderr)
        return EXIT_NONEXISTENCE
    except UnreliableEstimateError as exc:
        print(f"fraclap: unreliable estimate: {exc}", file=sys.stderr)
        return EXIT_UNRELIABLE
    except (DomainError, AccuracyError, IterationError, FloatingPointError) as exc:
        print(f"fraclap: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``respoisson {verify,solve,constants,pv,dn}``.

Exit codes: 0 pass, 1 check failure, 2 usage or configuration error.  Each
output file ``X`` gets a companion ``X.manifest.json`` with inputs, seed,
version, timestamp and output digests; the outputs themselves carry no
timestamps, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .potential import BumpField, PolynomialField, d_beta_newtonian, pv_derivative
from .residue import closed_form_moment, constants_table
from .specfun import Convention, FundamentalSolution
from .rhs_dsl import DSLError
from .solver import (HypothesisError, Mode, ParameterSearchError, SolveConfig, SolverDivergenceError,
                     SystemSpec, check_hypotheses, estimate_contraction, picard_solve,
                     select_parameters)
from .verify import SUITES, poly_from_string, run_suite


class UsageError(Exception):
    pass


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _emit(obj, out: str | None, args, inputs: list[str], extra_outputs=(), wall: float = 0.0):
    text = dumps(obj)
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.write_text(text)
    outputs = [path] + [Path(p) for p in extra_outputs if p]
    manifest = {
        "subcommand": args.command,
        "inputs": {p: _digest(Path(p)) for p in inputs if p and Path(p).exists()},
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "wall_time": wall,
        "outputs": {str(p): _digest(p) for p in outputs},
    }
    Path(str(path) + ".manifest.json").write_text(dumps(manifest))


def _parse_ints(s: str | None):
    if s is None:
        return None
    try:
        return tuple(int(c) for c in s.split(","))
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {s!r}") from None


def _parse_floats(s: str | None):
    if s is None:
        return None
    try:
        return tuple(float(c) for c in s.split(","))
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {s!r}") from None


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None


def load_preset(name: str) -> dict:
    res = resources.files("respoisson") / "presets" / f"{name}.json"
    if not res.is_file():
        avail = sorted(p.name[:-5] for p in (resources.files("respoisson") / "presets").iterdir()
                       if p.name.endswith(".json"))
        raise UsageError(f"unknown preset {name!r}; available: {', '.join(avail)}")
    return json.loads(res.read_text())


# -- subcommands -----------------------------------------------------------------

def cmd_verify(args) -> int:
    kwargs = {"seed": args.seed}
    if args.n is not None:
        kwargs["n"] = args.n
    if args.level is not None:
        kwargs["level"] = args.level
    if args.deg is not None:
        kwargs["deg"] = args.deg
    if args.beta is not None:
        kwargs["beta"] = _parse_ints(args.beta)
    if args.f is not None:
        kwargs["f"] = args.f
    t0 = time.perf_counter()
    report = run_suite(args.suite, **kwargs)
    if args.tol is not None:
        for rec in report["checks"]:
            if rec["pass"] is not None and rec["bound"] is not None:
                rec["bound"] = args.tol
                rec["pass"] = rec["value"] < args.tol
        report["pass"] = all(r["pass"] for r in report["checks"] if r["pass"] is not None)
    _emit(report, args.out, args, [], wall=time.perf_counter() - t0)
    for rec in report["checks"]:
        tag = {True: "PASS", False: "FAIL", None: "INFO"}[rec["pass"]]
        print(f"[{tag}] {rec['name']}: {rec['value']:.3e}", file=sys.stderr)
    return 0 if report["pass"] else 1


def _solve_inputs(args):
    if args.preset:
        data = load_preset(args.preset)
        sys_data, cfg_data = data["system"], data["config"]
        mode = data.get("mode")
    else:
        if not (args.system and args.config):
            raise UsageError("solve needs --preset or both --system and --config")
        sys_data, cfg_data = _load_json(args.system), _load_json(args.config)
        mode = sys_data.get("mode")
    if args.jets:
        cfg_data = dict(cfg_data, jets=_load_json(args.jets))
    if args.tol is not None:
        cfg_data = dict(cfg_data, tol=args.tol)
    if args.seed is not None:
        cfg_data = dict(cfg_data, seed=args.seed)
    return sys_data, cfg_data, args.mode or mode


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    sys_data, cfg_data, mode = _solve_inputs(args)
    system = SystemSpec.from_json(sys_data)
    cfg = SolveConfig.from_json(cfg_data)
    selection = None
    if mode:
        mode = Mode(mode)
        if args.select:
            R, gamma = select_parameters(system, mode, R=cfg.R, gamma=cfg.gamma, seed=cfg.seed)
            selection = {"R": R, "gamma": gamma}
            cfg.R, cfg.gamma = R, gamma
        else:
            check_hypotheses(system, mode)
    try:
        u, report = picard_solve(system, cfg)
        status = 0 if report.converged else 1
    except SolverDivergenceError as exc:
        report, status = exc.report, 1
        u = None
    est = estimate_contraction(system, cfg.R, cfg.gamma, seed=cfg.seed)
    report.delta, report.eta = est.delta, est.eta
    out = report.to_json(include_time=False)
    out.update({"system": system.to_json(), "config": cfg.to_json(), "mode": mode and mode.value,
                "selection": selection, "contraction": est.to_json(),
                "solution": [p.to_json() for p in u.polys] if u is not None else None})
    if args.field and u is not None:
        u.to_csv(args.field)
    inputs = [p for p in (args.system, args.config, args.jets) if p]
    _emit(out, args.out, args, inputs, [args.field], wall=time.perf_counter() - t0)
    print(f"{report.message}: iterations={report.iterations} residual={report.residual:.3e}",
          file=sys.stderr)
    return status


def cmd_constants(args) -> int:
    if args.max_order > 6:
        raise UsageError("--max-order must be <= 6")
    n = args.n or 3
    # I(0, 0, 1)(x) is linear in x rather than constant; report its x_1 coefficient
    lead = closed_form_moment(n) * FundamentalSolution(n, Convention(args.convention)).c_n
    rows = [{"beta": [0] * n, "mu": [0] * n, "j": 1, "n": n, "convention": args.convention,
             "value": lead, "kind": "x1-coefficient"}]
    rows += [dict(r.to_json(), kind="constant")
             for r in constants_table(n, args.max_order, args.convention)]
    _emit(rows, args.out, args, [])
    return 0


_FIELD_KEYS = {"bump": ("center", "radius"), "polynomial": ("expr",)}


def field_from_json(spec: dict):
    kind = spec.get("type", "polynomial")
    missing = [k for k in _FIELD_KEYS.get(kind, ()) if k not in spec]
    if missing:
        raise UsageError(f"{kind} field needs key(s) {', '.join(missing)}")
    R = float(spec.get("R", 1.0))
    if kind == "bump":
        return BumpField(np.asarray(spec["center"], dtype=float), float(spec["radius"]), R,
                         int(spec.get("power", 6)))
    if kind == "polynomial":
        n = int(spec.get("n", 3))
        return PolynomialField(poly_from_string(str(spec["expr"]), n), R)
    raise UsageError(f"unknown field type {kind!r}")


def _pv_like(args, fn) -> int:
    if args.input:
        data = _load_json(args.input)
    else:
        if args.field is None or args.beta is None or args.x is None:
            raise UsageError("give --input or all of --field, --beta, --x")
        data = {"field": json.loads(args.field), "beta": _parse_ints(args.beta),
                "x": _parse_floats(args.x)}
    level = int(data.get("level", args.level or 12))
    f = field_from_json(data["field"])
    beta, x = tuple(data["beta"]), np.asarray(data["x"], dtype=float)
    v = fn(beta, f, x, level)
    v2 = fn(beta, f, x, level + max(2, level // 2))
    out = {"value": v, "error_estimate": abs(v2 - v), "level": level, "beta": list(beta),
           "x": x.tolist()}
    _emit(out, args.out, args, [args.input] if args.input else [])
    if args.tol is not None and out["error_estimate"] > args.tol:
        return 1
    return 0


def cmd_pv(args) -> int:
    return _pv_like(args, lambda b, f, x, lev: pv_derivative(b, f, x, lev))


def cmd_dn(args) -> int:
    method = args.method
    return _pv_like(args, lambda b, f, x, lev: d_beta_newtonian(b, f, x, lev, method=method))


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="respoisson", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--n", type=int, default=None, help="dimension")
        sp.add_argument("--level", type=int, default=None, help="quadrature level")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output JSON (stdout if omitted)")
        sp.add_argument("--tol", type=float, default=None)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=sorted(SUITES))
    common(v)
    v.add_argument("--deg", type=int, default=None, help="max monomial degree (residue)")
    v.add_argument("--beta", default=None, help="multi-index, e.g. 1,1,0 (annulus)")
    v.add_argument("--f", default=None, help="polynomial in y1..yn (annulus)")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("solve", help="Picard solve of Delta^m u = a(...)")
    common(s)
    s.add_argument("--preset", default=None, help="laplace_usq, biharmonic_abs or gradient_H")
    s.add_argument("--system", default=None)
    s.add_argument("--config", default=None)
    s.add_argument("--jets", default=None, help="JSON {\"i,j,k\": c} of initial jets")
    s.add_argument("--field", default=None, help="CSV of nodes and solution values")
    s.add_argument("--mode", choices=[m.value for m in Mode], default=None)
    s.add_argument("--select", action="store_true", help="choose (R, gamma) by halving search")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("constants", help="table of residue constants C(beta, mu, j)")
    common(c)
    c.add_argument("--max-order", type=int, default=3)
    c.add_argument("--convention", choices=["DELTA", "RAW"], default="DELTA")
    c.set_defaults(func=cmd_constants)

    for name, fn, helptext in [("pv", cmd_pv, "principal-value derivative of a compact field"),
                               ("dn", cmd_dn, "D^beta N(f) at a point")]:
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--input", default=None, help="JSON {field, beta, x, level}")
        sp.add_argument("--field", default=None, help="field JSON, e.g. '{\"type\": \"bump\", ...}'")
        sp.add_argument("--beta", default=None)
        sp.add_argument("--x", default=None)
        if name == "dn":
            sp.add_argument("--method", choices=["dnf", "dn"], default="dnf")
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HypothesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParameterSearchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (UsageError, DSLError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end: ``solve``, ``verify`` and ``study``.

Exit status: 0 on success, 2 for an invalid config or unknown suite, 1 for a
runtime failure or a failing verify suite.  Reports are JSON, tables are CSV;
each CSV starts with one ``#`` comment line holding the version and the
resolved config.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .boundary import RobinMeasure, measure_from_config, scale
from .estimators import (Estimate, function_from_config, resolvent_multi, semigroup_paths)
from .geometry import domain_from_config, domain_to_config
from .oracle import CONVENTION
from .sampler import SimConfig
from .verify import SUITES, discretization_allowance, resolvent_oracle, run_suite, semigroup_oracle

VERSION = f"v{__version__}"

ESTIMATOR_KINDS = ("weight", "killed", "dirichlet", "resolvent")

_number = {"type": "number"}
_beta = {"oneOf": [{"type": "number", "minimum": 0},
                   {"type": "array", "items": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                    "minItems": 1}]}
_component = {
    "type": "object",
    "properties": {"type": {"enum": ["neumann", "dirichlet", "robin"]}, "beta": _beta},
    "required": ["type"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem"],
    "properties": {
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "required": ["domain", "measure"],
            "properties": {
                "id": {"type": "string"},
                "domain": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {
                        "type": {"enum": ["interval", "rectangle", "disk"]},
                        "a": _number, "b": _number, "x0": _number, "x1": _number, "y0": _number,
                        "y1": _number, "center": {"type": "array", "items": _number, "minItems": 2,
                                                  "maxItems": 2},
                        "radius": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "measure": {"oneOf": [
                    {"type": "number", "minimum": 0},
                    {"enum": ["neumann", "dirichlet"]},
                    _component,
                    {"type": "array", "items": _component, "minItems": 1},
                ]},
                "f": {"oneOf": [_number, {"type": "object", "required": ["name"]}]},
                "estimators": {"type": "array", "items": {"enum": list(ESTIMATOR_KINDS)}, "minItems": 1},
                "t": {"type": "number", "minimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "points": {"type": "array", "minItems": 1,
                           "items": {"oneOf": [_number, {"type": "array", "items": _number}]}},
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "h": {"type": "number", "exclusiveMinimum": 0},
                "scheme": {"enum": ["projection", "occupation"]},
                "eps": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "bridge_correction": {"type": "boolean"},
                "T": {"type": "number", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "threads": {"type": "integer", "minimum": 1},
                "n_paths": {"type": "integer", "minimum": 2},
                "allowance": {"type": "boolean"},
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "m_nodes": {"type": ["integer", "null"], "minimum": 3},
                "dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "study": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "h": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "n": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
                "k": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "csv": {"type": "string"},
                "json": {"type": "string"},
                "verbosity": {"type": "integer", "minimum": 0},
            },
        },
    },
}

DEFAULTS = {
    "problem": {"id": "problem", "f": {"name": "constant", "value": 1.0}, "estimators": ["weight"],
                "t": 0.25, "alpha": 1.0, "points": [0.5]},
    "sim": {"h": 1e-4, "scheme": "projection", "eps": None, "bridge_correction": False, "T": 1.0,
            "seed": 0, "threads": 1, "n_paths": 10_000, "allowance": True},
    "oracle": {"enabled": True, "m_nodes": None, "dt": None},
    "study": {"h": [4e-4, 1e-4, 2.5e-5], "n": [1_000, 10_000, 100_000], "k": [1, 2, 4, 8, 16]},
    "output": {"dir": ".", "csv": "results.csv", "json": "report.json", "verbosity": 0},
}

DEFAULT_PROBLEM = {"domain": {"type": "interval", "a": 0.0, "b": 1.0}, "measure": 1.0}


class ConfigError(Exception):
    pass


def resolve_config(raw: dict, seed=None, threads=None, out=None) -> dict:
    """Validate against the schema, then fill every default explicitly."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {err.message}") from None
    cfg = copy.deepcopy(DEFAULTS)
    for block, values in raw.items():
        cfg[block].update(copy.deepcopy(values))
    if seed is not None:
        cfg["sim"]["seed"] = seed
    if threads is not None:
        cfg["sim"]["threads"] = threads
    if out is not None:
        cfg["output"]["dir"] = out
    return cfg


def load_config(path, seed=None, threads=None, out=None) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    return resolve_config(raw, seed, threads, out)


class Problem:
    """Model objects built from a resolved config."""

    def __init__(self, cfg: dict):
        p, s = cfg["problem"], cfg["sim"]
        try:
            self.domain = domain_from_config(p["domain"])
            self.measure = measure_from_config(self.domain, p["measure"])
            self.f = function_from_config(p["f"], self.domain)
            self.sim = SimConfig(**{k: s[k] for k in ("h", "scheme", "eps", "bridge_correction", "T", "seed",
                                                      "threads")})
            self.points = [np.atleast_1d(np.asarray(x, dtype=float)) for x in p["points"]]
            for x in self.points:
                if x.shape != (self.domain.dim,):
                    raise ValueError(f"point {x.tolist()} does not have dimension {self.domain.dim}")
                if self.domain.signed_distance(x[None, :])[0] < 0:
                    raise ValueError(f"point {x.tolist()} lies outside the domain")
            if any(k in ("weight", "killed", "dirichlet") for k in p["estimators"]) and p["t"] > self.sim.T:
                raise ValueError(f"t = {p['t']} exceeds the horizon T = {self.sim.T}")
        except (ValueError, TypeError, KeyError) as err:
            raise ConfigError(f"invalid problem: {err}") from None
        # make every default explicit in the emitted config
        p["domain"] = domain_to_config(self.domain)
        p["measure"] = self.measure.to_config()
        p["f"] = self.f.to_config()
        self.id = p["id"]
        self.n = s["n_paths"]
        self.t = p["t"]
        self.alpha = p["alpha"]
        self.estimators = p["estimators"]
        self.allowance = s["allowance"]
        o = cfg["oracle"]
        self.oracle = o["enabled"]
        self.m_nodes, self.dt = o["m_nodes"], o["dt"]


# -- solve -----------------------------------------------------------------------------------

def _estimate(problem: Problem, kind: str, x, sim: SimConfig):
    """Per-path samples at step ``sim.h`` (and at ``4 sim.h`` on the same paths, if requested)."""
    d, n, f = problem.domain, problem.n, problem.f
    levels = 2 if problem.allowance else 1
    run = sim.replace(h=sim.h * 4) if levels == 2 else sim
    if kind == "resolvent":
        contrib, _ = resolvent_multi(d, [problem.measure], f, problem.alpha, x, n, run, levels=levels)
        return [c[:, 0] for c in contrib]
    if kind == "dirichlet":
        contrib, _ = semigroup_paths(d, [RobinMeasure.dirichlet(d)], f, problem.t, x, n, run, levels=levels)
    else:
        contrib, _ = semigroup_paths(d, [problem.measure], f, problem.t, x, n, run, levels=levels,
                                     killed=kind == "killed")
    return [c[:, 0] for c in contrib]


def _oracle_value(problem: Problem, kind: str, x):
    if not problem.oracle:
        return None
    try:
        if kind == "resolvent":
            return resolvent_oracle(problem.domain, problem.measure, problem.f, problem.alpha, x,
                                    problem.m_nodes or 2001)
        meas = RobinMeasure.dirichlet(problem.domain) if kind == "dirichlet" else problem.measure
        return semigroup_oracle(problem.domain, meas, problem.f, problem.t, x, problem.m_nodes, problem.dt)
    except NotImplementedError:
        return None


def _csv_text(header_cfg: dict, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# robin-mc {VERSION} config={json.dumps(header_cfg, sort_keys=True, separators=(',', ':'))}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _json_text(obj) -> str:
    from .verify import _plain
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _public_cfg(cfg):
    """The resolved config as embedded in artifacts (thread count does not affect results)."""
    c = copy.deepcopy(cfg)
    c["sim"].pop("threads", None)
    return c


def cmd_solve(cfg: dict) -> int:
    problem = Problem(cfg)
    dim = problem.domain.dim
    columns = ["problem_id", "estimator_kind", "t_or_alpha"] + [f"x{i}" for i in range(dim)] + [
        "mean", "std_error", "n_paths", "h", "scheme"]
    rows, records = [], []
    for kind in problem.estimators:
        for x in problem.points:
            samples = _estimate(problem, kind, x, problem.sim)
            est = Estimate.from_samples(samples[-1], problem.sim, kind)
            allow = discretization_allowance(float(samples[0].mean()), est.mean) if len(samples) == 2 else None
            param = problem.alpha if kind == "resolvent" else problem.t
            rows.append([problem.id, kind, float(param)] + [float(v) for v in x]
                        + [est.mean, est.std_error, est.n_paths, problem.sim.h, problem.sim.scheme])
            ref = _oracle_value(problem, kind, x)
            rec = {"estimator_kind": kind, "t_or_alpha": param, "x": x, "mean": est.mean,
                   "std_error": est.std_error, "n_paths": est.n_paths, "allowance": allow, "oracle": ref}
            if ref is not None:
                diff = abs(est.mean - ref)
                rec["abs_diff"] = diff
                rec["within_tolerance"] = bool(diff <= 3 * est.std_error + (allow or 0.0) + 1e-6)
            records.append(rec)
    out = Path(cfg["output"]["dir"])
    public = _public_cfg(cfg)
    _write(out / cfg["output"]["csv"], _csv_text(public, columns, rows))
    report = {"version": VERSION, "convention": CONVENTION, "config": public, "seed": problem.sim.seed,
              "results": records}
    _write(out / cfg["output"]["json"], _json_text(report))
    for rec in records:
        line = f"{rec['estimator_kind']:>9} x={[float(v) for v in rec['x']]} mean={rec['mean']:.6f} " \
               f"se={rec['std_error']:.2e}"
        if rec["oracle"] is not None:
            line += f" oracle={rec['oracle']:.6f} ok={rec['within_tolerance']}"
        print(line)
    return 0


# -- study -----------------------------------------------------------------------------------

STUDIES = ("step-size", "paths", "mu-ladder")


def cmd_study(kind: str, cfg: dict) -> tuple:
    problem = Problem(cfg)
    x = problem.points[0]
    sim = problem.sim
    d, f, n = problem.domain, problem.f, problem.n
    rows = []
    if kind == "step-size":
        hs = sorted(cfg["study"]["h"], reverse=True)
        ratios = [hs[i] / hs[i + 1] for i in range(len(hs) - 1)]
        if any(abs(r - 4.0) > 1e-9 for r in ratios):
            raise ConfigError("step-size study needs h values in ratio 4 (they share one Brownian path)")
        contrib, _ = semigroup_paths(d, [problem.measure], f, problem.t, x, n, sim.replace(h=hs[0]),
                                     levels=len(hs))
        ref = _oracle_value(problem, "weight", x)
        for h, c in zip(hs, contrib):
            est = Estimate.from_samples(c[:, 0], sim, "weight")
            rows.append([h, est.mean, est.std_error, ref, None if ref is None else est.mean - ref])
    elif kind == "paths":
        ref = _oracle_value(problem, "weight", x)
        for m in cfg["study"]["n"]:
            c, _ = semigroup_paths(d, [problem.measure], f, problem.t, x, m, sim)
            est = Estimate.from_samples(c[0][:, 0], sim, "weight")
            rows.append([m, est.mean, est.std_error, ref, None if ref is None else est.mean - ref])
    elif kind == "mu-ladder":
        ks = cfg["study"]["k"]
        neu = RobinMeasure.neumann(d)
        fam = [neu] + [scale(problem.measure, 1.0 / k) for k in ks]
        use_resolvent = "resolvent" in problem.estimators
        if use_resolvent:
            contrib, _ = resolvent_multi(d, fam, f, problem.alpha, x, n, sim)
        else:
            contrib, _ = semigroup_paths(d, fam, f, problem.t, x, n, sim)
        c = contrib[0]
        for j, k in enumerate(ks):
            est = Estimate.from_samples(c[:, j + 1], sim, "resolvent" if use_resolvent else "weight")
            ref = _oracle_value_for(problem, fam[j + 1], x, use_resolvent)
            rows.append([k, est.mean, est.std_error, ref, float(np.mean(c[:, 0] - c[:, j + 1]))])
    else:
        raise ConfigError(f"unknown study {kind!r}; choose from {', '.join(STUDIES)}")
    columns = ["parameter", "mean", "std_error", "oracle", "gap"]
    return columns, rows


def _oracle_value_for(problem, measure, x, resolvent):
    if not problem.oracle:
        return None
    try:
        if resolvent:
            return resolvent_oracle(problem.domain, measure, problem.f, problem.alpha, x)
        return semigroup_oracle(problem.domain, measure, problem.f, problem.t, x, problem.m_nodes, problem.dt)
    except NotImplementedError:
        return None


# -- entry point -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run-config JSON file")
    common.add_argument("--seed", type=int, help="override the random seed (u64)")
    common.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    common.add_argument("--out", help="output directory")
    parser = argparse.ArgumentParser(prog="robin-mc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"robin-mc {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="run estimators and oracles for one problem")
    v = sub.add_parser("verify", parents=[common], help="run named property suites (default: all)")
    v.add_argument("suites", nargs="*", help=f"suite names: {', '.join(SUITES)}")
    v.add_argument("--quick", action="store_true", help="reduced path counts and coarser steps")
    s = sub.add_parser("study", parents=[common], help="convergence tables as CSV")
    s.add_argument("kind", help=f"one of {', '.join(STUDIES)}")
    return parser


def _config_for(args, need_problem: bool) -> dict:
    if args.config:
        return load_config(args.config, args.seed, args.threads, args.out)
    if need_problem:
        raise ConfigError("this command needs --config <file>")
    return resolve_config({"problem": DEFAULT_PROBLEM}, args.seed, args.threads, args.out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be a 64-bit unsigned integer", file=sys.stderr)
        return 2
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        if args.command == "solve":
            return cmd_solve(_config_for(args, need_problem=True))
        if args.command == "verify":
            names = args.suites or list(SUITES)
            unknown = [s for s in names if s not in SUITES]
            if unknown:
                print(f"error: unknown suite(s) {', '.join(unknown)}; available suites: {', '.join(SUITES)}",
                      file=sys.stderr)
                return 2
            out = Path(args.out or ".")
            seed = args.seed if args.seed is not None else 0
            ok = True
            for name in names:
                rep = run_suite(name, seed=seed, quick=args.quick, threads=args.threads or 1)
                _write(out / f"verify_{name}.json", rep.to_json())
                failed = [c.name for c in rep.checks if not c.passed]
                print(f"{name}: {'PASS' if rep.passed else 'FAIL'}"
                      + (f" (failed: {', '.join(failed)})" if failed else ""))
                ok &= rep.passed
            return 0 if ok else 1
        if args.command == "study":
            if args.kind not in STUDIES:
                print(f"error: unknown study {args.kind!r}; available: {', '.join(STUDIES)}", file=sys.stderr)
                return 2
            cfg = _config_for(args, need_problem=False)
            columns, rows = cmd_study(args.kind, cfg)
            out = Path(cfg["output"]["dir"])
            public = _public_cfg(cfg)
            _write(out / f"study_{args.kind}.csv", _csv_text({**public, "study_kind": args.kind}, columns, rows))
            for r in rows:
                print(",".join("" if v is None else f"{v:.6g}" for v in r))
            return 0
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - report any runtime failure as exit 1
        print(f"runtime failure: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())

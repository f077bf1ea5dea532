"""Command line front end: ``mfrac gen-weight|eval|check-class|verify|report``.

Every command reads a JSON config, validates it against :data:`SCHEMA`
(unknown keys are rejected) and writes sorted-key JSON.  Flags override
config keys; overrides are recorded in the ``provenance`` block.  Runtimes go
to a sidecar ``.log`` file next to ``--out`` so outputs stay byte-stable.

Exit codes: 0 pass, 1 fail, 2 hypotheses unmet or invalid input, 3 cost cap.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import _backend, generators
from .errors import CostCapExceeded, MfracError
from .exponents import ExponentConfig
from .grid import CubeFamily, GridFunction, lp_norm
from .operators import KINDS, OperatorSpec
from . import weights as W
from .verify import Scenario, SuiteResult, suite

EXIT_PASS, EXIT_FAIL, EXIT_UNMET, EXIT_COST = 0, 1, 2, 3
COMMANDS = ("gen-weight", "eval", "check-class", "verify", "report")
CONDITIONS = ("ap_vector", "apq_vector", "ap", "ainf", "rd", "power_bump", "twc", "strong_twc",
              "trace", "strong_one_weight")

_spec = {"type": "object"}  # generator specs are checked by the generators module
_exponents = {
    "type": "object",
    "additionalProperties": False,
    "required": ["p", "q"],
    "properties": {
        "n": {"type": "integer", "minimum": 1}, "m": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "p": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "q": {"type": "number"},
        "alpha": {"anyOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}}]},
    },
}
_family = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["default", "dyadic", "grid_aligned", "shifted_dyadic"]},
        "shifts": {"type": "array"},
        "max_side": {"type": "integer", "minimum": 1},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "grid": {"type": "object", "additionalProperties": False,
                 "properties": {"n": {"type": "integer", "minimum": 1, "maximum": 4},
                                "level": {"type": "integer", "minimum": 0, "maximum": 14}}},
        "exponents": _exponents,
        "operator": {"type": "object", "additionalProperties": False, "required": ["kind"],
                     "properties": {"kind": {"enum": list(KINDS)},
                                    "k_max": {"type": "integer"},
                                    "depth": {"type": "integer", "minimum": 0},
                                    "distance": {"enum": ["torus", "euclidean"]},
                                    "cost_cap": {"type": "number"}}},
        "weight": _spec,
        "weights": {"type": "object", "additionalProperties": False,
                    "properties": {"u": _spec, "w": {"type": "array", "items": _spec},
                                   "v": _spec, "rho": _spec}},
        "inputs": {"type": "array", "items": _spec},
        "family": _family,
        "condition": {"type": "object", "additionalProperties": False, "required": ["kind"],
                      "properties": {"kind": {"enum": list(CONDITIONS)},
                                     "r": {"type": "number"}, "variant": {"enum": [1, 2]},
                                     "printed": {"type": "boolean"},
                                     "dyadic": {"type": "boolean"},
                                     "strict": {"type": "boolean"}}},
        "theorem": {"type": "string"},
        "scenario": {"type": "object"},
        "scenario_path": {"type": "string"},
        "trials": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer"},
        "threads": {"type": "integer", "minimum": 1},
        "results": {"type": "array", "items": {"type": "string"}},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"path": {"type": "string"}, "csv": {"type": "boolean"}}},
    },
}


class ConfigError(MfracError, ValueError):
    """The config file does not match the schema or misses a required section."""


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def load_config(path, overrides):
    """Read, override and validate a config; returns ``(config, provenance)``."""
    raw = Path(path).read_bytes()
    try:
        cfg = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config rejected: {exc.message}") from exc
    cfg = copy.deepcopy(cfg)
    applied = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "level":
            cfg.setdefault("grid", {})["level"] = value
        elif key == "out":
            cfg.setdefault("output", {})["path"] = value
        else:
            cfg[key] = value
        # thread count and output location never change results; they are
        # left out of the provenance so outputs compare byte for byte
        if key not in ("threads", "out"):
            applied[key] = value
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"override rejected: {exc.message}") from exc
    prov = {"config": Path(path).name, "config_sha256": hashlib.sha256(raw).hexdigest(),
            "overrides": applied}
    return cfg, prov


def _need(cfg, *keys):
    for key in keys:
        if key not in cfg:
            raise ConfigError(f"config needs a '{key}' section for this command")


def _grid(cfg):
    grid = cfg.get("grid", {})
    if "level" not in grid:
        raise ConfigError("config needs grid.level")
    return int(grid.get("n", 1)), int(grid["level"])


def _exponents(cfg):
    d = dict(cfg["exponents"])
    if "n" not in d and "grid" in cfg:
        d["n"] = cfg["grid"].get("n", 1)
    return ExponentConfig.from_dict(d)


def _family(cfg, n, level):
    return CubeFamily.from_dict(cfg.get("family", {"kind": "default"}), level, n)


def _write(text, out, base_dir=None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _sidecar(out, command, started):
    if out is None:
        return
    stamp = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    runtime = (time.perf_counter() - started) * 1e3
    with open(str(out) + ".log", "a", encoding="utf-8") as fh:
        fh.write(f"{stamp} {command} runtime_ms={runtime:.1f} backend={_backend.BACKEND} "
                 f"threads={_backend.get_threads()}\n")


# ---------------------------------------------------------------- commands


def cmd_gen_weight(cfg, prov, base):
    _need(cfg, "weight")
    n, level = _grid(cfg)
    g = generators.generate(cfg["weight"], n, level, base)
    out = cfg.get("output", {}).get("path")
    if out is not None and out.endswith(".csv"):
        _write(g.to_csv(), out)
    else:
        _write(_dump(g.to_dict()), out)
    return EXIT_PASS, out


def cmd_eval(cfg, prov, base):
    _need(cfg, "exponents", "operator", "inputs")
    n, level = _grid(cfg)
    exps = _exponents(cfg)
    dim = exps.k * exps.n
    fs = [generators.generate(s, dim, level, base) for s in cfg["inputs"]]
    op_cfg = cfg["operator"]
    kind = op_cfg["kind"]
    fam = _family(cfg, exps.n, level)
    op = OperatorSpec(kind, exps, [fam] * exps.k, op_cfg.get("k_max"), op_cfg.get("depth", 4),
                      op_cfg.get("distance", "torus"), op_cfg.get("cost_cap", 10 ** 9))
    out = op(fs)
    summary = {"min": float(out.values.min()), "max": float(out.values.max()),
               "l1": lp_norm(out, 1), "l2": lp_norm(out, 2), "linf": float(np.abs(out.values).max()),
               "operator": op.to_dict(), "provenance": prov}
    if kind in ("MFM", "MFM_DYADIC") and exps.n == 1:
        ref = OperatorSpec("MFM_DYADIC", exps)(fs).values
        ga = OperatorSpec("MFM", exps, [CubeFamily.grid_aligned(level)])(fs).values
        summary["dyadic_le_grid_aligned"] = bool(np.all(ref <= ga))
    path = cfg.get("output", {}).get("path")
    if path is not None:
        if path.endswith(".csv"):
            Path(path).write_text(out.to_csv(), encoding="utf-8")
        else:
            Path(path).write_text(_dump(out.to_dict()), encoding="utf-8")
        _write(_dump(summary), path + ".summary.json")
    sys.stdout.write(_dump(summary))
    return EXIT_PASS, path


def cmd_check_class(cfg, prov, base):
    _need(cfg, "condition")
    n, level = _grid(cfg)
    cond = cfg["condition"]
    kind = cond["kind"]
    wspec = cfg.get("weights", {})
    exps = _exponents(cfg) if "exponents" in cfg else None
    k = exps.k if exps else 1
    dim = k * n
    fam = _family(cfg, n, level)
    fams = [fam] * k

    def gen(spec):
        return generators.generate(spec, dim, level, base)

    ws = [gen(s) for s in wspec.get("w", [])]
    u = gen(wspec["u"]) if "u" in wspec else GridFunction.constant(dim, level)
    if kind in ("ap_vector", "apq_vector", "ap", "power_bump", "twc", "strong_twc",
                "strong_one_weight", "trace") and exps is None:
        raise ConfigError(f"condition {kind} needs exponents")
    if kind in ("ap_vector", "apq_vector", "ap", "power_bump", "twc", "strong_twc",
                "strong_one_weight") and not ws:
        raise ConfigError(f"condition {kind} needs weights.w")
    if kind == "ap_vector":
        rep = W.ap_vector_constant(ws, exps.p_list, fam)
    elif kind == "apq_vector":
        rep = W.apq_vector_constant(ws, exps.p_list, exps.q, fam)
    elif kind == "ap":
        rep = W.ap_constant(ws[0], exps.p_list[0], fam)
    elif kind == "ainf":
        rep = W.ainf_surrogate(ws[0] if ws else u, fam)
    elif kind == "rd":
        target = gen(wspec["rho"]) if "rho" in wspec else (ws[0] if ws else u)
        rep = W.rd_constant(target, cond.get("dyadic", True))
    elif kind == "power_bump":
        rep = W.power_bump_constant(u, ws, exps, cond.get("r", 1.5), cond.get("variant", 1), fam,
                                    cond.get("printed", True))
    elif kind == "twc":
        rep = W.twc_constant(u, ws, exps, fam, cond.get("strict", True))
    elif kind == "strong_twc":
        rep = W.strong_twc_constant(u, ws, exps, fams, cond.get("strict", True))
    elif kind == "trace":
        rep = W.trace_constant(u, exps, fams)
    else:
        rep = W.strong_one_weight_constant(ws, exps, fams)
    d = rep.to_dict()
    d["provenance"] = prov
    out = cfg.get("output", {}).get("path")
    _write(_dump(d), out)
    return EXIT_PASS, out


def _scenario(cfg, base):
    if "scenario" in cfg:
        return Scenario.from_dict(cfg["scenario"], base)
    if "scenario_path" in cfg:
        path = Path(cfg["scenario_path"])
        if not path.is_absolute() and base is not None:
            path = Path(base) / path
        return Scenario.load(path)
    raise ConfigError("config needs 'scenario' or 'scenario_path'")


def cmd_verify(cfg, prov, base):
    sc = _scenario(cfg, base)
    level = cfg.get("grid", {}).get("level")
    theorem = cfg.get("theorem", sc.theorem)
    exps = _exponents(cfg) if "exponents" in cfg else None
    res = suite(theorem, sc, exps, int(cfg.get("seed", 0)), level, cfg.get("trials"))
    d = res.to_dict()
    d["provenance"] = prov
    out = cfg.get("output", {}).get("path")
    _write(_dump(d), out)
    code = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "hypotheses-unmet": EXIT_UNMET,
            "cost-cap": EXIT_COST}[res.verdict]
    return code, out


CSV_FIELDS = ("theorem", "scenario", "level", "seed", "condition", "estimated_norm", "kappa",
              "verdict")


def cmd_report(cfg, prov, base, as_csv=False):
    _need(cfg, "results")
    rows = []
    for p in cfg["results"]:
        path = Path(p)
        if not path.is_absolute() and base is not None:
            path = Path(base) / path
        rows.append(json.loads(path.read_text(encoding="utf-8")))
    out = cfg.get("output", {}).get("path")
    as_csv = as_csv or cfg.get("output", {}).get("csv", False)
    if as_csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in rows:
            c = r.get("constants", {})
            writer.writerow([r.get("theorem"), r.get("scenario"), r.get("level"), r.get("seed"),
                             c.get("condition"), c.get("estimated_norm"), c.get("kappa"),
                             r.get("verdict")])
        _write(buf.getvalue(), out)
    else:
        verdicts = [r.get("verdict") for r in rows]
        _write(_dump({"results": rows, "provenance": prov,
                      "summary": {v: verdicts.count(v) for v in sorted(set(verdicts))}}), out)
    bad = [r for r in rows if r.get("verdict") == "fail"]
    return (EXIT_FAIL if bad else EXIT_PASS), out


# ---------------------------------------------------------------- entry point


def build_parser():
    parser = argparse.ArgumentParser(prog="mfrac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--level", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--out", help="output path (stdout when omitted)")
        if name == "report":
            p.add_argument("--csv", action="store_true", help="flatten results to CSV")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    overrides = {"seed": args.seed, "level": args.level, "threads": args.threads, "out": args.out}
    try:
        cfg, prov = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"mfrac: {exc}", file=sys.stderr)
        return EXIT_UNMET
    prov["command"] = args.command
    if "threads" in cfg:
        _backend.set_threads(cfg["threads"])
    base = str(Path(args.config).resolve().parent)
    handlers = {"gen-weight": cmd_gen_weight, "eval": cmd_eval, "check-class": cmd_check_class,
                "verify": cmd_verify}
    try:
        if args.command == "report":
            code, out = cmd_report(cfg, prov, base, args.csv)
        else:
            code, out = handlers[args.command](cfg, prov, base)
    except CostCapExceeded as exc:
        print(f"mfrac: refused: {exc}", file=sys.stderr)
        return EXIT_COST
    except (MfracError, ValueError, KeyError, OSError) as exc:
        print(f"mfrac: {exc}", file=sys.stderr)
        return EXIT_UNMET
    _sidecar(out, args.command, started)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command line entry point: ``verifier run`` and ``verifier describe``."""
from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .report import Record, Report
from .suites import CSV_HEADERS, REGISTRY, SUITES, Check, Outcome, default_params

log = logging.getLogger("verifier")

TOP_KEYS = {"suites", "seed", "workers", "format", "out"} | set(SUITES)


class ConfigError(ValueError):
    pass


def default_config() -> Dict[str, Any]:
    cfg = {"suites": list(SUITES), "seed": 0, "workers": 1, "format": "both", "out": "verifier-out"}
    cfg.update(default_params())
    return cfg


def _same_kind(default, value) -> bool:
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, list):
        return isinstance(value, list) and all(_same_kind(default[0], v) for v in value) if default else isinstance(value, list)
    return isinstance(value, type(default))


def _merge_suite(name: str, base: Dict[str, Any], over: Any) -> None:
    if not isinstance(over, dict):
        raise ConfigError(f"{name}: expected an object")
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"{name}.{k}: unknown key")
        if k == "potential":
            from .scattering import PotentialSpec
            try:
                V = PotentialSpec.from_config(v)
            except Exception as e:
                raise ConfigError(f"{name}.potential: {e}") from None
            # the Q_bc estimates lean on a non-increasing V
            if name == "symmetrization" and not V.is_nonincreasing():
                raise ConfigError(f"{name}.potential: must be non-increasing in r")
            base[k] = v
            continue
        if not _same_kind(base[k], v):
            raise ConfigError(f"{name}.{k}: expected {type(base[k]).__name__}, got {v!r}")
        if isinstance(base[k], list) and not v:
            raise ConfigError(f"{name}.{k}: must not be empty")
        base[k] = float(v) if isinstance(base[k], float) else v


def validate(raw: Dict[str, Any]) -> Dict[str, Any]:
    """Merge ``raw`` over the defaults; unknown keys and wrong types are errors."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = default_config()
    for k, v in raw.items():
        if k not in TOP_KEYS:
            raise ConfigError(f"{k}: unknown key")
        if k in SUITES:
            _merge_suite(k, cfg[k], v)
        else:
            cfg[k] = v
    suites = cfg["suites"]
    if not isinstance(suites, list) or not suites:
        raise ConfigError("suites: at least one suite is required")
    bad = [s for s in suites if s not in SUITES]
    if bad:
        raise ConfigError(f"suites: unknown suite(s) {bad}")
    if len(set(suites)) != len(suites):
        raise ConfigError("suites: duplicates")
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool) or cfg["seed"] < 0:
        raise ConfigError("seed: expected a nonnegative integer")
    if not isinstance(cfg["workers"], int) or cfg["workers"] < 1:
        raise ConfigError("workers: expected a positive integer")
    if cfg["format"] not in ("csv", "json", "both"):
        raise ConfigError("format: expected csv, json or both")
    if not isinstance(cfg["out"], str):
        raise ConfigError("out: expected a path string")
    _ranges(cfg)
    return cfg


def _ranges(cfg):
    P = cfg["poincare"]
    for key in ("gap_n", "calibration_n_d1", "calibration_n_d2", "kinetic_n"):
        if P[key] < 4:
            raise ConfigError(f"poincare.{key}: must be >= 4")
    if any(M < 1 for M in P["calibration_M"]) or P["kinetic_M"] < 3:
        raise ConfigError("poincare: subdivision counts out of range")
    if any(e <= 0 for e in P["calibration_eps"]) or any(a < 0 for a in P["kinetic_alpha"]):
        raise ConfigError("poincare: eps must be > 0 and alpha >= 0")
    G = cfg["graph"]
    if G["d"] not in (1, 2, 3) or any(M < 2 for M in G["M"]) or G["trials"] < 1:
        raise ConfigError("graph: need d in {1,2,3}, M >= 2, trials >= 1")
    S = cfg["symmetrization"]
    if not 0 < S["lambda"] <= 1 or S["order"] < 4 or S["max_mode"] < 0:
        raise ConfigError("symmetrization: parameters out of range")
    B = cfg["bogoliubov"]
    if not 0 < B["max_ratio"] < 1 or B["n_max"] < 2 or B["samples"] < 1:
        raise ConfigError("bogoliubov: need 0 < max_ratio < 1, n_max >= 2, samples >= 1")
    if cfg["budget"]["K"] < 1 or cfg["budget"]["kappa_steps"] < 2:
        raise ConfigError("budget: need K >= 1 and kappa_steps >= 2")


def apply_override(raw: Dict[str, Any], item: str) -> None:
    """``key=value`` or ``suite.key=value``; the value is parsed as JSON when possible."""
    if "=" not in item:
        raise ConfigError(f"--set {item!r}: expected key=value")
    key, text = item.split("=", 1)
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    parts = key.split(".")
    if len(parts) > 2 or not all(parts):
        raise ConfigError(f"--set {item!r}: key must be name or suite.name")
    if len(parts) == 2:
        raw.setdefault(parts[0], {})
        if not isinstance(raw[parts[0]], dict):
            raise ConfigError(f"--set {item!r}: {parts[0]} is not an object")
        raw[parts[0]][parts[1]] = value
    else:
        raw[key] = value


def load_config(path: Optional[str], sets: Sequence[str] = ()) -> Dict[str, Any]:
    raw: Dict[str, Any] = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"config: {e}") from None
    raw = copy.deepcopy(raw)
    for s in sets:
        apply_override(raw, s)
    return validate(raw)


def _run_one(idx: int, params: Dict[str, Any], seed: int) -> Record:
    c: Check = REGISTRY[idx]
    try:
        out: Outcome = c.fn(params, seed)
        rec = Record(c.suite, c.name, c.anchor, out.params, out.measured, out.reference, out.tolerance,
                     out.verdict, out.diagnostics)
        rec._rows = out.rows  # carried back to the merge step
    except Exception as e:
        rec = Record(c.suite, c.name, c.anchor, {}, None, None, None, "fail",
                     f"{type(e).__name__}: {e}\n{traceback.format_exc(limit=3)}")
        rec._rows = []
    return rec


def run(cfg: Dict[str, Any]) -> Report:
    """Execute the requested suites; records come back in registry order regardless of ``workers``."""
    selected = [i for i, c in enumerate(REGISTRY) if c.suite in cfg["suites"]]
    seed = cfg["seed"]
    jobs = [(i, cfg[REGISTRY[i].suite], seed) for i in selected]
    if cfg["workers"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg["workers"]) as ex:
            records = list(ex.map(_run_one, *zip(*jobs)))
    else:
        records = []
        for j in jobs:
            log.info("running %s.%s", REGISTRY[j[0]].suite, REGISTRY[j[0]].name)
            records.append(_run_one(*j))
    tables = {}
    for s in SUITES:
        if s in cfg["suites"]:
            rows = [row for r in records if r.suite == s for row in r._rows]
            tables[s] = (CSV_HEADERS[s], rows)
    echo = {k: v for k, v in cfg.items() if k not in ("out", "workers")}
    return Report(records, echo, seed, __version__, tables)


def describe(stream=None) -> List[str]:
    lines = [f"{c.suite}\t{c.name}\t{c.anchor}" for c in REGISTRY]
    stream = stream or sys.stdout
    for ln in lines:
        stream.write(ln + "\n")
    return lines


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="verifier", description="Numerical checks for multiscale Poincare and dilute Bose gas estimates.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run verification suites")
    r.add_argument("--config", help="JSON config file")
    r.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. poincare.kinetic_n=4096")
    r.add_argument("--out", help="output directory (overrides the config)")
    r.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("describe", help="list registered checks")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    if args.cmd == "describe":
        describe()
        return 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config, args.sets)
    except ConfigError as e:
        print(f"verifier: config error: {e}", file=sys.stderr)
        return 2
    if args.out:
        cfg["out"] = args.out
    rep = run(cfg)
    rep.write(cfg["out"], cfg["format"])
    for rec in rep.records:
        print(f"{rec.verdict.upper():4s}  {rec.suite}.{rec.check}")
    s = rep.summary
    print(f"{s['pass']} pass, {s['fail']} fail, {s['info']} info -> {cfg['out']}")
    return 0 if rep.ok else 1


if __name__ == "__main__":
    sys.exit(main())

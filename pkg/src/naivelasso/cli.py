"""Command-line front end.

Subcommands ``simulate-coverage``, ``simulate-power`` and ``audit-conditions``
run Monte Carlo studies; ``analyze`` and ``fit`` work on a user CSV whose
first column is the response. Configuration is a flat JSON document; flags
override file values, which override defaults. Every run writes its CSV
plus ``<out>.json`` holding the resolved configuration, library versions
and wall time. Errors are reported as one JSON line on stderr.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import itertools
import json
import math
import os
import platform
import sys
import time

import numpy as np
import scipy

from . import __version__
from ._kernels import BACKEND
from .errors import (ConfigInvalid, ConstantColumn, IoError, MalformedCsv, NaiveLassoError,
                     TooFewRows)
from .graphs import GRAPH_KINDS, GraphSpec
from .harness import (ExperimentSpec, default_beta, format_lambda_rule,
                      parse_lambda_rule, report_row, run_condition_study, run_experiment,
                      select_lambda, write_csv, COLUMNS)
from .inference import holm_adjust, naive_ci, naive_score_tests, ols_fit
from .lasso import fit_lasso
from .model import standardize
from .variance import scaled_lasso_sigma

COMMANDS = ("simulate-coverage", "simulate-power", "audit-conditions", "analyze", "fit")
MIN_ROWS = 10

_SIM_DEFAULTS = {
    "name": None, "graph": "scale_free", "rho": 0.2, "gamma": 5.0, "density": 0.05,
    "blocks": None, "intra": 0.3, "inter": 0.05, "beta_star": None,
    "lambda_rule": "sup", "reps": 100, "alpha": 0.05, "level": 0.95, "seed": 0,
    "threads": 1, "n_mc": 1000, "cv_folds": 10, "out": None, "sigma_eps": None,
}
_SIM_REQUIRED = ("n", "p", "snr")
_AUDIT_DEFAULTS = {"n": 1000, "reps": 200, "lambda_rule": "rate:10", "seed": 0, "threads": 1,
                   "alpha": 0.05, "out": None, "settings": None, "p": None, "qstar": None,
                   "threshold1": 0.999, "threshold2": 1.0}
_DATA_DEFAULTS = {"input": None, "lambda_rule": "1se", "alpha": 0.05, "level": 0.95,
                  "fwer": False, "seed": 0, "threads": 1, "out": None}
DEFAULTS = {"simulate-coverage": _SIM_DEFAULTS, "simulate-power": _SIM_DEFAULTS,
            "audit-conditions": _AUDIT_DEFAULTS, "analyze": _DATA_DEFAULTS, "fit": _DATA_DEFAULTS}
# keys that may hold a list to sweep a grid of settings
GRID_KEYS = ("rho", "n", "p", "snr", "lambda_rule")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigInvalid(message)


def build_parser():
    parser = _Parser(prog="naivelasso", description="Naive inference after lasso selection.")
    parser.add_argument("--version", action="version", version=f"naivelasso {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--threads", type=int, help="0 picks the CPU count")
        p.add_argument("--alpha", type=float)
        p.add_argument("--lambda-rule", dest="lambda_rule",
                       help="1se, sup, min, fixed:VALUE or rate:C")
        if name.startswith("simulate") or name == "audit-conditions":
            p.add_argument("--reps", type=int)
        if name == "audit-conditions":
            p.add_argument("--threshold1", type=float, help="Condition-T part-one bound")
            p.add_argument("--threshold2", type=float, help="Condition-T part-two bound")
        else:
            p.add_argument("input", nargs="?", help="CSV with the response in column 1")
            p.add_argument("--fwer", action="store_true", default=None,
                           help="Holm-adjusted rejections (analyze)")
    return parser


def _load_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as err:
        raise IoError(f"cannot read config {path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise ConfigInvalid(f"config {path} is not valid JSON: {err.msg} at line {err.lineno}") from None
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a JSON object")
    if isinstance(data.get("config"), dict) and "versions" in data:
        # a run sidecar: replay its resolved configuration
        data = data["config"]
    return data


def resolve_config(command, args=None, file_config=None):
    """Merge defaults, file values and flag values (later wins)."""
    defaults = DEFAULTS[command]
    cfg = dict(defaults)
    for key, value in (file_config or {}).items():
        if key == "command":
            continue
        if key not in defaults and key not in _SIM_REQUIRED:
            raise ConfigInvalid(f"unknown config field {key!r}")
        cfg[key] = value
    if args is not None:
        for key in ("seed", "out", "threads", "alpha", "lambda_rule", "reps", "input", "fwer",
                    "threshold1", "threshold2"):
            value = getattr(args, key, None)
            if value is not None:
                cfg[key] = value
    _validate_config(command, cfg)
    return cfg


def _require(cfg, key):
    if cfg.get(key) is None:
        raise ConfigInvalid(f"missing required field {key!r}")


def _check_number(cfg, key, kind=float, low=None, high=None, open_low=False):
    values = cfg[key] if isinstance(cfg[key], list) else [cfg[key]]
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and int(v) != v):
            raise ConfigInvalid(f"field {key!r} must be {'an integer' if kind is int else 'a number'}")
        if low is not None and (v <= low if open_low else v < low):
            raise ConfigInvalid(f"field {key!r} out of range: {v}")
        if high is not None and v > high:
            raise ConfigInvalid(f"field {key!r} out of range: {v}")


def _validate_config(command, cfg):
    if not 0 < float(cfg.get("alpha", 0.05)) < 1:
        raise ConfigInvalid("field 'alpha' must lie in (0, 1)")
    _check_number(cfg, "seed", int, 0, 2 ** 64 - 1)
    _check_number(cfg, "threads", int, 0)
    rules = cfg["lambda_rule"] if isinstance(cfg["lambda_rule"], list) else [cfg["lambda_rule"]]
    for rule in rules:
        try:
            parse_lambda_rule(rule)
        except ValueError as err:
            raise ConfigInvalid(str(err)) from None
    if command.startswith("simulate"):
        for key in _SIM_REQUIRED:
            _require(cfg, key)
        _check_number(cfg, "n", int, 2)
        _check_number(cfg, "p", int, 1)
        _check_number(cfg, "snr", float, 0, open_low=True)
        _check_number(cfg, "rho", float)
        _check_number(cfg, "reps", int, 1)
        if cfg["graph"] not in GRAPH_KINDS:
            raise ConfigInvalid(f"field 'graph' must be one of {GRAPH_KINDS}")
    elif command == "audit-conditions":
        if cfg["settings"] is None:
            _require(cfg, "p")
            _require(cfg, "qstar")
        _check_number(cfg, "reps", int, 1)
        _check_number(cfg, "n", int, 2)
        _check_number(cfg, "threshold1", float, 0, open_low=True)
        _check_number(cfg, "threshold2", float, 0, open_low=True)
    else:
        _require(cfg, "input")
        if not 0 < float(cfg["level"]) < 1:
            raise ConfigInvalid("field 'level' must lie in (0, 1)")


def _threads(cfg):
    t = int(cfg["threads"])
    return (os.cpu_count() or 1) if t == 0 else t


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _graph_params(cfg, p):
    kind = cfg["graph"]
    if kind == "scale_free":
        return {"gamma": float(cfg["gamma"]), "density": float(cfg["density"])}
    if kind == "erdos_renyi":
        return {"density": float(cfg["density"])}
    params = {"intra": float(cfg["intra"]), "inter": float(cfg["inter"])}
    if cfg["blocks"] is not None:
        params["blocks"] = tuple(int(b) for b in cfg["blocks"])
    return params


def simulation_specs(command, cfg):
    """Expand a resolved simulate config into one ExperimentSpec per grid point."""
    kind = "coverage" if command == "simulate-coverage" else "power"
    specs = []
    grid = [_as_list(cfg[k]) for k in GRID_KEYS]
    for rho, n, p, snr, rule in itertools.product(*grid):
        try:
            graph = GraphSpec(cfg["graph"], int(p), _graph_params(cfg, int(p)))
        except ValueError as err:
            raise ConfigInvalid(str(err)) from None
        beta = np.asarray(cfg["beta_star"], dtype=float) if cfg["beta_star"] is not None \
            else default_beta(kind, int(p))
        name = cfg["name"] or kind
        try:
            specs.append(ExperimentSpec(graph, float(rho), int(n), float(snr), beta,
                                        format_lambda_rule(rule), int(cfg["reps"]),
                                        float(cfg["alpha"]), int(cfg["seed"]), float(cfg["level"]),
                                        int(cfg["cv_folds"]), n_mc=int(cfg["n_mc"]), name=name,
                                        sigma_eps=cfg["sigma_eps"]))
        except ValueError as err:
            raise ConfigInvalid(str(err)) from None
    return kind, specs


def run_simulation(command, cfg):
    kind, specs = simulation_specs(command, cfg)
    threads = _threads(cfg)
    reports = [run_experiment(spec, kind, threads=threads) for spec in specs]
    return COLUMNS[kind], [report_row(r) for r in reports], reports


def run_audit(cfg):
    settings = cfg["settings"] or [[p, q] for p, q in zip(_as_list(cfg["p"]), _as_list(cfg["qstar"]))]
    rows, reports = [], []
    for pair in settings:
        p, q = (int(v) for v in pair)
        if not 1 <= q <= p:
            raise ConfigInvalid(f"qstar must lie in [1, p], got (p={p}, qstar={q})")
        r = run_condition_study(p, q, int(cfg["reps"]), int(cfg["n"]), cfg["lambda_rule"],
                                int(cfg["seed"]), _threads(cfg),
                                threshold1=float(cfg["threshold1"]),
                                threshold2=float(cfg["threshold2"]))
        row = report_row(r)
        row.update(p=p, qstar=q)
        rows.append(row)
        reports.append(r)
    return COLUMNS["conditions"], rows, reports


def read_dataset(path):
    """Parse a numeric CSV; returns ``(names, y, X)`` with the response first."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as err:
        raise IoError(f"cannot read {path}: {err.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(1, "file is empty") from None
        except (csv.Error, UnicodeDecodeError) as err:
            raise MalformedCsv(1, str(err)) from None
        if len(header) < 2:
            raise MalformedCsv(1, "need a response column and at least one predictor")
        rows = []
        line = 1
        try:
            for row in reader:
                line = reader.line_num
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise MalformedCsv(line, f"expected {len(header)} fields, found {len(row)}")
                try:
                    vals = [float(c) for c in row]
                except ValueError:
                    bad = next(c for c in row if not _is_float(c))
                    raise MalformedCsv(line, f"non-numeric value {bad!r}") from None
                if not all(math.isfinite(v) for v in vals):
                    raise MalformedCsv(line, "non-finite value")
                rows.append(vals)
        except (csv.Error, UnicodeDecodeError) as err:
            raise MalformedCsv(line + 1, str(err)) from None
    if len(rows) < MIN_ROWS:
        raise TooFewRows(f"need at least {MIN_ROWS} data rows, found {len(rows)}")
    data = np.array(rows)
    return [h.strip() for h in header], data[:, 0], data[:, 1:]


def _is_float(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _prepare(cfg):
    names, y_raw, X_raw = read_dataset(cfg["input"])
    try:
        design, y, _ = standardize(X_raw, y_raw)
    except ConstantColumn as err:
        raise ConstantColumn(names[1 + int(err.column)]) from None
    rng = np.random.default_rng(int(cfg["seed"]))
    sigma = scaled_lasso_sigma(design, y)
    lam = select_lambda(cfg["lambda_rule"], design, y, sigma.sigma, rng)
    fit = fit_lasso(design, y, lam)
    return names[1:], design, y, sigma, lam, fit


ANALYZE_COLUMNS = ["variable", "score_stat", "p_value", "p_holm", "reject", "selected_by_lasso"]
FIT_COLUMNS = ["variable", "lasso_coef", "selected", "ols_coef", "se", "lower", "upper"]


def analyze_dataset(input_path, lambda_rule="1se", alpha=0.05, fwer=False, seed=0):
    """Naive score tests for every predictor of a CSV dataset.

    Returns ``(rows, extra)``: one dict per predictor keyed by
    ``ANALYZE_COLUMNS``, and a dict with the chosen lambda, sigma-hat and
    selected variable names. ``reject`` is the Holm decision at ``alpha``
    when ``fwer`` is true, otherwise ``p_value < alpha``.
    """
    cfg = {"input": input_path, "lambda_rule": lambda_rule, "seed": seed}
    names, design, y, sigma, lam, fit = _prepare(cfg)
    tests = naive_score_tests(design, y, fit.active_set, sigma)
    pvals = np.array([t.p_value for t in tests])
    adjusted, holm_reject = holm_adjust(pvals, alpha)
    reject = holm_reject if fwer else pvals < alpha
    rows = [{"variable": names[t.j], "score_stat": t.statistic, "p_value": t.p_value,
             "p_holm": adjusted[t.j], "reject": bool(reject[t.j]),
             "selected_by_lasso": t.j in fit.active_set} for t in tests]
    extra = {"lambda": lam, "sigma_hat": sigma.sigma, "selected": [names[j] for j in fit.active_set]}
    return rows, extra


def run_analyze(cfg):
    rows, extra = analyze_dataset(cfg["input"], cfg["lambda_rule"], float(cfg["alpha"]),
                                  bool(cfg["fwer"]), int(cfg["seed"]))
    return ANALYZE_COLUMNS, rows, extra


def run_fit(cfg):
    names, design, y, sigma, lam, fit = _prepare(cfg)
    cis = {}
    if fit.active_set:
        for ci in naive_ci(ols_fit(design, y, fit.active_set), sigma, float(cfg["level"])):
            cis[ci.j] = ci
    rows = []
    for j, name in enumerate(names):
        ci = cis.get(j)
        rows.append({"variable": name, "lasso_coef": fit.beta[j], "selected": ci is not None,
                     "ols_coef": ci.estimate if ci else None, "se": ci.se if ci else None,
                     "lower": ci.lower if ci else None, "upper": ci.upper if ci else None})
    extra = {"lambda": lam, "sigma_hat": sigma.sigma, "selected": [names[j] for j in fit.active_set]}
    return FIT_COLUMNS, rows, extra


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def versions():
    return {"naivelasso": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version(), "kernel_backend": BACKEND}


def run_config(command, cfg):
    """Execute a resolved configuration; writes the CSV and its sidecar.

    Returns the output path.
    """
    started = time.perf_counter()
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    out = cfg["out"] or f"{command}.csv"
    extra = {}
    if command.startswith("simulate"):
        columns, rows, reports = run_simulation(command, cfg)
        extra["reports"] = [{"meta": r.meta, "n_intervals": r.n_intervals,
                             "not_converged": r.not_converged} for r in reports]
    elif command == "audit-conditions":
        columns, rows, reports = run_audit(cfg)
        extra["reports"] = [{"meta": r.meta, "not_converged": r.not_converged} for r in reports]
    elif command == "analyze":
        columns, rows, extra = run_analyze(cfg)
    else:
        columns, rows, extra = run_fit(cfg)
    try:
        write_csv(out, columns, rows)
        sidecar = {"command": command, "config": {**cfg, "command": command},
                   "versions": versions(), "started_at": stamp,
                   "wall_time_s": time.perf_counter() - started, "results": extra}
        with open(out + ".json", "w", encoding="utf-8") as fh:
            json.dump(_jsonable(sidecar), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as err:
        raise IoError(f"cannot write {out}: {err.strerror}") from None
    return out


def _report_error(err, code):
    line = {"error": type(err).__name__, "exit_code": code, "message": str(err).replace("\n", " ")}
    print(json.dumps(line), file=sys.stderr)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        file_cfg = _load_config_file(args.config) if args.config else None
        if file_cfg and file_cfg.get("command") not in (None, args.command):
            raise ConfigInvalid(f"config was written for {file_cfg['command']!r}, not {args.command!r}")
        cfg = resolve_config(args.command, args, file_cfg)
        run_config(args.command, cfg)
    except NaiveLassoError as err:
        _report_error(err, err.exit_code)
        return err.exit_code
    except (ArithmeticError, np.linalg.LinAlgError) as err:
        _report_error(err, 4)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())

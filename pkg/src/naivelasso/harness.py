"""Replicated simulation experiments: coverage, power and condition audits.

Randomness is derived from a single 64-bit master seed. The graph stream
and every replicate stream are separate Philox generators keyed by
``SeedSequence(seed, spawn_key=...)``, so results do not depend on how
replicates are scheduled across threads.
"""
from __future__ import annotations

import csv
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .conditions import T_PART1_THRESHOLD, T_PART2_THRESHOLD, condition_t_check, irrepresentable_check
from .errors import EmptyInput, NaiveLassoError, NotPositiveDefinite, ZeroSignal
from .graphs import (CovarianceModel, GraphSpec, covariance_from_graph, generate_graph,
                     sample_wishart_correlation)
from .inference import naive_ci, naive_score_tests, ols_fit
from .lasso import SolverOptions, fit_lasso
from .model import DesignMatrix, SelectedSet, standardize, submodel_target
from .tuning import cross_validate, lambda_grid, lambda_sup
from .variance import scaled_lasso_sigma

KINDS = ("coverage", "power", "conditions")
GRAPH_STREAM = 0
REPLICATE_STREAM = 1
MAX_GRAPH_ATTEMPTS = 100

COVERAGE_COLUMNS = ["experiment", "graph", "rho", "n", "p", "snr", "lambda_rule", "replicates",
                    "coverage", "avg_length", "determinism", "empty_sets", "failures", "seed"]
POWER_COLUMNS = ["experiment", "graph", "rho", "n", "p", "snr", "lambda_rule", "replicates",
                 "power_strong", "power_weak", "type1", "failures", "seed"]
CONDITIONS_COLUMNS = ["p", "qstar", "replicates", "prob_t_part1", "prob_t_part2",
                      "prob_irrepresentable", "seed"]
COLUMNS = {"coverage": COVERAGE_COLUMNS, "power": POWER_COLUMNS, "conditions": CONDITIONS_COLUMNS}


def default_beta(kind, p, qstar=None):
    """Coefficient patterns of the three experiment families."""
    beta = np.zeros(p)
    if kind == "coverage":
        beta[:1] = 1.0
        beta[1:5] = 0.1
    elif kind == "power":
        beta[:3] = 1.0
        beta[3:10] = 0.1
    elif kind == "conditions":
        q = max(1, p // 8) if qstar is None else int(qstar)
        beta[:q] = 1.0
    else:
        raise ValueError(f"unknown experiment kind {kind!r}")
    return beta


def parse_lambda_rule(rule):
    """Normalise a rule string to ``(name, value)``.

    Accepted: ``1se``/``lambda_1se``, ``min``/``lambda_min``, ``sup``/
    ``lambda_sup``, ``fixed:VALUE`` and ``rate:C`` (``C * sqrt(log p / n)``).
    """
    if isinstance(rule, tuple):
        return rule
    text = str(rule).strip().lower()
    aliases = {"1se": "lambda_1se", "lambda_1se": "lambda_1se", "min": "lambda_min",
               "lambda_min": "lambda_min", "sup": "lambda_sup", "lambda_sup": "lambda_sup"}
    if text in aliases:
        return aliases[text], None
    for prefix in ("fixed", "rate"):
        if text.startswith(prefix + ":") or text.startswith(prefix + "("):
            raw = text[len(prefix) + 1:].rstrip(")")
            try:
                value = float(raw)
            except ValueError:
                raise ValueError(f"bad lambda rule {rule!r}") from None
            if not value > 0:
                raise ValueError(f"lambda rule value must be positive in {rule!r}")
            return prefix, value
    raise ValueError(f"unknown lambda rule {rule!r}")


def format_lambda_rule(rule):
    name, value = parse_lambda_rule(rule)
    return name if value is None else f"{name}:{value:g}"


@dataclass(frozen=True)
class ExperimentSpec:
    graph: GraphSpec
    rho: float
    n: int
    snr: float
    beta_star: np.ndarray
    lambda_rule: str = "lambda_sup"
    replicates: int = 100
    alpha: float = 0.05
    seed: int = 0
    level: float = 0.95
    cv_folds: int = 10
    n_lambda: int = 100
    lambda_ratio: float = 1e-3
    n_mc: int = 1000
    strong_threshold: float = 0.5
    name: str = "experiment"
    # noise level used instead of the SNR calibration (needed when beta_star = 0)
    sigma_eps: float | None = None

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not self.snr > 0:
            raise ValueError("snr must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        object.__setattr__(self, "beta_star", np.asarray(self.beta_star, dtype=np.float64))
        if self.beta_star.size != self.graph.p:
            raise ValueError("beta_star length must equal p")
        parse_lambda_rule(self.lambda_rule)
        if self.sigma_eps is not None and not self.sigma_eps > 0:
            raise ValueError("sigma_eps must be positive")

    @property
    def p(self):
        return self.graph.p


@dataclass
class MetricsReport:
    kind: str
    replicates: int
    coverage: float = math.nan
    avg_length: float = math.nan
    determinism: float = math.nan
    power_strong: float = math.nan
    power_weak: float = math.nan
    type1: float = math.nan
    prob_t1: float = math.nan
    prob_t2: float = math.nan
    prob_irrep: float = math.nan
    empty_sets: int = 0
    failures: int = 0
    n_intervals: int = 0
    not_converged: int = 0
    meta: dict = field(default_factory=dict)


def _generator(seed, *key):
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def replicate_rng(seed, b):
    return _generator(seed, REPLICATE_STREAM, b)


def build_covariance(graph: GraphSpec, rho, seed):
    """Generate a graph and its covariance, reseeding on non-PD adjacency."""
    for attempt in range(MAX_GRAPH_ATTEMPTS):
        edges = generate_graph(graph, rng=_generator(seed, GRAPH_STREAM, attempt))
        try:
            model = covariance_from_graph(edges, graph.p, rho)
        except NotPositiveDefinite:
            continue
        return model, attempt
    raise NotPositiveDefinite(f"no positive-definite adjacency in {MAX_GRAPH_ATTEMPTS} attempts")


def sample_design(model: CovarianceModel, n, seed=0, rng=None):
    """Rows ``N(0, Sigma)`` via the Cholesky factor, then standardized."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(seed) if rng is None else rng
    L = np.linalg.cholesky(model.Sigma)
    raw = rng.standard_normal((n, model.Sigma.shape[0])) @ L.T
    design, _, _ = standardize(raw)
    return design, raw


def sigma_eps_from_snr(Sigma, beta_star, snr):
    """``sqrt(beta' Sigma beta / snr)``."""
    Sigma = getattr(Sigma, "Sigma", Sigma)
    beta_star = np.asarray(beta_star, dtype=np.float64)
    signal = float(beta_star @ np.asarray(Sigma) @ beta_star)
    if not signal > 0:
        raise ZeroSignal("beta' Sigma beta must be positive to calibrate an SNR")
    if not snr > 0:
        raise ValueError("snr must be positive")
    return math.sqrt(signal / snr)


def select_lambda(rule, design, y, sigma_hat, rng, spec: ExperimentSpec | None = None, options=None):
    """Apply a tuning rule; returns the chosen lambda."""
    name, value = parse_lambda_rule(rule)
    n, p = design.X.shape
    if name == "fixed":
        return value
    if name == "rate":
        return value * math.sqrt(math.log(p) / n)
    if name == "lambda_sup":
        n_mc = spec.n_mc if spec else 1000
        return lambda_sup(design, sigma_hat, n_mc=n_mc, rng=rng)
    k = spec.cv_folds if spec else 10
    grid = lambda_grid(design, y, spec.n_lambda if spec else 100, spec.lambda_ratio if spec else 1e-3)
    cv = cross_validate(design, y, k=k, grid=grid, seed=int(rng.integers(2 ** 63)), options=options)
    return cv.lambda_1se if name == "lambda_1se" else cv.lambda_min


def _simulate_data(spec, model, sigma_eps, rng):
    design, _ = sample_design(model, spec.n, rng=rng)
    y = design.X @ spec.beta_star + sigma_eps * rng.standard_normal(spec.n)
    return design, y - y.mean()


def _coverage_replicate(spec, model, sigma_eps, b, options):
    rng = replicate_rng(spec.seed, b)
    design, y = _simulate_data(spec, model, sigma_eps, rng)
    sig = scaled_lasso_sigma(design, y, options=options)
    lam = select_lambda(spec.lambda_rule, design, y, sig.sigma, rng, spec, options)
    fit = fit_lasso(design, y, lam, options)
    out = {"selected": fit.active_set.indices, "converged": fit.converged, "lam": lam,
           "sigma_hat": sig.sigma}
    if not fit.active_set:
        return out
    ols = ols_fit(design, y, fit.active_set)
    cis = naive_ci(ols, sig, spec.level)
    target = submodel_target(design.gram(), spec.beta_star, fit.active_set)
    out["contained"] = [ci.contains(t) for ci, t in zip(cis, target)]
    out["lengths"] = [ci.length for ci in cis]
    return out


def _power_replicate(spec, model, sigma_eps, b, options):
    rng = replicate_rng(spec.seed, b)
    design, y = _simulate_data(spec, model, sigma_eps, rng)
    sig = scaled_lasso_sigma(design, y, options=options)
    lam = select_lambda(spec.lambda_rule, design, y, sig.sigma, rng, spec, options)
    fit = fit_lasso(design, y, lam, options)
    tests = naive_score_tests(design, y, fit.active_set, sig)
    pvals = np.array([t.p_value for t in tests])
    return {"selected": fit.active_set.indices, "converged": fit.converged, "lam": lam,
            "reject": pvals < spec.alpha}


def _conditions_replicate(spec, b, options, threshold1, threshold2):
    rng = replicate_rng(spec.seed, b)
    p, n = spec.p, spec.n
    for _ in range(MAX_GRAPH_ATTEMPTS):
        try:
            model = sample_wishart_correlation(p, rng=rng)
            break
        except NotPositiveDefinite:
            continue
    else:
        raise NotPositiveDefinite("Wishart sampling kept failing")
    design, _ = sample_design(model, n, rng=rng)
    a_star = SelectedSet.support(spec.beta_star)
    X = design.X
    lam = select_lambda(spec.lambda_rule, design, X @ spec.beta_star, 0.0, rng, spec, options)
    # all signals equal one, so the strong set is the true support
    t = condition_t_check(design, spec.beta_star, lam, threshold1, threshold2,
                          s_star=a_star, options=options)
    _, irr = irrepresentable_check(design, a_star, np.sign(spec.beta_star[a_star.as_array()]))
    return {"t1": t.t_part1_holds, "t2": t.t_part2_holds, "irr": irr, "converged": t.converged,
            "lam": lam, "selected": t.a_lambda.indices}


def _run_replicates(fn, replicates, threads):
    """Evaluate ``fn(b)`` for every replicate; order of results is by ``b``."""
    def safe(b):
        try:
            return fn(b)
        except (NaiveLassoError, np.linalg.LinAlgError) as err:
            return {"error": f"{type(err).__name__}: {err}"}

    if threads is None or threads <= 1:
        return [safe(b) for b in range(replicates)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(safe, range(replicates)))


def modal_proportion(selected_sets):
    """Share of nonempty sets equal to the most common one (first-seen wins ties)."""
    sets = [tuple(s) for s in selected_sets if len(s) > 0]
    if not sets:
        return math.nan, ()
    counts = Counter(sets)
    best = max(counts.values())
    mode = next(s for s in sets if counts[s] == best)
    return best / len(sets), mode


def coverage_proportion(contained_per_replicate):
    """Mean over replicates of the within-replicate share of covering intervals.

    Replicates with no intervals are skipped.
    """
    shares = [float(np.mean(c)) for c in contained_per_replicate if len(c) > 0]
    return float(np.mean(shares)) if shares else math.nan


def _meta(spec, kind, attempt=None, extra=None):
    out = {"experiment": spec.name, "kind": kind, "graph": spec.graph.kind, "rho": spec.rho,
           "n": spec.n, "p": spec.p, "snr": spec.snr,
           "lambda_rule": format_lambda_rule(spec.lambda_rule), "seed": spec.seed,
           "alpha": spec.alpha}
    if attempt is not None:
        out["graph_attempts"] = attempt + 1
    if extra:
        out.update(extra)
    return out


def run_experiment(spec: ExperimentSpec, kind, threads=1, options=None,
                   threshold1=T_PART1_THRESHOLD, threshold2=T_PART2_THRESHOLD) -> MetricsReport:
    """Execute ``spec.replicates`` replicates of one experiment family.

    Per-replicate numerical failures are counted in ``failures`` and do
    not abort the run.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    options = options or SolverOptions()
    B = spec.replicates

    if kind == "conditions":
        res = _run_replicates(lambda b: _conditions_replicate(spec, b, options, threshold1, threshold2),
                              B, threads)
        ok = [r for r in res if "error" not in r]
        rate = (lambda key: float(np.mean([r[key] for r in ok]))) if ok else (lambda key: math.nan)
        q = SelectedSet.support(spec.beta_star).q
        return MetricsReport(kind, B, prob_t1=rate("t1"), prob_t2=rate("t2"), prob_irrep=rate("irr"),
                             failures=B - len(ok),
                             not_converged=sum(not r["converged"] for r in ok),
                             meta=_meta(spec, kind, extra={"qstar": q}))

    model, attempt = build_covariance(spec.graph, spec.rho, spec.seed)
    if spec.sigma_eps is not None:
        sigma_eps = float(spec.sigma_eps)
    else:
        sigma_eps = sigma_eps_from_snr(model.Sigma, spec.beta_star, spec.snr)
    extra = {"sigma_eps": sigma_eps, "edges": len(model.edges)}

    if kind == "coverage":
        res = _run_replicates(lambda b: _coverage_replicate(spec, model, sigma_eps, b, options), B, threads)
        ok = [r for r in res if "error" not in r]
        nonempty = [r for r in ok if r["selected"]]
        det, mode = modal_proportion([r["selected"] for r in nonempty])
        lengths = [float(np.mean(r["lengths"])) for r in nonempty]
        extra["modal_set"] = list(mode)
        return MetricsReport(kind, B,
                             coverage=coverage_proportion([r["contained"] for r in nonempty]),
                             avg_length=float(np.mean(lengths)) if lengths else math.nan,
                             determinism=det,
                             empty_sets=len(ok) - len(nonempty), failures=B - len(ok),
                             n_intervals=sum(len(r["contained"]) for r in nonempty),
                             not_converged=sum(not r["converged"] for r in ok),
                             meta=_meta(spec, kind, attempt, extra))

    res = _run_replicates(lambda b: _power_replicate(spec, model, sigma_eps, b, options), B, threads)
    ok = [r for r in res if "error" not in r]
    mag = np.abs(spec.beta_star)
    strong = mag >= spec.strong_threshold
    weak = (mag > 0) & ~strong
    null = mag == 0
    extra.update(n_strong=int(strong.sum()), n_weak=int(weak.sum()), n_null=int(null.sum()))

    def rate(mask):
        if not ok or not mask.any():
            return math.nan
        return float(np.mean([r["reject"][mask].mean() for r in ok]))

    return MetricsReport(kind, B, power_strong=rate(strong), power_weak=rate(weak), type1=rate(null),
                         empty_sets=sum(not r["selected"] for r in ok), failures=B - len(ok),
                         not_converged=sum(not r["converged"] for r in ok),
                         meta=_meta(spec, kind, attempt, extra))


def run_condition_study(p, qstar, replicates=200, n=1000, lambda_rule="rate:10", seed=0,
                        threads=1, options=None, threshold1=T_PART1_THRESHOLD,
                        threshold2=T_PART2_THRESHOLD):
    """Condition-(T) and irrepresentable probabilities on Wishart correlation designs."""
    spec = ExperimentSpec(GraphSpec("erdos_renyi", p, {"density": 0.0}), 0.0, n, 1.0,
                          default_beta("conditions", p, qstar), lambda_rule, replicates,
                          seed=seed, name=f"conditions_p{p}_q{qstar}")
    return run_experiment(spec, "conditions", threads=threads, options=options,
                          threshold1=threshold1, threshold2=threshold2)


def report_row(report: MetricsReport):
    """Flatten a report to a dict keyed by the CSV columns of its kind."""
    m = report.meta
    values = {**m, "replicates": report.replicates, "coverage": report.coverage,
              "avg_length": report.avg_length, "determinism": report.determinism,
              "empty_sets": report.empty_sets, "failures": report.failures,
              "power_strong": report.power_strong, "power_weak": report.power_weak,
              "type1": report.type1, "prob_t_part1": report.prob_t1,
              "prob_t_part2": report.prob_t2, "prob_irrepresentable": report.prob_irrep}
    return {c: values.get(c) for c in COLUMNS[report.kind]}


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".6g")
    return "" if v is None else str(v)


def write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(row.get(c)) for c in columns])


def write_results_csv(path, reports):
    if not reports:
        raise EmptyInput("no reports to write")
    kind = reports[0].kind
    write_csv(path, COLUMNS[kind], [report_row(r) for r in reports])


_RATE_FIELDS = ("coverage", "avg_length", "determinism", "power_strong", "power_weak", "type1",
                "prob_t1", "prob_t2", "prob_irrep")
_COUNT_FIELDS = ("replicates", "empty_sets", "failures", "n_intervals", "not_converged")


def summarize_metrics(reports, group_keys):
    """Group reports by metadata keys; replicate-weighted rates, summed counts.

    Rows come back sorted by the group key tuple.
    """
    if not reports:
        raise EmptyInput("summarize_metrics needs at least one report")
    groups = {}
    for r in reports:
        key = tuple(r.meta.get(k) for k in group_keys)
        groups.setdefault(key, []).append(r)
    rows = []
    for key in sorted(groups):
        members = groups[key]
        row = dict(zip(group_keys, key))
        row["reports"] = len(members)
        for f in _COUNT_FIELDS:
            row[f] = sum(getattr(m, f) for m in members)
        for f in _RATE_FIELDS:
            vals = [(getattr(m, f), m.replicates) for m in members if not math.isnan(getattr(m, f))]
            w = sum(wt for _, wt in vals)
            row[f] = sum(v * wt for v, wt in vals) / w if vals else math.nan
        rows.append(row)
    return rows

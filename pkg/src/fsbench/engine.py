"""Benchmark orchestration: configuration, the bootstrap experiment, aggregation.

The engine applies one identical pipeline (preprocess, feature selection,
classifier fit, scoring) to the full data and to every resample, assembles
optimism-corrected performance, stability, per-feature frequency, and
instability analytics, and optionally runs the semi-synthetic recovery
experiment. A failure of one method or classifier on one resample is
recorded and skipped; it never aborts the run.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import classifiers, embedded, filters, metrics, simulation, wrappers
from .classifiers import ClassifierSpec
from .data import CATEGORICAL, Dataset, apply_preprocess, fit_preprocess, make_resamples
from .errors import ConfigError
from .prefilter import iterative_vif_filter

FIXED_SIZE_METHODS = frozenset({
    "t_score", "fisher", "gini", "relieff", "cife", "cmim", "disr", "jmi",
    "mrmr", "hcluster", "rfe", "random"})
THRESHOLD_METHODS = frozenset({
    "padjust_union", "lasso", "adaptive_lasso", "bolasso",
    "stability_selection", "forward"})
CONTROL_METHODS = frozenset({"full_data"})
METHOD_IDS = FIXED_SIZE_METHODS | THRESHOLD_METHODS | CONTROL_METHODS

OC_METHODS = ("harrell", "dot632", "dot632plus")
WORKERS_ENV = "FSBENCH_WORKERS"


@dataclass(frozen=True)
class MethodConfig:
    id: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.id not in METHOD_IDS:
            raise ConfigError(f"unknown method id {self.id!r}; "
                              f"valid: {sorted(METHOD_IDS)}")
        object.__setattr__(self, "params", dict(self.params))


@dataclass(frozen=True)
class SimulationConfig:
    truth: tuple | None = None
    truth_top: int | None = None
    noise_sd: float = 1.0
    replicates: int = 36
    seed: int = 0
    pool: str = "full"

    def __post_init__(self):
        if (self.truth is None) == (self.truth_top is None):
            raise ConfigError("simulation needs exactly one of 'truth' or 'truth_top'")
        if self.pool not in ("full", "post_vif"):
            raise ConfigError("simulation pool must be 'full' or 'post_vif'")
        if self.replicates < 1:
            raise ConfigError("simulation replicates must be >= 1")
        if self.truth is not None:
            object.__setattr__(self, "truth", tuple(int(j) for j in self.truth))


@dataclass(frozen=True)
class BenchmarkConfig:
    methods: tuple
    classifiers: tuple
    resamples: int = 100
    resample_kind: str = "bootstrap"
    subsample_ratio: float = 0.8
    oc_method: str = "dot632plus"
    default_k: int = 10
    high_confidence_threshold: float = 0.5
    seed: int = 0
    vif_enabled: bool = False
    vif_threshold: float = 5.0
    workers: int = 1
    simulation: SimulationConfig | None = None

    def __post_init__(self):
        methods = tuple(m if isinstance(m, MethodConfig) else MethodConfig(**m)
                        for m in self.methods)
        clfs = tuple(c if isinstance(c, ClassifierSpec) else ClassifierSpec(**c)
                     for c in self.classifiers)
        if not methods or not clfs:
            raise ConfigError("need at least one method and one classifier")
        ids = [m.id for m in methods]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate method ids in config")
        kinds = [c.kind for c in clfs]
        if len(set(kinds)) != len(kinds):
            raise ConfigError("duplicate classifier kinds in config")
        if self.resamples < 2:
            raise ConfigError("resamples must be >= 2")
        if self.resample_kind not in ("bootstrap", "subsample"):
            raise ConfigError("resample_kind must be bootstrap or subsample")
        if self.oc_method not in OC_METHODS:
            raise ConfigError(f"oc_method must be one of {OC_METHODS}")
        if self.default_k < 1:
            raise ConfigError("default_k must be >= 1")
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "classifiers", clfs)

    def to_dict(self):
        d = {
            "methods": [{"id": m.id, "params": _jsonify(m.params)} for m in self.methods],
            "classifiers": [{"kind": c.kind, "params": _jsonify(c.params)}
                            for c in self.classifiers],
            "resamples": self.resamples,
            "resample_kind": self.resample_kind,
            "subsample_ratio": self.subsample_ratio,
            "oc_method": self.oc_method,
            "default_k": self.default_k,
            "high_confidence_threshold": self.high_confidence_threshold,
            "seed": self.seed,
            "vif": {"enabled": self.vif_enabled, "threshold": self.vif_threshold},
            "workers": self.workers,
            "simulation": None,
        }
        if self.simulation is not None:
            s = self.simulation
            d["simulation"] = {
                "truth": list(s.truth) if s.truth is not None else None,
                "truth_top": s.truth_top, "noise_sd": s.noise_sd,
                "replicates": s.replicates, "seed": s.seed, "pool": s.pool}
        return d

    @classmethod
    def from_dict(cls, d):
        known = {"methods", "classifiers", "resamples", "resample_kind",
                 "subsample_ratio", "oc_method", "default_k",
                 "high_confidence_threshold", "seed", "vif", "workers", "simulation"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {k: d[k] for k in ("resamples", "resample_kind", "subsample_ratio",
                                    "oc_method", "default_k", "high_confidence_threshold",
                                    "seed", "workers") if k in d}
        vif = d.get("vif") or {}
        if set(vif) - {"enabled", "threshold"}:
            raise ConfigError("vif block accepts keys 'enabled' and 'threshold'")
        sim = d.get("simulation")
        sim_cfg = None
        if sim is not None:
            sim = dict(sim)
            truth = sim.pop("truth", None)
            sim_cfg = SimulationConfig(
                truth=tuple(truth) if truth is not None else None,
                truth_top=sim.pop("truth_top", None),
                noise_sd=sim.pop("noise_sd", 1.0),
                replicates=sim.pop("replicates", 36),
                seed=sim.pop("seed", 0),
                pool=sim.pop("pool", "full"))
            if sim:
                raise ConfigError(f"unknown simulation keys: {sorted(sim)}")
        try:
            methods = tuple(MethodConfig(id=m["id"], params=m.get("params", {}))
                            for m in d.get("methods", []))
            clfs = tuple(ClassifierSpec(kind=c["kind"], params=c.get("params", {}))
                         for c in d.get("classifiers", []))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed methods/classifiers block: {exc}") from exc
        return cls(methods=methods, classifiers=clfs,
                   vif_enabled=bool(vif.get("enabled", False)),
                   vif_threshold=float(vif.get("threshold", 5.0)),
                   simulation=sim_cfg, **kwargs)

    def config_hash(self):
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


def derive_seed(*parts):
    """Stable 63-bit child seed from arbitrary string/int parts."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def _jsonify(obj):
    """Recursively convert to JSON-native types; NaN becomes None."""
    if obj is None or isinstance(obj, (str, bool, int)):
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if np.isnan(x) else x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    raise TypeError(f"cannot serialize {type(obj)!r}")


def build_method_runner(mc: MethodConfig, *, default_k, categorical_mask,
                        feature_names, k_override=None):
    """Build a ``(matrix, y, seed) -> SelectionResult`` callable for one method.

    ``k_override`` replaces the subset size of fixed-size methods (used by
    the recovery experiment, where they must select |truth| features).
    """
    mid = mc.id
    params = dict(mc.params)

    def sized_k():
        if k_override is not None and mid in FIXED_SIZE_METHODS:
            return k_override
        return int(params.get("k", default_k))

    if mid in filters.STATISTICAL_METHODS:
        k = sized_k()
        return lambda X, y, seed: filters.select_top_k(
            filters.score_statistical(X, y, mid), k)
    if mid == "relieff":
        k = sized_k()
        neighbors = int(params.get("neighbors", 5))
        return lambda X, y, seed: filters.select_top_k(
            filters.relieff_score(X, y, neighbors=neighbors), k)
    if mid in filters.MI_CRITERIA:
        k = sized_k()
        bins = int(params.get("bins", 5))
        return lambda X, y, seed: filters.greedy_mi_select(
            X, y, mid, k, bins=bins, categorical=categorical_mask)
    if mid == "mrmr":
        k = sized_k()
        return lambda X, y, seed: filters.mrmr_select(X, y, k)
    if mid == "hcluster":
        k = sized_k()
        return lambda X, y, seed: filters.hcluster_select(X, y, k)
    if mid == "padjust_union":
        alpha = float(params.get("alpha", 0.05))
        covariates = _resolve_covariates(params.get("covariates", ()), feature_names)
        return lambda X, y, seed: filters.padjust_union_filter(
            X, y, alpha=alpha, covariates=covariates)
    if mid == "random":
        k = params.get("k", [1, 20])
        if k_override is not None:
            k = k_override
        return lambda X, y, seed: filters.random_select(
            X.shape[1], _clip_k(k, X.shape[1]), seed)
    if mid == "full_data":
        return lambda X, y, seed: filters.SelectionResult(
            method="full_data", selected=tuple(range(X.shape[1])), k=X.shape[1],
            mode=filters.FIXED_K)
    if mid == "lasso":
        kw = _lasso_kwargs(params)
        return lambda X, y, seed: embedded.lasso_select(X, y, seed=seed, **kw)
    if mid == "adaptive_lasso":
        kw = _lasso_kwargs(params)
        gamma = float(params.get("gamma", 1.0))
        return lambda X, y, seed: embedded.adaptive_lasso_select(
            X, y, gamma=gamma, seed=seed, **kw)
    if mid == "bolasso":
        inner_B = int(params.get("inner_B", 32))
        thr = float(params.get("freq_threshold", 0.5))
        return lambda X, y, seed: embedded.bolasso_select(
            X, y, inner_B=inner_B, freq_threshold=thr, seed=seed)
    if mid == "stability_selection":
        inner_B = int(params.get("inner_B", 50))
        ratio = float(params.get("subsample_ratio", 0.5))
        thr = float(params.get("freq_threshold", 0.6))
        n_lam = int(params.get("n_lambdas", 20))
        return lambda X, y, seed: embedded.stability_selection_select(
            X, y, inner_B=inner_B, subsample_ratio=ratio, freq_threshold=thr,
            n_lambdas=n_lam, seed=seed)
    if mid == "rfe":
        k = sized_k()
        base = ClassifierSpec(kind=params.get("base", "logistic"),
                              params=params.get("base_params", {}))
        drop = float(params.get("drop_fraction", 0.1))
        return lambda X, y, seed: wrappers.rfe_select(
            X, y, base, k, drop_fraction=drop, seed=seed)
    if mid == "forward":
        k_max = int(params.get("k_max", params.get("k", default_k)))
        base = ClassifierSpec(kind=params.get("base", "logistic"),
                              params=params.get("base_params", {}))
        cv = int(params.get("folds", 5))
        return lambda X, y, seed: wrappers.forward_select(
            X, y, base, k_max, folds=cv, seed=seed)
    raise ConfigError(f"unknown method id {mid!r}")


def _clip_k(k, p):
    if isinstance(k, (list, tuple)):
        return (min(int(k[0]), p), min(int(k[1]), p))
    return min(int(k), p)


def _lasso_kwargs(params):
    return {"folds": int(params.get("folds", 5)),
            "n_lambdas": int(params.get("n_lambdas", 50)),
            "rule": params.get("rule", "1se")}


def _resolve_covariates(cov, feature_names):
    out = []
    for c in cov:
        if isinstance(c, str):
            if c not in feature_names:
                raise ConfigError(f"covariate {c!r} not in the feature set")
            out.append(feature_names.index(c))
        else:
            out.append(int(c))
    return tuple(out)


class _PrevalenceScorer:
    """Fallback model for an empty selection: predicts the training prevalence."""

    def __init__(self, p1):
        self.p1 = float(p1)

    def __call__(self, M):
        return np.full(M.shape[0], self.p1)


def _fit_scorer(clf_spec, X_sel, y, seed):
    if X_sel.shape[1] == 0:
        return _PrevalenceScorer(np.mean(y))
    model = classifiers.fit(clf_spec, X_sel, y, seed=seed)
    return lambda M: classifiers.predict_proba(model, M)


def _metrics_or_nan(scores, labels):
    try:
        return metrics.binary_metrics(scores, labels).as_dict()
    except ValueError:
        return {m: float("nan") for m in metrics.METRIC_NAMES}


_NAN_METRICS = {m: float("nan") for m in metrics.METRIC_NAMES}


@dataclass
class ReportBundle:
    """Aggregated benchmark output; everything outside ``timing`` is
    deterministic for a fixed (data, config, seed)."""

    config: dict
    provenance: dict
    vif: dict | None
    features: dict
    results: dict
    methods: dict
    recovery: dict | None
    simulation_manifest: dict | None
    failures: list
    timing: dict

    def to_json_dict(self):
        return {"schema": "fsbench-report-v1", "config": self.config,
                "provenance": self.provenance, "vif": self.vif,
                "features": self.features, "results": self.results,
                "methods": self.methods, "recovery": self.recovery,
                "simulation_manifest": self.simulation_manifest,
                "failures": self.failures, "timing": self.timing}

    @classmethod
    def from_json_dict(cls, d):
        if d.get("schema") != "fsbench-report-v1":
            raise ValueError("not a fsbench report bundle")
        return cls(config=d["config"], provenance=d["provenance"], vif=d["vif"],
                   features=d["features"], results=d["results"], methods=d["methods"],
                   recovery=d["recovery"], simulation_manifest=d["simulation_manifest"],
                   failures=d["failures"], timing=d["timing"])

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2,
                          allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))


def run_benchmark(data: Dataset, config: BenchmarkConfig) -> ReportBundle:
    """Run the full benchmark described by ``config`` on ``data``."""
    started = datetime.now(timezone.utc).isoformat()
    y = data.outcome
    all_rows = np.arange(data.n)
    state_full = fit_preprocess(data, all_rows)
    M_all = apply_preprocess(state_full, data, all_rows)

    vif_dict = None
    cols = np.arange(data.p)
    if config.vif_enabled:
        vif_report = iterative_vif_filter(M_all, config.vif_threshold)
        cols = np.asarray(vif_report.surviving_features, dtype=np.intp)
        vif_dict = vif_report.to_json_dict(names=list(data.feature_names))
    names = [data.feature_meta[j].name for j in cols]
    cat_mask = np.array([data.feature_meta[j].kind == CATEGORICAL for j in cols])
    p_used = len(cols)
    M_full = M_all[:, cols]

    method_ids = [m.id for m in config.methods]
    clf_kinds = [c.kind for c in config.classifiers]
    runners = {m.id: build_method_runner(m, default_k=config.default_k,
                                         categorical_mask=cat_mask,
                                         feature_names=names)
               for m in config.methods}

    failures = []
    seed = config.seed

    # ----- apparent pipeline (full data) -----
    apparent_sel = {}
    app_metrics = {}
    app_gamma = {}
    app_pred = {}
    for mid in method_ids:
        try:
            sel = runners[mid](M_full, y, derive_seed(seed, "apparent", mid))
        except Exception as exc:  # per-cell tolerance: record, keep going
            failures.append({"resample": None, "method": mid, "classifier": None,
                             "error": f"{type(exc).__name__}: {exc}"})
            apparent_sel[mid] = None
            continue
        apparent_sel[mid] = sel
        sel_cols = list(sel.selected)
        for ckey, clf in zip(clf_kinds, config.classifiers):
            try:
                scorer = _fit_scorer(clf, M_full[:, sel_cols], y,
                                     derive_seed(seed, "apparent", mid, ckey))
                scores = scorer(M_full[:, sel_cols])
                app_metrics[(mid, ckey)] = metrics.binary_metrics(scores, y).as_dict()
                app_gamma[(mid, ckey)] = {
                    m: metrics.no_information_score(scores, y, m,
                                                    seed=derive_seed(seed, "gamma", mid, ckey))
                    for m in metrics.METRIC_NAMES}
                app_pred[(mid, ckey)] = scores >= 0.5
            except Exception as exc:
                failures.append({"resample": None, "method": mid, "classifier": ckey,
                                 "error": f"{type(exc).__name__}: {exc}"})

    # ----- bootstrap experiment -----
    resamples = make_resamples(data, config.resamples, kind=config.resample_kind,
                               ratio=config.subsample_ratio, seed=seed)

    def run_unit(rs):
        unit = {"b": rs.ordinal, "methods": {}, "failures": []}
        state_b = fit_preprocess(data, rs.in_indices)
        Mtr = apply_preprocess(state_b, data, rs.in_indices)[:, cols]
        Morig = apply_preprocess(state_b, data, all_rows)[:, cols]
        ytr = y[rs.in_indices]
        oob = rs.oob_indices
        y_oob = y[oob]
        for mid in method_ids:
            t0 = time.perf_counter()
            try:
                sel = runners[mid](Mtr, ytr, derive_seed(seed, rs.ordinal, mid))
            except Exception as exc:
                unit["failures"].append(
                    {"resample": rs.ordinal, "method": mid, "classifier": None,
                     "error": f"{type(exc).__name__}: {exc}"})
                continue
            fs_time = time.perf_counter() - t0
            sel_cols = list(sel.selected)
            cells = {}
            for ckey, clf in zip(clf_kinds, config.classifiers):
                try:
                    scorer = _fit_scorer(clf, Mtr[:, sel_cols], ytr,
                                         derive_seed(seed, rs.ordinal, mid, ckey))
                    s_tr = scorer(Mtr[:, sel_cols])
                    s_orig = scorer(Morig[:, sel_cols])
                    cells[ckey] = {
                        "boot": _metrics_or_nan(s_tr, ytr),
                        "orig": _metrics_or_nan(s_orig, y),
                        "oob": (_metrics_or_nan(s_orig[oob], y_oob)
                                if oob.size else dict(_NAN_METRICS)),
                        "pred_orig": s_orig >= 0.5,
                    }
                except Exception as exc:
                    unit["failures"].append(
                        {"resample": rs.ordinal, "method": mid, "classifier": ckey,
                         "error": f"{type(exc).__name__}: {exc}"})
            unit["methods"][mid] = {"selected": sel.selected, "fs_time": fs_time,
                                    "cells": cells}
        return unit

    workers = int(os.environ.get(WORKERS_ENV, config.workers))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            units = list(pool.map(run_unit, resamples))
    else:
        units = [run_unit(rs) for rs in resamples]
    for unit in units:
        failures.extend(unit["failures"])

    # ----- aggregation -----
    B = config.resamples
    results = {}
    for mid in method_ids:
        results[mid] = {}
        for ckey in clf_kinds:
            per_metric = {}
            theta_app = app_metrics.get((mid, ckey))
            gamma = app_gamma.get((mid, ckey))
            for mname in metrics.METRIC_NAMES:
                boot = np.full(B, np.nan)
                orig = np.full(B, np.nan)
                oobv = np.full(B, np.nan)
                for unit in units:
                    cell = unit["methods"].get(mid, {}).get("cells", {}).get(ckey)
                    if cell is None:
                        continue
                    b = unit["b"] - 1
                    boot[b] = cell["boot"][mname]
                    orig[b] = cell["orig"][mname]
                    oobv[b] = cell["oob"][mname]
                app_val = theta_app[mname] if theta_app else float("nan")
                gam = gamma[mname] if gamma else float("nan")
                est = metrics.PerformanceEstimate.compute(app_val, boot, orig, oobv, gam)
                per_metric[mname] = {
                    "apparent": est.theta_app, "theta_out": est.theta_out,
                    "optimism": est.optimism, "gamma": est.gamma,
                    "R": est.R, "w": est.w, "corrected": est.corrected}
            n_failed = sum(1 for unit in units
                           if unit["methods"].get(mid, {}).get("cells", {}).get(ckey) is None)
            results[mid][ckey] = {"metrics": per_metric, "failed_resamples": n_failed}

    methods_out = {}
    freq_by_method = {}
    for mid in method_ids:
        sets = [unit["methods"][mid]["selected"] for unit in units
                if mid in unit["methods"]]
        fs_times = [unit["methods"][mid]["fs_time"] for unit in units
                    if mid in unit["methods"]]
        if sets:
            ensemble = metrics.SelectionEnsemble.from_sets(sets, p_used)
            stability = ensemble.stability
            freq = ensemble.frequencies
            sizes = [len(s) for s in sets]
        else:
            stability = float("nan")
            freq = np.zeros(p_used)
            sizes = []
        if mid == "full_data":
            stability = 1.0  # identical full sets by construction
        freq_by_method[mid] = freq

        best_ckey = _best_classifier(results[mid], clf_kinds, config.oc_method)
        instab = _instability_for(mid, best_ckey, app_pred, units, data.n)
        sel_app = apparent_sel.get(mid)
        methods_out[mid] = {
            "stability": _jsonify(stability),
            "size_mean": _jsonify(float(np.mean(sizes)) if sizes else float("nan")),
            "size_sd": _jsonify(float(np.std(sizes, ddof=1)) if len(sizes) > 1 else 0.0),
            "sizes": _jsonify(sizes),
            "selected_per_resample": [_jsonify(list(s)) for s in sets],
            "frequencies": _jsonify(freq),
            "apparent_selected": _jsonify(list(sel_app.selected)) if sel_app else None,
            "apparent_mode": sel_app.mode if sel_app else None,
            "best_classifier": best_ckey,
            "instability_index": _jsonify(instab) if instab is not None else None,
            "instability_share_gt_0.1": _jsonify(
                float(np.mean(instab > 0.1)) if instab is not None else float("nan")),
            "instability_share_gt_0.3": _jsonify(
                float(np.mean(instab > 0.3)) if instab is not None else float("nan")),
        }

    hc_counts = metrics.high_confidence_counts(
        freq_by_method, threshold=config.high_confidence_threshold)
    features_out = {"names": list(names),
                    "high_confidence_counts": _jsonify(hc_counts),
                    "frequency_threshold": config.high_confidence_threshold}

    recovery_out = None
    sim_manifest = None
    if config.simulation is not None:
        recovery_out, sim_manifest = _run_recovery(
            data, config, M_all, M_full, y, names, cat_mask, cols)

    fs_timing = {}
    for mid in method_ids:
        times = [unit["methods"][mid]["fs_time"] for unit in units
                 if mid in unit["methods"]]
        fs_timing[mid] = {
            "fs_time_mean": float(np.mean(times)) if times else None,
            "fs_time_sd": (float(np.std(times, ddof=1)) if len(times) > 1 else 0.0)
            if times else None,
            "fs_times": [float(t) for t in times]}

    bundle = ReportBundle(
        config=config.to_dict(),
        provenance={"config_hash": config.config_hash(), "seed": seed,
                    "n": int(data.n), "p_original": int(data.p),
                    "p_used": int(p_used)},
        vif=vif_dict,
        features=features_out,
        results=_jsonify(results),
        methods=methods_out,
        recovery=recovery_out,
        simulation_manifest=sim_manifest,
        failures=_jsonify(failures),
        timing={"started": started,
                "finished": datetime.now(timezone.utc).isoformat(),
                "methods": fs_timing},
    )
    return bundle


def _best_classifier(method_results, clf_kinds, oc_method):
    best, best_val = clf_kinds[0], -np.inf
    for ckey in clf_kinds:
        val = method_results[ckey]["metrics"]["auc"]["corrected"][oc_method]
        if val is not None and not np.isnan(val) and val > best_val:
            best, best_val = ckey, val
    return best


def _instability_for(mid, ckey, app_pred, units, n):
    full = app_pred.get((mid, ckey))
    if full is None:
        return None
    rows = []
    for unit in units:
        cell = unit["methods"].get(mid, {}).get("cells", {}).get(ckey)
        rows.append(cell["pred_orig"].astype(np.float64) if cell is not None
                    else np.full(n, np.nan))
    return metrics.instability_index(full.astype(np.float64), np.vstack(rows))


def _run_recovery(data, config, M_all, M_full, y, names, cat_mask, cols):
    sim = config.simulation
    if sim.pool == "full":
        pool_M = M_all
        pool_names = list(data.feature_names)
        pool_cat = np.array([m.kind == CATEGORICAL for m in data.feature_meta])
    else:
        pool_M = M_full
        pool_names = list(names)
        pool_cat = cat_mask

    if sim.truth is not None:
        truth = tuple(sim.truth)
        if not set(truth) <= set(range(pool_M.shape[1])):
            raise ConfigError("simulation truth indices out of range for the pool")
    else:
        truth = simulation.truth_from_top_features(pool_M, y, sim.truth_top)
    beta, intercept, flagged = simulation.fit_truth_model(pool_M, y, truth)
    spec = simulation.SimulationSpec(truth=truth, beta=beta, intercept=intercept,
                                     noise_sd=sim.noise_sd,
                                     replicates=sim.replicates, seed=sim.seed)
    runner_map = {}
    for mc in config.methods:
        if mc.id in CONTROL_METHODS and mc.id == "full_data":
            continue  # trained-on-everything control has no discovery rates
        runner_map[mc.id] = build_method_runner(
            mc, default_k=config.default_k, categorical_mask=pool_cat,
            feature_names=pool_names, k_override=len(truth))
    summaries = simulation.run_recovery_experiment(pool_M, spec, runner_map)
    recovery = {mid: {
        "tpr_mean": s.mean["tpr"], "tpr_sd": s.sd["tpr"],
        "fpr_mean": s.mean["fpr"], "fpr_sd": s.sd["fpr"],
        "fdr_mean": s.mean["fdr"], "fdr_sd": s.sd["fdr"],
        "for_mean": s.mean["for_"], "for_sd": s.sd["for_"],
        "replicates": s.replicates} for mid, s in summaries.items()}
    manifest = spec.to_manifest()
    manifest["pool"] = sim.pool
    manifest["truth_names"] = [pool_names[j] for j in truth]
    manifest["truth_fit_flagged"] = bool(flagged)
    return _jsonify(recovery), _jsonify(manifest)

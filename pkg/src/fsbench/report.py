"""Report emission: canonical JSON plus a human-readable markdown summary.

The markdown mirrors the benchmark summary-table layout: one row per
method x classifier pair with corrected metrics, stability, subset size and
FS runtime, recovery columns when a simulation ran, a best-pair-per-method
table, a per-feature frequency table with high-confidence counts, and the
stability-vs-AUC coordinate list. Plot rendering is out of scope; the tables
carry the same data.
"""

from __future__ import annotations

import os

from .engine import ReportBundle


def _fmt(x, digits=3):
    if x is None:
        return "-"
    return f"{x:.{digits}f}"


def _fmt_pm(mean, sd, digits=2):
    if mean is None:
        return "-"
    if sd is None:
        return f"{mean:.{digits}f}"
    return f"{mean:.{digits}f} ± {sd:.{digits}f}"


def generate_report(bundle: ReportBundle, fmt="json", out_dir="."):
    """Write report files; returns the list of paths written."""
    if fmt not in ("json", "markdown", "md"):
        raise ValueError("format must be 'json' or 'markdown'")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if fmt == "json":
        path = os.path.join(out_dir, "report.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(bundle.to_json())
        written.append(path)
    else:
        path = os.path.join(out_dir, "report.md")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render_markdown(bundle))
        written.append(path)
    return written


def render_markdown(bundle: ReportBundle) -> str:
    cfg = bundle.config
    oc = cfg["oc_method"]
    method_ids = [m["id"] for m in cfg["methods"]]
    clf_kinds = [c["kind"] for c in cfg["classifiers"]]
    has_recovery = bundle.recovery is not None
    timing = bundle.timing.get("methods", {})

    lines = ["# Feature-selection benchmark report", ""]
    prov = bundle.provenance
    lines.append(f"- samples: {prov['n']}, features: {prov['p_original']}"
                 f" (used after prefilter: {prov['p_used']})")
    lines.append(f"- resamples: {cfg['resamples']} ({cfg['resample_kind']}),"
                 f" seed: {cfg['seed']}, optimism correction: {oc}")
    lines.append(f"- config hash: {prov['config_hash'][:16]}…")
    lines.append("")

    # method x classifier summary
    lines.append("## Method × classifier summary")
    lines.append("")
    header = ["Method", "Classifier", "AUC", "Accuracy", "Sensitivity",
              "Specificity", "PPV", "NPV", "Stability", "Subset size",
              "FS time (s)"]
    if has_recovery:
        header += ["TPR", "FPR", "FDR", "FOR"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for mid in method_ids:
        minfo = bundle.methods[mid]
        tinfo = timing.get(mid, {})
        rec = bundle.recovery.get(mid) if has_recovery else None
        for ckey in clf_kinds:
            cell = bundle.results[mid][ckey]["metrics"]
            row = [mid, ckey]
            for metric in ("auc", "accuracy", "sensitivity", "specificity",
                           "ppv", "npv"):
                row.append(_fmt(cell[metric]["corrected"][oc]))
            row.append(_fmt(minfo["stability"], 2))
            row.append(_fmt_pm(minfo["size_mean"], minfo["size_sd"], 1))
            row.append(_fmt_pm(tinfo.get("fs_time_mean"), tinfo.get("fs_time_sd")))
            if has_recovery:
                if rec is not None:
                    row += [_fmt_pm(rec["tpr_mean"], rec["tpr_sd"]),
                            _fmt_pm(rec["fpr_mean"], rec["fpr_sd"]),
                            _fmt_pm(rec["fdr_mean"], rec["fdr_sd"]),
                            _fmt_pm(rec["for_mean"], rec["for_sd"])]
                else:
                    row += ["-", "-", "-", "-"]
            lines.append("| " + " | ".join(row) + " |")
    lines.append("")

    # best pair per method
    lines.append("## Best classifier per method")
    lines.append("")
    lines.append("| Method | Best classifier | AUC (corrected) | Stability |"
                 " Instability >0.1 | Instability >0.3 |")
    lines.append("|---|---|---|---|---|---|")
    for mid in method_ids:
        minfo = bundle.methods[mid]
        best = minfo["best_classifier"]
        auc = bundle.results[mid][best]["metrics"]["auc"]["corrected"][oc]
        lines.append("| " + " | ".join([
            mid, best, _fmt(auc), _fmt(minfo["stability"], 2),
            _fmt(minfo["instability_share_gt_0.1"], 3),
            _fmt(minfo["instability_share_gt_0.3"], 3)]) + " |")
    lines.append("")

    # stability vs AUC coordinates
    lines.append("## Stability vs AUC coordinates")
    lines.append("")
    lines.append("| Method | Stability | AUC (corrected, best classifier) |")
    lines.append("|---|---|---|")
    for mid in method_ids:
        minfo = bundle.methods[mid]
        best = minfo["best_classifier"]
        auc = bundle.results[mid][best]["metrics"]["auc"]["corrected"][oc]
        lines.append(f"| {mid} | {_fmt(minfo['stability'], 3)} | {_fmt(auc)} |")
    lines.append("")

    # per-feature frequencies
    lines.append("## Feature selection frequencies")
    lines.append("")
    thresh = bundle.features["frequency_threshold"]
    lines.append(f"High-confidence = selected in ≥ {thresh:.0%} of resamples.")
    lines.append("")
    lines.append("| Feature | " + " | ".join(method_ids)
                 + " | Methods selecting with high confidence |")
    lines.append("|" + "---|" * (len(method_ids) + 2))
    names = bundle.features["names"]
    counts = bundle.features["high_confidence_counts"]
    for f, name in enumerate(names):
        freqs = [_fmt(bundle.methods[mid]["frequencies"][f], 2)
                 for mid in method_ids]
        lines.append(f"| {name} | " + " | ".join(freqs) + f" | {counts[f]} |")
    lines.append("")

    if bundle.failures:
        lines.append("## Failures")
        lines.append("")
        for rec in bundle.failures:
            where = f"resample {rec['resample']}" if rec["resample"] else "apparent run"
            clf = f", classifier {rec['classifier']}" if rec["classifier"] else ""
            lines.append(f"- {where}: method {rec['method']}{clf}: {rec['error']}")
        lines.append("")
    return "\n".join(lines) + "\n"

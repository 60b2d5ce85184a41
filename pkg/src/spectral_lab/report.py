"""CSV/JSON/SVG emission for campaign reports."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .config import CampaignConfig

CSV_COLUMNS = [
    "trial_id", "seed", "domain_kind", "alpha", "n", "ensemble", "function_id",
    "sup_norm_f", "norm_fA", "ratio", "k_alpha", "ratio_over_k", "lemma1_margin",
    "lemma2_margin", "schwenninger_residual", "adjoint_residual", "quad_error",
]


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def report_csv(report) -> str:
    """One row per trial; floats at full round-trip precision, '.' decimal."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for t in report.trials:
        w.writerow([_fmt(getattr(t, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def report_json(report) -> str:
    return json.dumps(_json_safe(report.to_dict()), indent=2, sort_keys=True)


def write_svg(report, config: CampaignConfig, path) -> None:
    """Boundary of the worst-ratio domain, that trial's W(A) polygon, and node density."""
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    from .numrange import numrange_boundary, random_matrix_in_domain
    from .transforms import quadrature_for_matrix

    domains = config.domain_objects()
    worst = report.worst or {}
    d_idx = worst.get("domain_index", 0)
    fig, (ax, ax2) = plt.subplots(1, 2, figsize=(10, 4.5))
    if domains:
        domain = domains[d_idx]
        t = np.linspace(-3, 3, 400)
        s, _, _ = domain.curve(t)
        ax.plot(s.real, s.imag, "k-", lw=1.2, label=f"boundary ({domain.kind})")
        if worst:
            A = random_matrix_in_domain(domain, worst["n"], _margin_for(config, worst),
                                        worst["seed"], worst["ensemble"], config.n_angles)
            w = numrange_boundary(A, config.n_angles)
            w = np.append(w, w[:1])
            ax.plot(w.real, w.imag, "r-", lw=1, label="W(A), worst ratio")
            quad = quadrature_for_matrix(domain, A, None, config.quad_tol)
            widths = np.diff(quad.breaks)
            mids = 0.5 * (quad.breaks[1:] + quad.breaks[:-1])
            keep = np.abs(mids) < 10
            ax2.semilogy(mids[keep], 16.0 / widths[keep], ".")
            ax2.set_xlabel("parameter t")
            ax2.set_ylabel("nodes per unit t")
        ax.set_aspect("equal", adjustable="datalim")
        ax.legend(loc="upper left", fontsize=8)
    ax.set_title("domain and numerical range")
    ax2.set_title("quadrature node density")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _margin_for(config, worst):
    for ens in config.ensembles:
        if ens["kind"] == worst["ensemble"] and ens["n"] == worst["n"]:
            return ens["margin"]
    return 0.1


def emit_report(report, config: CampaignConfig) -> list[str]:
    """Write whichever outputs the config names; returns the written paths."""
    written = []
    out = config.outputs
    if out.get("csv_path"):
        with open(out["csv_path"], "w", newline="", encoding="utf-8") as fh:
            fh.write(report_csv(report))
        written.append(out["csv_path"])
    if out.get("json_path"):
        with open(out["json_path"], "w", encoding="utf-8") as fh:
            fh.write(report_json(report))
        written.append(out["json_path"])
    if out.get("svg_path"):
        write_svg(report, config, out["svg_path"])
        written.append(out["svg_path"])
    return written

"""CSV/JSON artifact writers and the matplotlib figure renderers.

Every delimited file starts with a comment line embedding the resolved
run configuration, so any output can be reproduced from its header alone.
Floats are written with the shortest round-trip decimal representation.
Figures are rendered straight to files next to the delimited output.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ""
        return repr(value)
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def config_header(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True, default=str)


def write_csv(path, config: dict, columns, rows) -> None:
    """Write rows (sequences aligned with ``columns``) plus a config header."""
    path = Path(path)
    lines = [config_header(config), ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path, config: dict, columns, rows) -> None:
    """JSON mirror of the CSV payload."""
    path = Path(path)
    payload = {
        "config": config,
        "rows": [dict(zip(columns, [None if (isinstance(v, float) and math.isnan(v))
                                    else v for v in row])) for row in rows],
    }
    path.write_text(json.dumps(payload, sort_keys=True, indent=1, default=str)
                    + "\n")


def figure_path(output_path) -> Path:
    return Path(output_path).with_suffix(".png")


def render_convergence(path, records, title: str) -> None:
    """Log-log error plot: root error solid, eigenfunction dotted, rate dashed."""
    ns = [r.n for r in records if not r.error]
    if not ns:
        return
    abs_err = [r.abs_error for r in records if not r.error]
    fun_err = [r.eigfun_error for r in records if not r.error]
    bounds = [r.bound_dn for r in records if not r.error]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(ns, abs_err, "o-", label="|lambda - lambda_N|")
    if any(math.isfinite(v) for v in fun_err):
        ax.loglog(ns, fun_err, "s:", label="eigenfunction error")
    if any(math.isfinite(v) for v in bounds):
        ax.loglog(ns, bounds, "--", color="gray", label="rate D_N")
    ax.set_xlabel("N")
    ax.set_ylabel("error")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_nodes(path, svals, weights, title: str) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    positive = weights > 0
    ax.semilogy(svals[positive], weights[positive], "o")
    ax.set_xlabel("mapped node s")
    ax.set_ylabel("mapped weight")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_bound_comparison(path, ns, measured, bounds, title: str) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.semilogy(ns, measured, "o-", label="measured")
    ax.semilogy(ns, bounds, "--", color="gray", label="bound")
    ax.set_xlabel("N")
    ax.set_ylabel("weighted error")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_spectrum(path, computed, predicted, title: str) -> None:
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    if predicted.size:
        ax.plot(predicted.real, predicted.imag, "x", color="gray",
                markersize=9, label="exact")
    if computed.size:
        ax.plot(computed.real, computed.imag, "o", fillstyle="none",
                label="computed")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_branch(path, records, bifurcations, param_name: str,
                  title: str) -> None:
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    params = np.array([r.param for r in records])
    heads = np.array([r.head for r in records])
    stable = np.array([r.verdict == "stable" for r in records])
    ax.plot(params[stable], heads[stable], "o", markersize=3, color="tab:blue",
            label="stable")
    if np.any(~stable):
        ax.plot(params[~stable], heads[~stable], "o", markersize=3,
                color="tab:red", label="unstable/marginal")
    for bp in bifurcations:
        ax.axvline(bp.param, color="gray", linestyle="--", alpha=0.6)
        ax.text(bp.param, ax.get_ylim()[1], bp.kind, rotation=90, fontsize=7,
                va="top", ha="right")
    ax.set_xlabel(param_name)
    ax.set_ylabel("equilibrium head value")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_hopf_curve(path, rows, title: str) -> None:
    """(tau, m) polylines, one per branch index."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    max_branches = max((len(taus) for _, taus in rows), default=0)
    for branch in range(max_branches):
        pts = [(taus[branch], m) for m, taus in rows if len(taus) > branch]
        if pts:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-",
                    label=f"branch {branch + 1}")
    ax.set_xlabel("tau")
    ax.set_ylabel("m")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

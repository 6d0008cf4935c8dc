"""Static SVG charts from sweep CSVs and analysis tables.

Rendering is byte-deterministic: the Agg backend, a fixed svg.hashsalt, and
stripped date metadata mean identical inputs always produce identical SVG
files, which keeps chart artifacts diffable alongside their CSVs.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402

from .errors import ValidationError  # noqa: E402
from .metrics import read_metrics_csv  # noqa: E402

_FIGSIZE = (7.0, 4.5)


def _save(fig, path: Path, hashsalt: str) -> None:
    with plt.rc_context({"svg.hashsalt": hashsalt}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _series(records, value_fn):
    """Group records into {(learner, m_hyper): (Ns, medians, mins, maxs)}."""
    cells = defaultdict(lambda: defaultdict(list))
    for r in records:
        cells[(r.learner, r.m_hyper)][r.N].append(value_fn(r))
    out = {}
    for key, by_n in cells.items():
        ns = sorted(by_n)
        vals = [np.asarray(by_n[N], dtype=np.float64) for N in ns]
        out[key] = (
            np.array(ns, dtype=np.float64),
            np.array([np.median(v) for v in vals]),
            np.array([v.min() for v in vals]),
            np.array([v.max() for v in vals]),
        )
    return out


def _label(learner: str, m_hyper: int) -> str:
    return f"{learner} m={m_hyper}"


def _line_chart(series, ylabel: str, title: str):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for key in sorted(series):
        ns, med, _, _ = series[key]
        ax.plot(ns, med, marker="o", label=_label(*key))
    ax.set_xscale("log")
    ax.set_xlabel("training sequences N")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def render_charts(csv_path, output_dir) -> list[Path]:
    """Render the three sweep charts: l1, neg_prop, and the spectral-vs-EM
    comparison with min/max whiskers. Returns the written paths.

    Fails before writing anything when the CSV has no data rows or mixes
    experiment ids.
    """
    records = read_metrics_csv(csv_path)
    if not records:
        raise ValidationError(f"{csv_path}: no data rows to chart")
    ids = sorted({r.experiment_id for r in records})
    if len(ids) > 1:
        raise ValidationError(f"{csv_path}: multiple experiment ids {ids} in one chart run")
    eid = ids[0]
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    l1_series = _series(records, lambda r: r.l1)
    fig = _line_chart(l1_series, "normalized L1 error (median)", eid)
    path = out_dir / f"{eid}_l1.svg"
    _save(fig, path, eid)
    written.append(path)

    np_series = _series(records, lambda r: r.neg_prop)
    fig = _line_chart(np_series, "negative-probability proportion (median)", eid)
    path = out_dir / f"{eid}_neg_prop.svg"
    _save(fig, path, eid)
    written.append(path)

    fig, ax = plt.subplots(figsize=_FIGSIZE)
    comparison = {k: v for k, v in l1_series.items() if k[0] in ("spectral", "em")}
    for key in sorted(comparison):
        ns, med, lo, hi = comparison[key]
        ax.errorbar(
            ns, med, yerr=np.vstack([med - lo, hi - med]),
            marker="o", capsize=3, label=_label(*key),
        )
    ax.set_xscale("log")
    ax.set_xlabel("training sequences N")
    ax.set_ylabel("normalized L1 error (median, min-max whiskers)")
    ax.set_title(f"{eid}: spectral vs EM")
    ax.grid(True, which="both", alpha=0.3)
    if comparison:
        ax.legend()
    fig.tight_layout()
    path = out_dir / f"{eid}_comparison.svg"
    _save(fig, path, eid)
    written.append(path)

    return written


def likelihood_curves_chart(curves, labels, path) -> Path:
    """Overlay likelihood curves, each normalized by its own maximum so
    different sequence lengths share one scale."""
    if len(curves) != len(labels) or not curves:
        raise ValidationError("need one label per curve and at least one curve")
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for curve, label in zip(curves, labels):
        peak = curve.values.max()
        scale = peak if peak > 0 else 1.0
        ax.plot(curve.thetas, curve.values / scale, label=str(label))
    ax.set_xlabel("theta (self-transition probability)")
    ax.set_ylabel("likelihood / max")
    ax.set_title("likelihood curves")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    _save(fig, path, "likelihood-curves")
    return path


def consistency_chart(rows, path) -> Path:
    """Per-trial EM-minus-true training log-likelihood gap per sequence,
    against training-set size."""
    if not rows:
        raise ValidationError("no consistency rows to chart")
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ns = sorted({r.N for r in rows})
    gaps_by_n = {N: [] for N in ns}
    for r in rows:
        gaps_by_n[r.N].append((r.em_loglik - r.true_loglik) / r.N)
    for N in ns:
        g = gaps_by_n[N]
        ax.plot([N] * len(g), g, linestyle="none", marker=".", color="tab:gray", alpha=0.6)
    medians = [float(np.median(gaps_by_n[N])) for N in ns]
    ax.plot(ns, medians, marker="o", color="tab:blue", label="median gap")
    ax.axhline(0.0, color="tab:red", linewidth=0.8, linestyle="--", label="true params")
    ax.set_xscale("log")
    ax.set_xlabel("training sequences N")
    ax.set_ylabel("(EM loglik - true loglik) / N")
    ax.set_title("EM vs true parameters on training data")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    _save(fig, path, "em-consistency")
    return path

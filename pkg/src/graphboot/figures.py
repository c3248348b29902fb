"""Figure rendering for experiment reports.

Each experiment kind gets one or two PNG files written next to metrics.csv.
Rendering is best-effort presentation; the CSV/JSON outputs remain the
authoritative record and carry every number shown here.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_experiment_figures"]


def _ok_rows(rows):
    return [r for r in rows if r.get("status") == "ok"]


def _save(fig, out_dir: Path, name: str, paths: list[str]) -> None:
    path = out_dir / name
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    paths.append(str(path))


def _validate_figure(rows, out_dir: Path, paths: list[str]) -> None:
    rows = _ok_rows(rows)
    if not rows:
        return
    motifs = sorted({r["motif"] for r in rows})
    ns = sorted({r["n"] for r in rows})
    fig, ax = plt.subplots(figsize=(6, 4))
    for motif in motifs:
        medians = []
        for n in ns:
            vals = [r["ks"] for r in rows if r["motif"] == motif and r["n"] == n]
            medians.append(np.median(vals) if vals else np.nan)
        pts = [
            (n, r["ks"]) for r in rows for n in [r["n"]] if r["motif"] == motif
        ]
        ax.scatter([p[0] for p in pts], [p[1] for p in pts], s=12, alpha=0.4)
        ax.plot(ns, medians, marker="o", label=f"{motif} (median)")
    ax.set_xlabel("graph size n")
    ax.set_ylabel("two-sample KS distance")
    ax.set_xscale("log", base=2)
    ax.set_ylim(bottom=0)
    ax.legend()
    ax.set_title("Bootstrap vs sampling distribution")
    _save(fig, out_dir, "ks_vs_n.png", paths)

    if any("mse" in r for r in rows):
        fig, ax = plt.subplots(1, 2, figsize=(9, 3.6))
        seen = sorted({(r["n"], r["seed_index"]) for r in rows if "mse" in r})
        per_n = sorted({n for n, _ in seen})
        mse_med = [
            np.median([r["mse"] for r in rows if r.get("mse") is not None and r["n"] == n])
            for n in per_n
        ]
        dev_med = [
            np.median(
                [r["max_dev_over_rho"] for r in rows if "max_dev_over_rho" in r and r["n"] == n]
            )
            for n in per_n
        ]
        ax[0].loglog(per_n, mse_med, marker="o")
        ax[0].loglog(
            per_n,
            [mse_med[0] * (math.log(n) / n) / (math.log(per_n[0]) / per_n[0]) for n in per_n],
            "--",
            label="log n / n guide",
        )
        ax[0].set_xlabel("n")
        ax[0].set_ylabel("median fit MSE")
        ax[0].legend()
        ax[1].plot(per_n, dev_med, marker="o")
        ax[1].set_xlabel("n")
        ax[1].set_ylabel("median max deviation / rho")
        ax[1].set_ylim(bottom=0)
        fig.suptitle("Histogram estimator quality")
        _save(fig, out_dir, "estimator_quality.png", paths)


def _coverage_figure(rows, summary, out_dir: Path, paths: list[str]) -> None:
    cov = summary.get("coverage", {})
    if not cov:
        return
    fig, ax = plt.subplots(figsize=(6, 3.6))
    labels = sorted(cov)
    values = [cov[k] for k in labels]
    ax.bar(range(len(labels)), values)
    ax.axhline(summary.get("level", 0.9), color="k", ls="--", lw=1, label="nominal")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("empirical coverage")
    ax.set_ylim(0, 1.05)
    ax.legend()
    ax.set_title("Percentile-interval coverage")
    _save(fig, out_dir, "coverage.png", paths)


def _clt_figure(rows, samples, out_dir: Path, paths: list[str]) -> None:
    rows = _ok_rows(rows)
    if not rows:
        return
    fig, axes = plt.subplots(1, len(rows), figsize=(4.5 * len(rows), 3.4), squeeze=False)
    for ax, row in zip(axes[0], rows):
        mu, sd = row["mean"], row["sd"]
        sample = samples.get((row["n"], row["motif"])) if samples else None
        if sample is not None:
            ax.hist(sample, bins=40, density=True, alpha=0.65)
        grid = np.linspace(mu - 4 * sd, mu + 4 * sd, 200)
        pdf = np.exp(-((grid - mu) ** 2) / (2 * sd**2)) / (sd * math.sqrt(2 * math.pi))
        ax.plot(grid, pdf, "k--", lw=1, label="matched normal")
        ax.set_title(f"{row['motif']} (n={row['n']}, KS={row['ks_normal']:.3f})")
        ax.legend(fontsize=8)
        ax.set_xlabel("scaled centered density")
    _save(fig, out_dir, "clt_check.png", paths)


def _oracle_figure(rows, out_dir: Path, paths: list[str]) -> None:
    rows = [r for r in rows if "identity_rel_err" in r]
    if not rows:
        return
    fig, ax = plt.subplots(figsize=(6.5, 3.6))
    labels = [f"{r['provider']}/{r['motif']}/n={r['n']}" for r in rows]
    vals = [max(r["identity_rel_err"], 1e-18) for r in rows]
    ax.bar(range(len(vals)), vals)
    ax.set_yscale("log")
    ax.axhline(1e-10, color="r", ls="--", lw=1, label="tolerance")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_ylabel("relative error of second moment")
    ax.legend()
    ax.set_title("Merged-copy identity vs enumeration oracle")
    _save(fig, out_dir, "oracle_errors.png", paths)


def _bootstrap_figure(result, out_dir: Path, paths: list[str]) -> None:
    if result is None:
        return
    per = result.per_motif
    fig, axes = plt.subplots(1, len(per), figsize=(4.5 * len(per), 3.4), squeeze=False)
    for ax, mb in zip(axes[0], per):
        ax.hist(mb.scaled, bins=40, density=True, alpha=0.7)
        ax.set_title(f"{mb.key}: scaled replicates")
        ax.set_xlabel("sqrt(m) (P* - center) / rho_bar^e")
    _save(fig, out_dir, "replicate_distribution.png", paths)


def render_experiment_figures(kind, rows, summary, out_dir: Path, payload=None):
    paths: list[str] = []
    if kind in ("validate-theorem1", "validate-theorem2"):
        _validate_figure(rows, out_dir, paths)
    elif kind == "coverage":
        _coverage_figure(rows, summary, out_dir, paths)
    elif kind == "clt-check":
        _clt_figure(rows, payload, out_dir, paths)
    elif kind == "oracle":
        _oracle_figure(rows, out_dir, paths)
    elif kind == "bootstrap":
        _bootstrap_figure(payload, out_dir, paths)
    return paths

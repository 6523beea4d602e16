"""Matplotlib figures for simulation records and the gain table."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_error_rates(records_by_scheme: dict, path, rate: str = "fer") -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for name, recs in records_by_scheme.items():
        recs = sorted(recs, key=lambda r: r.snr_db)
        xs = [r.snr_db for r in recs]
        ys = [getattr(r, rate) for r in recs]
        hw = [getattr(r, f"{rate}_halfwidth") for r in recs]
        ax.errorbar(xs, ys, yerr=hw, marker="o", capsize=2, label=name)
    ax.set_yscale("log")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel(rate.upper())
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_gain_report(rows, path) -> Path:
    labels = [f"Ex{r['example']} {r['states']}st" for r in rows]
    x = range(len(rows))
    fig, ax = plt.subplots(figsize=(7.0, 3.6))
    ax.bar([i - 0.2 for i in x], [r["gamma_p_db"] for r in rows], width=0.4, label="gain (Delta_p)")
    ax.bar([i + 0.2 for i in x], [r["gamma_s_db"] for r in rows], width=0.4, label="gain (Delta_s)")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("asymptotic gain (dB)")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

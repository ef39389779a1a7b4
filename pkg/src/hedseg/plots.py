"""Static SVG diagnostics for sweep and dataset runs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from hedseg.harness import mean_by_gamma_index  # noqa: E402

plt.rcParams["svg.hashsalt"] = "hedseg"
_META = {"Date": None, "Creator": None}

SINGLE_COLOR = "tab:blue"
UNION_COLOR = "tab:orange"


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def f1_vs_gamma(records, path):
    rows = mean_by_gamma_index(records)
    fig, ax = plt.subplots(figsize=(6, 4))
    if rows:
        g = [r[0] for r in rows]
        ax.plot(g, [r[2] for r in rows], "o-", color=SINGLE_COLOR, label="F1 single")
        ax.plot(g, [r[3] for r in rows], "s-", color=UNION_COLOR, label="F1 union")
        ax.set_xscale("log")
    ax.set_xlabel("gamma")
    ax.set_ylabel("mean F1")
    ax.set_ylim(0, 1.02)
    ax.legend()
    _save(fig, path)


def f1_histograms(records, path, bins=20):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist([r.f1_single for r in records], bins=bins, range=(0, 1), alpha=0.6,
            color=SINGLE_COLOR, label="F1 single")
    ax.hist([r.f1_union for r in records], bins=bins, range=(0, 1), alpha=0.6,
            color=UNION_COLOR, label="F1 union")
    ax.set_xlabel("F1")
    ax.set_ylabel("images")
    ax.legend()
    _save(fig, path)


def k_vs_gamma(records, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter([r.gamma for r in records], [r.K for r in records], s=10)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("gamma")
    ax.set_ylabel("K")
    _save(fig, path)


def f1_vs_k(records, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ks = [r.K for r in records]
    ax.scatter(ks, [r.f1_single for r in records], s=10, color=SINGLE_COLOR, label="F1 single")
    ax.scatter(ks, [r.f1_union for r in records], s=10, color=UNION_COLOR, label="F1 union")
    ax.set_xscale("log")
    ax.set_xlabel("K")
    ax.set_ylabel("F1")
    ax.legend()
    _save(fig, path)


def k_histogram(records, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ks = [r.K for r in records]
    if ks:
        ax.hist(ks, bins=range(min(ks), max(ks) + 2))
    ax.set_xlabel("K")
    ax.set_ylabel("records")
    _save(fig, path)


def write_all(records, out_dir, sweep: bool = True) -> list[Path]:
    out_dir = Path(out_dir)
    records = [r for r in records if r.ok]
    made = []
    jobs = [("f1_hist.svg", f1_histograms), ("f1_vs_K.svg", f1_vs_k), ("K_hist.svg", k_histogram)]
    if sweep:
        jobs += [("f1_vs_gamma.svg", f1_vs_gamma), ("K_vs_gamma.svg", k_vs_gamma)]
    for name, fn in jobs:
        fn(records, out_dir / name)
        made.append(out_dir / name)
    return made

"""Best-effort SVG plots.  Decoration only: no pass/fail logic lives here.

Output is made byte-reproducible by pinning the SVG hash salt and dropping the
date metadata.
"""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    matplotlib.rcParams["svg.hashsalt"] = "mimicry"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    _pyplot().close(fig)


def save_sample_paths(ensemble, path: str, max_paths: int = 30):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    t = ensemble.grid.times
    for row in ensemble.values[:max_paths]:
        ax.plot(t, row, lw=0.8, alpha=0.7)
    ax.set_xlabel("t")
    ax.set_ylabel("X_t")
    ax.set_title(f"{min(max_paths, ensemble.n_paths)} sample paths (seed {ensemble.seed})")
    _save(fig, path)


def save_ecdf_overlay(sample_a, sample_b, labels, path: str):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for sample, label in zip((sample_a, sample_b), labels):
        xs = np.sort(np.asarray(sample))
        ax.step(xs, np.arange(1, xs.size + 1) / xs.size, where="post", label=label)
    ax.set_xlabel("value")
    ax.set_ylabel("ECDF")
    ax.legend()
    _save(fig, path)


def save_qq(sample_a, sample_b, labels, path: str):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 5))
    qs = np.linspace(0.005, 0.995, 199)
    qa = np.quantile(np.asarray(sample_a), qs)
    qb = np.quantile(np.asarray(sample_b), qs)
    ax.plot(qa, qb, ".", ms=3)
    lims = [min(qa[0], qb[0]), max(qa[-1], qb[-1])]
    ax.plot(lims, lims, "k--", lw=0.8)
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    _save(fig, path)

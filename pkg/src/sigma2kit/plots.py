"""Figure rendering for the CLI report path.

Every subcommand that writes a CSV series also renders a small matplotlib
figure next to it (same basename, .png) unless plotting is disabled.
Figures are informational; the CSV/JSON stay the machine-readable truth.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_profile(profile, path, title: str = "") -> Path:
    """u, u' and the sigma pair along a radial profile."""
    s1, s2 = profile.sigma_columns()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.2, 3.4))
    ax1.plot(profile.r, profile.u, label="u")
    ax1.plot(profile.r, profile.du, label="u'", alpha=0.7)
    ax1.set_xlabel("r")
    ax1.legend(frameon=False)
    ax2.plot(profile.r, s1, label="sigma1")
    ax2.plot(profile.r, s2, label="sigma2")
    ax2.axhline(0.0, color="k", lw=0.6)
    ax2.set_xlabel("r")
    ax2.legend(frameon=False)
    if title:
        fig.suptitle(title)
    return _finish(fig, path)


def plot_barrier(r, sigma2_vals, bound, path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.loglog(r, -np.asarray(sigma2_vals), label="-sigma2")
    if bound is not None:
        ax.loglog(r, -np.asarray(bound), "--", label="-bound")
    ax.set_xlabel("r")
    ax.legend(frameon=False)
    if title:
        fig.suptitle(title)
    return _finish(fig, path)


def plot_homotopy(states, path, title: str = "") -> Path:
    ts = [s.t for s in states]
    res = [max(s.residual_norm, 1e-17) for s in states]
    margins = [s.cone_margin for s in states]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.2, 3.4))
    ax1.semilogy(ts, res, "o-", ms=3)
    ax1.set_xlabel("t")
    ax1.set_ylabel("residual")
    ax2.plot(ts, margins, "o-", ms=3)
    ax2.set_xlabel("t")
    ax2.set_ylabel("min cone margin")
    if title:
        fig.suptitle(title)
    return _finish(fig, path)


def plot_eigen_function(x, v, path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(x, v)
    ax.set_xlabel("polar coordinate")
    ax.set_ylabel("v")
    if title:
        fig.suptitle(title)
    return _finish(fig, path)


def plot_sweep_scalar(labels, values, path, ylabel: str = "", title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5.6, 3.4))
    ax.plot(range(len(values)), values, "o-")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
    ax.set_ylabel(ylabel)
    if title:
        fig.suptitle(title)
    return _finish(fig, path)

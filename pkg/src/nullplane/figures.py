"""Matplotlib rendering of report curves, written next to the delimited data.

Figures are rendered with the Agg backend and without volatile metadata so
that reruns of the same scenario produce byte-identical image files.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_SAVE_KW = {"dpi": 110, "metadata": {"Software": None}}


def _finish(fig, path: str) -> str:
    fig.tight_layout()
    tmp = path + ".tmp"
    fig.savefig(tmp, format="png", **_SAVE_KW)
    plt.close(fig)
    os.replace(tmp, path)
    return path


def render_sweep(t, s, s1, s2, path: str, title: str) -> str:
    fig, axes = plt.subplots(3, 1, figsize=(6.0, 7.0), sharex=True)
    axes[0].plot(t, s, "o-", ms=3, color="tab:blue")
    axes[0].set_ylabel("S(t)")
    axes[0].set_title(title)
    axes[1].plot(t, s1, "o-", ms=3, color="tab:orange")
    axes[1].set_ylabel("S'(t)")
    axes[2].plot(t, s2, "o-", ms=3, color="tab:green")
    axes[2].axhline(0.0, color="k", lw=0.6)
    axes[2].set_ylabel("S''(t)")
    axes[2].set_xlabel("t")
    return _finish(fig, path)


def render_curve(x, y, path: str, title: str, xlabel: str, ylabel: str,
                 logy: bool = False) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(x, y, "o-", ms=3, color="tab:blue")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    return _finish(fig, path)

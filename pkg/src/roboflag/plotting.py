"""Static figures for study outputs, written next to their CSV files."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "figure.figsize": (5.0, 3.4),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "savefig.dpi": 150,
    # fixed metadata keeps repeated renders identical
    "svg.hashsalt": "roboflag",
}


def figure_path(csv_path: str | Path, suffix: str = "") -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + suffix + ".png")


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_cdf(values_by_label: Mapping[str, tuple[np.ndarray, np.ndarray]], xlabel: str,
             path: str | Path) -> Path:
    """Fraction of instances solved versus cost, one step curve per label."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for label, (xs, frac) in values_by_label.items():
            if len(xs):
                ax.step(np.r_[xs[0], xs], np.r_[0.0, frac], where="post", label=label)
        ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("fraction solved")
        ax.set_ylim(0, 1.02)
        ax.legend()
        return _save(fig, Path(path))


def plot_pd(k: Sequence[int], pd: Mapping[str, Sequence[float]], path: str | Path) -> Path:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for label, curve in pd.items():
            ax.plot(k, curve, marker=".", markersize=3, label=label)
        ax.set_xlabel("branches k")
        ax.set_ylabel("PD(k) [%]")
        ax.legend()
        return _save(fig, Path(path))


def plot_phase(control: Sequence[float], fraction_yes: Sequence[float],
               mean_branches: Sequence[float], xlabel: str, path: str | Path,
               log_x: bool = True) -> Path:
    """Fraction of yes-instances and mean search effort on twin axes."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(control, fraction_yes, "o-", color="C0", markersize=3)
        ax.set_ylabel("fraction yes", color="C0")
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel(xlabel)
        if log_x:
            ax.set_xscale("log")
        ax2 = ax.twinx()
        ax2.plot(control, mean_branches, "s--", color="C1", markersize=3)
        ax2.set_ylabel("mean branches", color="C1")
        ax2.grid(False)
        return _save(fig, Path(path))


def plot_sim(fraction_entered: Sequence[float], label: str, path: str | Path) -> Path:
    """Histogram of per-seed fraction entered."""
    data = np.asarray(fraction_entered, dtype=float)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        bins = np.linspace(-0.125, 1.125, 6) if data.size else 5
        ax.hist(data, bins=bins, color="C2", rwidth=0.85)
        if data.size:
            ax.axvline(data.mean(), color="k", lw=1, ls=":")
            ax.set_title(f"{label}: mean {data.mean():.3f}")
        ax.set_xlabel("fraction of attackers entering")
        ax.set_ylabel("seeds")
        return _save(fig, Path(path))

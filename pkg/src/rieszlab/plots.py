"""Deterministic figure rendering for experiment reports.

Each experiment kind gets one PNG rendered next to its CSV/JSON artifacts.
Figures are byte-reproducible across runs: Agg backend, fixed size and dpi,
and the PNG Software metadata stripped.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGSIZE = (7.0, 4.4)
DPI = 110


def save_png(fig, path) -> None:
    fig.savefig(path, format="png", dpi=DPI, metadata={"Software": None})
    plt.close(fig)


def _new_axes(title: str):
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def plot_character_report(rows: list[dict], title: str, path) -> None:
    """|estimate - expected| per character with the tolerance line."""
    fig, ax = _new_axes(title)
    devs = [row["deviation"] for row in rows]
    tols = [row["tolerance"] for row in rows]
    xs = np.arange(len(rows))
    ax.bar(xs, devs, color="#336699", label="|estimate - expected|")
    if tols:
        ax.axhline(tols[0], color="#aa3333", linestyle="--", label="tolerance")
    ax.set_xlabel("character index")
    ax.set_ylabel("deviation")
    ax.legend()
    save_png(fig, path)


def plot_window_series(
    spans: list[float], values: list[float], title: str, path,
    hline: float | None = None, hline_label: str = "",
    ylabel: str = "window estimate",
) -> None:
    fig, ax = _new_axes(title)
    ax.plot(spans, values, marker="o", color="#336699")
    if hline is not None:
        ax.axhline(hline, color="#aa3333", linestyle="--", label=hline_label)
        ax.legend()
    ax.set_xscale("log")
    ax.set_xlabel("window span")
    ax.set_ylabel(ylabel)
    save_png(fig, path)


def plot_membership(
    ns: np.ndarray, measures: np.ndarray, threshold: float, title: str, path,
    max_points: int = 4000,
) -> None:
    """Measure series with the membership threshold; decimated for large horizons."""
    fig, ax = _new_axes(title)
    step = max(1, len(ns) // max_points)
    ax.plot(ns[::step], measures[::step], ".", markersize=2, color="#336699")
    ax.axhline(threshold, color="#aa3333", linestyle="--", label="membership threshold")
    ax.set_xlabel("n")
    ax.set_ylabel("intersection measure")
    ax.legend()
    save_png(fig, path)


def plot_block_neighbourhood(
    ns: np.ndarray, fracs: list[np.ndarray], delta: float, a: int, title: str, path
) -> None:
    fig, ax = _new_axes(title)
    for i, fr in enumerate(fracs):
        ax.plot(ns, fr, ".", markersize=3, label=f"frac of order-{i} difference")
    ax.axhline(delta, color="#aa3333", linestyle="--", label="threshold")
    ax.axvline(a, color="#33aa55", linestyle=":", label="witness start")
    ax.set_xlabel("n")
    ax.set_ylabel("fractional part")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    save_png(fig, path)


def plot_vector_decrease(befores: list[tuple], afters: list[tuple], title: str, path) -> None:
    """Lexicographic rank proxy: total class count before/after per trial."""
    fig, ax = _new_axes(title)
    xs = np.arange(len(befores))
    ax.plot(xs, [sum(b) for b in befores], "o", markersize=3, label="before", color="#336699")
    ax.plot(xs, [sum(a) for a in afters], "x", markersize=3, label="after", color="#aa3333")
    ax.set_xlabel("trial")
    ax.set_ylabel("total equivalence classes")
    ax.legend()
    save_png(fig, path)


def plot_haar_values(rows: list[dict], title: str, path) -> None:
    fig, ax = _new_axes(title)
    vals = [abs(complex(r["integral_re"], r["integral_im"])) for r in rows]
    expected = [r["expected"] for r in rows]
    xs = np.arange(len(rows))
    ax.plot(xs, vals, "o", markersize=3, label="|integral|", color="#336699")
    ax.plot(xs, expected, "_", markersize=8, label="expected", color="#aa3333")
    ax.set_xlabel("character index")
    ax.set_ylabel("value")
    ax.legend()
    save_png(fig, path)

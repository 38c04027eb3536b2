"""Static figures for the CLI report path.

Everything renders through the Agg canvas with the PNG ``Software`` tag
dropped, so a rerun with the same data writes the same bytes.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy import stats  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.6),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.bbox": "tight",
}
PNG_METADATA = {"Software": None}


def _save(fig, path):
    fig.savefig(path, format="png", metadata=PNG_METADATA)
    plt.close(fig)


def plot_sweep(result, path):
    """Mean and 5-95% band of the coupling estimates against the true profile."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        u = np.asarray(result.u)
        ax.fill_between(u, result.p5, result.p95, color="0.85", label="5-95% band")
        ax.plot(u, result.mean, "o-", color="C0", ms=3, label="mean estimate")
        ax.plot(u, result.truth, "--", color="k", lw=1, label="true $a_{12}(u)$")
        ax.set_xlabel("rescaled time $u$")
        ax.set_ylabel("coupling")
        ax.set_xlim(0, 1)
        ax.legend(frameon=False)
        _save(fig, path)


def plot_size_power(table, path):
    """Rejection frequency per level across ``u``, nominal levels dotted."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        u = np.asarray(table.u)
        for k, level in enumerate(table.levels):
            color = f"C{k}"
            ax.errorbar(u, table.rates[k], yerr=table.se[k], fmt="o-", ms=3, capsize=2,
                        color=color, label=f"$\\alpha$ = {level:g}")
            ax.axhline(level, color=color, ls=":", lw=0.8)
        ax.set_xlabel("rescaled time $u$")
        ax.set_ylabel("rejection frequency")
        ax.set_ylim(0, 1)
        ax.legend(frameon=False, ncol=2)
        _save(fig, path)


def plot_gc_curve(u, gc, path, label="GC"):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(u, gc, "o-", ms=3, color="C0")
        ax.set_xlabel("rescaled time $u$")
        ax.set_ylabel(label)
        _save(fig, path)


def plot_calibration(statistics, path):
    """Empirical CDF of the null statistic against chi-squared(1)."""
    x = np.sort(np.asarray(statistics, dtype=float))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.step(x, np.arange(1, x.size + 1) / x.size, where="post", color="C0", label="empirical")
        grid = np.linspace(0.0, max(float(x[-1]), 8.0), 400)
        ax.plot(grid, stats.chi2.cdf(grid, 1), "--", color="k", lw=1, label="$\\chi^2_1$")
        ax.set_xlabel("statistic")
        ax.set_ylabel("CDF")
        ax.legend(frameon=False)
        _save(fig, path)

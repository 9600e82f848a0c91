"""Static figures of optimal strategies, rendered off-screen to PNG."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def strategy_figure(path, times, trades, curve_t, lam_vals, clause_vals, title=None,
                    clause_ylim=None):
    """Bars of trades with depth (dashed) and a manipulation clause (solid).

    ``clause_ylim`` clips the clause axis; values outside are simply off the
    plot.
    """
    times = np.asarray(times)
    trades = np.asarray(trades)
    width = 0.6 * float(np.min(np.diff(times))) if len(times) > 1 else 0.02
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    colors = np.where(trades >= 0, "tab:blue", "tab:red")
    ax.bar(times, trades, width=width, color=colors, label="trades")
    ax.axhline(0.0, color="black", lw=0.6)
    ax.set_xlabel("t")
    ax.set_ylabel("shares")
    ax2 = ax.twinx()
    ax2.plot(curve_t, lam_vals, "k--", lw=1.0, label="depth")
    ax2.plot(curve_t, clause_vals, "k-", lw=1.2, label="clause")
    if clause_ylim is not None:
        ax2.set_ylim(*clause_ylim)
    lines = ax.get_legend_handles_labels()
    lines2 = ax2.get_legend_handles_labels()
    ax.legend(lines[0] + lines2[0], lines[1] + lines2[1], loc="upper center", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

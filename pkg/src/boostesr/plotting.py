"""Figures rendered next to the delimited sweep outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "figure.figsize": (5.0, 3.6),
}


def _line(ax, fit, xs, **kw):
    x = np.linspace(min(xs), max(xs), 50)
    ax.plot(x, fit["slope"] * x + fit["intercept"], **kw)


def esr_regression_figure(rows, fits, path, quantity="esr_raw_mohm"):
    """Estimated ESR against entered ESR, one regression line per capacitor count."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for fit in (f for f in fits if f["quantity"] == quantity):
            group = [r for r in rows if r["n_caps"] == fit["n_caps"] and not r["error"]]
            xs = [r["esr_entered_mohm"] for r in group]
            ys = [r[f"{quantity}_mean"] for r in group]
            err = [r[f"{quantity}_std"] for r in group]
            c_uf = group[0]["c_entered_uf"]
            line = ax.errorbar(xs, ys, yerr=err, fmt="o", ms=3, capsize=2,
                               label=f"C = {c_uf:.0f} uF: y = {fit['slope']:.3f}x + {fit['intercept']:.1f}")
            _line(ax, fit, xs, color=line[0].get_color(), lw=1)
        ax.set_xlabel("entered ESR (mOhm)")
        ax.set_ylabel("estimated ESR (mOhm)" + (" raw" if quantity == "esr_raw_mohm" else ""))
        ax.legend(loc="upper left")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def capacitance_regression_figure(rows, fits, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        good = [r for r in rows if not r["error"]]
        xs = [r["c_entered_uf"] for r in good]
        ax.errorbar(xs, [r["c_uf_mean"] for r in good], yerr=[r["c_uf_std"] for r in good],
                    fmt="o", ms=3, capsize=2, label="estimate")
        for fit in (f for f in fits if f["quantity"] == "c_uf"):
            _line(ax, fit, xs, lw=1, label=f"y = {fit['slope']:.3f}x + {fit['intercept']:.2f}")
        ax.plot(xs, xs, "k:", lw=0.8, label="entered")
        ax.set_xlabel("entered C (uF)")
        ax.set_ylabel("estimated C (uF)")
        ax.legend(loc="upper left")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def waveform_figure(frame, path, segmented=None):
    """The four acquired channels of one period."""
    t_us = frame.t * 1e6
    with plt.rc_context(RC):
        fig, axes = plt.subplots(4, 1, sharex=True, figsize=(5.0, 6.0))
        for ax, name, label in zip(axes, ("i_l", "v_out", "v_c", "v_mos"),
                                   ("i_L (A)", "v_out (V)", "v_C (V)", "v_MOS (V)")):
            ax.plot(t_us, getattr(frame, name), lw=0.8)
            ax.set_ylabel(label)
            if segmented is not None:
                ax.axvspan(t_us[segmented.on_indices.start], t_us[segmented.on_indices.stop - 1],
                           color="0.85", zorder=0)
        axes[-1].set_xlabel("t (us)")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)

"""Static figure output for run reports.

All figures are deterministic files (fixed size, no timestamps); the CSV
data they render is always written alongside by the runner, so plots are
presentation only.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

ERROR_KEYS = ("ztilde1", "ztilde2", "wtilde11", "wtilde12", "z1_dev", "z2_dev")
STATE_KEYS = ("z1_norm", "z2_norm", "u1_norm", "v_norm")


def emit_plots(report, plot_dir) -> list:
    """Write the standard figure set for one run; returns the file list."""
    out = Path(plot_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    err = {k: report.series[k] for k in ERROR_KEYS if k in report.series}
    if err:
        fig, ax = plt.subplots(figsize=(6, 4))
        for name, vals in err.items():
            ax.semilogy(report.times, np.maximum(vals, 1e-300), label=name)
        ax.set_xlabel("t")
        ax.set_ylabel("norm")
        ax.legend(fontsize=8)
        ax.set_title("error norms")
        fig.tight_layout()
        path = out / "errors.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)

    state = {k: report.series[k] for k in STATE_KEYS if k in report.series}
    if state:
        fig, ax = plt.subplots(figsize=(6, 4))
        for name, vals in state.items():
            ax.plot(report.times, vals, label=name)
        ax.set_xlabel("t")
        ax.set_ylabel("norm")
        ax.legend(fontsize=8)
        ax.set_title("state and input norms")
        fig.tight_layout()
        path = out / "state.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)

    if report.lyapunov is not None:
        rep = report.lyapunov
        fig, axes = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
        axes[0].semilogy(rep["times"], np.maximum(rep["V"], 1e-300))
        axes[0].set_ylabel("V")
        axes[1].plot(rep["times"], rep["dVdt"], lw=0.7, label="dV/dt")
        axes[1].plot(rep["times"], rep["bound"], lw=0.7, label="bound")
        axes[1].set_xlabel("t")
        axes[1].legend(fontsize=8)
        fig.tight_layout()
        path = out / "lyapunov.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)

    if report.pe_times is not None:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.semilogy(report.pe_times, np.maximum(report.pe_kappas, 1e-300))
        ax.set_xlabel("window start")
        ax.set_ylabel("excitation level")
        ax.set_title("sliding-window PE level")
        fig.tight_layout()
        path = out / "kappa.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)

    traj = report.trajectory
    if traj is not None:
        for name in ("what11", "what"):
            if name not in traj.components:
                continue
            arr = traj.components[name]
            for frac, tag in ((0, "start"), (len(arr) - 1, "end")):
                fig, ax = plt.subplots(figsize=(4.6, 4))
                img = arr[frac][:, :, 0, 0]
                im = ax.imshow(img, origin="lower", cmap="RdBu_r")
                fig.colorbar(im, ax=ax, shrink=0.85)
                ax.set_title(f"{name} at t={traj.times[frac]:.2f}")
                fig.tight_layout()
                path = out / f"{name}_{tag}.png"
                fig.savefig(path, dpi=110)
                plt.close(fig)
                written.append(path)
            break
    return written


def plot_sweep(rows, plot_dir) -> list:
    out = Path(plot_dir)
    out.mkdir(parents=True, exist_ok=True)
    amps = [r["amplitude"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(amps, [r["steady_max"] for r in rows], "o", label="steady max")
    ax.plot(amps, [r["steady_avg"] for r in rows], "o", label="steady avg")
    ax.set_xlabel("perturbation amplitude")
    ax.set_ylabel("steady-state activity norm")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out / "sweep.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return [path]

"""Figure rendering for experiment reports. Headless (Agg) only."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _save(fig, path):
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)


def plot_loss_curves(report, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ep = report.loss_curves["episodes"]
    for rr in report.realizations:
        ax.semilogy(np.arange(1, len(rr.record.loss_mean) + 1), rr.record.loss_mean,
                    color="0.75", lw=0.8)
    ax.semilogy(ep, report.loss_curves["mean"], color="C0", lw=2.0, label="mean")
    ax.set_xlabel("episode")
    ax.set_ylabel("batch loss")
    ax.set_title("training convergence")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_constellation(report, path, realization=0):
    rr = report.realizations[realization]
    y = rr.constellation_received
    norm = np.linalg.norm(y, axis=0, keepdims=True)
    norm[norm == 0] = 1.0
    y = np.sqrt(y.shape[0]) * y / norm
    fig, ax = plt.subplots(figsize=(5, 5))
    for k in range(y.shape[0]):
        ax.scatter(y[k].real, y[k].imag, s=6, alpha=0.6, label=f"user {k}")
    ideal = np.unique(np.round(rr.constellation_ideal.ravel(), 12))
    ax.scatter(ideal.real, ideal.imag, marker="x", s=80, color="k", label="ideal")
    ax.set_xlabel("in-phase")
    ax.set_ylabel("quadrature")
    ax.set_title(f"received constellation (realization {realization})")
    ax.set_aspect("equal")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, path)


def plot_metrics(report, path):
    snr = report.metrics["snr_db"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ser = np.asarray(report.metrics["ser"], dtype=float)
    floor = 1.0 / (report.scenario.payload_slots * max(report.scenario.users.count, 1))
    ax1.semilogy(snr, np.maximum(ser, floor * 1e-1), "o-")
    ax1.set_xlabel("SNR (dB)")
    ax1.set_ylabel("symbol error rate")
    ax1.grid(True, which="both", alpha=0.3)
    ax2.plot(snr, report.metrics["sum_rate"], "s-")
    ax2.set_xlabel("SNR (dB)")
    ax2.set_ylabel("sum rate (bit/s/Hz)")
    ax2.grid(True, alpha=0.3)
    fig.suptitle(report.kind)
    fig.tight_layout()
    _save(fig, path)


def plot_diagonality(report, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    layer = report.diagonality["layer"]
    ax.semilogy(layer, report.diagonality["avg_offdiag_power"], "o-",
                label="off-diagonal power")
    ax.semilogy(layer, report.diagonality["avg_diag_power"], "s-",
                label="diagonal power")
    ax.set_xlabel("layers applied")
    ax.set_ylabel("normalized power")
    ax.set_title("interference collapse through the stack")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def render_report_figures(report, out_dir):
    """Render the standard figure set; returns the list of files written."""
    import os

    written = []
    jobs = [
        ("loss_curves.png", lambda p: plot_loss_curves(report, p)),
        ("constellation.png", lambda p: plot_constellation(report, p)),
        ("metrics.png", lambda p: plot_metrics(report, p)),
        ("diagonality.png", lambda p: plot_diagonality(report, p)),
    ]
    for name, fn in jobs:
        path = os.path.join(out_dir, name)
        fn(path)
        written.append(name)
    return written

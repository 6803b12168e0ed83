"""Delimited/JSON report writing.

Everything here is byte-deterministic for a fixed config+seed: floats are
written with %.17g (round-trip exact), line endings are LF, and manifest
keys are sorted. Wall-clock numbers are quarantined in timings.json so the
rest of the directory can be compared byte-for-byte across reruns.
"""

import json
import os

import numpy as np

from . import __version__ as _pkg_version
from .config import config_hash
from .core import save_phase_book

MANIFEST_NAME = "manifest.json"
TIMINGS_NAME = "timings.json"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path, payload):
    with open(path, "w", encoding="ascii", newline="") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, ensure_ascii=True)
        fh.write("\n")


def _versions() -> dict:
    import matplotlib
    import scipy

    return {
        "package": _pkg_version,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
    }


def write_report(report, out_dir, config=None, figures=True, timings=None) -> dict:
    """Write the full report directory for one experiment. Returns the
    manifest dict. `config` is the raw config echo to embed; `timings`
    (optional dict) lands in timings.json, never in the manifest."""
    os.makedirs(out_dir, exist_ok=True)
    files = []

    rows = []
    snr = report.metrics["snr_db"]
    for j in range(len(snr)):
        rows.append(
            (
                snr[j],
                report.metrics["ser"][j],
                report.metrics["ser_std"][j],
                report.metrics["sum_rate"][j],
                report.metrics["sum_rate_std"][j],
                report.metrics["mse"][j],
                report.metrics["mse_std"][j],
            )
        )
    _write_csv(
        os.path.join(out_dir, "metrics.csv"),
        ["snr_db", "ser", "ser_std", "sum_rate", "sum_rate_std", "mse", "mse_std"],
        rows,
    )
    files.append("metrics.csv")

    _write_csv(
        os.path.join(out_dir, "diagonality.csv"),
        ["layer", "avg_diag_power", "avg_offdiag_power", "offdiag_suppression_db"],
        [
            (
                report.diagonality["layer"][l],
                report.diagonality["avg_diag_power"][l],
                report.diagonality["avg_offdiag_power"][l],
                report.diagonality["offdiag_suppression_db"][l],
            )
            for l in range(len(report.diagonality["layer"]))
        ],
    )
    files.append("diagonality.csv")

    _write_csv(
        os.path.join(out_dir, "loss_curve.csv"),
        ["episode", "loss_mean", "loss_std"],
        zip(
            report.loss_curves["episodes"],
            report.loss_curves["mean"],
            report.loss_curves["std"],
        ),
    )
    files.append("loss_curve.csv")

    for rr in report.realizations:
        name = f"train_record_r{rr.index}.csv"
        _write_csv(
            os.path.join(out_dir, name),
            ["episode", "loss_mean", "loss_std", "eta"],
            rr.record.rows(),
        )
        files.append(name)

        name = f"metrics_r{rr.index}.csv"
        _write_csv(
            os.path.join(out_dir, name),
            ["snr_db", "ser", "sum_rate", "mse"],
            [
                (s, rr.metrics[float(s)]["ser"], rr.metrics[float(s)]["sum_rate"],
                 rr.metrics[float(s)]["mse"])
                for s in snr
            ],
        )
        files.append(name)

        name = f"constellation_r{rr.index}.csv"
        y = rr.constellation_received
        ideal = rr.constellation_ideal
        rows = []
        for t in range(y.shape[1]):
            for k in range(y.shape[0]):
                rows.append((t, k, y[k, t].real, y[k, t].imag,
                             ideal[k, t].real, ideal[k, t].imag))
        _write_csv(
            os.path.join(out_dir, name),
            ["slot", "user", "re", "im", "ideal_re", "ideal_im"],
            rows,
        )
        files.append(name)

        name = f"phasebook_r{rr.index}.txt"
        save_phase_book(rr.pb, os.path.join(out_dir, name))
        files.append(name)

    if figures:
        from .plots import render_report_figures

        files.extend(render_report_figures(report, out_dir))

    manifest = {
        "kind": report.kind,
        "master_seed": report.scenario.master_seed,
        "realizations": report.scenario.realizations,
        "snr_grid_db": [float(s) for s in snr],
        "noise_free_mse_mean": report.noise_free_mse["mean"],
        "noise_free_mse_std": report.noise_free_mse["std"],
        "final_loss_mean": float(report.loss_curves["mean"][-1]),
        "files": sorted(files) + [MANIFEST_NAME],
        "versions": _versions(),
    }
    if config is not None:
        manifest["config"] = config
        manifest["config_hash"] = config_hash(config)
    _write_json(os.path.join(out_dir, MANIFEST_NAME), manifest)

    if timings is not None:
        _write_json(os.path.join(out_dir, TIMINGS_NAME), timings)

    return manifest


def write_sweep_report(axis, sweep_results, out_dir, config=None, figures=True,
                       timings=None) -> dict:
    """Write a sweep summary: one row per (axis value, SNR point), plus a
    noise-free MSE column, and an overview figure."""
    os.makedirs(out_dir, exist_ok=True)
    files = []

    rows = []
    for value, rep in sweep_results:
        snr = rep.metrics["snr_db"]
        if len(snr) == 0:
            rows.append((value, float("nan"), float("nan"), float("nan"),
                         float("nan"), rep.noise_free_mse["mean"]))
        for j in range(len(snr)):
            rows.append(
                (
                    value,
                    snr[j],
                    rep.metrics["ser"][j],
                    rep.metrics["sum_rate"][j],
                    rep.metrics["mse"][j],
                    rep.noise_free_mse["mean"],
                )
            )
    _write_csv(
        os.path.join(out_dir, "sweep.csv"),
        ["value", "snr_db", "ser", "sum_rate", "mse", "noise_free_mse"],
        rows,
    )
    files.append("sweep.csv")

    if figures:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
        values = [v for v, _ in sweep_results]
        nf = [rep.noise_free_mse["mean"] for _, rep in sweep_results]
        ax1.semilogy(values, nf, "o-")
        ax1.set_xlabel(axis)
        ax1.set_ylabel("noise-free constellation MSE")
        ax1.grid(True, which="both", alpha=0.3)
        top_ser = []
        for v, rep in sweep_results:
            s = rep.metrics["ser"]
            top_ser.append(s[-1] if len(s) else float("nan"))
        floor = 1e-6
        ax2.semilogy(values, np.maximum(np.asarray(top_ser, dtype=float), floor), "s-")
        ax2.set_xlabel(axis)
        ax2.set_ylabel("SER at top SNR")
        ax2.grid(True, which="both", alpha=0.3)
        fig.suptitle(f"sweep over {axis}")
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, "sweep.png"), dpi=150,
                    metadata={"Software": None})
        plt.close(fig)
        files.append("sweep.png")

    manifest = {
        "kind": f"sweep_{axis}",
        "axis": axis,
        "values": [float(v) for v, _ in sweep_results],
        "files": sorted(files) + [MANIFEST_NAME],
        "versions": _versions(),
    }
    if config is not None:
        manifest["config"] = config
        manifest["config_hash"] = config_hash(config)
    _write_json(os.path.join(out_dir, MANIFEST_NAME), manifest)
    if timings is not None:
        _write_json(os.path.join(out_dir, TIMINGS_NAME), timings)
    return manifest

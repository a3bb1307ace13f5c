"""Figure rendering for sweep outputs.

Each sweep command saves a PNG next to its CSV so a run is inspectable
without extra tooling. The CSV stays the primary, schema-stable artifact.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_GRID = dict(alpha=0.3)


def save_ber_figure(points, out_path, title: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    x = [p.abscissa for p in points]
    err_lo = [max(p.mc_value - p.mc_ci95_low, 0.0) for p in points]
    err_hi = [max(p.mc_ci95_high - p.mc_value, 0.0) for p in points]
    ax.errorbar(
        x,
        [p.mc_value for p in points],
        yerr=[err_lo, err_hi],
        fmt="o",
        ms=4,
        capsize=3,
        label="Monte Carlo",
    )
    ax.plot(x, [p.analytical for p in points], "-", label="analytical")
    if points and points[0].asymptotic is not None:
        ax.plot(x, [p.asymptotic for p in points], "--", label="asymptotic")
    ax.set_yscale("log")
    ax.set_xlabel(r"$P_T/N_0$ [dB]")
    ax.set_ylabel("BER")
    ax.set_title(title)
    ax.grid(True, which="both", **_GRID)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def save_coverage_figure(rows, out_path, title: str) -> None:
    """rows: (psi_db, mc, ci_lo, ci_hi, analytic, conventional)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    psi = [r[0] for r in rows]
    ax.errorbar(
        psi,
        [r[1] for r in rows],
        yerr=[
            [max(r[1] - r[2], 0.0) for r in rows],
            [max(r[3] - r[1], 0.0) for r in rows],
        ],
        fmt="o",
        ms=4,
        capsize=3,
        label="Monte Carlo",
    )
    ax.plot(psi, [r[4] for r in rows], "-", label="analytical")
    ax.plot(psi, [r[5] for r in rows], "-.", label="conventional (one hop)")
    ax.set_xlabel(r"SNR threshold $\psi$ [dB]")
    ax.set_ylabel("coverage probability")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.grid(True, **_GRID)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def save_throughput_figure(snr_db, series: dict[str, list[float]], out_path, title: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for label, values in series.items():
        style = "-." if label.startswith("conv") else "-"
        ax.plot(snr_db, values, style, label=label)
    ax.set_xlabel(r"$P_T/N_0$ [dB]")
    ax.set_ylabel("throughput [bit/s]")
    ax.set_title(title)
    ax.grid(True, **_GRID)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)

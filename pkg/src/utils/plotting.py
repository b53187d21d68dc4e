"""
静态图：剖面与台账范数增长
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .logger import get_logger  # noqa: E402

logger = get_logger("plotting")


def plot_profiles(series, path: Path) -> Path:
    nd = series.n_domain
    x = series.x_nodes[:nd]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for n, label in ((0, "t=0"), (series.times.size - 1, f"t={series.times[-1]:.4g}")):
        ax.plot(x, series.z[0, n, :nd], label=f"z+ {label}")
        ax.plot(x, series.z[1, n, :nd], "--", label=f"z- {label}")
    ax.set_xlabel("x")
    ax.set_ylabel("Riemann invariants")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_ledger(ledger, path: Path) -> Path:
    m = np.array([e.m for e in ledger.entries])
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.semilogy(m, [e.c1_norm for e in ledger.entries], "o-", label="observed C1 norm")
    ax.semilogy(m, [e.bound for e in ledger.entries], "s--", label="linear bound")
    naive = np.array([e.naive_bound for e in ledger.entries])
    finite = np.isfinite(naive)
    ax.semilogy(m[finite], naive[finite], ":", label="naive 15^m bound")
    ax.set_xlabel("window m")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.debug(f"🖼️ 台账图: {path}")
    return path

"""
CSV 输出，数值统一用 17 位有效数字
"""

from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from ..core.model import BathymetryProfile, characteristic_speeds, from_riemann

FMT = "%.17g"

SNAPSHOT_COLUMNS = ("t", "x", "z_plus", "z_minus", "u", "eta", "du_plus", "du_minus",
                    "xi_plus", "xi_minus", "c_plus", "c_minus")

LEDGER_COLUMNS = ("m", "T_m", "window_len", "actual_len", "truncated", "branch", "C_phi",
                  "sup_z_plus", "sup_z_minus", "sup_dz_plus", "sup_dz_minus", "c1_norm",
                  "bound", "naive_bound", "ball_radius", "max_U", "max_V", "closure_ok")


def snapshot_table(series, profile: BathymetryProfile) -> np.ndarray:
    nd = series.n_domain
    x = series.x_nodes[:nd]
    blocks = []
    for n, t in enumerate(series.times):
        zp, zm = series.z[0, n, :nd], series.z[1, n, :nd]
        vel, eta = from_riemann(zp, zm, profile, x)
        cp, cm = characteristic_speeds(zp, zm)
        blocks.append(np.column_stack([np.full_like(x, t), x, zp, zm, vel, eta,
                                       series.u[0, n, :nd], series.u[1, n, :nd],
                                       series.xi[0, n, :nd], series.xi[1, n, :nd], cp, cm]))
    return np.vstack(blocks)


def write_snapshots(path: Path, series, profile: BathymetryProfile) -> Path:
    np.savetxt(path, snapshot_table(series, profile), fmt=FMT, delimiter=",",
               header=",".join(SNAPSHOT_COLUMNS), comments="")
    return path


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return FMT % value
    return str(value)


def write_rows(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    lines: List[str] = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_ledger(path: Path, ledger) -> Path:
    return write_rows(path, LEDGER_COLUMNS, (e.model_dump() for e in ledger.entries))

"""Deterministic CSV/JSON emission: energy rows, spectral snapshots, manifests.

All floats are written with ``repr`` (shortest round-trip form), columns and
row order are fixed, and nothing time- or host-dependent enters the CSV
bodies, so re-running a command with an identical config and seed reproduces
the data files byte for byte.  The manifest records the config hash, the
code version, wall times and the produced file list.
"""

from __future__ import annotations

import hashlib
import json
import time as _time
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .diagnostics import ACCUMULATED_COLUMNS, FLAG_NAMES, INSTANT_COLUMNS, EnergyReport
from .simulation import VelocityField, velocity_from_arrays
from .spectral import GridSpec

__all__ = [
    "fmt",
    "energy_columns",
    "write_energy_csv",
    "write_snapshot_csv",
    "read_snapshot_csv",
    "config_hash",
    "Manifest",
]


def fmt(x: float) -> str:
    return repr(float(x))


def energy_columns() -> list[str]:
    return ["t"] + INSTANT_COLUMNS + ACCUMULATED_COLUMNS + FLAG_NAMES


def write_energy_csv(path: str | Path, reports: Sequence[EnergyReport]) -> Path:
    path = Path(path)
    cols = energy_columns()
    lines = [",".join(cols)]
    for r in reports:
        row = [fmt(r.t)]
        row += [fmt(r.norms.get(c, float("nan"))) for c in INSTANT_COLUMNS]
        row += [fmt(r.norms.get(c, float("nan"))) for c in ACCUMULATED_COLUMNS]
        row += ["1" if r.flags.get(c, False) else "0" for c in FLAG_NAMES]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_snapshot_csv(path: str | Path, U: VelocityField, nu: float) -> Path:
    """Spectral dump of the dealiased band: one row per retained mode.

    Header comment lines carry the grid, the y period, the viscosity and the
    frame time; data columns are the integer mode indices, eta, and the real
    and imaginary parts of the three components.
    """
    path = Path(path)
    grid = U.grid
    mask = grid.dealias_mask
    idx = np.argwhere(mask)
    c1, c2, c3 = U.coeff_arrays()
    lines = [
        f"# grid {grid.Nx} {grid.Ny} {grid.Nz}",
        f"# ly {fmt(grid.Ly)}",
        f"# nu {fmt(nu)}",
        f"# time {fmt(U.time)}",
        "k,j,l,eta,u1_re,u1_im,u2_re,u2_im,u3_re,u3_im",
    ]
    kix = grid.k_index
    jix = grid.j_index
    lix = grid.l_index
    eta = grid.eta_values
    for ik, ij, il in idx:
        vals = (c1[ik, ij, il], c2[ik, ij, il], c3[ik, ij, il])
        lines.append(
            ",".join(
                [str(kix[ik]), str(jix[ij]), str(lix[il]), fmt(eta[ij])]
                + [fmt(part) for v in vals for part in (v.real, v.imag)]
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def read_snapshot_csv(path: str | Path) -> VelocityField:
    path = Path(path)
    header: dict[str, str] = {}
    rows = []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            parts = line[1:].strip().split()
            header[parts[0]] = " ".join(parts[1:])
        elif line and not line.startswith("k,"):
            rows.append(line.split(","))
    nx, ny, nz = (int(v) for v in header["grid"].split())
    grid = GridSpec(Nx=nx, Ny=ny, Nz=nz, Ly=float(header["ly"]))
    t = float(header["time"])
    arrs = [np.zeros(grid.shape, dtype=np.complex128) for _ in range(3)]
    for row in rows:
        k, j, l = int(row[0]), int(row[1]), int(row[2])
        ik, ij, il = k % nx, j % ny, l % nz
        for ci, c in enumerate(arrs):
            re = float(row[4 + 2 * ci])
            im = float(row[5 + 2 * ci])
            c[ik, ij, il] = re + 1j * im
    return velocity_from_arrays(grid, arrs[0], arrs[1], arrs[2], t)


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


class Manifest:
    """Reproducibility record emitted by every file-writing command."""

    def __init__(self, config: dict):
        self.config = config
        self.hash = config_hash(config)
        self.started = _time.time()
        self.outputs: list[str] = []

    def add(self, path: str | Path) -> None:
        self.outputs.append(str(path))

    def write(self, outdir: str | Path) -> Path:
        path = Path(outdir) / "manifest.json"
        payload = {
            "config_hash": self.hash,
            "version": __version__,
            "started_unix": self.started,
            "finished_unix": _time.time(),
            "config": self.config,
            "outputs": sorted(self.outputs),
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
        return path


def write_cells_csv(path: str | Path, cells) -> Path:
    path = Path(path)
    lines = ["nu,eps,stable,peak_norm,t_peak,status,refined"]
    for c in sorted(cells, key=lambda c: (c.nu, c.eps)):
        lines.append(
            ",".join(
                [
                    fmt(c.nu),
                    fmt(c.eps),
                    c.outcome,
                    fmt(c.peak_norm),
                    fmt(c.t_peak),
                    c.status.replace(",", ";"),
                    "1" if c.refined else "0",
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def read_cells_csv(path: str | Path) -> dict:
    """Parse a cells CSV back into a checkpoint map for sweep resumption."""
    from .threshold import CellResult

    path = Path(path)
    out = {}
    if not path.exists():
        return out
    for line in path.read_text().splitlines()[1:]:
        if not line:
            continue
        nu_s, eps_s, outcome, peak, tpk, status, refined = line.split(",")
        cell = CellResult(
            nu=float(nu_s),
            eps=float(eps_s),
            outcome=outcome,
            peak_norm=float(peak),
            t_peak=float(tpk),
            status=status,
            refined=refined == "1",
        )
        if not cell.refined:
            out[(cell.nu, cell.eps)] = cell
    return out


def write_summary_csv(path: str | Path, result) -> Path:
    path = Path(path)
    lines = ["nu,eps_star,censored"]
    for nu in sorted(result.eps_star):
        star = result.eps_star[nu]
        lines.append(
            ",".join([fmt(nu), fmt(star) if star is not None else "", "1" if result.censored[nu] else "0"])
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def write_gamma_json(path: str | Path, result) -> Path:
    path = Path(path)
    payload = {
        "gamma": result.gamma,
        "gamma_ci": list(result.gamma_ci) if result.gamma_ci else None,
        "eps_star": {fmt(nu): result.eps_star[nu] for nu in sorted(result.eps_star)},
        "censored": {fmt(nu): result.censored[nu] for nu in sorted(result.censored)},
        "repaired_cells": [[nu, eps] for nu, eps in result.repaired],
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_multiplier_csv(path: str | Path, rows: Iterable[dict]) -> Path:
    path = Path(path)
    cols = ["t", "k", "eta", "l", "nu", "m", "M", "mdot_over_m", "Mdot_over_M", "m_ode_residual"]
    lines = [",".join(cols)]
    for row in rows:
        out = []
        for c in cols:
            v = row[c]
            if isinstance(v, float) and v != v:  # NaN at non-differentiable times
                out.append("")
            elif c in ("k", "l"):
                out.append(str(int(v)))
            else:
                out.append(fmt(v))
        lines.append(",".join(out))
    path.write_text("\n".join(lines) + "\n")
    return path

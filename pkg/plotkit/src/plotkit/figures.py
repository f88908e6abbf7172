"""Figure rendering from solver diagnostics CSVs and phase-space snapshots.

Read-only consumer of the solver's file formats: the diagnostics CSV
(header row, comma-separated scientific notation) and phase-space
snapshots, either CSV with x,v,f rows or a row-major float64 block with
a JSON sidecar describing the grid.  No computation beyond plotting
transforms happens here.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

os.environ.setdefault("MPLBACKEND", "Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["FigureSpec", "PlotError", "load_csv", "load_snapshot", "render", "KINDS"]

KINDS = ("field_mode", "l2", "balances", "boundary_max", "phase_space")


class PlotError(RuntimeError):
    """Missing/empty inputs or malformed columns."""


@dataclass
class FigureSpec:
    inputs: list[str]
    kind: str
    output: str
    columns: list[str] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    yscale: str | None = None  # default chosen per kind
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlotError(f"unknown figure kind '{self.kind}' (choose from {KINDS})")
        if not self.inputs:
            raise PlotError("at least one input file is required")


def load_csv(path) -> tuple[list[str], np.ndarray]:
    """Diagnostics CSV as (header, rows); empty or headerless files error."""
    path = Path(path)
    if not path.exists():
        raise PlotError(f"input not found: {path}")
    with open(path) as fh:
        header = fh.readline().strip()
    if not header:
        raise PlotError(f"{path} is empty")
    names = header.split(",")
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # empty files are reported as PlotError
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        raise PlotError(f"{path} has a header but no data rows")
    if data.shape[1] != len(names):
        raise PlotError(f"{path}: {len(names)} columns in header, {data.shape[1]} in rows")
    return names, data


def column(names: list[str], data: np.ndarray, name: str) -> np.ndarray:
    if name not in names:
        raise PlotError(f"column '{name}' not present (have {names})")
    return data[:, names.index(name)]


def columns_matching(names: list[str], prefix: str) -> list[str]:
    found = [n for n in names if n.startswith(prefix)]
    if not found:
        raise PlotError(f"no columns matching '{prefix}*' (have {names})")
    return found


def load_snapshot(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict]:
    """Phase-space snapshot: binary block + JSON sidecar, or x,v,f CSV."""
    path = Path(path)
    if not path.exists():
        raise PlotError(f"snapshot not found: {path}")
    if path.suffix == ".csv":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.size == 0:
            raise PlotError(f"{path} has no data rows")
        x = np.unique(data[:, 0])
        v = np.unique(data[:, 1])
        if x.size * v.size != data.shape[0]:
            raise PlotError(f"{path}: rows do not form a full x/v grid")
        f = data[:, 2].reshape(x.size, v.size)
        return x, v, f, {"n_x": x.size, "n_v": v.size}
    sidecar = Path(str(path) + ".json")
    if not sidecar.exists():
        raise PlotError(f"sidecar {sidecar} missing for binary snapshot")
    meta = json.loads(sidecar.read_text())
    f = np.fromfile(path, dtype=np.float64)
    if f.size != meta["n_x"] * meta["n_v"]:
        raise PlotError(f"{path}: {f.size} values, sidecar says "
                        f"{meta['n_x']}x{meta['n_v']}")
    f = f.reshape(meta["n_x"], meta["n_v"])
    x = np.arange(meta["n_x"]) * (meta["L"] / meta["n_x"])
    v = np.linspace(meta["v_a"], meta["v_b"], meta["n_v"])
    return x, v, f, meta


def _series_axes(spec: FigureSpec, default_cols, default_yscale: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for path in spec.inputs:
        names, data = load_csv(path)
        t = column(names, data, "t")
        cols = spec.columns or default_cols(names)
        for name in cols:
            y = column(names, data, name)
            label = name if len(spec.inputs) == 1 else f"{Path(path).stem}:{name}"
            ax.plot(t, y, label=label, linewidth=1.0)
    ax.set_xlabel("time")
    ax.set_ylabel(ylabel)
    ax.set_yscale(spec.yscale or default_yscale)
    ax.legend(fontsize=8)
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Write the figure described by spec; returns the output path."""
    if spec.kind == "field_mode":
        fig = _series_axes(spec, lambda names: columns_matching(names, "absE_k"),
                           "log", "|E_k|")
    elif spec.kind == "l2":
        fig = _series_axes(spec, lambda names: columns_matching(names, "l2rel_"),
                           "linear", "relative L2 norm")
    elif spec.kind == "balances":
        def bal_cols(names):
            want = ["mass_balance", "momentum_balance", "energy_balance"]
            missing = [w for w in want if w not in names]
            if missing:
                raise PlotError(f"balance columns missing: {missing}")
            return want

        fig = _series_axes(spec, bal_cols, "log", "per-step balance residual")
        # residuals can be exactly zero; log scale needs a floor
        ax = fig.axes[0]
        for line in ax.get_lines():
            y = line.get_ydata()
            line.set_ydata(np.maximum(np.abs(y), 1e-20))
        ax.relim()
        ax.autoscale_view()
    elif spec.kind == "boundary_max":
        fig = _series_axes(spec, lambda names: columns_matching(names, "fbc_"),
                           "log", "max |f| at velocity boundaries")
    else:  # phase_space
        x, v, f, meta = load_snapshot(spec.inputs[0])
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        mesh = ax.pcolormesh(x, v, f.T, shading="auto", cmap="viridis")
        fig.colorbar(mesh, ax=ax, label="f(x, v)")
        ax.set_xlabel("x")
        ax.set_ylabel("v")
        if spec.title:
            ax.set_title(spec.title)
        elif "t" in meta:
            ax.set_title(f"t = {meta['t']:g}")
        fig.tight_layout()

    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=130)
    plt.close(fig)
    if not out.exists() or out.stat().st_size == 0:
        raise PlotError(f"failed to write {out}")
    return str(out)

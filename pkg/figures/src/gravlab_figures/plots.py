"""Figure layouts for gravlab artifacts.

Three plots cover the published outputs: peak-density sweep curves,
initial-versus-final profile overlays with the full evolution, and
density/potential field pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import grid_nodes, read_series, read_snapshot, read_sweep

plt.rcParams.update({
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
})


@dataclass
class FigureRecipe:
    """What to draw: named inputs, style hints, and the output path."""

    name: str
    inputs: list
    output: str
    log_scale: bool = False
    title: str = ""


def plot_sweep(sweep_csv, output, log_scale: bool = False, title: str = "") -> Path:
    """One peak-density curve per beta; the endpoints of the beta range are
    highlighted (smallest in red, largest in blue)."""
    sweep = read_sweep(sweep_csv)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    lo, hi = min(sweep.betas), max(sweep.betas)
    for beta, curve in zip(sweep.betas, sweep.max_rho):
        if beta == lo:
            style = dict(color="tab:red", lw=2.0, zorder=3)
        elif beta == hi:
            style = dict(color="tab:blue", lw=2.0, zorder=3)
        else:
            style = dict(color="0.55", lw=1.2)
        ax.plot(sweep.t, curve, label=f"beta = {beta:g}", **style)
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("max density")
    ax.set_title(title or "peak density versus time")
    ax.legend(fontsize=8)
    return _save(fig, output)


def plot_evolution(series_csv, snapshot_paths, output, title: str = "") -> Path:
    """Initial (blue) and final (red) 1D profiles overlaid, alongside the
    full evolution: every snapshot colored by its time, with the recorded
    peak-density history."""
    series = read_series(series_csv)
    snaps = sorted((read_snapshot(p) for p in snapshot_paths), key=lambda s: s.t)
    if not snaps:
        raise ValueError("plot_evolution needs at least one snapshot")
    if any(s.dim != 1 for s in snaps):
        raise ValueError("profile overlays are defined for 1D snapshots")
    x = grid_nodes(snaps[0].n)

    fig, (ax_profiles, ax_evol) = plt.subplots(1, 2, figsize=(10.5, 4.2))
    ax_profiles.plot(x, snaps[0].values, color="tab:blue",
                     label=f"initial (t = {snaps[0].t:g})")
    ax_profiles.plot(x, snaps[-1].values, color="tab:red",
                     label=f"final (t = {snaps[-1].t:g})")
    ax_profiles.set_xlabel("x")
    ax_profiles.set_ylabel("density")
    ax_profiles.set_title("initial and final profiles")
    ax_profiles.legend(fontsize=8)

    cmap = plt.get_cmap("viridis")
    tmax = max(s.t for s in snaps) or 1.0
    for s in snaps:
        ax_evol.plot(x, s.values, color=cmap(s.t / tmax), lw=1.0)
    ax_twin = ax_evol.twinx()
    ax_twin.plot(series.t, series.max_rho, color="black", ls="--", lw=1.0)
    ax_twin.set_ylabel("max density (dashed)")
    ax_twin.grid(False)
    ax_evol.set_xlabel("x")
    ax_evol.set_ylabel("density")
    ax_evol.set_title("evolution (snapshots colored by time)")
    fig.suptitle(title) if title else None
    return _save(fig, output)


def plot_field_pair(rho_snapshot, pot_snapshot, output, title: str = "") -> Path:
    """Side-by-side density and potential renders at one time."""
    rho = read_snapshot(rho_snapshot)
    pot = read_snapshot(pot_snapshot)
    if (rho.dim, rho.n) != (pot.dim, pot.n):
        raise ValueError(
            f"mismatched grids: density is {rho.dim}D n={rho.n}, "
            f"potential is {pot.dim}D n={pot.n}"
        )
    fig, axes = plt.subplots(1, 2, figsize=(10.5, 4.4))
    for ax, snap, label in ((axes[0], rho, "density"), (axes[1], pot, "potential")):
        if snap.dim == 2:
            extent = (-np.pi, np.pi, -np.pi, np.pi)
            im = ax.imshow(snap.values.T, origin="lower", extent=extent,
                           cmap="viridis", aspect="equal")
            fig.colorbar(im, ax=ax, shrink=0.85)
            ax.set_xlabel("x")
            ax.set_ylabel("y")
            ax.grid(False)
        else:
            ax.plot(grid_nodes(snap.n), snap.values)
            ax.set_xlabel("x")
        ax.set_title(f"{label} at t = {snap.t:g}")
    if title:
        fig.suptitle(title)
    return _save(fig, output)


def render_recipe(recipe: FigureRecipe) -> Path:
    """Dispatch a recipe by name to the matching plot."""
    if recipe.name == "sweep":
        return plot_sweep(recipe.inputs[0], recipe.output,
                          log_scale=recipe.log_scale, title=recipe.title)
    if recipe.name == "evolution":
        return plot_evolution(recipe.inputs[0], recipe.inputs[1:], recipe.output,
                              title=recipe.title)
    if recipe.name == "fieldpair":
        return plot_field_pair(recipe.inputs[0], recipe.inputs[1], recipe.output,
                               title=recipe.title)
    raise ValueError(f"unknown figure recipe {recipe.name!r}")


def _save(fig, output) -> Path:
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(output)
    plt.close(fig)
    return output

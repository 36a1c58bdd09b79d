#!/usr/bin/env python3
"""Render publication-style plots from the simulator's experiment CSVs.

Usage:
    python render.py --in <csv dir> --out <image dir> [--format png|svg] [--fig figN]

Reads only the CSV tables (plus the optional .meta.json sidecars for the
geometry flag); never recomputes any physics.  Without --fig, all seven
figures are rendered and every CSV must be present.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURE_IDS = tuple(f"fig{i}" for i in range(3, 10))


class RenderError(RuntimeError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    fig_id: str
    csv_path: str
    out_path: str
    fmt: str = "png"


REQUIRED_COLUMNS = {
    "fig3": ("alpha_l", "z", "delta", "weight"),
    "fig4": ("alpha_l", "t", "p_no_jump"),
    "fig5": ("alpha_l", "efficiency"),
    "fig6": ("alpha_l", "separation_probability", "efficiency"),
    "fig7": ("alpha_l", "efficiency"),
    "fig8": ("t", "z", "excitation"),
    "fig9": ("alpha_l", "efficiency"),
}


def load_table(path: str, fig_id: str) -> dict:
    if not os.path.exists(path):
        raise RenderError(f"{fig_id}: no such file {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise RenderError(f"{fig_id}: {path} is empty")
        missing = [c for c in REQUIRED_COLUMNS[fig_id] if c not in header]
        if missing:
            raise RenderError(f"{fig_id}: missing column '{missing[0]}' in {path}")
        cols = {c: [] for c in header}
        for row in reader:
            for c, tok in zip(header, row):
                cols[c].append(float(tok))
    return {c: np.asarray(v) for c, v in cols.items()}


def exit_face_is_high_z(csv_path: str) -> bool:
    """Geometry flag from the metadata sidecar; defaults to the simulator's
    native orientation (output face at z = L)."""
    meta_path = csv_path[: -len(".csv")] + ".meta.json"
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            return json.load(fh).get("exit_face", "z=L") == "z=L"
    return True


def _pivot(rows: np.ndarray, cols: np.ndarray, values: np.ndarray):
    r = np.unique(rows)
    c = np.unique(cols)
    grid = np.full((r.size, c.size), np.nan)
    ri = np.searchsorted(r, rows)
    ci = np.searchsorted(c, cols)
    grid[ri, ci] = values
    return r, c, grid


def _render_fig3(data, ax_list, mirror):
    panels = np.unique(data["alpha_l"])
    for ax, alpha in zip(ax_list, panels):
        sel = data["alpha_l"] == alpha
        z, d, w = _pivot(data["delta"][sel], data["z"][sel], data["weight"][sel])
        pcm = ax.pcolormesh(d, z, w, shading="nearest", cmap="viridis")
        ax.set_xlabel("position z / L")
        ax.set_ylabel(r"detuning $\Delta/\Gamma$")
        ax.set_title(rf"$\alpha L = {alpha:g}$")
        plt.colorbar(pcm, ax=ax, label="de-excitation weight")
        if not mirror:
            ax.invert_xaxis()


def _render_heatmap(ax, x, y, grid, xlabel, ylabel, zlabel):
    pcm = ax.pcolormesh(x, y, grid, shading="nearest", cmap="magma")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    plt.colorbar(pcm, ax=ax, label=zlabel)


def build_figure(spec: FigureSpec):
    """Create the matplotlib figure for a spec; returns (figure, axes)."""
    data = load_table(spec.csv_path, spec.fig_id)
    mirror_high = exit_face_is_high_z(spec.csv_path)

    if spec.fig_id == "fig3":
        n_panels = np.unique(data["alpha_l"]).size
        fig, axes = plt.subplots(1, n_panels, figsize=(6 * n_panels, 4.5))
        axes = np.atleast_1d(axes)
        _render_fig3(data, axes, mirror_high)
        return fig, axes

    fig, ax = plt.subplots(figsize=(7, 5))
    if spec.fig_id == "fig4":
        al, t, grid = _pivot(data["alpha_l"], data["t"], data["p_no_jump"])
        _render_heatmap(ax, t, al, grid, r"time since detection ($\tau$)",
                        r"optical depth $\alpha L$", "no-second-emission probability")
        ax.set_yscale("log")
    elif spec.fig_id in ("fig5", "fig7", "fig9"):
        ax.plot(data["alpha_l"], data["efficiency"], "o-", ms=3)
        ax.set_xscale("log")
        ax.set_xlabel(r"optical depth $\alpha L$")
        ax.set_ylabel("rephased emission probability")
        ax.set_ylim(0, 1)
        ax.grid(True, alpha=0.3)
    elif spec.fig_id == "fig6":
        order = np.argsort(data["separation_probability"])
        ax.plot(data["separation_probability"][order], data["efficiency"][order], "o-", ms=3)
        ax.set_xlabel(r"probability of $\geq 4\tau$ separation")
        ax.set_ylabel("rephased emission probability")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.grid(True, alpha=0.3)
    elif spec.fig_id == "fig8":
        t, z, grid = _pivot(data["t"], data["z"], data["excitation"])
        _render_heatmap(ax, z, t, grid, "position z / L",
                        r"time after inversion ($\tau$)", "excitation density")
        if mirror_high:
            # emission leaves at z = L; show the output face on the left
            ax.invert_xaxis()
    else:
        raise RenderError(f"unknown figure id {spec.fig_id!r}")
    return fig, ax


def render(spec: FigureSpec) -> str:
    """Render one figure to spec.out_path; returns the written path."""
    if spec.fig_id not in FIGURE_IDS:
        raise RenderError(f"unknown figure id {spec.fig_id!r}")
    fig, _ = build_figure(spec)
    os.makedirs(os.path.dirname(spec.out_path) or ".", exist_ok=True)
    fig.savefig(spec.out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return spec.out_path


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--in", dest="in_dir", required=True, help="directory with figN.csv files")
    p.add_argument("--out", dest="out_dir", required=True, help="directory for images")
    p.add_argument("--format", choices=("png", "svg"), default="png")
    p.add_argument("--fig", choices=FIGURE_IDS, help="render a single figure")
    args = p.parse_args(argv)

    wanted = (args.fig,) if args.fig else FIGURE_IDS
    try:
        for fig_id in wanted:
            spec = FigureSpec(
                fig_id=fig_id,
                csv_path=os.path.join(args.in_dir, f"{fig_id}.csv"),
                out_path=os.path.join(args.out_dir, f"{fig_id}.{args.format}"),
                fmt=args.format,
            )
            print(f"rendered {render(spec)}", file=sys.stderr)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

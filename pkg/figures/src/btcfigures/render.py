"""Deterministic figure rendering from simulator CSV files.

Each figure kind maps one or more documented CSV tables to a single
image; there is no computation of physics here, only plotting.  Output
bytes are reproducible: fixed figure geometry, the Agg/SVG backends with
a pinned hash salt, and no timestamps in metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "btcfigures"

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first
import numpy as np  # noqa: E402

from .schemas import SchemaError, load_table  # noqa: E402

__all__ = ["FigureSpec", "render", "FIGURE_KINDS"]

_CLASS_COLORS = {"closed": "tab:blue", "attracted": "tab:red", "escaped": "tab:gray"}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: a figure kind, its input CSVs, and the output path."""

    figure: str
    inputs: tuple
    output: str
    title: str = ""
    labels: tuple = ()
    xscale: Optional[str] = None
    yscale: Optional[str] = None

    @classmethod
    def from_dict(cls, raw: dict) -> "FigureSpec":
        unknown = set(raw) - {"figure", "inputs", "output", "title", "labels",
                              "xscale", "yscale"}
        if unknown:
            raise ValueError(f"unknown figure-spec fields: {sorted(unknown)}")
        for required in ("figure", "inputs", "output"):
            if required not in raw:
                raise ValueError(f"figure spec is missing {required!r}")
        return cls(
            figure=raw["figure"],
            inputs=tuple(raw["inputs"]),
            output=raw["output"],
            title=raw.get("title", ""),
            labels=tuple(raw.get("labels", ())),
            xscale=raw.get("xscale"),
            yscale=raw.get("yscale"),
        )


def _label(spec: FigureSpec, index: int, default: str) -> str:
    return spec.labels[index] if index < len(spec.labels) else default


def _draw_trajectory(spec: FigureSpec, fig):
    ax = fig.subplots()
    for i, path in enumerate(spec.inputs):
        table = load_table(path, "trajectory")
        ax.plot(table["t"], table["sz"], lw=1.0, label=_label(spec, i, Path(path).parent.name))
    ax.set_xlabel(r"$t\,\kappa$")
    ax.set_ylabel(r"$\langle S^z\rangle/S$")
    ax.legend(fontsize=8)


def _draw_spectrum(spec: FigureSpec, fig):
    axes = fig.subplots(1, len(spec.inputs), squeeze=False)[0]
    for i, (ax, path) in enumerate(zip(axes, spec.inputs)):
        table = load_table(path, "spectrum")
        ax.scatter(table["re_lambda"], table["im_lambda"], s=4, lw=0)
        ax.set_xlabel(r"$\mathrm{Re}\,\lambda/\kappa$")
        if i == 0:
            ax.set_ylabel(r"$\mathrm{Im}\,\lambda/\kappa$")
        ax.set_title(_label(spec, i, ""), fontsize=9)


def _draw_gapscan(spec: FigureSpec, fig):
    ax = fig.subplots()
    table = load_table(spec.inputs[0], "gapscan")
    for j, group in table.groupby("j"):
        if j == 0:
            continue  # steady-state row is identically zero
        ax.loglog(group["n_spins"], np.abs(group["re_lambda"]), "o-", ms=3,
                  lw=0.8, label=f"j={j}")
    ax.set_xlabel(r"$N_b$")
    ax.set_ylabel(r"$|\mathrm{Re}\,\lambda_j|/\kappa$")
    ax.legend(fontsize=7)


def _draw_bands(spec: FigureSpec, fig):
    ax = fig.subplots()
    for i, path in enumerate(spec.inputs):
        table = load_table(path, "bands")
        x = np.full(len(table), i, dtype=float)
        ax.plot(x, table["im_center"], "_", ms=18, mew=2)
    ax.set_xticks(range(len(spec.inputs)))
    ax.set_xticklabels([_label(spec, i, str(i)) for i in range(len(spec.inputs))],
                       fontsize=8)
    ax.set_ylabel(r"band center $\mathrm{Im}\,\lambda/\kappa$")


def _draw_fourier(spec: FigureSpec, fig):
    ax = fig.subplots()
    for i, path in enumerate(spec.inputs):
        table = load_table(path, "fourier")
        ax.plot(table["omega"], table["power"], lw=0.9,
                label=_label(spec, i, Path(path).parent.name))
    ax.set_xlabel(r"$\omega/\kappa$")
    ax.set_ylabel("normalized power")
    ax.set_xlim(0, None)
    ax.legend(fontsize=8)


def _draw_eta_scaling(spec: FigureSpec, fig):
    ax = fig.subplots()
    for i, path in enumerate(spec.inputs):
        table = load_table(path, "eta_scaling")
        ax.loglog(table["n_spins"], table["eta"], "o", ms=4,
                  label=_label(spec, i, "decay rate"))
        ax.loglog(table["n_spins"], table["re_lambda_ref"], "x", ms=4,
                  label="slowest oscillating eigenvalue")
    ax.set_xlabel(r"$N_b$")
    ax.set_ylabel(r"$\eta/\kappa$")
    ax.legend(fontsize=7)


def _draw_ness(spec: FigureSpec, fig):
    ax = fig.subplots()
    table = load_table(spec.inputs[0], "ness")
    for column, style in (("sx", "o-"), ("sy", "s-"), ("sz", "^-")):
        ax.plot(table["omega0_over_kappa"], table[column], style, ms=3, lw=0.8,
                label=rf"$\langle S^{column[-1]}\rangle/S$")
    ax.set_xlabel(r"$\omega_0/\kappa$")
    ax.set_ylabel("steady-state magnetization")
    ax.legend(fontsize=8)


def _draw_portrait(spec: FigureSpec, fig):
    ax = fig.subplots()
    table = load_table(spec.inputs[0], "portrait")
    for cls, group in table.groupby("class"):
        ax.scatter(group["seed_p"], group["seed_q"], s=36, marker="s", lw=0,
                   color=_CLASS_COLORS.get(cls, "tab:olive"), label=cls)
    if len(spec.inputs) > 1:
        points = load_table(spec.inputs[1], "fixed_points")
        q = points["mz"]
        p = 0.5 * np.arctan2(points["my"], points["mx"])
        ax.scatter(p, q, s=50, marker="*", color="black", label="fixed points")
    ax.set_xlabel(r"$\mathcal{P}$")
    ax.set_ylabel(r"$\mathcal{Q}$")
    ax.legend(fontsize=7, loc="upper right")


def _draw_meanfield(spec: FigureSpec, fig):
    ax = fig.subplots()
    for i, path in enumerate(spec.inputs):
        table = load_table(path, "meanfield")
        ax.plot(table["mx"], table["my"], lw=0.7, label=_label(spec, i, f"run {i}"))
        ax.plot(table["mx"].iloc[:1], table["my"].iloc[:1], "ko", ms=3)
    ax.set_xlabel(r"$m^x$")
    ax.set_ylabel(r"$m^y$")
    ax.set_aspect("equal")
    ax.legend(fontsize=7)


_DRAWERS = {
    "trajectory": _draw_trajectory,
    "spectrum": _draw_spectrum,
    "gapscan": _draw_gapscan,
    "bands": _draw_bands,
    "fourier": _draw_fourier,
    "eta_scaling": _draw_eta_scaling,
    "ness": _draw_ness,
    "portrait": _draw_portrait,
    "meanfield": _draw_meanfield,
}

FIGURE_KINDS = tuple(sorted(_DRAWERS))


def render(spec: FigureSpec) -> Path:
    """Draw one figure and write it to ``spec.output`` (PNG or SVG).

    Raises
    ------
    SchemaError
        If an input CSV is missing or lacks a documented column.
    ValueError
        For unknown figure kinds or output formats.
    """
    if spec.figure not in _DRAWERS:
        raise ValueError(
            f"unknown figure kind {spec.figure!r}; expected one of {FIGURE_KINDS}"
        )
    if not spec.inputs:
        raise ValueError("figure spec has no inputs")
    out = Path(spec.output)
    if out.suffix.lower() not in (".png", ".svg"):
        raise ValueError(f"output must be .png or .svg, got {out.suffix!r}")

    width = 3.4 * max(1, len(spec.inputs)) if spec.figure == "spectrum" else 4.6
    fig = plt.figure(figsize=(width, 3.2), dpi=150)
    try:
        _DRAWERS[spec.figure](spec, fig)
        for ax in fig.get_axes():
            if spec.xscale:
                ax.set_xscale(spec.xscale)
            if spec.yscale:
                ax.set_yscale(spec.yscale)
        if spec.title:
            fig.suptitle(spec.title, fontsize=10)
        fig.tight_layout()
        out.parent.mkdir(parents=True, exist_ok=True)
        metadata = {"Date": None} if out.suffix.lower() == ".svg" else {}
        fig.savefig(out, metadata=metadata)
    finally:
        plt.close(fig)
    return out

"""Build figures from experiment CSVs.

Consumes only the documented CSV schemas of the solver CLI; no other
coupling.  Four kinds: ``detectability`` (mean AMI vs assortativity, one
line per eta, threshold marker), ``entropy-decomposition`` (codebook terms
vs eta), ``tradeoff`` (topological entropy vs AMI), and ``ami-heatmap``
(annotated pairwise-AMI matrix).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

KINDS = ("detectability", "entropy-decomposition", "tradeoff", "ami-heatmap")

REQUIRED_COLUMNS = {
    "detectability": ["delta", "noise", "eta", "mean_ami"],
    "entropy-decomposition": ["eta", "inter", "intra", "metadata"],
    "tradeoff": ["eta", "topological", "ami_metadata"],
    "ami-heatmap": ["name"],
}

# fixed style so identical inputs render identical bytes
STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "figures",
}


class SchemaError(ValueError):
    """Input CSV does not match the documented schema."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    title: str | None = None
    sbm_nodes: int = 200
    sbm_density: float = 0.2
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


def detectability_threshold(n: int, rho: float) -> float:
    """Assortativity below which two-block structure is undetectable."""
    return float(np.sqrt(4.0 * n * rho * (1.0 - rho)) / n)


def _load(path: str, kind: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path}: empty CSV") from None
    if frame.empty:
        raise SchemaError(f"{path}: no data rows")
    missing = [c for c in REQUIRED_COLUMNS[kind] if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    return frame


def _fig_detectability(spec: FigureSpec) -> plt.Figure:
    frames = [_load(p, spec.kind) for p in spec.inputs]
    data = pd.concat(frames, ignore_index=True)
    noises = sorted(data["noise"].unique())
    star = detectability_threshold(spec.sbm_nodes, spec.sbm_density)
    fig, axes = plt.subplots(
        1, len(noises), figsize=(4.0 * len(noises), 3.2), sharey=True, squeeze=False
    )
    for ax, noise in zip(axes[0], noises):
        panel = data[data["noise"] == noise]
        for eta in sorted(panel["eta"].unique()):
            line = panel[panel["eta"] == eta].sort_values("delta")
            ax.plot(line["delta"], line["mean_ami"], marker="o", ms=3, label=f"eta={eta:g}")
        ax.axvline(star, color="gray", ls="--", lw=1, label="detectability limit")
        ax.set_xlabel("assortativity (p_in - p_out)")
        ax.set_title(f"noise = {noise:g}")
    axes[0][0].set_ylabel("mean AMI vs planted blocks")
    axes[0][-1].legend(loc="best", fontsize=8)
    if spec.title:
        fig.suptitle(spec.title)
    return fig


def _fig_decomposition(spec: FigureSpec) -> plt.Figure:
    fig, axes = plt.subplots(
        1, len(spec.inputs), figsize=(4.2 * len(spec.inputs), 3.2), squeeze=False
    )
    for ax, path in zip(axes[0], spec.inputs):
        data = _load(path, spec.kind).sort_values("eta")
        ax.plot(data["eta"], data["inter"], marker="o", ms=3, label="between-module")
        ax.plot(data["eta"], data["intra"], marker="s", ms=3, label="within-module")
        ax.plot(data["eta"], data["metadata"], marker="^", ms=3, label="metadata (unweighted)")
        ax.set_xlabel("eta")
        ax.set_ylabel("codebook entropy (bits)")
        if len(spec.inputs) > 1:
            ax.set_title(Path(path).stem)
    axes[0][-1].legend(loc="best", fontsize=8)
    if spec.title:
        fig.suptitle(spec.title)
    return fig


def _fig_tradeoff(spec: FigureSpec) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    for path in spec.inputs:
        data = _load(path, spec.kind).sort_values("eta")
        label = Path(path).stem if len(spec.inputs) > 1 else None
        ax.plot(
            data["topological"], data["ami_metadata"], marker="o", ms=4, label=label
        )
        for _, row in data.iterrows():
            ax.annotate(
                f"{row['eta']:g}",
                (row["topological"], row["ami_metadata"]),
                fontsize=7,
                xytext=(3, 3),
                textcoords="offset points",
            )
    ax.set_xlabel("topological entropy (bits)")
    ax.set_ylabel("AMI with metadata labels")
    if len(spec.inputs) > 1:
        ax.legend(loc="best", fontsize=8)
    if spec.title:
        ax.set_title(spec.title)
    return fig


def _fig_heatmap(spec: FigureSpec) -> plt.Figure:
    if len(spec.inputs) != 1:
        raise SchemaError("ami-heatmap takes exactly one input CSV")
    data = _load(spec.inputs[0], spec.kind)
    names = data["name"].tolist()
    missing = [n for n in names if n not in data.columns]
    if missing:
        raise SchemaError(
            f"{spec.inputs[0]}: matrix not square, missing column(s) {', '.join(missing)}"
        )
    matrix = data[names].to_numpy(dtype=float)
    size = max(3.2, 0.55 * len(names) + 1.6)
    fig, ax = plt.subplots(figsize=(size, size))
    im = ax.imshow(matrix, vmin=0.0, vmax=1.0, cmap="viridis")
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(len(names)), names, fontsize=8)
    for i in range(len(names)):
        for j in range(len(names)):
            color = "white" if matrix[i, j] < 0.6 else "black"
            ax.text(
                j, i, f"{matrix[i, j]:.2f}", ha="center", va="center",
                fontsize=7, color=color,
            )
    fig.colorbar(im, ax=ax, shrink=0.8)
    if spec.title:
        ax.set_title(spec.title)
    return fig


_BUILDERS = {
    "detectability": _fig_detectability,
    "entropy-decomposition": _fig_decomposition,
    "tradeoff": _fig_tradeoff,
    "ami-heatmap": _fig_heatmap,
}


def build_figure(spec: FigureSpec) -> plt.Figure:
    """Build the matplotlib figure for a spec without writing it."""
    with plt.rc_context(STYLE):
        return _BUILDERS[spec.kind](spec)


def render(spec: FigureSpec) -> str:
    """Render the figure to ``spec.output`` (PNG or SVG); returns the path."""
    fig = build_figure(spec)
    try:
        fig.savefig(spec.output, bbox_inches="tight", metadata=_strip_metadata(spec.output))
    finally:
        plt.close(fig)
    return spec.output


def _strip_metadata(path: str):
    # PNG embeds a Software chunk and SVG a creation date by default;
    # blank them so identical specs give identical bytes
    suffix = Path(path).suffix.lower()
    if suffix == ".png":
        return {"Software": ""}
    if suffix == ".svg":
        return {"Date": None, "Creator": None}
    return None

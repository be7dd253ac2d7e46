"""Panel/figure assembly shared by the figure-family scripts.

All axis labels are in the simulation units (times 1/omega, energies
hbar*omega, powers hbar*omega^2). Rendering is read-only over the bundle
frames: no smoothing, no reinterpretation; display downsampling (every k-th
point) is annotated in the figure margin so plotted data stays traceable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .bundles import require_columns, stroke_boundaries  # noqa: E402

XLABEL = r"$t$  [$1/\omega$]"


@dataclass(frozen=True)
class SeriesSpec:
    column: str
    label: str
    color: str = "black"
    lw: float = 1.0


@dataclass
class PanelSpec:
    frame: pd.DataFrame
    series: tuple[SeriesSpec, ...]
    ylabel: str
    title: str = ""
    x: str = "t"
    mark_strokes: bool = False
    zero_line: bool = False
    source: str = "bundle"


@dataclass
class FigureSpec:
    panels: list[PanelSpec]
    ncols: int = 1
    downsample: int = 1
    suptitle: str = ""
    panel_size: tuple[float, float] = (4.6, 2.6)

    def validate(self) -> None:
        if self.downsample < 1:
            raise ValueError("downsample must be >= 1")
        for panel in self.panels:
            require_columns(panel.frame, (panel.x, *(s.column for s in panel.series)),
                            panel.source)


def render(spec: FigureSpec, out_path: str | Path) -> Path:
    """Draw the figure and write it to out_path; validates before writing."""
    spec.validate()
    out_path = Path(out_path)
    n = len(spec.panels)
    ncols = min(spec.ncols, n)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols,
        figsize=(spec.panel_size[0] * ncols, spec.panel_size[1] * nrows),
        squeeze=False,
    )
    letters = "abcdefghij"
    for i, panel in enumerate(spec.panels):
        ax = axes[i // ncols][i % ncols]
        df = panel.frame.iloc[:: spec.downsample]
        for s in panel.series:
            ax.plot(df[panel.x], df[s.column], color=s.color, lw=s.lw, label=s.label)
        if panel.zero_line:
            ax.axhline(0.0, color="0.6", lw=0.6, ls=":")
        if panel.mark_strokes:
            for label, t0, _ in stroke_boundaries(panel.frame)[1:]:
                ax.axvline(t0, color="0.6", lw=0.6, ls="--")
        ax.set_ylabel(panel.ylabel)
        ax.set_xlabel(XLABEL)
        title = panel.title or ""
        ax.set_title(f"({letters[i]}) {title}".strip(), fontsize=10, loc="left")
        if len(panel.series) > 1:
            ax.legend(frameon=False, fontsize=8)
    for j in range(n, nrows * ncols):
        axes[j // ncols][j % ncols].axis("off")
    if spec.suptitle:
        fig.suptitle(spec.suptitle)
    if spec.downsample > 1:
        fig.text(0.99, 0.005, f"display downsampling: every {spec.downsample}th sample",
                 ha="right", va="bottom", fontsize=7, color="0.4")
    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=160)
    plt.close(fig)
    return out_path

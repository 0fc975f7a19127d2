"""
Phase result files: a CSV table and an SVG (optionally PNG) heatmap grid.

Both files are written to temporaries and moved into place only after both
rendered, so a failure leaves no partial output. SVG output is byte-stable:
the element-id salt is fixed and no creation date is embedded.
"""

import logging
import os
import tempfile
from pathlib import Path
from typing import List, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from qdaphase.errors import ExportError  # noqa: E402
from qdaphase.phase_lab.colors import PhaseColors, boundary_color, ramp_colormap  # noqa: E402
from qdaphase.phase_lab.grid import PhaseResult  # noqa: E402

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["axis1", "axis2", "classifier", "p", "mr", "se", "reps_ok", "reps_failed", "region"]

_SVG_SALT = "qdaphase"


def result_frame(result: PhaseResult) -> pd.DataFrame:
    """The CSV table as a DataFrame, one row per (cell, classifier, p)."""
    rows = [{
        "axis1": c.axis1,
        "axis2": c.axis2,
        "classifier": c.classifier.value,
        "p": c.p,
        "mr": c.mr,
        "se": c.se,
        "reps_ok": c.reps_ok,
        "reps_failed": c.reps_failed,
        "region": c.region,
    } for c in result.cells]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def _panel(ax, result: PhaseResult, classifier, p: int, cmap):
    spec = result.spec
    x, y = spec.axis1.values, spec.axis2.values
    grid = np.full((len(y), len(x)), np.nan)
    for cell in result.cells:
        if cell.classifier == classifier and cell.p == p:
            i = int(np.argmin(np.abs(x - cell.axis1)))
            j = int(np.argmin(np.abs(y - cell.axis2)))
            grid[j, i] = cell.mr
    mesh = ax.pcolormesh(x, y, np.ma.masked_invalid(grid), cmap=cmap, vmin=0.0,
                         vmax=PhaseColors.MR_CEILING, shading="nearest")
    for curve in result.boundaries:
        ax.plot(curve.points[:, 0], curve.points[:, 1], color=boundary_color(curve.name),
                linewidth=1.5, label=curve.name)
    ax.set_xlim(x[0] - (x[1] - x[0]) / 2, x[-1] + (x[-1] - x[-2]) / 2)
    ax.set_ylim(y[0] - (y[1] - y[0]) / 2, y[-1] + (y[-1] - y[-2]) / 2)
    ax.set_xlabel(spec.axis1.name, color=PhaseColors.TEXT)
    ax.set_ylabel(spec.axis2.name, color=PhaseColors.TEXT)
    ax.set_title(f"{classifier.value}, p={p}", color=PhaseColors.TEXT, fontsize=10)
    if result.boundaries:
        ax.legend(loc="upper right", fontsize=6, framealpha=0.6)
    return mesh


def render_figure(result: PhaseResult):
    """One heatmap panel per (classifier, p) with the boundary curves overlaid."""
    spec = result.spec
    rows, cols = len(spec.classifiers), len(spec.p_list)
    fig, axes = plt.subplots(rows, cols, figsize=(4.0 * cols + 1.0, 3.6 * rows), squeeze=False)
    cmap = ramp_colormap()
    mesh = None
    for r, classifier in enumerate(spec.classifiers):
        for c, p in enumerate(spec.p_list):
            mesh = _panel(axes[r][c], result, classifier, p, cmap)
    fig.colorbar(mesh, ax=axes.ravel().tolist(), label="mis-classification rate")
    return fig


def _temp_in(directory: Path, suffix: str) -> Path:
    fd, name = tempfile.mkstemp(prefix=".qdaphase-", suffix=suffix, dir=directory)
    os.close(fd)
    return Path(name)


def export_results(result: PhaseResult, path_csv, path_svg, path_png=None) -> None:
    """Write the CSV table and the heatmap figure(s).

    Raises:
        ExportError: empty result or an I/O failure (naming the path)
    """
    if result.empty:
        raise ExportError("phase result has no cells", path=str(path_csv))
    targets = [Path(path_csv), Path(path_svg)] + ([Path(path_png)] if path_png else [])
    temps: List[Optional[Path]] = []
    fig = None
    current = targets[0]
    try:
        for target in targets:
            current = target
            target.parent.mkdir(parents=True, exist_ok=True)
            temps.append(_temp_in(target.parent, target.suffix))

        current = targets[0]
        result_frame(result).to_csv(temps[0], index=False, float_format="%.10g",
                                    lineterminator="\n", encoding="utf-8")

        current = targets[1]
        fig = render_figure(result)
        with matplotlib.rc_context({"svg.hashsalt": _SVG_SALT}):
            fig.savefig(temps[1], format="svg", metadata={"Date": None})
        if path_png:
            current = targets[2]
            fig.savefig(temps[2], format="png", dpi=120, metadata={"Software": None})

        for temp, target in zip(temps, targets):
            current = target
            os.replace(temp, target)
    except OSError as e:
        logger.error(f"Error writing {current}: {e}")
        raise ExportError(f"cannot write phase output ({e})", path=str(current)) from e
    finally:
        if fig is not None:
            plt.close(fig)
        for temp in temps:
            if temp is not None and temp.exists():
                temp.unlink()
    logger.info(f"Wrote {len(result.cells)} rows to {targets[0]} and heatmaps to {targets[1]}")

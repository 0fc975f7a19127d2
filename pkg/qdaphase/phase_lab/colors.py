"""
Phase Colors - fixed palette for MR heatmaps and boundary overlays.

The heatmap ramp has 8 stops and maps MR linearly from 0 (first stop) to
MR_CEILING (last stop); larger rates saturate.
"""

from typing import Sequence

from matplotlib.colors import LinearSegmentedColormap


class PhaseColors:
    """Heatmap and overlay colors."""

    # MR ramp, low (good classification) to high (random guessing)
    RAMP = (
        "#440154",
        "#46327e",
        "#365c8d",
        "#277f8e",
        "#1fa187",
        "#4ac16d",
        "#a0da39",
        "#fde725",
    )
    MR_CEILING = 0.5

    # Cells whose parameters are invalid or whose replicates all failed
    MISSING = "#bdbdbd"

    # Boundary polylines
    BOUNDARY = {
        "rho_curve": "#dc2626",
        "kappa1_zero": "#ffffff",
        "kappa2_zero": "#f59e0b",
        "kappa_plain_qda": "#22d3ee",
    }
    BOUNDARY_DEFAULT = "#000000"

    # Figure chrome
    TEXT = "#1c1c1c"


def ramp_colormap(stops: Sequence[str] = PhaseColors.RAMP) -> LinearSegmentedColormap:
    """Matplotlib colormap interpolating the ramp stops evenly."""
    cmap = LinearSegmentedColormap.from_list("qdaphase_mr", list(stops), N=256)
    cmap.set_bad(PhaseColors.MISSING)
    return cmap


def boundary_color(name: str) -> str:
    return PhaseColors.BOUNDARY.get(name, PhaseColors.BOUNDARY_DEFAULT)

"""
Phase Lab - Monte Carlo phase diagrams over ARW exponents.

Usage:
    from qdaphase.phase_lab import load_grid_file, run_phase_grid, export_results

    spec = load_grid_file("grid.txt")
    result = run_phase_grid(spec, threads=8)
    export_results(result, "phase.csv", "phase.svg")
"""

from .colors import PhaseColors, ramp_colormap, boundary_color
from .boundaries import BOUNDARY_NAMES, BoundaryCurve, theoretical_boundary, plane_of
from .grid import (
    AxisSpec,
    GridSpec,
    PhaseCell,
    PhaseResult,
    KNOWN_OMEGA0,
    INVALID_REGION,
    load_grid_file,
    run_phase_grid,
    grid_boundaries,
)
from .export import CSV_COLUMNS, result_frame, render_figure, export_results

__all__ = [
    # Colors
    'PhaseColors',
    'ramp_colormap',
    'boundary_color',
    # Boundaries
    'BOUNDARY_NAMES',
    'BoundaryCurve',
    'theoretical_boundary',
    'plane_of',
    # Grids
    'AxisSpec',
    'GridSpec',
    'PhaseCell',
    'PhaseResult',
    'KNOWN_OMEGA0',
    'INVALID_REGION',
    'load_grid_file',
    'run_phase_grid',
    'grid_boundaries',
    # Export
    'CSV_COLUMNS',
    'result_frame',
    'render_figure',
    'export_results',
]

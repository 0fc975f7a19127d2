"""
Theoretical boundary curves drawn over phase diagrams.

Each curve lives in a natural plane of two exponents:
    rho_curve        theta = rho_delta(zeta)             (zeta, theta)
    kappa1_zero      beta = 2 - 2 alpha                  (alpha, beta)
    kappa2_zero      zeta = 1 - 2 theta                  (theta, zeta)
    kappa_plain_qda  max(kappa1, kappa2) = (1-delta)/2   (zeta, theta) or (alpha, beta)
Asking for the reversed plane swaps the coordinates.
"""

from dataclasses import dataclass
from typing import Mapping, Optional, Tuple, Union

import numpy as np

from qdaphase.arw.params import EXPONENT_RANGES, ArwParams
from qdaphase.arw.regions import rho_delta
from qdaphase.errors import ParameterError

BOUNDARY_NAMES = ("rho_curve", "kappa1_zero", "kappa2_zero", "kappa_plain_qda")

_PLANES = {
    "rho_curve": (("zeta", "theta"),),
    "kappa1_zero": (("alpha", "beta"),),
    "kappa2_zero": (("theta", "zeta"),),
    "kappa_plain_qda": (("zeta", "theta"), ("alpha", "beta")),
}

Fixed = Union[ArwParams, Mapping[str, float]]


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Sampled boundary; points[:, 0] on the x exponent, points[:, 1] on y."""

    name: str
    x: str
    y: str
    points: np.ndarray

    @property
    def empty(self) -> bool:
        return self.points.shape[0] == 0


def _values(fixed: Fixed) -> dict:
    if isinstance(fixed, ArwParams):
        return fixed.to_dict()
    return dict(fixed)


def _need(values: dict, *names: str) -> Tuple[float, ...]:
    missing = [name for name in names if name not in values]
    if missing:
        raise ParameterError(f"boundary needs fixed values for {', '.join(missing)}")
    return tuple(float(values[name]) for name in names)


def _grid(name: str, samples: int, extra=()) -> np.ndarray:
    lo, hi = EXPONENT_RANGES[name]
    pad = (hi - lo) * 1e-6
    base = np.linspace(lo + pad, hi - pad, samples)
    inside = [v for v in extra if lo < v < hi]
    return np.unique(np.concatenate([base, inside]))


def _in_range(name: str, values: np.ndarray) -> np.ndarray:
    lo, hi = EXPONENT_RANGES[name]
    return (values > lo) & (values < hi)


def plane_of(name: str, axes: Tuple[str, str]) -> Optional[Tuple[str, str]]:
    """The stored plane matching `axes` in either order, else None."""
    for plane in _PLANES.get(name, ()):
        if set(plane) == set(axes):
            return plane
    return None


def theoretical_boundary(name: str, fixed: Fixed, samples: int,
                         plane: Optional[Tuple[str, str]] = None) -> BoundaryCurve:
    """Sample a named boundary curve.

    Args:
        name: One of BOUNDARY_NAMES
        fixed: Values of the exponents the curve depends on but does not plot
        samples: Points along the x exponent (breakpoints are added)
        plane: (x, y) exponent names; defaults to the curve's natural plane

    Raises:
        ParameterError: unknown name, unsupported plane or missing fixed values
    """
    if name not in BOUNDARY_NAMES:
        raise ParameterError(f"unknown boundary {name!r}; expected one of {', '.join(BOUNDARY_NAMES)}")
    if samples < 2:
        raise ParameterError(f"samples must be at least 2, got {samples}")
    stored = _PLANES[name][0] if plane is None else plane_of(name, tuple(plane))
    if stored is None:
        raise ParameterError(f"{name} cannot be drawn in the plane {plane}")
    values = _values(fixed)

    if name == "rho_curve":
        (delta,) = _need(values, "delta")
        zeta = _grid("zeta", samples, extra=((1.0 - delta) / 2.0, 1.0 - delta))
        theta = np.array([rho_delta(z, delta) for z in zeta])
        xs, ys = zeta, theta
    elif name == "kappa1_zero":
        alpha = _grid("alpha", samples)
        xs, ys = alpha, 2.0 - 2.0 * alpha
    elif name == "kappa2_zero":
        theta = _grid("theta", samples, extra=(0.5,))
        xs, ys = theta, 1.0 - 2.0 * theta
    else:
        xs, ys = _plain_qda_locus(stored, values, samples)

    keep = _in_range(stored[0], xs) & _in_range(stored[1], ys)
    points = np.column_stack([xs[keep], ys[keep]]) if keep.any() else np.empty((0, 2))
    x, y = stored
    if plane is not None and tuple(plane) != stored:
        points = points[:, ::-1]
        x, y = y, x
    return BoundaryCurve(name=name, x=x, y=y, points=points)


def _plain_qda_locus(plane: Tuple[str, str], values: dict, samples: int):
    """max(kappa1, kappa2) = (1-delta)/2; empty when the fixed index already exceeds it."""
    (delta,) = _need(values, "delta")
    level = (1.0 - delta) / 2.0
    if plane == ("zeta", "theta"):
        alpha, beta = _need(values, "alpha", "beta")
        if 2.0 - 2.0 * alpha - beta >= level:
            return np.empty(0), np.empty(0)
        zeta = _grid("zeta", samples)
        return zeta, (1.0 - level - zeta) / 2.0
    theta, zeta = _need(values, "theta", "zeta")
    if 1.0 - 2.0 * theta - zeta >= level:
        return np.empty(0), np.empty(0)
    alpha = _grid("alpha", samples)
    return alpha, 2.0 - level - 2.0 * alpha

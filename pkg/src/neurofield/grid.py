"""Spatial discretization of the domain.

The domain is the unit circle parameterized by [0, 1) with the geodesic
(wraparound) distance.  A grid is a finite family of sample points with
per-point quadrature weights; integrals over the domain become weighted
sums.  Two measures are supported:

* ``lebesgue`` -- uniform rectangle rule, weight 1/N per point, so weights
  sum to the domain length 1;
* ``counting`` -- weight 1 per point, turning every integral into a plain
  sum (the finite-dimensional reduction used by the discrete model).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

MEASURES = ("lebesgue", "counting")
DISTANCES = ("geodesic", "chordal")


def circle_distance(r: np.ndarray, rp: np.ndarray, kind: str = "geodesic") -> np.ndarray:
    """Distance between circle coordinates in [0, 1).

    ``geodesic`` is the arc length min(|r-r'|, 1-|r-r'|); ``chordal`` is the
    straight-line chord of a circle of circumference 1, sin(pi*d_geo)/pi.
    """
    d = np.abs(np.asarray(r, dtype=float) - np.asarray(rp, dtype=float))
    geo = np.minimum(d, 1.0 - d)
    if kind == "geodesic":
        return geo
    if kind == "chordal":
        return np.sin(np.pi * geo) / np.pi
    raise ParameterError(f"unknown distance kind {kind!r}; expected one of {DISTANCES}")


@dataclass(frozen=True)
class SpatialGrid:
    """Finite set of sample points on the circle with quadrature weights."""

    points: np.ndarray          # (N,) coordinates in [0, 1)
    weights: np.ndarray         # (N,) strictly positive quadrature weights
    measure: str                # "lebesgue" | "counting"
    distance_kind: str = "geodesic"
    _dist: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        if pts.ndim != 1 or pts.size < 1:
            raise ParameterError("grid needs at least one point")
        if wts.shape != pts.shape:
            raise ParameterError("weights must match points")
        if np.any(wts <= 0):
            raise ParameterError("quadrature weights must be strictly positive")
        if self.measure not in MEASURES:
            raise ParameterError(f"unknown measure {self.measure!r}; expected one of {MEASURES}")
        if self.measure == "lebesgue" and abs(wts.sum() - 1.0) > 1e-12:
            raise ParameterError("lebesgue weights must sum to the domain length 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(
            self, "_dist", circle_distance(pts[:, None], pts[None, :], self.distance_kind)
        )

    @property
    def n_points(self) -> int:
        return self.points.size

    @property
    def domain_measure(self) -> float:
        """Total measure of the domain (1 for lebesgue, N for counting)."""
        return float(self.weights.sum())

    def metric(self, r, rp) -> np.ndarray:
        return circle_distance(r, rp, self.distance_kind)

    @property
    def distances(self) -> np.ndarray:
        """(N, N) pairwise distance matrix."""
        return self._dist

    def integrate(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        """Quadrature sum of per-point values along ``axis``."""
        values = np.asarray(values)
        shape = [1] * values.ndim
        shape[axis] = self.n_points
        return (values * self.weights.reshape(shape)).sum(axis=axis)


def build_grid(
    n_points: int,
    measure: str = "lebesgue",
    distance_kind: str = "geodesic",
) -> SpatialGrid:
    """Uniform grid of ``n_points`` samples k/N on the unit circle."""
    if not isinstance(n_points, (int, np.integer)) or n_points < 1:
        raise ParameterError(f"n_points must be a positive integer, got {n_points!r}")
    pts = np.arange(n_points, dtype=float) / n_points
    if measure == "lebesgue":
        wts = np.full(n_points, 1.0 / n_points)
    elif measure == "counting":
        wts = np.ones(n_points)
    else:
        raise ParameterError(f"unknown measure {measure!r}; expected one of {MEASURES}")
    return SpatialGrid(points=pts, weights=wts, measure=measure, distance_kind=distance_kind)

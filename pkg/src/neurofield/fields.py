"""Activity fields: per-point state vectors over a spatial grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .grid import SpatialGrid


@dataclass(frozen=True)
class StateField:
    """Activity levels of one population: an (N, n) array over the grid."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise DimensionError(f"state field must be (N, n), got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("state field contains non-finite entries")
        object.__setattr__(self, "values", vals)

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def population_dim(self) -> int:
        return self.values.shape[1]

    @staticmethod
    def constant(grid: SpatialGrid, value: float, dim: int = 1) -> "StateField":
        return StateField(np.full((grid.n_points, dim), float(value)))

    @staticmethod
    def zeros(grid: SpatialGrid, dim: int = 1) -> "StateField":
        return StateField(np.zeros((grid.n_points, dim)))


def as_values(f) -> np.ndarray:
    """Coerce a StateField or array-like to an (N, n) float array."""
    if isinstance(f, StateField):
        return f.values
    vals = np.asarray(f, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    return vals


def field_l2_norm(f, grid: SpatialGrid) -> float:
    """L2 norm sqrt(sum_r weight(r) * |f(r)|^2); the metric behind every
    convergence criterion in this package."""
    vals = as_values(f)
    if vals.shape[0] != grid.n_points:
        raise DimensionError(
            f"field has {vals.shape[0]} points but grid has {grid.n_points}"
        )
    return float(np.sqrt(np.sum(grid.weights * np.sum(vals * vals, axis=1))))


def field_inner(f, g, grid: SpatialGrid) -> float:
    """Weighted L2 inner product of two fields."""
    a, b = as_values(f), as_values(g)
    if a.shape != b.shape:
        raise DimensionError(f"field shapes differ: {a.shape} vs {b.shape}")
    return float(np.sum(grid.weights * np.sum(a * b, axis=1)))

"""Transmission-delay specifications and their grid realizations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .grid import SpatialGrid


@dataclass(frozen=True)
class DelayMatrix:
    """Delays realized on a grid.

    Either uniform (one scalar for every pair, possibly zero) or a full
    (N, N) matrix.  For matrix delays, the distinct values and an inverse
    index are precomputed so delayed fields can be assembled with one
    history query per distinct delay.
    """

    uniform_value: float = None        # set when all pairs share one delay
    matrix: np.ndarray = None          # (N, N), set otherwise
    max_delay: float = 0.0
    min_positive: float = np.inf       # inf when all delays are zero
    unique_values: np.ndarray = None
    unique_inverse: np.ndarray = None  # (N, N) indices into unique_values

    @property
    def is_uniform(self) -> bool:
        return self.uniform_value is not None

    @property
    def is_zero(self) -> bool:
        return self.max_delay == 0.0

    @staticmethod
    def uniform(value: float) -> "DelayMatrix":
        if value < 0:
            raise ParameterError(f"delay must be nonnegative, got {value}")
        return DelayMatrix(
            uniform_value=float(value),
            max_delay=float(value),
            min_positive=float(value) if value > 0 else np.inf,
        )

    @staticmethod
    def from_matrix(matrix: np.ndarray) -> "DelayMatrix":
        m = np.asarray(matrix, dtype=float)
        if np.any(m < 0):
            raise ParameterError("delays must be nonnegative")
        vals, inv = np.unique(m, return_inverse=True)
        if vals.size == 1:
            return DelayMatrix.uniform(float(vals[0]))
        pos = vals[vals > 0]
        return DelayMatrix(
            matrix=m,
            max_delay=float(vals.max()),
            min_positive=float(pos.min()) if pos.size else np.inf,
            unique_values=vals,
            unique_inverse=inv.reshape(m.shape),
        )


@dataclass(frozen=True)
class DelaySpec:
    """Constant delay, or delay proportional to distance via an axonal speed."""

    kind: str = "constant"       # "constant" | "distance_proportional"
    value: float = 0.0           # constant delay (seconds)
    speed: float = 1.0           # distance units per second

    def __post_init__(self):
        if self.kind not in ("constant", "distance_proportional"):
            raise ParameterError(f"unknown delay kind {self.kind!r}")
        if self.kind == "constant" and self.value < 0:
            raise ParameterError("constant delay must be nonnegative")
        if self.kind == "distance_proportional" and self.speed <= 0:
            raise ParameterError("propagation speed must be positive")

    def realize(self, grid: SpatialGrid) -> DelayMatrix:
        if self.kind == "constant":
            return DelayMatrix.uniform(self.value)
        return DelayMatrix.from_matrix(grid.distances / self.speed)

    def max_delay(self, grid: SpatialGrid) -> float:
        return self.realize(grid).max_delay

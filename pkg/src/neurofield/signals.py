"""Excitation and reference input signals evaluated on a grid.

``space_time_sine`` is the spatiotemporal probe mu*sin(lambda*t*r) (the
grid coordinate plays the role of r), whose two-population variant with an
irrational frequency ratio is the stock excitation for kernel estimation.
``sine_basis`` assigns each basis direction its own harmonic,

    g(t) = sqrt(2*kappa/T) * sum_l sin(2*pi*l*t/T) e_l,

which is persistently exciting with window T and level kappa exactly, and
bounded by sqrt(2*kappa*dim/T).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .grid import SpatialGrid

KINDS = ("zero", "constant", "space_time_sine", "sine_basis")


@dataclass(frozen=True)
class SignalSpec:
    kind: str = "zero"
    mu: float = 0.0            # space_time_sine amplitude
    rate: float = 0.0          # space_time_sine temporal rate (lambda)
    value: float = 0.0         # constant level
    period: float = 2 * np.pi  # sine_basis window T
    kappa: float = np.pi       # sine_basis excitation level
    dim: int = 0               # sine_basis dimension (0 -> grid size * n)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown signal kind {self.kind!r}; expected {KINDS}")
        if self.kind == "sine_basis" and (self.period <= 0 or self.kappa <= 0):
            raise ParameterError("sine basis needs positive period and kappa")


class GridSignal:
    """Evaluable input: ``sig(t)`` returns the (N, n) field at time t."""

    def __init__(self, spec: SignalSpec, grid: SpatialGrid, n: int = 1):
        self.spec = spec
        self.grid = grid
        self.n = n
        if spec.kind == "sine_basis":
            self.dim = spec.dim if spec.dim else grid.n_points * n
            if self.dim > grid.n_points * n:
                raise ParameterError(
                    f"sine basis dim {self.dim} exceeds field dimension {grid.n_points * n}"
                )
            self._amp = np.sqrt(2.0 * spec.kappa / spec.period)
            self._freqs = 2.0 * np.pi * np.arange(1, self.dim + 1) / spec.period
        else:
            self.dim = grid.n_points * n

    @property
    def bound(self) -> float:
        """Sup over time of the Euclidean (counting-measure) field norm."""
        s = self.spec
        if s.kind == "zero":
            return 0.0
        if s.kind == "constant":
            return abs(s.value) * np.sqrt(self.dim)
        if s.kind == "space_time_sine":
            return abs(s.mu) * np.sqrt(self.dim)
        return float(np.sqrt(2.0 * s.kappa * self.dim / s.period))

    def at(self, t: float, r: float) -> float:
        """Pointwise value for the space-time modes (r is a coordinate)."""
        s = self.spec
        if s.kind == "zero":
            return 0.0
        if s.kind == "constant":
            return s.value
        if s.kind == "space_time_sine":
            return s.mu * np.sin(s.rate * t * r)
        raise ParameterError("sine_basis is defined per grid index, not per coordinate")

    def __call__(self, t: float) -> np.ndarray:
        s = self.spec
        N, n = self.grid.n_points, self.n
        if s.kind == "zero":
            return np.zeros((N, n))
        if s.kind == "constant":
            return np.full((N, n), s.value)
        if s.kind == "space_time_sine":
            vals = s.mu * np.sin(s.rate * t * self.grid.points)
            return np.repeat(vals[:, None], n, axis=1)
        flat = np.zeros(N * n)
        flat[: self.dim] = self._amp * np.sin(self._freqs * t)
        return flat.reshape(N, n)


def make_signal(spec: SignalSpec, grid: SpatialGrid, n: int = 1) -> GridSignal:
    return GridSignal(spec, grid, n)

"""Activation nonlinearities with certified Lipschitz and sup bounds.

Activations act componentwise on the per-point activity vector.  Each spec
exposes the constants that the convergence analysis consumes: a global
Lipschitz constant ``lipschitz`` and a sup bound ``bound``, plus an exact
derivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


class ActivationSpec:
    """Base interface: callable, differentiable, bounded, globally Lipschitz."""

    lipschitz: float
    bound: float

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Tanh(ActivationSpec):
    """tanh: Lipschitz 1, bounded by 1."""

    lipschitz: float = 1.0
    bound: float = 1.0

    def __call__(self, x):
        return np.tanh(x)

    def derivative(self, x):
        return 1.0 / np.cosh(x) ** 2


@dataclass(frozen=True)
class ScaledShiftedSigmoid(ActivationSpec):
    """amplitude / (1 + exp(-slope * (x - center))) + baseline."""

    amplitude: float = 1.0
    slope: float = 1.0
    center: float = 0.0
    baseline: float = 0.0

    def __post_init__(self):
        if self.amplitude <= 0 or self.slope <= 0:
            raise ParameterError("sigmoid amplitude and slope must be positive")

    @property
    def lipschitz(self) -> float:
        return self.amplitude * self.slope / 4.0

    @property
    def bound(self) -> float:
        lo, hi = self.baseline, self.amplitude + self.baseline
        return max(abs(lo), abs(hi))

    def __call__(self, x):
        return self.amplitude / (1.0 + np.exp(-self.slope * (np.asarray(x) - self.center))) + self.baseline

    def derivative(self, x):
        s = 1.0 / (1.0 + np.exp(-self.slope * (np.asarray(x) - self.center)))
        return self.amplitude * self.slope * s * (1.0 - s)


@dataclass(frozen=True)
class LocallyLinear(ActivationSpec):
    """Exactly linear in a band around ``center``, saturating smoothly outside.

        S(x) = slope * (x - center)                         for |x - center| <= radius
        S(x) = slope * sign(d) * (radius + m*tanh((|d|-radius)/m))   otherwise

    with d = x - center and m = ``margin``.  C^1, globally Lipschitz with
    constant |slope|, bounded by |slope| * (radius + margin), and its
    derivative at the center (= slope) is invertible whenever slope != 0.
    """

    slope: float = 1.0
    radius: float = 1.0
    margin: float = 1.0
    center: float = 0.0

    def __post_init__(self):
        if self.slope == 0:
            raise ParameterError("locally linear slope must be nonzero")
        if self.radius <= 0 or self.margin <= 0:
            raise ParameterError("radius and margin must be positive")

    @property
    def lipschitz(self) -> float:
        return abs(self.slope)

    @property
    def bound(self) -> float:
        return abs(self.slope) * (self.radius + self.margin)

    def __call__(self, x):
        d = np.asarray(x, dtype=float) - self.center
        a, m = self.radius, self.margin
        inner = np.abs(d) <= a
        sat = np.sign(d) * (a + m * np.tanh((np.abs(d) - a) / m))
        return self.slope * np.where(inner, d, sat)

    def derivative(self, x):
        d = np.asarray(x, dtype=float) - self.center
        a, m = self.radius, self.margin
        inner = np.abs(d) <= a
        outer = 1.0 / np.cosh(np.clip((np.abs(d) - a) / m, 0.0, None)) ** 2
        return self.slope * np.where(inner, 1.0, outer)


def make_activation(kind: str, **kwargs) -> ActivationSpec:
    """Factory used by the configuration layer."""
    kinds = {
        "tanh": Tanh,
        "scaled_shifted_sigmoid": ScaledShiftedSigmoid,
        "locally_linear": LocallyLinear,
    }
    if kind not in kinds:
        raise ParameterError(f"unknown activation kind {kind!r}; expected one of {sorted(kinds)}")
    return kinds[kind](**kwargs)

"""Model parameter record shared by the plant, observer, and controllers.

Populations are indexed 1 (measured) and 2 (unmeasured); pair (i, j) wires
population j into population i.  When ``n2 == 0`` the model is fully
measured and only the (1, 1) pair exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .activations import ActivationSpec, Tanh
from .delays import DelayMatrix, DelaySpec
from .errors import DimensionError, ParameterError
from .grid import SpatialGrid, build_grid
from .kernels import KernelField, gaussian_kernel

Pair = Tuple[int, int]

# amplitudes/gains used by the reference experiments
DEFAULT_OMEGA = {(1, 1): 2.0, (1, 2): 2.0, (2, 1): -2.0, (2, 2): 0.1}
DEFAULT_SIGMA = 60.0
DEFAULT_ALPHA = 100.0
DEFAULT_DELAY = 0.1
DEFAULT_MU = 1e3
DEFAULT_LAMBDA1 = 100.0
DEFAULT_LAMBDA2 = 100.0 * math.sqrt(2.0)


@dataclass
class ModelParams:
    """Plant/observer/controller parameters on a fixed grid.

    ``tau1``/``tau2`` store the positive diagonal decay entries per point,
    shape (N, n_i).  ``kernels``, ``activations``, and ``delays`` are keyed
    by population pair.  Treat instances as immutable after construction.
    """

    grid: SpatialGrid
    n1: int = 1
    n2: int = 1
    tau1: np.ndarray = None
    tau2: np.ndarray = None
    kernels: Dict[Pair, KernelField] = None
    activations: Dict[Pair, ActivationSpec] = None
    delays: Dict[Pair, DelayMatrix] = None
    alpha: float = DEFAULT_ALPHA
    zref1: np.ndarray = None
    mu: float = DEFAULT_MU
    lambda1: float = DEFAULT_LAMBDA1
    lambda2: float = DEFAULT_LAMBDA2
    conn: Dict[Pair, "Connection"] = field(default=None, repr=False)

    def __post_init__(self):
        n = self.grid.n_points
        if self.n1 < 1 or self.n2 < 0:
            raise ParameterError("need n1 >= 1 and n2 >= 0")
        self.tau1 = _tau_array(self.tau1, n, self.n1, "tau1")
        self.tau2 = _tau_array(self.tau2, n, self.n2, "tau2")
        if self.zref1 is None:
            self.zref1 = np.zeros((n, self.n1))
        else:
            self.zref1 = np.broadcast_to(
                np.asarray(self.zref1, dtype=float), (n, self.n1)
            ).copy()
        dims = {1: self.n1, 2: self.n2}
        self.kernels = dict(self.kernels or {})
        self.activations = dict(self.activations or {})
        self.delays = dict(self.delays or {})
        for pair in self.pairs:
            if pair not in self.kernels:
                raise ParameterError(f"missing kernel for pair {pair}")
            k = self.kernels[pair]
            if (k.row_dim, k.col_dim) != (dims[pair[0]], dims[pair[1]]):
                raise DimensionError(
                    f"kernel {pair} has block dims {(k.row_dim, k.col_dim)}, "
                    f"expected {(dims[pair[0]], dims[pair[1]])}"
                )
            self.activations.setdefault(pair, Tanh())
            self.delays.setdefault(pair, DelayMatrix.uniform(0.0))
            dm = self.delays[pair]
            if isinstance(dm, DelaySpec):
                dm = dm.realize(self.grid)
                self.delays[pair] = dm
        from .plant import Connection  # deferred: plant imports params

        self.conn = {
            pair: Connection(
                self.kernels[pair],
                self.activations[pair],
                self.delays[pair],
                self.grid,
            )
            for pair in self.pairs
        }

    @property
    def pairs(self):
        if self.n2 == 0:
            return ((1, 1),)
        return ((1, 1), (1, 2), (2, 1), (2, 2))

    @property
    def max_delay(self) -> float:
        return max((dm.max_delay for dm in self.delays.values()), default=0.0)

    def lipschitz(self, pair: Pair) -> float:
        return self.activations[pair].lipschitz

    def activation_bound(self, pair: Pair) -> float:
        return self.activations[pair].bound


def _tau_array(tau, n_points, dim, name) -> np.ndarray:
    if dim == 0:
        return np.zeros((n_points, 0))
    if tau is None:
        tau = 1.0
    arr = np.broadcast_to(np.asarray(tau, dtype=float), (n_points, dim)).copy()
    if np.any(arr <= 0):
        raise ParameterError(f"{name} entries must be strictly positive")
    return arr


def default_model(
    n_points: int = 20,
    measure: str = "lebesgue",
    n2: int = 1,
    alpha: float = DEFAULT_ALPHA,
    sigma: float = DEFAULT_SIGMA,
    omega: Dict[Pair, float] = None,
    delay: float = DEFAULT_DELAY,
    activation: ActivationSpec = None,
    tau: float = 1.0,
    tau2: float = None,
    zref1=None,
    distance_kind: str = "geodesic",
    mu: float = DEFAULT_MU,
    lambda1: float = DEFAULT_LAMBDA1,
    lambda2: float = DEFAULT_LAMBDA2,
) -> ModelParams:
    """Standard experiment model: normalized Gaussian kernels on a uniform
    circle grid, tanh activations, one constant delay for every pair."""
    grid = build_grid(n_points, measure, distance_kind)
    omega = dict(DEFAULT_OMEGA if omega is None else omega)
    act = activation if activation is not None else Tanh()
    pairs = ((1, 1),) if n2 == 0 else ((1, 1), (1, 2), (2, 1), (2, 2))
    kernels = {p: gaussian_kernel(grid, sigma, omega[p]) for p in pairs}
    dm = delay.realize(grid) if isinstance(delay, DelaySpec) else DelayMatrix.uniform(delay)
    return ModelParams(
        grid=grid,
        n1=1,
        n2=n2,
        tau1=tau,
        tau2=(tau if tau2 is None else tau2) if n2 else None,
        kernels=kernels,
        activations={p: act for p in pairs},
        delays={p: dm for p in pairs},
        alpha=alpha,
        zref1=zref1,
        mu=mu,
        lambda1=lambda1,
        lambda2=lambda2,
    )

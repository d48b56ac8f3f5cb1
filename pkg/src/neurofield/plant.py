"""The delayed neural-field plant and its synaptic machinery.

Each population obeys

    tau_i(r) dz_i/dt = -z_i + u_i + sum_j Integral w_ij(r,r') S_ij(z_j(t - d_ij(r,r'), r')) dr'

evaluated with the grid quadrature.  :class:`Connection` bundles one
(i, j) pair's kernel, activation, and delay with a fast drive evaluation;
it is the hot path of every simulation.
"""

from __future__ import annotations

import numpy as np

from .delays import DelayMatrix
from .grid import SpatialGrid
from .kernels import KernelField


class Connection:
    """One synaptic pathway: kernel + activation + delay, quadrature folded in."""

    def __init__(self, kernel: KernelField, activation, delay: DelayMatrix, grid: SpatialGrid):
        self.kernel = kernel
        self.activation = activation
        self.delay = delay
        self.grid = grid
        self._scalar = kernel.is_scalar
        if self._scalar:
            # (N, N) matrix with source weights folded in
            self._wmat = kernel.blocks[:, :, 0, 0] * grid.weights[None, :]
        else:
            self._wblocks = kernel.blocks * grid.weights[None, :, None, None]

    def drive(self, s: np.ndarray) -> np.ndarray:
        """Kernel action on an activated source: (N, nj) or (N, N, nj) -> (N, ni)."""
        if self._scalar:
            if s.ndim == 2:
                return self._wmat @ s
            return np.einsum("rq,rq->r", self._wmat, s[:, :, 0])[:, None]
        if s.ndim == 2:
            return np.einsum("rqab,qb->ra", self._wblocks, s)
        return np.einsum("rqab,rqb->ra", self._wblocks, s)

    def pull(self, source: str, view) -> np.ndarray:
        """Delayed, activated, kernel-weighted contribution of ``source``."""
        vals = view.delayed(source, self.delay)
        return self.drive(self.activation(vals))


def apply_state_kernel(blocks: np.ndarray, s: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Kernel action for kernels that are themselves state (adapted estimates).

    ``blocks`` is (N, N, ni, nj); ``s`` is (N, nj) or (N, N, nj).
    """
    if blocks.shape[2] == 1 and blocks.shape[3] == 1:
        w = blocks[:, :, 0, 0] * weights[None, :]
        if s.ndim == 2:
            return w @ s
        return np.einsum("rq,rq->r", w, s[:, :, 0])[:, None]
    if s.ndim == 2:
        return np.einsum("q,rqab,qb->ra", weights, blocks, s)
    return np.einsum("q,rqab,rqb->ra", weights, blocks, s)


def outer_update(scaled_inno: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Kernel-estimate update direction: -(innovation/tau)(r) x S(source)(r')^T.

    Returns (N, N, ni, nj) for ``scaled_inno`` (N, ni) and ``s`` either
    (N, nj) (uniform delay) or (N, N, nj) (pairwise delays).
    """
    if s.ndim == 2:
        return np.einsum("ra,qb->rqab", scaled_inno, s)
    return np.einsum("ra,rqb->rqab", scaled_inno, s)


def plant_rhs(t: float, z1: np.ndarray, z2: np.ndarray, view, u1, u2, params):
    """Time derivatives (dz1/dt, dz2/dt) of the delayed plant.

    ``view`` must resolve delayed values of components named ``"z1"`` and
    (when n2 > 0) ``"z2"``; ``u1``/``u2`` are already-evaluated input fields.
    """
    drive1 = params.conn[(1, 1)].pull("z1", view)
    if params.n2 > 0:
        drive1 = drive1 + params.conn[(1, 2)].pull("z2", view)
    dz1 = (-z1 + u1 + drive1) / params.tau1
    if params.n2 == 0:
        return dz1, np.zeros_like(z2)
    drive2 = params.conn[(2, 1)].pull("z1", view) + params.conn[(2, 2)].pull("z2", view)
    dz2 = (-z2 + u2 + drive2) / params.tau2
    return dz1, dz2


def bibs_bound(params, u_sup_norms, z0_norms):
    """Explicit bounded-input bound on ||z_i(t)||.

    Assembled from the dissipation estimate
    (tau/2) d/dt ||z_i||^2 <= -||z_i||^2/2 + ||u_i||^2 + sum_j Sbar_ij^2 ||w_ij||^2,
    which by the Gronwall lemma caps ||z_i(t)||^2 at max(||z_i(0)||^2, 2 a_i).
    """
    from .kernels import l2_opnorm

    bounds = []
    pops = (1,) if params.n2 == 0 else (1, 2)
    for i in pops:
        a = float(u_sup_norms[i - 1]) ** 2
        for j in pops:
            pair = (i, j)
            a += (
                params.activation_bound(pair) ** 2
                * l2_opnorm(params.kernels[pair], params.grid) ** 2
            )
        bounds.append(float(np.sqrt(max(z0_norms[i - 1] ** 2, 2.0 * a))))
    if params.n2 == 0:
        bounds.append(0.0)
    return tuple(bounds)

"""Coupling kernels and their discrete integral-operator algebra.

A kernel is an (N, N) family of small coupling blocks w(r, r') of shape
(n_row, n_col).  Integrals against a kernel always carry the grid's
quadrature weights, so every identity below holds exactly at the discrete
level:

* ``hs_norm``     -- L2 norm of the per-block Frobenius norm,
* ``l2_opnorm``   -- L2 norm of the per-block spectral norm (never exceeds
  the former, since |w| <= |w|_F blockwise),
* ``kernel_compose`` -- (w o rho)(r, r') = sum_q weight(q) w(r, q) rho(q, r'),
* ``apply_kernel``   -- (W z)(r) = sum_q weight(q) w(r, q) z(q).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .fields import StateField, as_values
from .grid import SpatialGrid


@dataclass(frozen=True)
class KernelField:
    """Grid x grid array of coupling blocks, stored as (N, N, n_row, n_col)."""

    blocks: np.ndarray

    def __post_init__(self):
        blk = np.asarray(self.blocks, dtype=float)
        if blk.ndim == 2:
            blk = blk[:, :, None, None]
        if blk.ndim != 4 or blk.shape[0] != blk.shape[1]:
            raise DimensionError(f"kernel blocks must be (N, N, ni, nj), got {blk.shape}")
        if not np.all(np.isfinite(blk)):
            raise ParameterError("kernel contains non-finite entries")
        object.__setattr__(self, "blocks", blk)

    @property
    def n_points(self) -> int:
        return self.blocks.shape[0]

    @property
    def row_dim(self) -> int:
        return self.blocks.shape[2]

    @property
    def col_dim(self) -> int:
        return self.blocks.shape[3]

    @property
    def is_scalar(self) -> bool:
        return self.row_dim == 1 and self.col_dim == 1

    def dense(self) -> np.ndarray:
        """Flatten to an (N*n_row, N*n_col) matrix, point-major row order."""
        n, _, a, b = self.blocks.shape
        return self.blocks.transpose(0, 2, 1, 3).reshape(n * a, n * b)

    @staticmethod
    def zeros(grid: SpatialGrid, row_dim: int = 1, col_dim: int = 1) -> "KernelField":
        n = grid.n_points
        return KernelField(np.zeros((n, n, row_dim, col_dim)))


def as_blocks(k) -> np.ndarray:
    if isinstance(k, KernelField):
        return k.blocks
    return KernelField(k).blocks


def gaussian_kernel(grid: SpatialGrid, sigma: float, omega: float, block=None) -> KernelField:
    """Distance-dependent Gaussian kernel, normalized so hs_norm == |omega|.

    k(r, r') = omega * exp(-sigma * dist(r, r')^2) * B / ||g (x) B||
    where B defaults to the 1x1 identity block.  The normalization uses the
    same discrete quadrature as ``hs_norm``, making the norm exact.
    """
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    g = np.exp(-sigma * grid.distances**2)
    if block is None:
        block = np.ones((1, 1))
    block = np.asarray(block, dtype=float)
    if block.ndim != 2:
        raise DimensionError("block must be a 2-D matrix")
    # ||g (x) B||_HS = ||g||_{L2} * ||B||_F, both under the grid quadrature
    g_norm = np.sqrt(np.einsum("r,q,rq->", grid.weights, grid.weights, g * g))
    b_norm = np.linalg.norm(block)
    scale = omega / (g_norm * b_norm)
    return KernelField(scale * g[:, :, None, None] * block[None, None, :, :])


def dirac_kernel(grid: SpatialGrid, dim: int = 1) -> KernelField:
    """Discrete Dirac kernel: identity blocks scaled by 1/weight on the
    diagonal, so composing with it is the identity under the quadrature."""
    n = grid.n_points
    blocks = np.zeros((n, n, dim, dim))
    eye = np.eye(dim)
    for k in range(n):
        blocks[k, k] = eye / grid.weights[k]
    return KernelField(blocks)


def _block_spectral_norms(blocks: np.ndarray) -> np.ndarray:
    """Spectral norm per block, via eigenvalues of k^T k (blocks are tiny)."""
    if blocks.shape[2] == 1 and blocks.shape[3] == 1:
        return np.abs(blocks[:, :, 0, 0])
    gram = np.einsum("rqab,rqac->rqbc", blocks, blocks)
    eig = np.linalg.eigvalsh(gram)
    return np.sqrt(np.clip(eig[..., -1], 0.0, None))


def hs_norm(k, grid: SpatialGrid) -> float:
    """Hilbert-Schmidt norm: sqrt(sum w(r) w(r') |k(r,r')|_F^2)."""
    blocks = as_blocks(k)
    _check_grid(blocks, grid)
    sq = np.sum(blocks * blocks, axis=(2, 3))
    return float(np.sqrt(np.einsum("r,q,rq->", grid.weights, grid.weights, sq)))


def l2_opnorm(k, grid: SpatialGrid) -> float:
    """L2 norm of the per-block spectral norm; always <= hs_norm."""
    blocks = as_blocks(k)
    _check_grid(blocks, grid)
    sq = _block_spectral_norms(blocks) ** 2
    return float(np.sqrt(np.einsum("r,q,rq->", grid.weights, grid.weights, sq)))


def kernel_compose(w, rho, grid: SpatialGrid) -> KernelField:
    """Kernel of the composed integral operators,
    (w o rho)(r, r') = sum_q weight(q) w(r, q) rho(q, r')."""
    wb, rb = as_blocks(w), as_blocks(rho)
    _check_grid(wb, grid)
    _check_grid(rb, grid)
    if wb.shape[3] != rb.shape[2]:
        raise DimensionError(
            f"cannot compose: left col_dim {wb.shape[3]} != right row_dim {rb.shape[2]}"
        )
    out = np.einsum("q,rqab,qpbc->rpac", grid.weights, wb, rb)
    return KernelField(out)


def apply_kernel(w, f, grid: SpatialGrid):
    """Integral-operator action (W f)(r) = sum_q weight(q) w(r, q) f(q).

    ``f`` may be an (N, n_col) field or an (N, N, n_col) array whose first
    axis matches the kernel's row index (delayed sources that vary with the
    target point).  Returns the same container kind it was given.
    """
    wb = as_blocks(w)
    _check_grid(wb, grid)
    wrap = isinstance(f, StateField)
    vals = as_values(f) if (wrap or np.asarray(f).ndim <= 2) else np.asarray(f, dtype=float)
    if vals.ndim == 2:
        if vals.shape != (wb.shape[0], wb.shape[3]):
            raise DimensionError(
                f"field shape {vals.shape} incompatible with kernel {wb.shape}"
            )
        out = np.einsum("q,rqab,qb->ra", grid.weights, wb, vals)
    elif vals.ndim == 3:
        if vals.shape != (wb.shape[0], wb.shape[0], wb.shape[3]):
            raise DimensionError(
                f"pairwise field shape {vals.shape} incompatible with kernel {wb.shape}"
            )
        out = np.einsum("q,rqab,rqb->ra", grid.weights, wb, vals)
    else:
        raise DimensionError(f"unsupported field rank {vals.ndim}")
    return StateField(out) if wrap else out


def _check_grid(blocks: np.ndarray, grid: SpatialGrid) -> None:
    if blocks.shape[0] != grid.n_points:
        raise DimensionError(
            f"kernel defined on {blocks.shape[0]} points but grid has {grid.n_points}"
        )

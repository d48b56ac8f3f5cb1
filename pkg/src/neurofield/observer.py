"""Online estimation of activity and synaptic kernels from partial measurements.

The observer copies the measured population's dynamics with an innovation
term and runs an internal copy of the unmeasured population, while the two
unknown kernels are adapted by innovation-times-regressor laws:

    tau1 dzh1/dt = -alpha (zh1 - z1) - z1 + u1 + Wh11 S11(z1(t-d11)) + Wh12 S12(zh2(t-d12))
    tau2 dzh2/dt = -zh2 + u2 + W21 S21(z1(t-d21)) + W22 S22(zh2(t-d22))
    tau1 dWh11/dt = -(zh1 - z1) S11(z1(t-d11))^T
    tau1 dWh12/dt = -(zh1 - z1) S12(zh2(t-d12))^T

Both kernel laws carry tau1: the innovation lives in population 1, so the
update is an outer product of an n1-vector with the regressor, and the
matching quadratic form in the decrease certificate is weighted by tau1.

Subtracting the plant gives the estimation-error system, implemented
separately in :func:`error_rhs` so the two routes can be cross-checked.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .fields import StateField, as_values, field_l2_norm
from .kernels import KernelField, dirac_kernel, hs_norm, kernel_compose, l2_opnorm
from .params import ModelParams
from .plant import apply_state_kernel, outer_update

log = logging.getLogger(__name__)


# -- gain threshold and detectability ---------------------------------------

def check_dissipativity(params: ModelParams):
    """Contraction margin of the unmeasured subsystem: 1 - l22 ||w22||.

    Returns a dict with ``holds``, ``margin``, and the offending ``product``.
    A positive margin is the detectability hypothesis every convergence
    statement rests on; with n2 == 0 it holds vacuously with margin 1.
    """
    if params.n2 == 0:
        return {"holds": True, "margin": 1.0, "product": 0.0}
    product = params.lipschitz((2, 2)) * l2_opnorm(params.kernels[(2, 2)], params.grid)
    return {"holds": product < 1.0, "margin": 1.0 - product, "product": product}


def alpha_star(params: ModelParams) -> float:
    """Sufficient observer-gain threshold
    l12^2 ||w12||^2 / (2 (1 - l22^2 ||w22||^2)); zero when everything is
    measured."""
    if params.n2 == 0:
        return 0.0
    diss = check_dissipativity(params)
    a = diss["product"] ** 2
    if a >= 1.0:
        raise ParameterError(
            "strong dissipativity fails: l22*||w22|| = "
            f"{diss['product']:.6g} >= 1; gain threshold undefined"
        )
    b = (params.lipschitz((1, 2)) * l2_opnorm(params.kernels[(1, 2)], params.grid)) ** 2
    return b / (2.0 * (1.0 - a))


# -- state containers --------------------------------------------------------

@dataclass
class ObserverState:
    """Estimates bundle: activity fields plus the two adapted kernels."""

    zhat1: StateField
    zhat2: StateField
    what11: KernelField
    what12: KernelField
    alpha: float

    def __post_init__(self):
        if isinstance(self.zhat1, np.ndarray):
            self.zhat1 = StateField(self.zhat1)
        if isinstance(self.zhat2, np.ndarray):
            self.zhat2 = StateField(self.zhat2)
        if isinstance(self.what11, np.ndarray):
            self.what11 = KernelField(self.what11)
        if isinstance(self.what12, np.ndarray):
            self.what12 = KernelField(self.what12)
        if self.alpha <= 0:
            raise ParameterError("observer gain must be positive")


def initial_observer_state(params: ModelParams) -> ObserverState:
    """Default initialization: zhat1 = 1, zhat2 = 0, kernels start at zero."""
    n2 = max(params.n2, 1)  # keep one column so the state block exists
    state = ObserverState(
        zhat1=StateField.constant(params.grid, 1.0, params.n1),
        zhat2=StateField.zeros(params.grid, n2),
        what11=KernelField.zeros(params.grid, params.n1, params.n1),
        what12=KernelField.zeros(params.grid, params.n1, n2),
        alpha=params.alpha,
    )
    threshold = alpha_star(params)
    if params.alpha <= threshold:
        log.warning(
            "observer gain alpha=%.6g does not exceed the sufficient threshold %.6g; "
            "convergence is no longer guaranteed (running anyway)",
            params.alpha,
            threshold,
        )
    return state


@dataclass
class EstimationError:
    """Observer state minus true state, componentwise."""

    ztilde1: np.ndarray
    ztilde2: np.ndarray
    wtilde11: np.ndarray
    wtilde12: np.ndarray

    @staticmethod
    def between(obs: ObserverState, z1, z2, params: ModelParams) -> "EstimationError":
        return EstimationError(
            ztilde1=obs.zhat1.values - as_values(z1),
            ztilde2=(obs.zhat2.values - as_values(z2)) if params.n2 else np.zeros((0, 0)),
            wtilde11=obs.what11.blocks - params.kernels[(1, 1)].blocks,
            wtilde12=(obs.what12.blocks - params.kernels[(1, 2)].blocks)
            if params.n2
            else np.zeros((0, 0, 0, 0)),
        )


# -- right-hand sides ---------------------------------------------------------

def observer_rhs(t, zhat1, zhat2, what11, what12, z1_now, view, u1, u2, params):
    """Derivatives of (zhat1, zhat2, what11, what12).

    ``view`` must resolve delayed values of the measured component ``"z1"``
    and the internal copy ``"zhat2"``; ``z1_now`` is the current measurement.
    """
    inno = zhat1 - z1_now
    s11 = params.activations[(1, 1)](view.delayed("z1", params.delays[(1, 1)]))
    w11drive = apply_state_kernel(what11, s11, params.grid.weights)
    if params.n2 > 0:
        s12 = params.activations[(1, 2)](view.delayed("zhat2", params.delays[(1, 2)]))
        w12drive = apply_state_kernel(what12, s12, params.grid.weights)
    else:
        s12 = None
        w12drive = 0.0
    dzhat1 = (-params.alpha * inno - z1_now + u1 + w11drive + w12drive) / params.tau1

    scaled = -inno / params.tau1
    dwhat11 = outer_update(scaled, s11)
    if params.n2 > 0:
        dzhat2 = (
            -zhat2
            + u2
            + params.conn[(2, 1)].pull("z1", view)
            + params.conn[(2, 2)].pull("zhat2", view)
        ) / params.tau2
        dwhat12 = outer_update(scaled, s12)
    else:
        dzhat2 = np.zeros_like(zhat2)
        dwhat12 = np.zeros_like(what12)
    return dzhat1, dzhat2, dwhat11, dwhat12


def error_rhs(t, zt1, zt2, wt11, wt12, view, params):
    """Estimation-error dynamics driven by the plant trajectory.

    ``view`` must resolve delayed ``"z1"``, ``"z2"`` (plant) and ``"zt2"``;
    the internal estimate zhat2 is reconstructed as z2 + zt2.
    """
    wgt = params.grid.weights
    s11 = params.activations[(1, 1)](view.delayed("z1", params.delays[(1, 1)]))
    dzt1 = -params.alpha * zt1 + apply_state_kernel(wt11, s11, wgt)
    if params.n2 > 0:
        d12 = params.delays[(1, 2)]
        zh2_d = view.delayed("z2", d12) + view.delayed("zt2", d12)
        s12h = params.activations[(1, 2)](zh2_d)
        s12 = params.activations[(1, 2)](view.delayed("z2", d12))
        dzt1 = dzt1 + apply_state_kernel(wt12, s12h, wgt) + params.conn[(1, 2)].drive(
            s12h - s12
        )
        d22 = params.delays[(2, 2)]
        zh2_d22 = view.delayed("z2", d22) + view.delayed("zt2", d22)
        s22h = params.activations[(2, 2)](zh2_d22)
        s22 = params.activations[(2, 2)](view.delayed("z2", d22))
        dzt2 = (-zt2 + params.conn[(2, 2)].drive(s22h - s22)) / params.tau2
    else:
        s12h = None
        dzt2 = np.zeros_like(zt2)
    dzt1 = dzt1 / params.tau1

    scaled = -zt1 / params.tau1
    dwt11 = outer_update(scaled, s11)
    dwt12 = outer_update(scaled, s12h) if params.n2 > 0 else np.zeros_like(wt12)
    return dzt1, dzt2, dwt11, dwt12


# -- convergence metrics -------------------------------------------------------

def error_metrics(z1, z2, obs: ObserverState, params: ModelParams, rho1=None, rho2=None):
    """The five norms tracked by the convergence statements.

    ``rho1``/``rho2`` are the smoothing kernels defining the kernel-error
    topology; the default is the discrete Dirac, under which the composed
    norms coincide with the plain ones.
    """
    grid = params.grid
    err = EstimationError.between(obs, z1, z2, params)
    rho1 = rho1 if rho1 is not None else dirac_kernel(grid, params.n1)
    out = {
        "ztilde1": field_l2_norm(err.ztilde1, grid),
        "wtilde11": hs_norm(err.wtilde11, grid),
        "wtilde11_rho": hs_norm(kernel_compose(err.wtilde11, rho1, grid), grid),
    }
    if params.n2 > 0:
        rho2 = rho2 if rho2 is not None else dirac_kernel(grid, params.n2)
        out["ztilde2"] = field_l2_norm(err.ztilde2, grid)
        out["wtilde12"] = hs_norm(err.wtilde12, grid)
        out["wtilde12_rho"] = hs_norm(kernel_compose(err.wtilde12, rho2, grid), grid)
    else:
        out["ztilde2"] = 0.0
        out["wtilde12"] = 0.0
        out["wtilde12_rho"] = 0.0
    return out

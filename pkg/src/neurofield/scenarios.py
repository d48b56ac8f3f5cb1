"""Assembly of the coupled systems behind each experiment mode.

Every builder returns a :class:`ScenarioBundle`: the coupled system with
its initial state, an input evaluator for logging, an error extractor for
the decrease monitor, and the recipe for the excitation signal whose PE
level the run tracks.

The twin builders integrate the plant (or the closed loop) together with a
directly integrated copy of the estimation-error dynamics.  Because both
routes share the plant's stage values exactly, agreement between
"difference of estimates" and "integrated error system" checks the error
derivation itself, not the integrator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from .control import (
    control_exact,
    control_sim,
    high_gain_control,
    reduced_observer_rhs,
    require_sim_restrictions,
    sim_observer_rhs,
)
from .errors import ConfigError
from .integrator import ComponentSpec, CoupledSystem
from .lyapunov import ErrorBundle
from .observer import observer_rhs, error_rhs
from .params import ModelParams
from .plant import plant_rhs


@dataclass
class ScenarioBundle:
    system: CoupledSystem
    init: Dict[str, np.ndarray]
    params: ModelParams
    inputs: Callable = None          # (t, state, view) -> {"u1": ..., ...} for logging
    monitor_extract: Callable = None  # LyapunovMonitor extractor, or None
    pe_components: tuple = ()         # (component, activation pair) defining the PE signal
    mode: str = ""


def standard_init(params: ModelParams, names) -> Dict[str, np.ndarray]:
    """Reference initial state: unit activity everywhere, estimates of the
    unmeasured activity and of the kernels start at zero."""
    n = params.grid.n_points
    ones = {"z1", "z2", "zhat1", "z"}
    init = {}
    for name, shape in names.items():
        init[name] = np.ones(shape) if name in ones else np.zeros(shape)
    return init


def _kernel_shape(params, j):
    dim_j = params.n1 if j == 1 else params.n2
    return (params.grid.n_points, params.grid.n_points, params.n1, dim_j)


def _observer_error_extract(params):
    w11 = params.kernels[(1, 1)].blocks
    w12 = params.kernels[(1, 2)].blocks if params.n2 else None
    horizon = (
        max(params.delays[(1, 2)].max_delay, params.delays[(2, 2)].max_delay)
        if params.n2
        else 0.0
    )

    def extract(t, state, view):
        zt1 = state["zhat1"] - state["z1"]
        if params.n2:
            zt2 = state["zhat2"] - state["z2"]
            wt12 = state["what12"] - w12
            th, zh = view.window("zhat2", t - horizon, t)
            _, zp = view.window("z2", t - horizon, t)
            hist = zh - zp
        else:
            zt2 = np.zeros((params.grid.n_points, 0))
            wt12 = np.zeros((0, 0, 0, 0))
            th, hist = np.zeros(0), np.zeros((0, params.grid.n_points, 0))
        return ErrorBundle(zt1, zt2, state["what11"] - w11, wt12), th, hist

    return extract


def build_plant_scenario(params: ModelParams, u1_fn, u2_fn) -> ScenarioBundle:
    """Open-loop plant alone (no estimation), for bound and sanity runs."""
    n, n1, n2 = params.grid.n_points, params.n1, params.n2
    d = params.max_delay
    comps = [ComponentSpec("z1", (n, n1), d)]
    if n2:
        comps += [ComponentSpec("z2", (n, n2), d)]
    zeros2 = np.zeros((n, 0))

    def rhs(t, s, view):
        z2 = s["z2"] if n2 else zeros2
        dz1, dz2 = plant_rhs(t, s["z1"], z2, view, u1_fn(t), u2_fn(t), params)
        out = {"z1": dz1}
        if n2:
            out["z2"] = dz2
        return out

    system = CoupledSystem(comps, rhs, delays=tuple(params.delays.values()), name="plant")
    init = standard_init(params, {c.name: c.shape for c in comps})

    def inputs(t, state, view):
        return {"u1": u1_fn(t), "u2": u2_fn(t)}

    return ScenarioBundle(system, init, params, inputs, None, (), mode="plant")


def build_observer_scenario(params: ModelParams, u1_fn, u2_fn) -> ScenarioBundle:
    """Open-loop plant driven by (u1, u2) with the full adaptive observer."""
    n, n1, n2 = params.grid.n_points, params.n1, params.n2
    d = params.max_delay
    comps = [ComponentSpec("z1", (n, n1), d), ComponentSpec("zhat1", (n, n1))]
    if n2:
        comps += [
            ComponentSpec("z2", (n, n2), d),
            ComponentSpec("zhat2", (n, n2), d),
        ]
    comps += [ComponentSpec("what11", _kernel_shape(params, 1))]
    if n2:
        comps += [ComponentSpec("what12", _kernel_shape(params, 2))]

    zeros2 = np.zeros((n, 0))

    def rhs(t, s, view):
        u1, u2 = u1_fn(t), u2_fn(t)
        z2 = s["z2"] if n2 else zeros2
        dz1, dz2 = plant_rhs(t, s["z1"], z2, view, u1, u2, params)
        dzh1, dzh2, dw11, dw12 = observer_rhs(
            t,
            s["zhat1"],
            s["zhat2"] if n2 else zeros2,
            s["what11"],
            s["what12"] if n2 else np.zeros((0, 0, 0, 0)),
            s["z1"],
            view,
            u1,
            u2,
            params,
        )
        out = {"z1": dz1, "zhat1": dzh1, "what11": dw11}
        if n2:
            out.update({"z2": dz2, "zhat2": dzh2, "what12": dw12})
        return out

    system = CoupledSystem(comps, rhs, delays=tuple(params.delays.values()),
                           name="open_loop_observer")
    init = standard_init(params, {c.name: c.shape for c in comps})

    def inputs(t, state, view):
        return {"u1": u1_fn(t), "u2": u2_fn(t)}

    pe = (("z1", (1, 1)), ("z2", (1, 2))) if n2 else (("z1", (1, 1)),)
    return ScenarioBundle(
        system, init, params, inputs, _observer_error_extract(params), pe,
        mode="open_loop_observer",
    )


def build_error_twin(params: ModelParams, u1_fn, u2_fn) -> ScenarioBundle:
    """Plant plus the directly integrated estimation-error system."""
    n, n1, n2 = params.grid.n_points, params.n1, params.n2
    d = params.max_delay
    comps = [ComponentSpec("z1", (n, n1), d), ComponentSpec("zt1", (n, n1))]
    if n2:
        comps += [
            ComponentSpec("z2", (n, n2), d),
            ComponentSpec("zt2", (n, n2), d),
        ]
    comps += [ComponentSpec("wt11", _kernel_shape(params, 1))]
    if n2:
        comps += [ComponentSpec("wt12", _kernel_shape(params, 2))]
    zeros2 = np.zeros((n, 0))

    def rhs(t, s, view):
        u1, u2 = u1_fn(t), u2_fn(t)
        z2 = s["z2"] if n2 else zeros2
        dz1, dz2 = plant_rhs(t, s["z1"], z2, view, u1, u2, params)
        dzt1, dzt2, dwt11, dwt12 = error_rhs(
            t,
            s["zt1"],
            s["zt2"] if n2 else zeros2,
            s["wt11"],
            s["wt12"] if n2 else np.zeros((0, 0, 0, 0)),
            view,
            params,
        )
        out = {"z1": dz1, "zt1": dzt1, "wt11": dwt11}
        if n2:
            out.update({"z2": dz2, "zt2": dzt2, "wt12": dwt12})
        return out

    system = CoupledSystem(comps, rhs, delays=tuple(params.delays.values()),
                           name="error_twin")
    # error initial values mirror the standard observer initialization
    init = {
        "z1": np.ones((n, n1)),
        "zt1": np.zeros((n, n1)),  # zhat1(0) = z1(0) = 1
        "wt11": -params.kernels[(1, 1)].blocks,
    }
    if n2:
        init["z2"] = np.ones((n, n2))
        init["zt2"] = -np.ones((n, n2))  # zhat2(0) = 0, z2(0) = 1
        init["wt12"] = -params.kernels[(1, 2)].blocks

    def extract(t, state, view):
        if n2:
            horizon = max(params.delays[(1, 2)].max_delay, params.delays[(2, 2)].max_delay)
            th, hist = view.window("zt2", t - horizon, t)
            zt2 = state["zt2"]
            wt12 = state["wt12"]
        else:
            th, hist = np.zeros(0), np.zeros((0, n, 0))
            zt2 = zeros2
            wt12 = np.zeros((0, 0, 0, 0))
        return ErrorBundle(state["zt1"], zt2, state["wt11"], wt12), th, hist

    return ScenarioBundle(system, init, params, None, extract, (), mode="error_twin")


def _stab_error_extract(params):
    """Closed-loop error fields: zt1 = zref1 - z1 (the pinned-estimate form)."""
    w11 = params.kernels[(1, 1)].blocks
    w12 = params.kernels[(1, 2)].blocks if params.n2 else None
    n = params.grid.n_points
    horizon = (
        max(params.delays[(1, 2)].max_delay, params.delays[(2, 2)].max_delay)
        if params.n2
        else 0.0
    )

    def extract(t, state, view):
        zt1 = params.zref1 - state["z1"]
        if params.n2:
            zt2 = state["zhat2"] - state["z2"]
            wt12 = state["what12"] - w12
            th, zh = view.window("zhat2", t - horizon, t)
            _, zp = view.window("z2", t - horizon, t)
            hist = zh - zp
        else:
            zt2 = np.zeros((n, 0))
            wt12 = np.zeros((0, 0, 0, 0))
            th, hist = np.zeros(0), np.zeros((0, n, 0))
        return ErrorBundle(zt1, zt2, state["what11"] - w11, wt12), th, hist

    return extract


def build_stabilization_scenario(
    params: ModelParams, perturbation: float = 0.0, with_error_twin: bool = False
) -> ScenarioBundle:
    """Closed loop under the exact-stabilization law with its reduced observer.

    ``perturbation`` adds a constant, spatially uniform offset to the applied
    input (the robustness probe); the controller does not know about it.
    With ``with_error_twin`` the estimation-error system is integrated
    alongside for the closed-loop equivalence check.
    """
    n, n1, n2 = params.grid.n_points, params.n1, params.n2
    d = params.max_delay
    comps = [ComponentSpec("z1", (n, n1), d)]
    if n2:
        comps += [
            ComponentSpec("z2", (n, n2), d),
            ComponentSpec("zhat2", (n, n2), d),
        ]
    comps += [ComponentSpec("what11", _kernel_shape(params, 1))]
    if n2:
        comps += [ComponentSpec("what12", _kernel_shape(params, 2))]
    if with_error_twin:
        comps += [ComponentSpec("zt1", (n, n1))]
        if n2:
            comps += [ComponentSpec("zt2", (n, n2), d)]
        comps += [ComponentSpec("wt11", _kernel_shape(params, 1))]
        if n2:
            comps += [ComponentSpec("wt12", _kernel_shape(params, 2))]

    zeros2 = np.zeros((n, 0))
    zero_k = np.zeros((0, 0, 0, 0))

    def rhs(t, s, view):
        what12 = s["what12"] if n2 else zero_k
        u1, u2 = control_exact(t, s["z1"], s["what11"], what12, view, params)
        if perturbation:
            u1 = u1 + perturbation
        z2 = s["z2"] if n2 else zeros2
        dz1, dz2 = plant_rhs(t, s["z1"], z2, view, u1, u2, params)
        dzh2, dw11, dw12 = reduced_observer_rhs(
            t, s["zhat2"] if n2 else zeros2, s["what11"], what12, s["z1"], view, params
        )
        out = {"z1": dz1, "what11": dw11}
        if n2:
            out.update({"z2": dz2, "zhat2": dzh2, "what12": dw12})
        if with_error_twin:
            dzt1, dzt2, dwt11, dwt12 = error_rhs(
                t,
                s["zt1"],
                s["zt2"] if n2 else zeros2,
                s["wt11"],
                s["wt12"] if n2 else zero_k,
                view,
                params,
            )
            out.update({"zt1": dzt1, "wt11": dwt11})
            if n2:
                out.update({"zt2": dzt2, "wt12": dwt12})
        return out

    system = CoupledSystem(comps, rhs, delays=tuple(params.delays.values()),
                           name="exact_stabilization")
    init = standard_init(params, {c.name: c.shape for c in comps})
    if with_error_twin:
        init["zt1"] = params.zref1 - init["z1"]
        init["wt11"] = -params.kernels[(1, 1)].blocks
        if n2:
            init["zt2"] = -np.ones((n, n2))
            init["wt12"] = -params.kernels[(1, 2)].blocks

    def inputs(t, state, view):
        # the commanded law, without the external perturbation: boundedness
        # of the feedback itself is what the drift study watches
        what12 = state["what12"] if n2 else zero_k
        u1, u2 = control_exact(t, state["z1"], state["what11"], what12, view, params)
        return {"u1": u1, "u2": u2}

    pe = (("z1", (1, 1)), ("z2", (1, 2))) if n2 else (("z1", (1, 1)),)
    return ScenarioBundle(
        system, init, params, inputs, _stab_error_extract(params), pe,
        mode="exact_stabilization",
    )


def build_simultaneous_scenario(params: ModelParams, v_fn) -> ScenarioBundle:
    """Fully measured closed loop with probing signal v (practical mode)."""
    require_sim_restrictions(params)
    n, n1 = params.grid.n_points, params.n1
    d = params.max_delay
    comps = [
        ComponentSpec("z", (n, n1), d),
        ComponentSpec("zhat", (n, n1)),
        ComponentSpec("what", _kernel_shape(params, 1)),
    ]

    def rhs(t, s, view):
        v = v_fn(t)
        u = control_sim(t, s["z"], s["what"], v, view, params)
        drive = params.conn[(1, 1)].pull("z", view)
        dz = (-s["z"] + u + drive) / params.tau1
        dzh, dwh = sim_observer_rhs(t, s["zhat"], s["what"], s["z"], v, view, params)
        return {"z": dz, "zhat": dzh, "what": dwh}

    system = CoupledSystem(comps, rhs, delays=tuple(params.delays.values()),
                           name="simultaneous_pe")
    init = standard_init(params, {c.name: c.shape for c in comps})
    w11 = params.kernels[(1, 1)].blocks

    def extract(t, state, view):
        zt1 = state["zhat"] - state["z"]
        return (
            ErrorBundle(zt1, np.zeros((n, 0)), state["what"] - w11, np.zeros((0, 0, 0, 0))),
            np.zeros(0),
            np.zeros((0, n, 0)),
        )

    def inputs(t, state, view):
        v = v_fn(t)
        u = control_sim(t, state["z"], state["what"], v, view, params)
        return {"u1": u, "v": v}

    return ScenarioBundle(
        system, init, params, inputs, extract, (("z", (1, 1)),), mode="simultaneous_pe"
    )


def build_high_gain_scenario(params: ModelParams, gamma=None) -> ScenarioBundle:
    """Prior-art proportional baseline: u1 = -alpha*gamma*(z1 - zref1)."""
    n, n1, n2 = params.grid.n_points, params.n1, params.n2
    d = params.max_delay
    comps = [ComponentSpec("z1", (n, n1), d)]
    if n2:
        comps += [ComponentSpec("z2", (n, n2), d)]
    zeros2 = np.zeros((n, 0))

    def rhs(t, s, view):
        u1 = high_gain_control(t, s["z1"], params, gamma)
        u2 = np.zeros((n, n2))
        z2 = s["z2"] if n2 else zeros2
        dz1, dz2 = plant_rhs(t, s["z1"], z2, view, u1, u2, params)
        out = {"z1": dz1}
        if n2:
            out["z2"] = dz2
        return out

    system = CoupledSystem(comps, rhs, delays=tuple(params.delays.values()),
                           name="high_gain_baseline")
    init = standard_init(params, {c.name: c.shape for c in comps})

    def inputs(t, state, view):
        return {"u1": high_gain_control(t, state["z1"], params, gamma)}

    return ScenarioBundle(system, init, params, inputs, None, (), mode="high_gain_baseline")


def pe_signal_from_trajectory(traj, params: ModelParams, pe_components) -> tuple:
    """Sampled excitation signal (times, values) from recorded components.

    The signal is the activation of the delayed sources feeding the kernel
    updates, flattened over grid and populations.  With a uniform delay that
    aligns with the recording stride the series is shifted accordingly;
    otherwise the undelayed series stands in (the level is delay-invariant).
    """
    times = traj.times
    if len(times) < 3:
        raise ConfigError("trajectory too short for a PE signal")
    sample_dt = float(np.median(np.diff(times)))
    parts = []
    shift = 0
    for name, pair in pe_components:
        dm = params.delays[pair]
        if dm.is_uniform and dm.uniform_value > 0:
            k = int(round(dm.uniform_value / sample_dt))
            if abs(k * sample_dt - dm.uniform_value) < 1e-9:
                shift = max(shift, k)
    for name, pair in pe_components:
        act = params.activations[pair]
        series = act(traj.components[name])  # (M, N, n)
        parts.append(series.reshape(series.shape[0], -1))
    values = np.concatenate(parts, axis=1)
    if shift:
        return times[shift:], values[:-shift]
    return times, values

"""Fixed-step explicit integration of coupled delayed systems.

The stepper is the Bogacki-Shampine 3(2) pair at a fixed step.  The
embedded second-order solution is still evaluated and recorded as a local
error monitor, but steps are never rejected: a fixed step keeps delayed
lookups aligned with stored samples and makes runs bit-reproducible.

Delayed values are read from per-component :class:`HistoryBuffer` rings
through a :class:`HistoryView`, which memoizes queries within a stage.
Every positive delay must be at least one step long (explicit stepping
never extrapolates); exactly-zero delays short-circuit to the current
stage value.

Solutions of delayed systems generally have a derivative kink at the
initial time.  The buffer therefore stores one-sided derivatives at t0:
the left slope comes from the initial history, the right slope from the
first stage evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Sequence

import numpy as np

from .delays import DelayMatrix
from .errors import ConfigError, IntegrationError, ParameterError
from .history import CallableHistory, ConstantHistory, HistoryBuffer


@dataclass(frozen=True)
class ComponentSpec:
    """One named state block: an array of ``shape`` with an optional
    history horizon (seconds of past values other equations may query)."""

    name: str
    shape: tuple
    history: float = 0.0


@dataclass
class CoupledSystem:
    """Named state components plus a right-hand side.

    ``rhs(t, state, view) -> dict`` receives the current (or stage) values
    and a :class:`HistoryView` for delayed lookups, and returns the time
    derivative of every component.  ``delays`` lists the delay matrices the
    rhs queries, so the integrator can validate them against the step.
    """

    components: Sequence[ComponentSpec]
    rhs: Callable
    delays: Sequence[DelayMatrix] = ()
    name: str = ""

    def component(self, name: str) -> ComponentSpec:
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)


class _DelayedAccess:
    """Shared delayed-lookup logic over some per-component value source.

    ``delayed(name, delay)`` returns the component at the stage time minus
    the delay: an (N, n) array for uniform delays, or (N, N, n) indexed
    [target r, source r'] when the delay varies per pair.  Exactly-zero
    delays resolve to the current stage value.
    """

    def __init__(self):
        self._t = 0.0
        self._state: Dict[str, np.ndarray] = {}
        self._memo: Dict = {}

    def begin_stage(self, t: float, state: Dict[str, np.ndarray]) -> None:
        self._t = t
        self._state = state
        self._memo.clear()

    @property
    def t(self) -> float:
        return self._t

    def _value_at(self, name: str, t: float) -> np.ndarray:
        raise NotImplementedError

    def delayed(self, name: str, delay) -> np.ndarray:
        dm = delay if isinstance(delay, DelayMatrix) else DelayMatrix.uniform(float(delay))
        if dm.is_uniform:
            d = dm.uniform_value
            if d == 0.0:
                return self._state[name]
            key = (name, d)
            if key not in self._memo:
                self._memo[key] = self._value_at(name, self._t - d)
            return self._memo[key]
        key = (name, id(dm))
        if key not in self._memo:
            self._memo[key] = self._pairwise(name, dm)
        return self._memo[key]

    def _pairwise(self, name: str, dm: DelayMatrix) -> np.ndarray:
        per_delay = []
        for d in dm.unique_values:
            if d == 0.0:
                per_delay.append(self._state[name])
            else:
                per_delay.append(self._value_at(name, self._t - d))
        stacked = np.stack(per_delay)  # (U, N, n)
        cols = np.arange(stacked.shape[1])[None, :]
        return stacked[dm.unique_inverse, cols, :]


class HistoryView(_DelayedAccess):
    """Delayed access backed by the integrator's live ring buffers."""

    def __init__(self, buffers: Dict[str, HistoryBuffer]):
        super().__init__()
        self._buffers = buffers

    def buffer(self, name: str) -> HistoryBuffer:
        return self._buffers[name]

    def _value_at(self, name: str, t: float) -> np.ndarray:
        return self._buffers[name].value_at(t)

    def window(self, name: str, t0: float, t1: float):
        return self._buffers[name].window(t0, t1)


class AdapterView(_DelayedAccess):
    """Delayed access backed by arbitrary history adapters (for standalone
    right-hand-side evaluations and tests)."""

    def __init__(self, adapters: Dict, t: float = 0.0, state: Dict[str, np.ndarray] = None):
        super().__init__()
        self._adapters = adapters
        self.begin_stage(t, state or {})

    def _value_at(self, name: str, t: float) -> np.ndarray:
        return np.asarray(self._adapters[name].value_at(t), dtype=float)


# Bogacki-Shampine 3(2) tableau
_BS_C = (0.0, 0.5, 0.75)
_BS_B3 = (2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0)
_BS_B2 = (7.0 / 24.0, 0.25, 1.0 / 3.0, 0.125)


class Trajectory:
    """Recorded output of one integration run."""

    def __init__(self, component_names, dt, t0):
        self.component_names = tuple(component_names)
        self.dt = dt
        self.t0 = t0
        self.times = None            # (M,) recorded times
        self.components = {}         # name -> (M, *shape)
        self.step_times = None       # (n_steps,) accepted step end times
        self.step_errors = None      # (n_steps,) embedded-pair error estimate
        self.final_time = t0
        self.final_state = {}
        self.history_tails = {}      # name -> (times, values, derivs, right_derivs)

    def component(self, name: str) -> np.ndarray:
        return self.components[name]

    def snapshot(self) -> dict:
        """Everything needed to resume integration at ``final_time``."""
        return {
            "t": self.final_time,
            "dt": self.dt,
            "state": {k: v.copy() for k, v in self.final_state.items()},
            "tails": {
                k: tuple(a.copy() for a in v) for k, v in self.history_tails.items()
            },
        }


def integrate(
    system: CoupledSystem,
    t_span,
    dt: float,
    init: Dict[str, np.ndarray] = None,
    history: Dict = None,
    *,
    record_stride: int = 1,
    record_fields=True,
    callbacks: Sequence = (),
    interp: str = "cubic_hermite",
    resume: dict = None,
) -> Trajectory:
    """Integrate ``system`` over ``t_span`` with fixed step ``dt``.

    ``init`` maps component names to their values at the initial time;
    ``history`` optionally maps delayed components to initial-history
    callables on [t0 - horizon, t0] (constant extension of the initial
    value by default).  ``record_fields`` may be True, False, or a list of
    component names.  ``callbacks`` are objects with
    ``on_step(t, state, view, step_index)`` invoked at the initial time and
    after every accepted step.  Pass ``resume`` (a ``Trajectory.snapshot()``)
    to continue a previous run; ``init``/``history`` are then ignored.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if dt <= 0:
        raise ParameterError("dt must be positive")
    n_steps_f = (t1 - t0) / dt
    n_steps = int(round(n_steps_f))
    if n_steps < 1 or abs(n_steps_f - n_steps) > 1e-9:
        raise ConfigError(f"t_span length {t1 - t0} is not an integer multiple of dt={dt}")
    for dm in system.delays:
        if dm.min_positive < dt - 1e-12:
            raise ConfigError(
                f"dt={dt} exceeds the smallest positive delay {dm.min_positive}; "
                "explicit stepping requires dt <= every active delay"
            )

    names = [c.name for c in system.components]
    if resume is not None:
        t0 = float(resume["t"])
        n_steps = int(round((t1 - t0) / dt))
        if n_steps < 1 or abs((t1 - t0) / dt - n_steps) > 1e-9:
            raise ConfigError("resume span is not an integer multiple of dt")
        state = {k: np.asarray(v, dtype=float).copy() for k, v in resume["state"].items()}
    else:
        if init is None:
            raise ParameterError("init is required unless resuming")
        state = {}
        for comp in system.components:
            if comp.name not in init:
                raise ParameterError(f"missing initial value for component {comp.name!r}")
            val = np.asarray(init[comp.name], dtype=float)
            if val.shape != tuple(comp.shape):
                raise ParameterError(
                    f"component {comp.name!r} expects shape {tuple(comp.shape)}, got {val.shape}"
                )
            state[comp.name] = val.copy()

    buffers: Dict[str, HistoryBuffer] = {}
    for comp in system.components:
        if comp.history > 0.0:
            buffers[comp.name] = HistoryBuffer(comp.shape, comp.history + 2 * dt, interp)
    view = HistoryView(buffers)

    if resume is not None:
        for name, (ts, vs, ds, rs) in resume["tails"].items():
            buf = buffers[name]
            for i in range(len(ts)):
                buf.push(ts[i], vs[i], ds[i])
                buf._dr[buf._n - 1] = rs[i]
    else:
        history = history or {}
        for comp in system.components:
            if comp.history <= 0.0:
                continue
            h = history.get(comp.name)
            if h is None:
                h = ConstantHistory(state[comp.name])
            elif callable(h) and not hasattr(h, "value_at"):
                h = CallableHistory(h)
            buf = buffers[comp.name]
            m = int(math.ceil(comp.history / dt - 1e-9))
            for k in range(m, 0, -1):
                tk = t0 - k * dt
                buf.push(tk, h.value_at(tk), h.derivative_at(tk))
            buf.push(t0, state[comp.name], h.derivative_at(t0))

    # first derivative evaluation fixes the right-sided slope at t0
    view.begin_stage(t0, state)
    k1 = _eval_rhs(system, t0, state, view, names)
    for name, buf in buffers.items():
        buf.set_right_deriv_last(k1[name])

    if record_fields is True:
        recorded_names = list(names)
    elif record_fields is False or record_fields is None:
        recorded_names = []
    else:
        recorded_names = list(record_fields)

    traj = Trajectory(names, dt, t0)
    rec_times = [t0]
    rec_values = {name: [state[name].copy()] for name in recorded_names}
    step_times = np.empty(n_steps)
    step_errors = np.empty(n_steps)

    for cb in callbacks:
        cb.on_step(t0, state, view, 0)

    y = state
    for i in range(n_steps):
        t = t0 + i * dt
        t_next = t0 + (i + 1) * dt

        view.begin_stage(t + _BS_C[1] * dt, _axpy(y, dt * _BS_C[1], k1, names))
        k2 = _eval_rhs(system, t + _BS_C[1] * dt, view._state, view, names)

        view.begin_stage(t + _BS_C[2] * dt, _axpy(y, dt * _BS_C[2], k2, names))
        k3 = _eval_rhs(system, t + _BS_C[2] * dt, view._state, view, names)

        y3 = {
            n: y[n] + dt * (_BS_B3[0] * k1[n] + _BS_B3[1] * k2[n] + _BS_B3[2] * k3[n])
            for n in names
        }
        view.begin_stage(t_next, y3)
        k4 = _eval_rhs(system, t_next, y3, view, names)

        err = 0.0
        for n in names:
            y2_n = y[n] + dt * (
                _BS_B2[0] * k1[n] + _BS_B2[1] * k2[n] + _BS_B2[2] * k3[n] + _BS_B2[3] * k4[n]
            )
            err = max(err, float(np.max(np.abs(y3[n] - y2_n))) if y3[n].size else 0.0)
            if not np.all(np.isfinite(y3[n])):
                raise IntegrationError(
                    f"non-finite values in component {n!r} at t={t_next}",
                    t=t_next,
                    snapshot={k: v.copy() for k, v in y.items()},
                )
        step_times[i] = t_next
        step_errors[i] = err

        for name, buf in buffers.items():
            buf.push(t_next, y3[name], k4[name])

        y = y3
        k1 = k4  # FSAL
        view.begin_stage(t_next, y)
        for cb in callbacks:
            cb.on_step(t_next, y, view, i + 1)
        if (i + 1) % record_stride == 0 or i + 1 == n_steps:
            if not rec_times or rec_times[-1] != t_next:
                rec_times.append(t_next)
                for name in recorded_names:
                    rec_values[name].append(y[name].copy())

    traj.times = np.asarray(rec_times)
    traj.components = {n: np.stack(v) for n, v in rec_values.items()}
    traj.step_times = step_times
    traj.step_errors = step_errors
    traj.final_time = t0 + n_steps * dt
    traj.final_state = {n: y[n].copy() for n in names}
    traj.history_tails = {name: buf.tail_full() for name, buf in buffers.items()}
    return traj


def _axpy(y, a, k, names):
    return {n: y[n] + a * k[n] for n in names}


def _eval_rhs(system, t, state, view, names):
    out = system.rhs(t, state, view)
    missing = [n for n in names if n not in out]
    if missing:
        raise IntegrationError(f"rhs did not return derivatives for {missing}")
    return {n: np.asarray(out[n], dtype=float) for n in names}

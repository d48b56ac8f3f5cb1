"""Observer runs decoupled from the plant: measurements come from a log.

A :class:`ReplayLog` holds time-ordered samples of the measured activity,
ingested either from a trajectory CSV or from any iterable of (t, field)
rows (e.g. a queue fed by another thread).  Rows must arrive in strictly
increasing time order with no skips backward; disorder raises.

Replayed measurements are interpolated linearly between samples: logs
carry no derivative information, so the cubic reconstruction used by live
buffers is not available.  A noise hook perturbs the measurements with
seeded Gaussian noise; no convergence claim is attached to noisy runs, the
hook exists for empirical robustness studies.
"""

from __future__ import annotations

import numpy as np

from .dataio import read_trajectory_csv
from .errors import ParameterError
from .history import HistoryBuffer
from .integrator import AdapterView, ComponentSpec, CoupledSystem, integrate
from .observer import observer_rhs
from .params import ModelParams


class ReplayLog:
    """Time-ordered measured-activity samples with interpolating access."""

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 2:
            values = values[:, :, None]
        if np.any(np.diff(times) <= 0):
            raise ParameterError("replay samples must be strictly increasing in time")
        self.times = times
        self.values = values

    @staticmethod
    def from_rows(rows, n_points: int, dim: int = 1) -> "ReplayLog":
        """Consume (t, flat-values) rows in time order; raises on disorder."""
        ts, vs = [], []
        last = -np.inf
        for t, flat in rows:
            if t <= last:
                raise ParameterError(
                    f"measurement out of order: t={t} after t={last} (no skips allowed)"
                )
            last = t
            ts.append(float(t))
            vs.append(np.asarray(flat, dtype=float).reshape(n_points, dim))
        return ReplayLog(np.asarray(ts), np.stack(vs))

    @staticmethod
    def from_trajectory_csv(path, field: str = "z1", dim: int = 1) -> "ReplayLog":
        times, fields, _ = read_trajectory_csv(path)
        if field not in fields:
            raise ParameterError(f"{path} has no field {field!r}")
        flat = fields[field]
        n_points = flat.shape[1] // dim
        return ReplayLog(times, flat.reshape(len(times), n_points, dim))

    def with_noise(self, std: float, seed: int = 0) -> "ReplayLog":
        rng = np.random.default_rng(seed)
        return ReplayLog(self.times, self.values + rng.normal(0.0, std, self.values.shape))

    def adapter(self) -> HistoryBuffer:
        buf = HistoryBuffer(self.values.shape[1:], horizon=np.inf, interp="linear")
        for i in range(len(self.times)):
            buf.push(self.times[i], self.values[i])
        return buf

    @property
    def span(self):
        return float(self.times[0]), float(self.times[-1])


class _ReplayOverlay:
    """View wrapper resolving the measured component from the log."""

    def __init__(self, inner, name: str, buffer: HistoryBuffer):
        self._inner = inner
        self._name = name
        self._buffer = buffer

    @property
    def t(self):
        return self._inner.t

    def delayed(self, name, delay):
        if name != self._name:
            return self._inner.delayed(name, delay)
        adapter = AdapterView({name: self._buffer},
                              t=self._inner.t,
                              state={name: self._buffer.value_at(self._inner.t)})
        return adapter.delayed(name, delay)

    def window(self, name, t0, t1):
        if name == self._name:
            return self._buffer.window(t0, t1)
        return self._inner.window(name, t0, t1)


def run_observer_replay(
    params: ModelParams,
    log: ReplayLog,
    t_span,
    dt: float,
    u1_fn,
    u2_fn,
    noise_std: float = 0.0,
    seed: int = 0,
    record_stride: int = 1,
):
    """Integrate the observer alone against logged measurements.

    The log must cover [t0 - max delay, t1].  Returns the estimate
    trajectory (components zhat1, zhat2, what11, what12).
    """
    if noise_std > 0.0:
        log = log.with_noise(noise_std, seed)
    lo, hi = log.span
    if lo > t_span[0] - params.max_delay or hi < t_span[1]:
        raise ParameterError(
            f"replay log spans [{lo}, {hi}] but the run needs "
            f"[{t_span[0] - params.max_delay}, {t_span[1]}]"
        )
    buf = log.adapter()
    n, n1, n2 = params.grid.n_points, params.n1, params.n2
    d = params.max_delay
    comps = [ComponentSpec("zhat1", (n, n1))]
    if n2:
        comps.append(ComponentSpec("zhat2", (n, n2), d))
    comps.append(ComponentSpec("what11", (n, n, n1, n1)))
    if n2:
        comps.append(ComponentSpec("what12", (n, n, n1, n2)))
    zeros2 = np.zeros((n, 0))
    zero_k = np.zeros((0, 0, 0, 0))

    def rhs(t, s, view):
        wrapped = _ReplayOverlay(view, "z1", buf)
        z1_now = buf.value_at(t)
        dzh1, dzh2, dw11, dw12 = observer_rhs(
            t,
            s["zhat1"],
            s["zhat2"] if n2 else zeros2,
            s["what11"],
            s["what12"] if n2 else zero_k,
            z1_now,
            wrapped,
            u1_fn(t),
            u2_fn(t),
            params,
        )
        out = {"zhat1": dzh1, "what11": dw11}
        if n2:
            out.update({"zhat2": dzh2, "what12": dw12})
        return out

    system = CoupledSystem(comps, rhs, delays=tuple(params.delays.values()),
                           name="observer_replay")
    init = {"zhat1": np.ones((n, n1)), "what11": np.zeros((n, n, n1, n1))}
    if n2:
        init["zhat2"] = np.zeros((n, n2))
        init["what12"] = np.zeros((n, n, n1, n2))
    return integrate(system, t_span, dt, init, record_stride=record_stride)


def export_estimates(traj, params: ModelParams, log: ReplayLog, out_dir,
                     truth_z2=None, truth_kernels=None):
    """Estimation outputs for a replay run: per-sample metric CSV plus the
    final kernel estimates as dense dumps.

    The innovation norm is always available (the log holds the measured
    activity); the remaining error norms need the ground truth and are
    emitted only when it is supplied.
    """
    import os

    from .dataio import write_kernel_dense, write_metrics_csv
    from .fields import field_l2_norm
    from .kernels import hs_norm

    out = os.fspath(out_dir)
    os.makedirs(out, exist_ok=True)
    buf = log.adapter()
    grid = params.grid
    cols = {"innovation": np.array([
        field_l2_norm(traj.components["zhat1"][k] - buf.value_at(t), grid)
        for k, t in enumerate(traj.times)
    ])}
    if truth_z2 is not None and "zhat2" in traj.components:
        cols["ztilde2"] = np.array([
            field_l2_norm(traj.components["zhat2"][k] - truth_z2, grid)
            for k in range(len(traj.times))
        ])
    if truth_kernels is not None:
        for name, true_blocks in truth_kernels.items():
            cols[f"{name}_error"] = np.array([
                hs_norm(traj.components[name][k] - true_blocks, grid)
                for k in range(len(traj.times))
            ])
    write_metrics_csv(os.path.join(out, "estimates.csv"), traj.times, cols)
    for name in ("what11", "what12"):
        if name in traj.components:
            write_kernel_dense(os.path.join(out, f"{name}_final.txt"),
                               traj.components[name][-1], t=traj.times[-1])
    return cols

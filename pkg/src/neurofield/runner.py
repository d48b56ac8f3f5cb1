"""Config-driven execution of the experiment scenarios.

``run_scenario`` assembles the coupled system for the configured mode,
integrates it with the decrease monitor attached (whenever the gain
clears the threshold), and distills a :class:`RunReport`: metric time
series, steady-state summaries, monitor verdicts, and the excitation-level
timeline.  ``run_perturbation_sweep`` and ``run_drift_study`` are the
robustness studies built on the fully measured closed loop.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .control import solve_zref2
from .dataio import write_kernel_dense, write_metrics_csv, write_trajectory_csv, save_snapshot
from .errors import ConfigError
from .excitation import kappa_timeline
from .fields import field_l2_norm
from .integrator import integrate
from .kernels import hs_norm
from .lyapunov import LyapunovMonitor, lyapunov_constants
from .observer import alpha_star
from .scenarios import (
    build_high_gain_scenario,
    build_observer_scenario,
    build_simultaneous_scenario,
    build_stabilization_scenario,
    pe_signal_from_trajectory,
)
from .signals import SignalSpec, make_signal


@dataclass
class RunReport:
    mode: str
    config: dict
    times: np.ndarray = None
    series: dict = field(default_factory=dict)       # name -> (M,) array on `times`
    summary: dict = field(default_factory=dict)
    lyapunov: dict = None
    pe_times: np.ndarray = None
    pe_kappas: np.ndarray = None
    gates: dict = field(default_factory=dict)
    trajectory: object = None

    @property
    def passed_gates(self) -> bool:
        return all(self.gates.values())


class _MetricsCallback:
    def __init__(self, stride, fns):
        self.stride = stride
        self.fns = fns
        self.times = []
        self.rows = []

    def on_step(self, t, state, view, step_index):
        if step_index % self.stride:
            return
        self.times.append(t)
        self.rows.append({name: fn(t, state, view) for name, fn in self.fns.items()})

    def series(self):
        times = np.asarray(self.times)
        if not self.rows:
            return times, {}
        return times, {
            name: np.asarray([row[name] for row in self.rows]) for name in self.rows[0]
        }


def _signal_pair(config: ScenarioConfig, params):
    ic = config.inputs
    if ic.kind == "space_time_sine":
        u1 = make_signal(SignalSpec("space_time_sine", mu=ic.mu, rate=ic.lambda1), params.grid)
        u2 = make_signal(SignalSpec("space_time_sine", mu=ic.mu, rate=ic.lambda2), params.grid,
                         n=max(params.n2, 1))
    else:
        spec = SignalSpec(ic.kind, mu=ic.mu, rate=ic.lambda1, value=ic.value,
                          period=ic.period, kappa=ic.kappa, dim=ic.dim)
        u1 = make_signal(spec, params.grid)
        u2 = make_signal(SignalSpec("zero"), params.grid, n=max(params.n2, 1))
    if params.n2 == 0:
        return u1, lambda t: np.zeros((params.grid.n_points, 0))
    return u1, u2


def _excitation_signal(config: ScenarioConfig, params):
    ic = config.inputs
    spec = SignalSpec(ic.kind, mu=ic.mu, rate=ic.lambda1, value=ic.value,
                      period=ic.period, kappa=ic.kappa, dim=ic.dim)
    return make_signal(spec, params.grid)


def _build_bundle(config: ScenarioConfig, params, perturbation=0.0):
    mode = config.mode
    if mode == "open_loop_observer":
        u1, u2 = _signal_pair(config, params)
        return build_observer_scenario(params, u1, u2), {"v": None}
    if mode in ("exact_stabilization", "perturbation_sweep", "drift_study"):
        if mode in ("perturbation_sweep", "drift_study") and params.n2 != 0:
            raise ConfigError(f"{mode} requires a fully measured model (populations.n2 = 0)")
        return build_stabilization_scenario(params, perturbation=perturbation), {}
    if mode == "simultaneous_pe":
        v = _excitation_signal(config, params)
        return build_simultaneous_scenario(params, v), {"v": v}
    if mode == "high_gain_baseline":
        gamma = np.full(params.grid.n_points, config.gamma)
        return build_high_gain_scenario(params, gamma), {}
    raise ConfigError(f"mode {mode!r} is not runnable")


def _metric_fns(bundle, params, config):
    grid = params.grid
    fns = {}
    mode = bundle.mode
    w11 = params.kernels[(1, 1)].blocks
    w12 = params.kernels[(1, 2)].blocks if params.n2 else None

    if mode == "open_loop_observer":
        fns["z1_norm"] = lambda t, s, v: field_l2_norm(s["z1"], grid)
        fns["ztilde1"] = lambda t, s, v: field_l2_norm(s["zhat1"] - s["z1"], grid)
        fns["wtilde11"] = lambda t, s, v: hs_norm(s["what11"] - w11, grid)
        if params.n2:
            fns["z2_norm"] = lambda t, s, v: field_l2_norm(s["z2"], grid)
            fns["ztilde2"] = lambda t, s, v: field_l2_norm(s["zhat2"] - s["z2"], grid)
            fns["wtilde12"] = lambda t, s, v: hs_norm(s["what12"] - w12, grid)
    elif mode == "exact_stabilization":
        zref2 = None
        if params.n2:
            zref2 = solve_zref2(params)[0].values
        fns["z1_dev"] = lambda t, s, v: field_l2_norm(s["z1"] - params.zref1, grid)
        fns["z1_norm"] = lambda t, s, v: field_l2_norm(s["z1"], grid)
        fns["wtilde11"] = lambda t, s, v: hs_norm(s["what11"] - w11, grid)
        if params.n2:
            fns["z2_dev"] = lambda t, s, v: field_l2_norm(s["z2"] - zref2, grid)
            fns["ztilde2"] = lambda t, s, v: field_l2_norm(s["zhat2"] - s["z2"], grid)
            fns["wtilde12"] = lambda t, s, v: hs_norm(s["what12"] - w12, grid)
        if bundle.inputs is not None:
            fns["u1_norm"] = lambda t, s, v: field_l2_norm(bundle.inputs(t, s, v)["u1"], grid)
    elif mode == "simultaneous_pe":
        fns["z1_norm"] = lambda t, s, v: field_l2_norm(s["z"], grid)
        fns["ztilde1"] = lambda t, s, v: field_l2_norm(s["zhat"] - s["z"], grid)
        fns["wtilde11"] = lambda t, s, v: hs_norm(s["what"] - w11, grid)
        fns["v_norm"] = lambda t, s, v: field_l2_norm(bundle.inputs(t, s, v)["v"], grid)
        fns["u1_norm"] = lambda t, s, v: field_l2_norm(bundle.inputs(t, s, v)["u1"], grid)
    elif mode == "high_gain_baseline":
        fns["z1_norm"] = lambda t, s, v: field_l2_norm(s["z1"], grid)
        if params.n2:
            fns["z2_norm"] = lambda t, s, v: field_l2_norm(s["z2"], grid)
        fns["u1_norm"] = lambda t, s, v: field_l2_norm(bundle.inputs(t, s, v)["u1"], grid)
    return fns


def steady_metrics(times, values, lo=5.0, hi=10.0):
    """max and trapezoidal mean of a series over the steady window [lo, hi];
    falls back to the last half for shorter runs."""
    t_end = times[-1]
    if t_end < hi:
        lo, hi = t_end / 2.0, t_end
    mask = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    ts, vs = times[mask], values[mask]
    steady_max = float(np.max(vs))
    steady_avg = float(np.trapezoid(vs, ts) / (ts[-1] - ts[0]))
    return steady_max, steady_avg, (lo, hi)


def half_life(times, values):
    """First time the series falls to half its initial value (inf if never)."""
    target = 0.5 * values[0]
    idx = np.flatnonzero(values <= target)
    return float(times[idx[0]]) if idx.size else np.inf


def run_scenario(config: ScenarioConfig, out_dir=None, perturbation=None) -> RunReport:
    """Integrate one scenario and distill its report (files if out_dir)."""
    if config.mode == "perturbation_sweep":
        raise ConfigError("use run_perturbation_sweep for sweep configurations")
    pert = perturbation if perturbation is not None else (
        config.drift.amplitude if config.mode == "drift_study" else 0.0
    )
    params = config.build_params()
    bundle, _ = _build_bundle(config, params, perturbation=pert)
    report = RunReport(mode=config.mode, config=config.to_dict())

    callbacks = []
    metrics = _MetricsCallback(config.run.output_stride, _metric_fns(bundle, params, config))
    callbacks.append(metrics)
    monitor = None
    threshold = alpha_star(params)
    if bundle.monitor_extract is not None and params.alpha > threshold:
        monitor = LyapunovMonitor(params, bundle.monitor_extract, lyapunov_constants(params))
        callbacks.append(monitor)

    traj = integrate(
        bundle.system,
        (0.0, config.run.t_end),
        config.run.dt,
        bundle.init,
        record_stride=config.run.output_stride,
        callbacks=callbacks,
    )
    report.trajectory = traj
    report.times, report.series = metrics.series()

    if monitor is not None:
        report.lyapunov = monitor.report(dt=config.run.dt)
        report.series["lyapunov_V"] = np.interp(
            report.times, report.lyapunov["times"], report.lyapunov["V"]
        )
        unperturbed_certificate = pert == 0.0
        if unperturbed_certificate:
            report.gates["lyapunov_decrease"] = report.lyapunov["violation_count"] == 0
        report.summary["lyapunov_violations"] = report.lyapunov["violation_count"]
        report.summary["lyapunov_tolerance"] = report.lyapunov["tolerance"]

    if bundle.pe_components:
        ts, vals = pe_signal_from_trajectory(traj, params, bundle.pe_components)
        sample_dt = config.run.dt * config.run.output_stride
        window = max(config.pe.window, 2 * sample_dt)
        window = round(window / sample_dt) * sample_dt
        if ts[-1] - ts[0] > window:
            starts, kappas = kappa_timeline(ts, vals, window, stride=config.pe.stride)
            report.pe_times, report.pe_kappas = starts, kappas
            report.summary["kappa_first"] = float(kappas[0])
            report.summary["kappa_min"] = float(np.min(kappas))
            report.summary["kappa_last"] = float(kappas[-1])

    # steady-state summaries on the primary activity norm
    key = "z1_norm" if "z1_norm" in report.series else None
    if key:
        smax, savg, window = steady_metrics(report.times, report.series[key])
        report.summary["steady_max"] = smax
        report.summary["steady_avg"] = savg
        report.summary["steady_window"] = list(window)
        # sustained swing signature; the floor keeps numerically-zero steady
        # states (perfect stabilization) from flagging on roundoff wiggle
        report.summary["oscillation_flag"] = bool(savg < 0.8 * smax and smax > 1e-6)
    for name, vals in report.series.items():
        report.summary[f"final_{name}"] = float(vals[-1])
    if "wtilde11" in report.series:
        report.summary["wtilde11_half_life"] = half_life(
            report.times, report.series["wtilde11"]
        )
    report.summary["perturbation"] = pert

    if out_dir is not None:
        _write_run_outputs(config, report, traj, params, out_dir)
    return report


def _write_run_outputs(config, report, traj, params, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.summary["out_dir"] = str(out)
    config.save(out / "config.yaml")
    write_metrics_csv(out / "metrics.csv", report.times, report.series)
    if report.pe_times is not None:
        write_metrics_csv(out / "pe.csv", report.pe_times, {"kappa": report.pe_kappas})
    with open(out / "summary.json", "w") as fh:
        json.dump(_jsonable(report.summary | {"gates": report.gates}), fh, indent=2, sort_keys=True)
    kdir = out / "kernels"
    kdir.mkdir(exist_ok=True)
    kernel_names = [n for n in ("what11", "what12", "what") if n in traj.components]
    for name in kernel_names:
        arr = traj.components[name]
        for t_snap in config.run.kernel_snapshot_times:
            if t_snap > traj.times[-1] + 1e-9:
                continue
            k = int(np.argmin(np.abs(traj.times - t_snap)))
            write_kernel_dense(kdir / f"{name}_t{traj.times[k]:.3f}.txt", arr[k], t=traj.times[k])
        write_kernel_dense(kdir / f"{name}_final.txt", arr[-1], t=traj.times[-1])
    if config.run.save_trajectory:
        fields = [n for n in ("z1", "z2", "z") if n in traj.components]
        write_trajectory_csv(out / "trajectory.csv", traj, fields=fields)
    if config.run.save_snapshot:
        save_snapshot(out / "snapshot.bin", traj.snapshot(),
                      params.grid.n_points, params.n1, params.n2)
    from .plots import emit_plots

    emit_plots(report, out / "plots")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and np.isinf(obj):
        return "inf"
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def run_perturbation_sweep(config: ScenarioConfig, out_dir=None) -> dict:
    """One fully measured closed-loop run per perturbation amplitude.

    Flags the first-three-amplitude growth trend and the oscillation onset
    (steady average falling well below the steady maximum).
    """
    if config.populations.n2 != 0:
        raise ConfigError("perturbation sweep requires populations.n2 = 0")
    amplitudes = list(config.sweep.amplitudes)
    base = replace(config, mode="exact_stabilization")

    def one(amp):
        cfg = ScenarioConfig.from_dict(base.to_dict())
        return cfg, run_scenario(cfg, out_dir=None, perturbation=amp)

    workers = max(1, int(config.sweep.workers))
    if workers == 1:
        results = [one(a) for a in amplitudes]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, amplitudes))
    reports = [rep for _, rep in results]
    if out_dir is not None:
        # figure rendering is not thread-safe: write per-run artifacts after
        # the workers have finished
        for amp, (cfg, rep) in zip(amplitudes, results):
            _write_run_outputs(cfg, rep, rep.trajectory, cfg.build_params(),
                               Path(out_dir) / f"amp_{amp:g}")

    rows = []
    for amp, rep in zip(amplitudes, reports):
        rows.append({
            "amplitude": amp,
            "steady_max": rep.summary["steady_max"],
            "steady_avg": rep.summary["steady_avg"],
            "oscillation": rep.summary["oscillation_flag"],
        })
    first3 = [r["steady_max"] for r in rows[:3]]
    result = {
        "rows": rows,
        "monotone_first3": bool(np.all(np.diff(first3) > 0)) if len(first3) >= 3 else None,
        "oscillation_onset": next((r["amplitude"] for r in rows if r["oscillation"]), None),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        config.save(out / "config.yaml")
        amps = np.array([r["amplitude"] for r in rows])
        write_metrics_csv(out / "sweep.csv", amps, {
            "steady_max": np.array([r["steady_max"] for r in rows]),
            "steady_avg": np.array([r["steady_avg"] for r in rows]),
            "oscillation": np.array([float(r["oscillation"]) for r in rows]),
        })
        with open(out / "summary.json", "w") as fh:
            json.dump(_jsonable(result), fh, indent=2, sort_keys=True)
        from .plots import plot_sweep

        plot_sweep(rows, out / "plots")
    return result


def run_drift_study(config: ScenarioConfig, out_dir=None) -> RunReport:
    """Long-horizon perturbed closed loop exposing estimate drift.

    The summary records the trend of the kernel error over the run's final
    third and the applied-input ceiling there, the two facts the study is
    about: the estimate can drift off while the control stays bounded.
    """
    if config.populations.n2 != 0:
        raise ConfigError("drift study requires populations.n2 = 0")
    cfg = replace(config, mode="drift_study")
    rep = run_scenario(cfg, out_dir=out_dir, perturbation=config.drift.amplitude)
    times, series = rep.times, rep.series
    wt = series["wtilde11"]
    mid = np.searchsorted(times, times[-1] / 2.0)
    third = np.searchsorted(times, 2.0 * times[-1] / 3.0)
    rep.summary["wtilde_mid"] = float(wt[mid])
    rep.summary["wtilde_end"] = float(wt[-1])
    rep.summary["drift_detected"] = bool(wt[-1] > wt[mid])
    slope = np.polyfit(times[third:], wt[third:], 1)[0]
    rep.summary["wtilde_final_third_slope"] = float(slope)
    if "u1_norm" in series:
        rep.summary["u1_final_third_max"] = float(np.max(series["u1_norm"][third:]))
    if out_dir is not None:
        with open(Path(out_dir) / "summary.json", "w") as fh:
            json.dump(_jsonable(rep.summary | {"gates": rep.gates}), fh, indent=2, sort_keys=True)
    return rep

import numpy as np

from neurofield.fields import field_l2_norm
from neurofield.integrator import ComponentSpec, CoupledSystem, integrate
from neurofield.kernels import hs_norm
from neurofield.lyapunov import LyapunovMonitor, lyapunov_constants
from neurofield.observer import error_rhs
from neurofield.params import default_model
from neurofield.plant import plant_rhs
from neurofield.scenarios import (
    build_error_twin,
    build_high_gain_scenario,
    build_observer_scenario,
    build_simultaneous_scenario,
    build_stabilization_scenario,
    pe_signal_from_trajectory,
)
from neurofield.signals import SignalSpec, make_signal


def probe_inputs(params, mu=10.0):
    u1 = make_signal(SignalSpec("space_time_sine", mu=mu, rate=params.lambda1), params.grid)
    u2 = make_signal(SignalSpec("space_time_sine", mu=mu, rate=params.lambda2), params.grid)
    return u1, u2


def test_error_twin_matches_coupled_differences():
    """Integrating the error system directly must reproduce the differences
    of the coupled plant+observer run (they share the plant's stage values,
    so any gap is a derivation error, not integrator noise)."""
    p = default_model()
    u1, u2 = probe_inputs(p)
    obs = build_observer_scenario(p, u1, u2)
    twin = build_error_twin(p, u1, u2)
    tr_obs = integrate(obs.system, (0.0, 1.0), 1e-3, obs.init, record_stride=20)
    tr_err = integrate(twin.system, (0.0, 1.0), 1e-3, twin.init, record_stride=20)

    gap = 0.0
    for k in range(len(tr_obs.times)):
        gap = max(gap, field_l2_norm(
            (tr_obs.components["zhat1"][k] - tr_obs.components["z1"][k])
            - tr_err.components["zt1"][k], p.grid))
        gap = max(gap, field_l2_norm(
            (tr_obs.components["zhat2"][k] - tr_obs.components["z2"][k])
            - tr_err.components["zt2"][k], p.grid))
        gap = max(gap, hs_norm(
            (tr_obs.components["what11"][k] - p.kernels[(1, 1)].blocks)
            - tr_err.components["wt11"][k], p.grid))
        gap = max(gap, hs_norm(
            (tr_obs.components["what12"][k] - p.kernels[(1, 2)].blocks)
            - tr_err.components["wt12"][k], p.grid))
    assert gap < 1e-8
    # plant route is bitwise identical between the two runs
    np.testing.assert_array_equal(tr_obs.components["z1"], tr_err.components["z1"])


def test_closed_loop_error_system_equivalence():
    """The closed-loop tuple (zref1 - z1, zhat2 - z2, what - w) must satisfy
    the same error dynamics as the open-loop observer."""
    p = default_model()
    bundle = build_stabilization_scenario(p, with_error_twin=True)
    tr = integrate(bundle.system, (0.0, 0.8), 1e-3, bundle.init, record_stride=20)
    gap = 0.0
    for k in range(len(tr.times)):
        gap = max(gap, field_l2_norm(
            (p.zref1 - tr.components["z1"][k]) - tr.components["zt1"][k], p.grid))
        gap = max(gap, field_l2_norm(
            (tr.components["zhat2"][k] - tr.components["z2"][k])
            - tr.components["zt2"][k], p.grid))
        gap = max(gap, hs_norm(
            (tr.components["what11"][k] - p.kernels[(1, 1)].blocks)
            - tr.components["wt11"][k], p.grid))
        gap = max(gap, hs_norm(
            (tr.components["what12"][k] - p.kernels[(1, 2)].blocks)
            - tr.components["wt12"][k], p.grid))
    assert gap < 1e-8


def test_detectability_of_unmeasured_population():
    """With the kernel errors frozen at zero and no innovation, the internal
    copy of the unmeasured population still converges (contraction)."""
    p = default_model()
    n = p.grid.n_points
    d = p.max_delay
    u1 = lambda t: np.zeros((n, 1))
    u2 = lambda t: np.zeros((n, 1))
    zero1 = np.zeros((n, 1))
    zero_k = np.zeros((n, n, 1, 1))

    def rhs(t, s, view):
        dz1, dz2 = plant_rhs(t, s["z1"], s["z2"], view, u1(t), u2(t), p)
        _, dzt2, _, _ = error_rhs(t, zero1, s["zt2"], zero_k, zero_k, view, p)
        return {"z1": dz1, "z2": dz2, "zt2": dzt2}

    sys = CoupledSystem(
        [ComponentSpec("z1", (n, 1), d), ComponentSpec("z2", (n, 1), d),
         ComponentSpec("zt2", (n, 1), d)],
        rhs, delays=tuple(p.delays.values()),
    )
    init = {"z1": np.ones((n, 1)), "z2": np.ones((n, 1)), "zt2": -np.ones((n, 1))}
    tr = integrate(sys, (0.0, 6.0), 1e-3, init, record_stride=100)
    final = field_l2_norm(tr.final_state["zt2"], p.grid)
    assert final < 1e-2 * field_l2_norm(init["zt2"], p.grid)


def test_uniform_stability_scaling():
    """Shrinking the initial error by 10x keeps the whole subsequent error
    within a fixed multiple (frozen regression constant)."""
    p = default_model()
    u1, u2 = probe_inputs(p)

    def peak(scale):
        twin = build_error_twin(p, u1, u2)
        init = dict(twin.init)
        for k in ("zt1", "zt2", "wt11", "wt12"):
            init[k] = scale * init[k]
        tr = integrate(twin.system, (0.0, 1.5), 1e-3, init, record_stride=30)
        peaks = []
        for k in range(len(tr.times)):
            total = np.sqrt(
                field_l2_norm(tr.components["zt1"][k], p.grid) ** 2
                + field_l2_norm(tr.components["zt2"][k], p.grid) ** 2
                + hs_norm(tr.components["wt11"][k], p.grid) ** 2
                + hs_norm(tr.components["wt12"][k], p.grid) ** 2
            )
            peaks.append(total)
        return max(peaks)

    p_full = peak(1.0)
    p_small = peak(0.1)
    # frozen regression: measured ratio is ~0.1 (uniform stability)
    assert p_small <= 0.2 * p_full


def test_monitor_below_threshold_reports_without_raising():
    """alpha below the sufficient threshold: the certificate is conditional,
    so violations are allowed but the monitor must still run."""
    p = default_model(alpha=0.5)
    u1, u2 = probe_inputs(p)
    bundle = build_observer_scenario(p, u1, u2)
    consts = lyapunov_constants(p)
    assert consts.c1 < 0  # below the threshold
    mon = LyapunovMonitor(p, bundle.monitor_extract, consts)
    integrate(bundle.system, (0.0, 0.3), 1e-3, bundle.init,
              callbacks=(mon,), record_fields=False)
    rep = mon.report()
    assert rep["violation_count"] >= 0
    assert len(rep["times"]) == len(mon.V)


def test_simultaneous_scenario_runs_and_certificate_holds():
    p = default_model(n2=0, n_points=8, measure="counting", alpha=5.0)
    v = make_signal(SignalSpec("space_time_sine", mu=5.0, rate=p.lambda1), p.grid)
    bundle = build_simultaneous_scenario(p, v)
    mon = LyapunovMonitor(p, bundle.monitor_extract)
    tr = integrate(bundle.system, (0.0, 1.0), 1e-3, bundle.init,
                   callbacks=(mon,), record_stride=10)
    rep = mon.report()
    assert rep["violation_count"] == 0
    assert np.all(np.isfinite(tr.final_state["what"]))


def test_high_gain_baseline_stabilizes():
    p = default_model(alpha=50.0)
    bundle = build_high_gain_scenario(p)
    tr = integrate(bundle.system, (0.0, 2.0), 1e-3, bundle.init, record_stride=50)
    final = field_l2_norm(tr.final_state["z1"], p.grid)
    assert final < 0.15  # settles near the drive-balanced equilibrium


def test_estimate_errors_stay_inside_level_set(fig2_run):
    """Along the reference run the kernel errors never leave the region the
    initial functional value permits: ||wt||_F <= sqrt(2 V(0) / min tau)."""
    rep = fig2_run
    v0 = rep.lyapunov["V"][0]
    cap = np.sqrt(2.0 * v0)  # tau = 1 in the reference model
    for key in ("wtilde11", "wtilde12"):
        assert np.max(rep.series[key]) <= cap + 1e-9
    # the functional itself never rises
    assert np.all(np.diff(rep.lyapunov["V"]) <= 1e-9)


def test_emit_plots_contract(fig2_run, tmp_path):
    """Rendering contract: the figure set materializes, and the kernel
    estimate the first heatmap renders is identically zero."""
    from neurofield.plots import emit_plots, plot_sweep

    files = emit_plots(fig2_run, tmp_path / "plots")
    assert {f.name for f in files} >= {"errors.png", "state.png", "lyapunov.png",
                                       "kappa.png", "what11_start.png"}
    assert np.all(fig2_run.trajectory.components["what11"][0] == 0.0)
    rows = [{"amplitude": a, "steady_max": a, "steady_avg": 0.5 * a} for a in (0, 1, 2)]
    (sweep_file,) = plot_sweep(rows, tmp_path / "plots")
    assert sweep_file.exists()


def test_pe_signal_extraction_alignment():
    p = default_model()
    u1, u2 = probe_inputs(p)
    bundle = build_observer_scenario(p, u1, u2)
    tr = integrate(bundle.system, (0.0, 0.5), 1e-3, bundle.init, record_stride=10)
    ts, vals = pe_signal_from_trajectory(tr, p, bundle.pe_components)
    # delay 0.1 = 10 recorded samples at stride 10: series shifted by 10
    assert len(ts) == len(tr.times) - 10
    # the signal is tanh of the delayed activity: first sample is tanh(z(t=0))
    np.testing.assert_allclose(
        vals[0, :20], np.tanh(tr.components["z1"][0][:, 0]), atol=1e-12
    )

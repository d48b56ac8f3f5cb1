import numpy as np
import pytest

from neurofield.control import (
    check_sim_restrictions,
    control_exact,
    control_sim,
    high_gain_control,
    reduced_observer_rhs,
    require_sim_restrictions,
    sim_observer_rhs,
    solve_zref2,
)
from neurofield.errors import ConfigError, FixedPointError
from neurofield.history import CallableHistory, ConstantHistory
from neurofield.integrator import AdapterView
from neurofield.observer import observer_rhs
from neurofield.params import default_model
from neurofield.plant import plant_rhs


def const_view(values, t=0.0):
    return AdapterView({k: ConstantHistory(v) for k, v in values.items()},
                       t=t, state=dict(values))


# -- exact stabilization law -----------------------------------------------------

def test_exact_law_freezes_plant_at_reference():
    """With perfect estimates and z1 pinned at the reference the closed-loop
    z1 derivative vanishes by construction."""
    p = default_model(zref1=0.8)
    n = p.grid.n_points
    z1 = p.zref1.copy()
    z2 = np.full((n, 1), -0.4)
    view = const_view({"z1": z1, "z2": z2, "zhat2": z2})
    u1, u2 = control_exact(0.0, z1, p.kernels[(1, 1)].blocks,
                           p.kernels[(1, 2)].blocks, view, p)
    assert np.max(np.abs(u2)) == 0.0
    dz1, _ = plant_rhs(0.0, z1, z2, view, u1, u2, p)
    np.testing.assert_allclose(dz1, 0.0, atol=1e-13)


def test_exact_law_pure_proportional_when_estimates_zero():
    p = default_model()
    rng = np.random.default_rng(2)
    n = p.grid.n_points
    z1 = rng.normal(size=(n, 1))
    zh2 = rng.normal(size=(n, 1))
    view = const_view({"z1": z1, "zhat2": zh2})
    zero_k = np.zeros((n, n, 1, 1))
    u1, _ = control_exact(0.0, z1, zero_k, zero_k, view, p)
    np.testing.assert_allclose(u1, -p.alpha * z1 + z1, atol=1e-14)


def test_exact_law_scalar_transcription():
    p = default_model(n_points=1, measure="counting", alpha=4.0, delay=0.1,
                      tau=1.5, zref1=0.2)
    t, d = 0.7, 0.1
    z1f = lambda s: np.array([[0.5 + 0.1 * s]])
    zh2f = lambda s: np.array([[-0.3 * np.cos(s)]])
    z1 = z1f(t)
    wh11 = np.array([[[[0.9]]]])
    wh12 = np.array([[[[0.35]]]])
    view = AdapterView({"z1": CallableHistory(z1f), "zhat2": CallableHistory(zh2f)},
                       t=t, state={"z1": z1})
    u1, u2 = control_exact(t, z1, wh11, wh12, view, p)
    oracle = (-4.0 * (z1[0, 0] - 0.2) + z1[0, 0]
              - 0.9 * np.tanh(z1f(t - d)[0, 0])
              - 0.35 * np.tanh(zh2f(t - d)[0, 0]))
    assert u1[0, 0] == pytest.approx(oracle, abs=1e-14)
    assert u2.shape == (1, 1) and u2[0, 0] == 0.0


# -- reduced (closed-loop) observer ------------------------------------------------

def test_reduced_observer_frozen_at_reference():
    p = default_model(zref1=0.3)
    n = p.grid.n_points
    z1 = p.zref1.copy()
    zh2 = np.full((n, 1), 0.1)
    view = const_view({"z1": z1, "zhat2": zh2})
    _, dw11, dw12 = reduced_observer_rhs(0.0, zh2, np.zeros((n, n, 1, 1)),
                                         np.zeros((n, n, 1, 1)), z1, view, p)
    assert np.max(np.abs(dw11)) == 0.0
    assert np.max(np.abs(dw12)) == 0.0


def test_reduced_observer_decay_without_couplings():
    """w21 = w22 = 0: the internal copy relaxes as exp(-t/tau2)."""
    p = default_model(omega={(1, 1): 2.0, (1, 2): 2.0, (2, 1): 0.0, (2, 2): 0.0},
                      tau=2.0)
    n = p.grid.n_points
    zh2 = np.full((n, 1), 0.6)
    view = const_view({"z1": np.zeros((n, 1)), "zhat2": zh2})
    dzh2, _, _ = reduced_observer_rhs(0.0, zh2, np.zeros((n, n, 1, 1)),
                                      np.zeros((n, n, 1, 1)), np.zeros((n, 1)), view, p)
    np.testing.assert_allclose(dzh2, -zh2 / 2.0, atol=1e-14)


def test_reduced_observer_scalar_transcription():
    p = default_model(n_points=1, measure="counting", alpha=4.0, delay=0.1,
                      tau=1.5, zref1=-0.1)
    t, d = 0.9, 0.1
    z1f = lambda s: np.array([[0.2 * np.sin(s)]])
    zh2f = lambda s: np.array([[0.15 + 0.05 * s]])
    z1 = z1f(t)
    zh2 = zh2f(t)
    wh11 = np.array([[[[0.45]]]])
    wh12 = np.array([[[[-0.25]]]])
    view = AdapterView({"z1": CallableHistory(z1f), "zhat2": CallableHistory(zh2f)},
                       t=t, state={"z1": z1, "zhat2": zh2})
    dzh2, dw11, dw12 = reduced_observer_rhs(t, zh2, wh11, wh12, z1, view, p)
    w21 = p.kernels[(2, 1)].blocks[0, 0, 0, 0]
    w22 = p.kernels[(2, 2)].blocks[0, 0, 0, 0]
    tau = 1.5
    exp_dzh2 = (-zh2[0, 0] + w21 * np.tanh(z1f(t - d)[0, 0])
                + w22 * np.tanh(zh2f(t - d)[0, 0])) / tau
    exp_dw11 = (z1[0, 0] - (-0.1)) * np.tanh(z1f(t - d)[0, 0]) / tau
    exp_dw12 = (z1[0, 0] - (-0.1)) * np.tanh(zh2f(t - d)[0, 0]) / tau
    assert dzh2[0, 0] == pytest.approx(exp_dzh2, abs=1e-14)
    assert dw11[0, 0, 0, 0] == pytest.approx(exp_dw11, abs=1e-14)
    assert dw12[0, 0, 0, 0] == pytest.approx(exp_dw12, abs=1e-14)


def test_reduced_law_is_open_loop_law_with_pinned_estimate():
    """Cross-check the sign flip: the closed-loop kernel update equals the
    open-loop law evaluated at zhat1 = zref1."""
    p = default_model(n_points=3, measure="counting", zref1=0.4)
    rng = np.random.default_rng(8)
    n = 3
    z1 = rng.normal(size=(n, 1))
    zh2 = rng.normal(size=(n, 1))
    wh11 = rng.normal(size=(n, n, 1, 1))
    wh12 = rng.normal(size=(n, n, 1, 1))
    view = const_view({"z1": z1, "zhat2": zh2})
    _, red11, red12 = reduced_observer_rhs(0.0, zh2, wh11, wh12, z1, view, p)
    u = np.zeros((n, 1))
    _, _, open11, open12 = observer_rhs(0.0, p.zref1.copy(), zh2, wh11, wh12,
                                        z1, view, u, u, p)
    np.testing.assert_allclose(red11, open11, atol=1e-14)
    np.testing.assert_allclose(red12, open12, atol=1e-14)


# -- simultaneous law ----------------------------------------------------------------

def sim_params(**kw):
    kw.setdefault("n2", 0)
    kw.setdefault("measure", "counting")
    return default_model(**kw)


def test_sim_law_reduces_to_exact_when_v_zero():
    p = sim_params(alpha=5.0)
    rng = np.random.default_rng(4)
    n = p.grid.n_points
    z = rng.normal(size=(n, 1))
    what = rng.normal(size=(n, n, 1, 1))
    hist = CallableHistory(lambda s: np.array(0.3 * np.sin(s + np.arange(n)))[:, None])
    view = AdapterView({"z": hist, "z1": hist}, t=1.0, state={"z": z, "z1": z})
    u_sim = control_sim(1.0, z, what, np.zeros((n, 1)), view, p)
    u_exact, _ = control_exact(1.0, z, what, None, view, p)
    np.testing.assert_allclose(u_sim, u_exact, atol=1e-14)


def test_sim_law_at_reference_with_dead_activation():
    p = sim_params(zref1=0.0)
    n = p.grid.n_points
    z = p.zref1.copy()
    v = np.full((n, 1), 0.7)
    what = np.random.default_rng(0).normal(size=(n, n, 1, 1))
    view = const_view({"z": z})
    u = control_sim(0.0, z, what, v, view, p)
    np.testing.assert_allclose(u, v + z, atol=1e-14)


def test_sim_law_scalar_transcription():
    p = sim_params(n_points=1, alpha=2.5, delay=0.1, zref1=0.0)
    t, d = 0.4, 0.1
    zf = lambda s: np.array([[0.6 - 0.2 * s]])
    z = zf(t)
    what = np.array([[[[1.2]]]])
    v = np.array([[0.33]])
    view = AdapterView({"z": CallableHistory(zf)}, t=t, state={"z": z})
    u = control_sim(t, z, what, v, view, p)
    oracle = 0.33 - 2.5 * z[0, 0] + z[0, 0] - 1.2 * np.tanh(zf(t - d)[0, 0])
    assert u[0, 0] == pytest.approx(oracle, abs=1e-14)


def test_sim_observer_filter_and_freeze():
    p = sim_params(n_points=2, alpha=3.0, tau=1.5)
    n = 2
    z = np.array([[0.2], [0.4]])
    zh = z.copy()
    what = np.zeros((n, n, 1, 1))
    view = const_view({"z": z})
    dzh, dwh = sim_observer_rhs(0.0, zh, what, z, np.zeros((n, 1)), view, p)
    np.testing.assert_allclose(dzh, -3.0 * zh / 1.5, atol=1e-14)
    assert np.max(np.abs(dwh)) == 0.0  # zhat = z freezes the kernel


def test_sim_observer_scalar_transcription():
    p = sim_params(n_points=1, alpha=2.0, delay=0.1, tau=0.5)
    t, d = 0.8, 0.1
    zf = lambda s: np.array([[0.1 * s]])
    z = zf(t)
    zh = np.array([[0.5]])
    what = np.array([[[[0.0]]]])
    v = np.array([[0.9]])
    view = AdapterView({"z": CallableHistory(zf)}, t=t, state={"z": z})
    dzh, dwh = sim_observer_rhs(t, zh, what, z, v, view, p)
    assert dzh[0, 0] == pytest.approx((-2.0 * 0.5 + 0.9) / 0.5, abs=1e-14)
    assert dwh[0, 0, 0, 0] == pytest.approx(
        -(0.5 - z[0, 0]) * np.tanh(zf(t - d)[0, 0]) / 0.5, abs=1e-14
    )


def test_restrictions_audit_and_enforcement():
    good = sim_params()
    audit = check_sim_restrictions(good)
    assert audit["ii"][0] and audit["iv"][0] and audit["v"][0] and audit["vi"][0]
    assert not audit["vii"][0]  # tanh is not locally linear
    require_sim_restrictions(good)  # enforced subset passes

    bad = default_model(n2=1)
    with pytest.raises(ConfigError) as exc:
        require_sim_restrictions(bad)
    assert "(ii)" in str(exc.value)


# -- stationary reference solve -------------------------------------------------------

def test_zref2_zero_reference(table_params):
    x, info = solve_zref2(table_params, np.zeros((20, 1)))
    assert np.max(np.abs(x.values)) < 1e-12


def test_zref2_single_step_without_recurrence():
    p = default_model(omega={(1, 1): 2.0, (1, 2): 2.0, (2, 1): -2.0, (2, 2): 0.0})
    zref1 = np.full((20, 1), 0.5)
    x, info = solve_zref2(p, zref1)
    np.testing.assert_allclose(x.values, info["v2ref"], atol=1e-12)


def test_zref2_scalar_against_bisection_oracle():
    """One-point model: compare the fixed point against a bisection solve of
    x = w22 tanh(x) + w21 tanh(0.5)."""
    p = default_model(n_points=1, measure="counting")
    zref1 = np.full((1, 1), 0.5)
    x, _ = solve_zref2(p, zref1)
    w21 = p.kernels[(2, 1)].blocks[0, 0, 0, 0]
    w22 = p.kernels[(2, 2)].blocks[0, 0, 0, 0]
    c = w21 * np.tanh(0.5)
    f = lambda v: w22 * np.tanh(v) + c - v
    lo, hi = -10.0, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    assert x.values[0, 0] == pytest.approx(0.5 * (lo + hi), abs=1e-10)


def test_zref2_contraction_rate(table_params):
    _, info = solve_zref2(table_params, np.full((20, 1), 0.5))
    res = info["residuals"]
    ratios = res[1:-1] / res[:-2]
    assert np.all(ratios <= 0.1 + 1e-9)  # l22 * ||w22|| = 0.1


def test_zref2_noncontractive_rejected():
    p = default_model(omega={(1, 1): 2.0, (1, 2): 2.0, (2, 1): -2.0, (2, 2): 1.2})
    with pytest.raises(FixedPointError):
        solve_zref2(p, np.zeros((20, 1)))


def test_controller_config_validation():
    from neurofield.control import ControllerConfig
    from neurofield.errors import ParameterError
    from neurofield.signals import SignalSpec

    cc = ControllerConfig(mode="exact_stabilization", alpha=10.0,
                          zref1=np.zeros((3, 1)))
    assert cc.excitation is None  # exact mode carries no probing signal
    ControllerConfig(mode="simultaneous_pe", alpha=1.0, zref1=np.zeros((3, 1)),
                     excitation=SignalSpec("sine_basis"))
    with pytest.raises(ParameterError):
        ControllerConfig(mode="bang_bang", alpha=1.0, zref1=np.zeros((3, 1)))
    with pytest.raises(ParameterError):
        ControllerConfig(mode="exact_stabilization", alpha=0.0, zref1=np.zeros((3, 1)))


def test_high_gain_baseline_shape():
    p = default_model(zref1=0.1, alpha=10.0)
    n = p.grid.n_points
    z1 = np.full((n, 1), 0.6)
    u = high_gain_control(0.0, z1, p)
    np.testing.assert_allclose(u, -10.0 * (0.6 - 0.1), atol=1e-14)

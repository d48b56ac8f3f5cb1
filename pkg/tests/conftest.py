import time

import numpy as np
import pytest

from neurofield.cli import packaged_config
from neurofield.grid import build_grid
from neurofield.params import default_model
from neurofield.runner import run_drift_study, run_perturbation_sweep, run_scenario


@pytest.fixture(scope="session")
def grid20():
    return build_grid(20, "lebesgue")


@pytest.fixture(scope="session")
def grid3c():
    return build_grid(3, "counting")


@pytest.fixture(scope="session")
def table_params():
    """The reference parameter set used by the headline experiments."""
    return default_model()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


# -- shared headline runs (expensive; computed once per session) --------------

@pytest.fixture(scope="session")
def fig2_run():
    """Reference open-loop estimation run: Table parameters, mu = 1e3."""
    cfg = packaged_config("observer")
    t0 = time.perf_counter()
    rep = run_scenario(cfg)
    rep.summary["elapsed"] = time.perf_counter() - t0
    return rep


@pytest.fixture(scope="session")
def stab_run():
    cfg = packaged_config("stabilization")
    t0 = time.perf_counter()
    rep = run_scenario(cfg)
    rep.summary["elapsed"] = time.perf_counter() - t0
    return rep


@pytest.fixture(scope="session")
def sim_runs():
    out = {}
    for mu in (0.1, 10.0, 100.0):
        cfg = packaged_config("simultaneous")
        cfg.inputs.mu = mu
        out[mu] = run_scenario(cfg)
    return out


@pytest.fixture(scope="session")
def certified_run():
    cfg = packaged_config("certified_linear")
    return cfg, run_scenario(cfg)


@pytest.fixture(scope="session")
def sweep_result():
    return run_perturbation_sweep(packaged_config("perturbation_sweep"))


@pytest.fixture(scope="session")
def drift_report():
    return run_drift_study(packaged_config("drift"))


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdicts even under captured output."""
    import sys

    mod = sys.modules.get("tests.test_acceptance") or sys.modules.get("test_acceptance")
    if mod is not None and getattr(mod, "RESULTS", None):
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)

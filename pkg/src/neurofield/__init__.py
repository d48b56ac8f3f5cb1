"""Delayed neural fields: simulation, online kernel estimation, and
adaptive stabilizing feedback, with executable convergence certificates."""

from .activations import LocallyLinear, ScaledShiftedSigmoid, Tanh, make_activation
from .config import ScenarioConfig
from .control import (
    ControllerConfig,
    check_sim_restrictions,
    control_exact,
    control_sim,
    high_gain_control,
    reduced_observer_rhs,
    sim_observer_rhs,
    solve_zref2,
)
from .delays import DelayMatrix, DelaySpec
from .errors import (
    ConfigError,
    DimensionError,
    FixedPointError,
    HistoryRangeError,
    IntegrationError,
    NeurofieldError,
    ParameterError,
)
from .excitation import PEReport, kappa_timeline, pe_gram, pe_property_suite, pe_report
from .fields import StateField, field_l2_norm
from .grid import SpatialGrid, build_grid
from .history import HistoryBuffer, history_query
from .integrator import ComponentSpec, CoupledSystem, Trajectory, integrate
from .kernels import (
    KernelField,
    apply_kernel,
    dirac_kernel,
    gaussian_kernel,
    hs_norm,
    kernel_compose,
    l2_opnorm,
)
from .lyapunov import LyapunovConstants, lyapunov_constants, lyapunov_eval, lyapunov_monitor
from .observer import (
    EstimationError,
    ObserverState,
    alpha_star,
    check_dissipativity,
    error_metrics,
    error_rhs,
    initial_observer_state,
    observer_rhs,
)
from .params import ModelParams, default_model
from .plant import bibs_bound, plant_rhs
from .replay import ReplayLog, run_observer_replay
from .runner import RunReport, run_drift_study, run_perturbation_sweep, run_scenario
from .signals import GridSignal, SignalSpec, make_signal

__version__ = "0.1.0"

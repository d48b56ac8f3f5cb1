import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neurofield.activations import LocallyLinear, ScaledShiftedSigmoid, Tanh, make_activation
from neurofield.errors import ParameterError

ALL_SPECS = [
    Tanh(),
    ScaledShiftedSigmoid(amplitude=2.0, slope=3.0, center=0.5, baseline=-1.0),
    LocallyLinear(slope=1.5, radius=0.8, margin=0.5),
    LocallyLinear(slope=-0.7, radius=2.0, margin=1.0, center=0.3),
]

finite_floats = st.floats(min_value=-50, max_value=50, allow_nan=False)


@pytest.mark.parametrize("spec", ALL_SPECS)
@given(a=finite_floats, b=finite_floats)
@settings(max_examples=120, deadline=None)
def test_lipschitz_bound_holds(spec, a, b):
    lhs = abs(float(spec(np.array(a))) - float(spec(np.array(b))))
    assert lhs <= spec.lipschitz * abs(a - b) + 1e-12


@pytest.mark.parametrize("spec", ALL_SPECS)
@given(a=finite_floats)
@settings(max_examples=120, deadline=None)
def test_sup_bound_holds(spec, a):
    assert abs(float(spec(np.array(a)))) <= spec.bound + 1e-12


@pytest.mark.parametrize("spec", ALL_SPECS)
def test_derivative_matches_finite_difference(spec):
    x = np.linspace(-4, 4, 81)
    h = 1e-6
    fd = (spec(x + h) - spec(x - h)) / (2 * h)
    np.testing.assert_allclose(spec.derivative(x), fd, atol=5e-7, rtol=1e-5)


def test_locally_linear_is_exactly_linear_inside():
    spec = LocallyLinear(slope=2.0, radius=1.5, margin=1.0)
    x = np.linspace(-1.5, 1.5, 31)
    np.testing.assert_allclose(spec(x), 2.0 * x, atol=1e-15)
    np.testing.assert_allclose(spec.derivative(x), 2.0, atol=1e-15)


def test_locally_linear_centered_reference():
    spec = LocallyLinear(slope=1.0, radius=0.5, margin=0.2, center=0.3)
    assert spec(np.array(0.3)) == pytest.approx(0.0)
    # saturates within slope*(radius+margin)
    assert abs(spec(np.array(50.0))) <= spec.bound + 1e-12


def test_locally_linear_continuous_at_radius():
    spec = LocallyLinear(slope=1.0, radius=1.0, margin=0.5)
    eps = 1e-9
    assert spec(np.array(1.0 + eps)) == pytest.approx(float(spec(np.array(1.0 - eps))), abs=1e-7)
    assert spec.derivative(np.array(1.0 + eps)) == pytest.approx(1.0, abs=1e-6)


def test_tanh_constants():
    s = Tanh()
    assert s.lipschitz == 1.0
    assert s.bound == 1.0


def test_factory_and_errors():
    assert isinstance(make_activation("tanh"), Tanh)
    assert isinstance(make_activation("locally_linear", slope=2.0), LocallyLinear)
    with pytest.raises(ParameterError):
        make_activation("relu")
    with pytest.raises(ParameterError):
        LocallyLinear(slope=0.0)

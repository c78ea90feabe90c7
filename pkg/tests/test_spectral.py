"""Spectral density model."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from qbmlab.params import BathParams, SystemParams
from qbmlab.spectral import SpectralDensity


def test_linear_below_cutoff():
    sd = SpectralDensity(friction=1.0, cutoff=10.0)
    w = np.array([0.0, 1.0, 5.0, 9.999])
    np.testing.assert_allclose(sd.evaluate(w), (2.0 / np.pi) * w)


def test_zero_above_cutoff():
    sd = SpectralDensity(friction=3.0, cutoff=2.0)
    assert sd.evaluate(2.0001) == 0.0
    assert sd.evaluate(100.0) == 0.0


def test_half_value_at_edge():
    sd = SpectralDensity(friction=1.0, cutoff=2.0)
    below = sd.evaluate(2.0 - 1e-12)
    assert sd.evaluate(2.0) == pytest.approx(below / 2.0, rel=1e-9)


def test_scalar_in_scalar_out():
    sd = SpectralDensity(friction=1.0, cutoff=10.0)
    out = sd.evaluate(1.5)
    assert isinstance(out, float)
    arr = sd.evaluate(np.array([1.5, 2.5]))
    assert isinstance(arr, np.ndarray)


def test_from_params():
    sd = SpectralDensity.ohmic(SystemParams(mass=2.0),
                               BathParams(gamma=0.25, cutoff=7.0))
    assert sd.friction == pytest.approx(0.5)
    assert sd.cutoff == 7.0


def test_negative_frequency_rejected():
    sd = SpectralDensity(friction=1.0, cutoff=10.0)
    with pytest.raises(ValueError):
        sd.evaluate(-0.5)


@pytest.mark.parametrize("kwargs", [
    {"friction": 0.0, "cutoff": 1.0},
    {"friction": 1.0, "cutoff": -1.0},
    {"friction": 1.0, "cutoff": 1.0, "kind": "lorentz_drude"},
])
def test_validation(kwargs):
    with pytest.raises(ValueError):
        SpectralDensity(**kwargs)


@given(friction=st.floats(1e-3, 1e3), cutoff=st.floats(1e-3, 1e3),
       w=st.floats(0.0, 2e3))
def test_nonnegative_everywhere(friction, cutoff, w):
    sd = SpectralDensity(friction=friction, cutoff=cutoff)
    assert sd.evaluate(w) >= 0.0


@given(friction=st.floats(1e-3, 1e3), c=st.floats(1e-3, 1e3))
def test_friction_scales_linearly(friction, c):
    sd1 = SpectralDensity(friction=friction, cutoff=10.0)
    sd2 = SpectralDensity(friction=2.0 * friction, cutoff=10.0)
    w = min(c, 9.9)
    assert sd2.evaluate(w) == pytest.approx(2.0 * sd1.evaluate(w), rel=1e-12)

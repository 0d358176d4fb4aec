import math

import numpy as np
import pytest

from sirmf.integrate import IntegrationError, integrate


def test_exponential_lands_on_grid():
    grid = np.array([0.0, 0.3, 1.0, 2.5])
    y = integrate(lambda t, y: -2 * y, [1.0], grid)
    np.testing.assert_allclose(y[:, 0], np.exp(-2 * grid), rtol=0, atol=1e-9)


def test_harmonic_oscillator_energy():
    grid = np.linspace(0, 20, 41)
    y = integrate(lambda t, y: np.array([y[1], -y[0]]), [1.0, 0.0], grid, atol=1e-12, rtol=1e-10)
    np.testing.assert_allclose(y[:, 0], np.cos(grid), atol=1e-8)


def test_non_autonomous():
    grid = np.linspace(0, 1, 5)
    y = integrate(lambda t, y: np.array([math.cos(t)]), [0.0], grid)
    np.testing.assert_allclose(y[:, 0], np.sin(grid), atol=1e-9)


def test_on_output_can_replace_state():
    seen = []

    def hook(k, t, y):
        seen.append(k)
        return np.zeros_like(y) if k == 1 else None

    y = integrate(lambda t, y: np.ones_like(y), [0.0], [0.0, 1.0, 2.0], on_output=hook)
    assert seen == [0, 1, 2]
    assert y[1, 0] == 0.0 and y[2, 0] == pytest.approx(1.0)


def test_blow_up_reports_partial_rows():
    # y' = y^2, y(0)=1 blows up at t=1
    grid = np.linspace(0, 2, 21)
    with pytest.raises(IntegrationError) as info:
        integrate(lambda t, y: y * y, [1.0], grid)
    err = info.value
    assert 0.9 <= err.t <= 1.0
    assert err.partial.shape == (10, 1)
    # global error grows like the solution near the singularity
    np.testing.assert_allclose(err.partial[:, 0], 1 / (1 - grid[:10]), rtol=1e-4)


def test_step_budget():
    with pytest.raises(IntegrationError, match="budget"):
        integrate(lambda t, y: -y, [1.0], [0.0, 10.0], max_steps=3)


def test_single_point_grid():
    y = integrate(lambda t, y: y, [2.0, 3.0], [0.0])
    assert y.tolist() == [[2.0, 3.0]]

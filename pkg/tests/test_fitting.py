"""Rate/period extraction on synthetic signals with known answers."""

import numpy as np
import pytest

from legvp.errors import FitError
from legvp.fitting import fit_damping_rate, fit_period, peak_times


def test_rate_recovers_synthetic_decay():
    # crests of |cos(pi t)| fall exactly on the sample grid, so the peak
    # values are exactly e^{-0.85 t} and the fit is exact to roundoff
    t = np.arange(0.0, 20.0, 0.01)
    y = np.exp(-0.85 * t) * np.abs(np.cos(np.pi * t))
    assert fit_damping_rate(t, y) == pytest.approx(-0.85, abs=1e-6)


def test_rate_constant_series_is_zero():
    t = np.linspace(0, 10, 101)
    assert fit_damping_rate(t, np.full(101, 0.7)) == 0.0


def test_rate_requires_four_peaks():
    t = np.linspace(0, 10, 101)
    y = np.exp(-0.3 * t) * np.abs(np.cos(2 * np.pi * t / 8.0))
    with pytest.raises(FitError):
        fit_damping_rate(t, y, window=(0.0, 8.0))


def test_rate_ignores_floor_noise():
    """Peaks that stop decreasing (roundoff floor) are excluded from the fit."""
    rng = np.random.default_rng(5)
    t = np.arange(0.0, 30.0, 0.01)
    y = np.exp(-0.85 * t) * np.abs(np.cos(np.pi * t))
    floor = 1e-9 * (1.0 + 0.5 * np.abs(np.sin(7.1 * t)) + 0.1 * rng.random(t.size))
    assert fit_damping_rate(t, np.maximum(y, floor)) == pytest.approx(-0.85, rel=2e-2)


def test_period_rectified_sine():
    t = np.arange(0.0, 800.0, 0.5)
    y = np.abs(np.sin(2 * np.pi * t / 197.0))
    assert fit_period(t, y, rectified=True) == pytest.approx(197.0, abs=0.5)
    assert fit_period(t, y) == pytest.approx(98.5, abs=0.5)


def test_period_constant_series_errors():
    t = np.linspace(0, 100, 400)
    with pytest.raises(FitError):
        fit_period(t, np.ones(400))


def test_period_needs_two_peaks():
    t = np.linspace(0, 100, 400)
    y = np.abs(np.sin(2 * np.pi * t / 300.0))
    with pytest.raises(FitError):
        fit_period(t, y)


def test_peak_refinement_off_grid():
    # crest at t = 10/3, samples at 0.25: refinement recovers it to ~1e-2
    t = np.arange(0.0, 40.0, 0.25)
    y = np.abs(np.cos(np.pi * (t - 10.0 / 3.0) / 5.0))
    pt, _ = peak_times(t, y, refine=True, prominence=0.5)
    offsets = (pt - 10.0 / 3.0) % 5.0
    offsets = np.minimum(offsets, 5.0 - offsets)
    assert np.max(offsets) < 0.05


def test_window_too_small():
    with pytest.raises(FitError):
        fit_damping_rate(np.array([0.0, 1.0]), np.array([1.0, 2.0]))

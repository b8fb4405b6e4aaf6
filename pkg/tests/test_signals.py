"""Grid/spectrum bridge: exactness, oracles, and guard rails.

Closed-form values are frozen from independent routes (Gaussian integrals,
scipy quadrature); the DFT side must land on them within the quadrature
tolerance stated at each assert.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from horizoncast import (
    NumericsError,
    SampledSignal,
    Spectrum,
    TimeGrid,
    absolute_moment,
    band_weighted_integral,
    forward_spectrum,
    hermitian_defect,
    inverse_signal,
    lr_norm,
    read_signal_csv,
    read_spectrum_csv,
    require_supported,
    spectral_derivative_norm,
    support_leakage,
    weighted_tail,
    write_signal_csv,
    write_spectrum_csv,
)

SQRT_PI = 1.7724538509055159


def wide_grid() -> TimeGrid:
    return TimeGrid(t_start=-40.0, dt=0.005, n=16000)


def gaussian_signal(grid: TimeGrid, center: float = 0.0) -> SampledSignal:
    t = grid.times()
    return SampledSignal(grid=grid, values=np.exp(-((t - center) ** 2)))


def gaussian_closed_spectrum(grid: TimeGrid) -> Spectrum:
    # exact transform of exp(-t^2); underflows to true zeros at high |w|,
    # unlike an FFT whose round-off floor explodes under exp(q*T*|w|)
    w = grid.omegas()
    with np.errstate(under="ignore"):
        return Spectrum(dt=grid.dt, values=(SQRT_PI * np.exp(-w * w / 4.0)).astype(complex))


def test_grid_properties():
    g = TimeGrid(t_start=-1.0, dt=0.25, n=8)
    assert math.isclose(g.omega_nyquist, math.pi / 0.25)
    assert math.isclose(g.span, 2.0)
    assert math.isclose(g.t_end, 1.0)
    assert g.index_of(-1.0) == 0
    assert g.index_of(0.75) == 7
    with pytest.raises(ValueError):
        g.index_of(0.8)  # off the lattice
    with pytest.raises(ValueError):
        g.index_of(1.0)  # one past the end


def test_signal_rejects_non_finite():
    g = TimeGrid(t_start=0.0, dt=0.1, n=4)
    with pytest.raises(ValueError):
        SampledSignal(grid=g, values=np.array([0.0, 1.0, np.nan, 0.0]))
    with pytest.raises(NumericsError):
        Spectrum(dt=0.1, values=np.array([1.0, np.inf, 0.0, 0.0], dtype=complex))


def test_signal_values_are_frozen():
    g = TimeGrid(t_start=0.0, dt=0.1, n=4)
    x = SampledSignal(grid=g, values=np.arange(4.0))
    with pytest.raises(ValueError):
        x.values[0] = 5.0


def test_gaussian_spectrum_against_closed_form():
    # X(iw) = sqrt(pi) exp(-w^2/4) for x = exp(-t^2)
    grid = wide_grid()
    X = forward_spectrum(gaussian_signal(grid))
    assert math.isclose(abs(X.values[0]), SQRT_PI, rel_tol=1e-12)
    w = grid.omegas()
    closed = SQRT_PI * np.exp(-w * w / 4.0)
    np.testing.assert_allclose(X.values.real, closed, atol=1e-12 * SQRT_PI)
    assert float(np.max(np.abs(X.values.imag))) < 1e-12 * SQRT_PI


def test_shift_theorem_at_a_grid_bin():
    # center at t=1 multiplies the spectrum by exp(-i*w); checked at the
    # bin nearest w=2 against the closed form at that exact bin frequency
    grid = wide_grid()
    X = forward_spectrum(gaussian_signal(grid, center=1.0))
    m = round(2.0 / X.domega)
    wm = X.omegas()[m]
    expected = SQRT_PI * math.exp(-wm * wm / 4.0) * np.exp(-1j * wm)
    assert abs(X.values[m] - expected) < 1e-12


def test_round_trip_and_plancherel():
    grid = wide_grid()
    x = gaussian_signal(grid)
    X = forward_spectrum(x)
    back = inverse_signal(X, grid)
    np.testing.assert_allclose(back.values, x.values, atol=1e-13)
    lhs = grid.dt * float(np.sum(x.values**2))
    rhs = X.domega / (2.0 * math.pi) * float(np.sum(np.abs(X.values) ** 2))
    assert math.isclose(lhs, rhs, rel_tol=1e-13)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(min_value=4, max_value=128), seed=st.integers(0, 2**31 - 1))
def test_round_trip_random_signals(n: int, seed: int):
    rng = np.random.Generator(np.random.Philox(seed))
    grid = TimeGrid(t_start=-1.0, dt=0.05, n=n)
    x = SampledSignal(grid=grid, values=rng.normal(0.0, 1.0, n))
    back = inverse_signal(forward_spectrum(x), grid)
    np.testing.assert_allclose(back.values, x.values, atol=1e-12)


def test_inverse_rejects_non_hermitian():
    rng = np.random.Generator(np.random.Philox(5))
    grid = TimeGrid(t_start=0.0, dt=0.1, n=64)
    vals = rng.normal(size=64) + 1j * rng.normal(size=64)
    X = Spectrum(dt=0.1, values=vals)
    assert hermitian_defect(X) > 0.1
    with pytest.raises(NumericsError):
        inverse_signal(X, grid)
    assert hermitian_defect(forward_spectrum(gaussian_signal(wide_grid()))) < 1e-13


def test_support_leakage_flags_clipped_signal():
    grid = TimeGrid(t_start=-5.0, dt=0.01, n=1000)
    centered = gaussian_signal(grid)
    assert require_supported(centered) < 1e-10
    clipped = gaussian_signal(grid, center=-4.9)
    assert support_leakage(clipped) > 0.1
    with pytest.raises(NumericsError):
        require_supported(clipped, "clipped fixture")
    zero = SampledSignal(grid=grid, values=np.zeros(1000))
    assert support_leakage(zero) == 0.0


def test_lr_norms():
    g = TimeGrid(t_start=0.0, dt=0.1, n=10)
    x = SampledSignal(grid=g, values=np.ones(10))
    assert math.isclose(lr_norm(x, 1), 1.0)
    assert math.isclose(lr_norm(x, 2), 1.0)
    assert lr_norm(x, math.inf) == 1.0
    with pytest.raises(ValueError):
        lr_norm(x, 3)
    # scaled form must survive huge samples
    big = SampledSignal(grid=g, values=np.full(10, 1e200))
    assert math.isclose(lr_norm(big, 2), 1e200, rel_tol=1e-12)


def test_weighted_tail_gaussian_closed_form():
    # int exp(2|w|) pi exp(-w^2/2) dw = 2 pi e^2 sqrt(2 pi) Phi(2); the
    # |w| kink at the origin keeps the rectangle rule at O(domega^2)
    X = gaussian_closed_spectrum(wide_grid())
    tail = weighted_tail(X, 2, 1.0, 0.0)
    assert math.isclose(tail, 113.7272104748588, rel_tol=2e-4)


def test_weighted_tail_amplifies_fft_floor_to_inf():
    # the same tail from the transformed samples overflows: the round-off
    # floor at high |w| is multiplied by exp(2*|w|), which is the reason
    # closed-form spectra exist throughout this package
    grid = wide_grid()
    F = forward_spectrum(gaussian_signal(grid))
    assert weighted_tail(F, 2, 1.0, 0.0) == math.inf


def test_weighted_tail_includes_origin_bin():
    X = gaussian_closed_spectrum(wide_grid())
    full = weighted_tail(X, 2, 1.0, 0.0)
    without_dc = band_weighted_integral(X, 2, 1.0, X.domega / 2.0, X.omega_nyquist * (1 - 1e-12))
    dc_cell = X.domega * abs(X.values[0]) ** 2
    assert math.isclose(full, without_dc + dc_cell, rel_tol=1e-12)


def test_band_integrals_partition_the_tail():
    X = gaussian_closed_spectrum(wide_grid())
    hi = X.omega_nyquist * (1 - 1e-12)
    total = band_weighted_integral(X, 2, 1.0, 0.0, 3.0) + band_weighted_integral(
        X, 2, 1.0, 3.0, 8.0
    ) + band_weighted_integral(X, 2, 1.0, 8.0, hi)
    assert math.isclose(total, weighted_tail(X, 2, 1.0, 0.0), rel_tol=1e-12)


def test_band_integral_matches_quadrature_on_growing_integrand():
    # |X| = 1/(1+w^2) decays so slowly that exp(2|w|) wins; both routes
    # (bin sum, adaptive quadrature) must agree to band-edge resolution
    grid = wide_grid()
    w = grid.omegas()
    X = Spectrum(dt=grid.dt, values=1.0 / (1.0 + 1j * w) ** 2)
    got = band_weighted_integral(X, 2, 1.0, 5.0, 10.0)
    expected = 2.0 * quad(lambda u: math.exp(2 * u) / (1 + u * u) ** 2, 5.0, 10.0)[0]
    assert math.isclose(got, expected, rel_tol=0.1)
    ratio = band_weighted_integral(X, 2, 1.0, 10.0, 20.0) / got
    assert ratio > 1e6


def test_weighted_tail_validation():
    grid = TimeGrid(t_start=0.0, dt=0.1, n=32)
    X = forward_spectrum(SampledSignal(grid=grid, values=np.ones(32)))
    with pytest.raises(ValueError):
        weighted_tail(X, 3, 1.0, 0.0)
    with pytest.raises(ValueError):
        weighted_tail(X, 2, 1.0, X.omega_nyquist)
    with pytest.raises(ValueError):
        band_weighted_integral(X, 2, 1.0, 5.0, 5.0)


def test_derivative_norms_hit_the_hermite_ladder():
    # ||d^k/dt^k exp(-t^2)||^2 = sqrt(pi/2) (2k-1)!!, an exact recursion;
    # needs the closed spectrum, since w^(2k) amplifies the FFT floor
    grid = wide_grid()
    X = gaussian_closed_spectrum(grid)
    expected = [
        1.2533141373155001,
        1.2533141373155001,
        3.7599424119465006,
        18.799712059732503,
        131.5979844181275,
        1184.3818597631475,
        13028.200457394623,
    ]
    for k, ref in enumerate(expected):
        assert math.isclose(spectral_derivative_norm(X, k), ref, rel_tol=1e-8), k
    # k = 0 is the plain squared L2 norm
    x = gaussian_signal(grid)
    assert math.isclose(spectral_derivative_norm(X, 0), lr_norm(x, 2) ** 2, rel_tol=1e-12)


def test_derivative_norm_validation():
    grid = TimeGrid(t_start=0.0, dt=0.1, n=16)
    X = forward_spectrum(SampledSignal(grid=grid, values=np.ones(16)))
    with pytest.raises(ValueError):
        spectral_derivative_norm(X, 41)
    with pytest.raises(ValueError):
        spectral_derivative_norm(X, 2.5)
    with pytest.raises(ValueError):
        absolute_moment(X, -1)


def test_absolute_moment_zeroth_is_plancherel():
    grid = wide_grid()
    x = gaussian_signal(grid)
    X = forward_spectrum(x)
    assert math.isclose(
        absolute_moment(X, 0), 2.0 * math.pi * lr_norm(x, 2) ** 2, rel_tol=1e-12
    )


def test_signal_csv_round_trip(tmp_path):
    grid = TimeGrid(t_start=-1.25, dt=0.25, n=9)
    rng = np.random.Generator(np.random.Philox(11))
    x = SampledSignal(grid=grid, values=rng.normal(0.0, 3.0, 9))
    path = tmp_path / "sig.csv"
    write_signal_csv(x, path)
    back = read_signal_csv(path)
    # 17 significant digits round-trip doubles exactly
    assert np.array_equal(back.values, x.values)
    assert math.isclose(back.grid.dt, grid.dt, rel_tol=1e-12)
    assert math.isclose(back.grid.t_start, grid.t_start, rel_tol=1e-12)
    assert path.read_text().splitlines()[0] == "t,value"


def test_spectrum_csv_round_trip_and_ordering(tmp_path):
    grid = TimeGrid(t_start=-2.0, dt=0.5, n=8)
    x = SampledSignal(grid=grid, values=np.arange(8.0))
    X = forward_spectrum(x)
    path = tmp_path / "spec.csv"
    write_spectrum_csv(X, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "omega,re,im"
    omegas = [float(line.split(",")[0]) for line in lines[1:]]
    assert omegas == sorted(omegas) and omegas[0] < 0.0
    back = read_spectrum_csv(path)
    assert np.array_equal(back.values, X.values)
    assert math.isclose(back.dt, X.dt, rel_tol=1e-12)


def test_signal_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,amplitude\n0,1\n1,2\n")
    with pytest.raises(ValueError):
        read_signal_csv(path)

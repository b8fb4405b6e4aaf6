"""Target evaluation, prediction routes, and study drivers."""

from __future__ import annotations

import math

import numpy as np
import pytest

from horizoncast import (
    ErrorReport,
    GaussianMixtureParams,
    SampledSignal,
    StudyTable,
    TimeGrid,
    boxcar_kernel,
    causal_invariance_trials,
    convergence_study,
    error_report,
    fourier_basis_kernels,
    fourier_coefficient_experiment,
    gaussian_mixture,
    interior_window,
    is_nonincreasing,
    lr_norm,
    predicted_output_spectral,
    predicted_output_time,
    restrict,
    synthesize,
    target_output,
    target_output_spectral,
    uniformity_study,
    write_study_csv,
)

THREE_TERMS = GaussianMixtureParams(
    terms=((1.0, 0.0, 1.0), (0.5, 2.0, 0.7), (-0.8, -1.0, 1.5))
)


def wide_grid() -> TimeGrid:
    return TimeGrid(t_start=-40.0, dt=0.005, n=16000)


def small_grid() -> TimeGrid:
    return TimeGrid(t_start=-10.0, dt=0.005, n=4000)


def test_target_output_erf_oracle():
    # boxcar horizon of exp(-s^2) at t = 0 is int_0^1 exp(-s^2) ds
    # = sqrt(pi)/2 * erf(1); trapezoid on dt = 0.005 lands within ~2e-6
    grid = wide_grid()
    x = SampledSignal(grid=grid, values=np.exp(-grid.times() ** 2))
    y = target_output(x, boxcar_kernel(1.0, grid.dt))
    got = y.values[y.grid.index_of(0.0)]
    assert math.isclose(got, 0.7468241328124271, abs_tol=1e-5)
    # the output grid is the input grid shortened by the horizon
    assert y.grid.n == grid.n - 200
    assert y.grid.t_start == grid.t_start


def test_target_output_validation():
    grid = small_grid()
    x = SampledSignal(grid=grid, values=np.zeros(grid.n))
    with pytest.raises(ValueError):
        target_output(x, boxcar_kernel(1.0, 0.01))
    short = TimeGrid(t_start=0.0, dt=0.005, n=100)
    xs = SampledSignal(grid=short, values=np.zeros(100))
    with pytest.raises(ValueError):
        target_output(xs, boxcar_kernel(1.0, 0.005))


def test_target_routes_agree():
    grid = wide_grid()
    x, X = gaussian_mixture(THREE_TERMS, grid)
    k = boxcar_kernel(0.5, grid.dt)
    y_time = target_output(x, k)
    y_freq = target_output_spectral(X, k, grid)
    assert y_freq.grid == y_time.grid
    num = lr_norm(SampledSignal(grid=y_time.grid, values=y_freq.values - y_time.values), 2)
    assert num / lr_norm(y_time, 2) < 1e-9


def test_error_report_semantics():
    g = TimeGrid(t_start=0.0, dt=0.1, n=50)
    y = SampledSignal(grid=g, values=np.ones(50))
    same = error_report(y, y, 2, 1.0, "spectral")
    assert same.abs_error == 0.0 and same.rel_error == 0.0
    zero = SampledSignal(grid=g, values=np.zeros(50))
    off = SampledSignal(grid=g, values=np.full(50, 0.5))
    assert error_report(zero, off, 2, 1.0, "spectral").rel_error == math.inf
    # alignment: the prediction may start earlier and run longer
    gy = TimeGrid(t_start=1.0, dt=0.1, n=20)
    target = SampledSignal(grid=gy, values=np.ones(20))
    pred = SampledSignal(grid=g, values=np.ones(50) + 0.1)
    rep = error_report(target, pred, math.inf, 2.0, "time_domain", memory_M=3.0)
    assert math.isclose(rep.abs_error, 0.1, rel_tol=1e-12)
    assert rep.memory_M == 3.0
    # a window trims both signals before measuring
    vals = np.ones(20)
    vals[:5] = 100.0
    noisy = SampledSignal(grid=gy, values=vals)
    rep = error_report(target, noisy, math.inf, 2.0, "spectral", window=(1.6, 2.8))
    assert rep.abs_error == 0.0
    with pytest.raises(ValueError):
        error_report(pred, target, 2, 1.0, "spectral")  # target longer than prediction


def test_error_report_invariants():
    with pytest.raises(AssertionError):
        ErrorReport(r=3, abs_error=0.0, rel_error=0.0, gamma=1.0, mode="spectral")
    with pytest.raises(AssertionError):
        ErrorReport(r=2, abs_error=0.0, rel_error=0.0, gamma=1.0, mode="exact")
    with pytest.raises(AssertionError):
        ErrorReport(r=2, abs_error=-1.0, rel_error=0.0, gamma=1.0, mode="spectral")


def test_restrict_and_interior_window():
    g = TimeGrid(t_start=0.0, dt=0.5, n=10)
    x = SampledSignal(grid=g, values=np.arange(10.0))
    sub = restrict(x, 1.0, 2.5)
    assert sub.grid.t_start == 1.0 and sub.grid.n == 4
    assert np.array_equal(sub.values, [2.0, 3.0, 4.0, 5.0])
    with pytest.raises(ValueError):
        restrict(x, 4.6, 4.7)
    lo, hi = interior_window(TimeGrid(t_start=0.0, dt=0.1, n=1000), 1.0)
    assert lo == 10.0 and hi == 90.0
    lo, _ = interior_window(TimeGrid(t_start=0.0, dt=0.1, n=1000), 1.0, M=25.0)
    assert lo == 25.0
    with pytest.raises(ValueError):
        interior_window(TimeGrid(t_start=0.0, dt=0.1, n=100), 1.0)


def test_is_nonincreasing():
    assert is_nonincreasing([5.0, 4.0, 3.0])
    assert is_nonincreasing([5.0, 4.0, 4.1, 3.0])  # one small uptick
    assert not is_nonincreasing([5.0, 4.0, 4.1, 4.0, 4.1])  # two upticks
    assert not is_nonincreasing([5.0, 4.0, 5.0])  # a 25% jump
    assert not is_nonincreasing([5.0, 0.0, 0.1])  # any rise off zero
    assert is_nonincreasing([5.0, 4.0, 4.4, 3.0], jitter=0.1)


def test_time_prediction_requires_zeroed_kernel():
    grid = small_grid()
    x, _ = gaussian_mixture(GaussianMixtureParams(terms=((1.0, 0.0, 1.0),)), grid)
    k = boxcar_kernel(0.5, grid.dt)
    raw = synthesize(k, 2.0, grid, zero_negative_time=False)
    with pytest.raises(ValueError):
        predicted_output_time(x, raw)
    spec = synthesize(k, 2.0, grid)
    with pytest.raises(ValueError):
        predicted_output_time(x, spec, M=0.0)
    with pytest.raises(ValueError):
        predicted_output_time(x, spec, M=grid.span * 2.0)
    y_hat = predicted_output_time(x, spec, M=5.0)
    assert y_hat.grid == grid


def test_memory_truncation_converges_to_full_history():
    grid = wide_grid()
    x, _ = gaussian_mixture(THREE_TERMS, grid)
    k = boxcar_kernel(1.0, grid.dt)
    spec = synthesize(k, 1.0, grid)
    full = predicted_output_time(x, spec)
    gaps = []
    for M in (2.0, 5.0, 10.0, 20.0):
        trunc = predicted_output_time(x, spec, M=M)
        gaps.append(
            lr_norm(SampledSignal(grid=grid, values=trunc.values - full.values), 2)
        )
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-6


def test_prediction_modes_agree_where_conditioning_allows():
    # gamma = 1 keeps exp(2*T*gamma) small enough that the t < 0 residue
    # removed by zeroing is negligible in absolute terms; the two routes
    # then compute the same functional
    grid = wide_grid()
    x, X = gaussian_mixture(THREE_TERMS, grid)
    k = boxcar_kernel(1.0, grid.dt)
    spec = synthesize(k, 1.0, grid)
    y_s = predicted_output_spectral(X, spec, grid)
    y_t = predicted_output_time(x, spec)
    lo, hi = interior_window(grid, k.T)
    a = restrict(y_s, lo, hi)
    b = restrict(y_t, lo, hi)
    gap = float(np.max(np.abs(a.values - b.values)))
    assert gap / float(np.max(np.abs(a.values))) < 1e-9


def test_convergence_study_runs_and_validates():
    grid = small_grid()
    x, X = gaussian_mixture(GaussianMixtureParams(terms=((1.0, 0.0, 1.0),)), grid)
    k = boxcar_kernel(0.5, grid.dt)
    table = convergence_study(x, k, [10.0, 100.0], X=X)
    assert table.swept_name == "gamma"
    assert [swept for swept, _ in table.rows] == [10.0, 100.0]
    rels = table.rel_errors()
    assert rels[1] < rels[0]
    assert table.metadata["kind"] == "convergence"
    assert table.metadata["trend_nonincreasing"] == "true"
    with pytest.raises(ValueError):
        convergence_study(x, k, [])
    with pytest.raises(ValueError):
        convergence_study(x, k, [100.0, 10.0])
    with pytest.raises(ValueError):
        convergence_study(x, k, [10.0], mode="exact")


def test_uniformity_study_validates():
    grid = small_grid()
    pair = gaussian_mixture(GaussianMixtureParams(terms=((1.0, 0.0, 1.0),)), grid)
    k = boxcar_kernel(0.5, grid.dt)
    with pytest.raises(ValueError):
        uniformity_study([], k, 2, [0.2, 0.1])
    with pytest.raises(ValueError):
        uniformity_study([pair], k, 3, [0.2, 0.1])
    with pytest.raises(ValueError):
        uniformity_study([pair], k, 2, [0.1, 0.2])
    other = gaussian_mixture(
        GaussianMixtureParams(terms=((1.0, 0.0, 1.0),)), wide_grid()
    )
    with pytest.raises(ValueError):
        uniformity_study([pair, other], k, 2, [0.2, 0.1])
    table = uniformity_study([pair], k, 2, [0.2, 0.1])
    assert table.swept_name == "epsilon"
    assert table.metadata["family_size"] == "1"
    assert table.rel_errors()[1] < 0.1


def test_causality_of_time_prediction():
    grid = small_grid()
    x, _ = gaussian_mixture(GaussianMixtureParams(terms=((1.0, 0.0, 1.0),)), grid)
    spec = synthesize(boxcar_kernel(0.5, grid.dt), 10.0, grid)
    assert causal_invariance_trials(x, spec, None, 25, seed=99) == 0
    with pytest.raises(ValueError):
        causal_invariance_trials(x, spec, None, 0, seed=99)


def test_fourier_basis_shapes():
    kernels = fourier_basis_kernels(5, 0.5, 0.005)
    assert len(kernels) == 5
    assert all(k.samples.shape == (101,) for k in kernels)
    assert kernels[0].samples[0] == 1.0 / math.sqrt(0.5)
    # unit L2 norm up to the rectangle-rule endpoint bias
    for k in kernels:
        norm = math.sqrt(0.005 * float(np.sum(k.samples**2)))
        assert math.isclose(norm, 1.0, rel_tol=0.02)
    with pytest.raises(ValueError):
        fourier_basis_kernels(0, 0.5, 0.005)
    with pytest.raises(ValueError):
        fourier_basis_kernels(65, 0.5, 0.005)


def test_fourier_coefficient_experiment():
    grid = wide_grid()
    x, X = gaussian_mixture(THREE_TERMS, grid)
    loose = fourier_coefficient_experiment(x, 9, 0.5, 2.0, 1e3, X=X)
    tight = fourier_coefficient_experiment(x, 9, 0.5, 2.0, 1e5, X=X)
    assert loose.swept_name == "m" and len(loose.rows) == 9
    assert all(rep.r == math.inf for _, rep in loose.rows)
    worst_loose = max(loose.rel_errors())
    worst_tight = max(tight.rel_errors())
    assert worst_tight < worst_loose < 0.01
    rec = float(tight.metadata["reconstruction_rel_error"])
    # 9 basis functions cannot represent the segment exactly; the residual
    # is a property of the basis, not of the predictor
    assert 0.0 < rec < 0.1
    zero = SampledSignal(grid=grid, values=np.zeros(grid.n))
    with pytest.raises(ValueError):
        fourier_coefficient_experiment(zero, 3, 0.5, 2.0, 1e3)


def test_study_csv_golden(tmp_path):
    rows = (
        (
            10.0,
            ErrorReport(r=2, abs_error=0.25, rel_error=0.5, gamma=10.0, mode="spectral"),
        ),
        (
            100.0,
            ErrorReport(
                r=math.inf,
                abs_error=0.001,
                rel_error=0.002,
                gamma=100.0,
                mode="time_domain",
                memory_M=2.5,
            ),
        ),
    )
    table = StudyTable(swept_name="gamma", rows=rows)
    path = tmp_path / "study.csv"
    write_study_csv(table, path)
    # read_text translates the csv module's \r\n line endings
    assert path.read_text() == (
        "gamma,abs_error,rel_error,r,mode,memory\n"
        "10,0.25,0.5,2,spectral,unbounded\n"
        "100,0.001,0.002,inf,time_domain,2.5\n"
    )

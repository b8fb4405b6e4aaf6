"""Target functionals, predicted outputs, and the study harness.

Two independent routes to every quantity: the target functional is a time
quadrature, predictions run either as a spectral product or as a causal
truncated convolution.  Studies compare the routes and tabulate errors;
they never assert, so a failing trend is data, not an exception.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .predictor import HorizonKernel, PredictorSpec, gamma_for_band, kernel_spectrum, synthesize
from .signals import (
    NumericsError,
    SampledSignal,
    Spectrum,
    TimeGrid,
    _check_grid_match,
    _fmt,
    forward_spectrum,
    inverse_signal,
    lr_norm,
)

_LOG_DOUBLE_MAX = 709.0

_MODES = ("spectral", "time_domain")


@dataclass(frozen=True)
class ErrorReport:
    """One measured error: L_r distance between target and prediction."""

    r: float
    abs_error: float
    rel_error: float
    gamma: float
    mode: str
    memory_M: float | None = None

    def __post_init__(self) -> None:
        assert self.r in (1, 2, math.inf)
        assert self.mode in _MODES
        assert self.abs_error >= 0.0 and self.rel_error >= 0.0
        assert self.gamma > 0.0
        assert self.memory_M is None or self.memory_M > 0.0


@dataclass(frozen=True)
class StudyTable:
    """Rows of (swept value, ErrorReport) plus free-form metadata strings."""

    swept_name: str
    rows: tuple[tuple[float, ErrorReport], ...]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        assert self.swept_name.isidentifier()
        assert len(self.rows) >= 1

    def rel_errors(self) -> list[float]:
        return [rep.rel_error for _, rep in self.rows]


def _fmt_r(r: float) -> str:
    return "inf" if r == math.inf else str(int(r))


def write_study_csv(table: StudyTable, path: str | Path) -> None:
    """Fixed six-column schema; metadata is not part of the table body."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([table.swept_name, "abs_error", "rel_error", "r", "mode", "memory"])
        for swept, rep in table.rows:
            wr.writerow(
                [
                    _fmt(swept),
                    _fmt(rep.abs_error),
                    _fmt(rep.rel_error),
                    _fmt_r(rep.r),
                    rep.mode,
                    "unbounded" if rep.memory_M is None else _fmt(rep.memory_M),
                ]
            )


def target_output(x: SampledSignal, k: HorizonKernel) -> SampledSignal:
    """Trapezoid quadrature of y(t) = int_t^{t+T} k(t-s) x(s) ds.

    Defined only where the whole horizon [t, t+T] is sampled, so the output
    grid is the input grid shortened by T.  The endpoint samples carry half
    weight, matching the embedding used by kernel_spectrum; the spectral
    route then agrees with this one to round-off instead of to O(dt).
    """
    g = x.grid
    if not math.isclose(g.dt, k.dt, rel_tol=1e-9):
        raise ValueError(f"kernel dt {k.dt} does not match signal dt {g.dt}")
    nk = k.n_steps
    if nk >= g.n:
        raise ValueError("horizon T exceeds the sampled span")
    c = k.samples[::-1].copy()
    c[0] *= 0.5
    c[-1] *= 0.5
    vals = g.dt * np.correlate(x.values, c, mode="valid")
    return SampledSignal(grid=TimeGrid(g.t_start, g.dt, g.n - nk), values=vals)


def target_output_spectral(X: Spectrum, k: HorizonKernel, grid: TimeGrid) -> SampledSignal:
    """The same functional through the frequency domain: invert K(iw)X(iw).

    Dual route to target_output for cross-checking; identical quadrature by
    construction, so the two agree to round-off on well-supported signals.
    """
    _check_grid_match(X, grid)
    K = kernel_spectrum(k, grid)
    Y = Spectrum(dt=grid.dt, values=K.values * X.values)
    y_full = inverse_signal(Y, grid)
    nk = k.n_steps
    out = TimeGrid(grid.t_start, grid.dt, grid.n - nk)
    return SampledSignal(grid=out, values=y_full.values[: out.n])


def predicted_output_spectral(
    X: Spectrum, spec: PredictorSpec, grid: TimeGrid
) -> SampledSignal:
    """Invert Y_hat = K_hat(iw) X(iw), assembled in log magnitude.

    K_hat alone can exceed the double range while the product is ordinary;
    combining log|K_hat| + log|X| first makes the product representable
    whenever the answer is.  Bins where the product still overflows abort
    with a bin report.
    """
    _check_grid_match(X, grid)
    if spec.K_hat.n != X.n or not math.isclose(spec.K_hat.dt, X.dt, rel_tol=1e-9):
        raise ValueError("predictor and spectrum live on different grids")
    mag = np.abs(X.values)
    with np.errstate(divide="ignore", under="ignore"):
        logmag = spec.log_magnitude + np.log(mag)
    logmag = np.where(mag == 0.0, -np.inf, logmag)
    over = logmag > _LOG_DOUBLE_MAX
    if np.any(over):
        worst = int(np.argmax(logmag))
        w = X.omegas()
        raise NumericsError(
            f"{int(np.sum(over))} spectral bins overflow in K_hat*X "
            f"(worst log magnitude {logmag[worst]:.1f} at omega="
            f"{w[worst]:.4g}); the prediction is not representable"
        )
    phase = spec.phase + np.angle(X.values)
    with np.errstate(under="ignore"):
        Y = Spectrum(dt=X.dt, values=np.exp(logmag) * np.exp(1j * phase))
    return inverse_signal(Y, grid)


def predicted_output_time(
    x: SampledSignal, spec: PredictorSpec, M: float | None = None
) -> SampledSignal:
    """Causal convolution y_hat(t) = dt * sum_{s<=t} k_hat(t-s) x(s).

    Uses only the zeroed-negative-time kernel and at most M seconds of
    history, so the estimate at time t is a function of x on [t-M, t]
    alone.  Early samples see a shorter history; the interior window of a
    study is what makes that harmless.
    """
    if not spec.zeroed_negative_time:
        raise ValueError("time-domain prediction requires a zeroed kernel")
    g = x.grid
    kg = spec.k_hat.grid
    if not math.isclose(g.dt, kg.dt, rel_tol=1e-9):
        raise ValueError("kernel and signal sample steps differ")
    t = kg.times()
    kc = spec.k_hat.values[t >= -1e-12 * kg.dt]
    if M is not None:
        if not 0.0 < M <= g.span:
            raise ValueError("memory M must lie in (0, span]")
        kc = kc[: int(math.floor(M / g.dt)) + 1]
    vals = g.dt * np.convolve(x.values, kc)[: g.n]
    return SampledSignal(grid=g, values=vals)


def interior_window(grid: TimeGrid, T: float, M: float | None = None) -> tuple[float, float]:
    """Trim bounds [t_start + max(M, 10T), t_end - 10T] for edge effects."""
    lo = grid.t_start + max(M if M is not None else 0.0, 10.0 * T)
    hi = grid.t_end - 10.0 * T
    if lo >= hi:
        raise ValueError("grid too short for the interior window")
    return lo, hi


def restrict(x: SampledSignal, t_lo: float, t_hi: float) -> SampledSignal:
    """Samples with t_lo <= t <= t_hi on the induced sub-grid."""
    t = x.grid.times()
    tol = 1e-9 * x.grid.dt
    mask = (t >= t_lo - tol) & (t <= t_hi + tol)
    idx = np.flatnonzero(mask)
    if idx.size < 2:
        raise ValueError("window keeps fewer than two samples")
    sub = TimeGrid(float(t[idx[0]]), x.grid.dt, int(idx.size))
    return SampledSignal(grid=sub, values=x.values[idx])


def error_report(
    y: SampledSignal,
    y_hat: SampledSignal,
    r: float,
    gamma: float,
    mode: str,
    memory_M: float | None = None,
    window: tuple[float, float] | None = None,
) -> ErrorReport:
    """L_r error of y_hat against y, optionally on an interior window.

    y_hat may live on a longer grid (full-length predictions versus the
    shortened target); it is aligned by time and truncated.  A zero target
    with zero error reports rel 0; a zero target with nonzero error reports
    rel inf rather than hiding the failure.
    """
    j0 = y_hat.grid.index_of(y.grid.t_start)
    if j0 + y.grid.n > y_hat.grid.n:
        raise ValueError("prediction does not cover the target's time range")
    aligned = SampledSignal(grid=y.grid, values=y_hat.values[j0 : j0 + y.grid.n])
    ref, est = y, aligned
    if window is not None:
        ref = restrict(ref, *window)
        est = restrict(est, *window)
    diff = SampledSignal(grid=ref.grid, values=est.values - ref.values)
    abs_err = lr_norm(diff, r)
    denom = lr_norm(ref, r)
    if abs_err == 0.0:
        rel = 0.0
    elif denom == 0.0:
        rel = math.inf
    else:
        rel = abs_err / denom
    return ErrorReport(
        r=r, abs_error=abs_err, rel_error=rel, gamma=gamma, mode=mode, memory_M=memory_M
    )


def is_nonincreasing(values, jitter: float = 0.05, allowed_steps: int = 1) -> bool:
    """Monotone decrease, tolerating allowed_steps upticks of at most jitter."""
    upticks = 0
    for a, b in zip(values, values[1:]):
        if b <= a:
            continue
        if a > 0.0 and b <= a * (1.0 + jitter):
            upticks += 1
            if upticks > allowed_steps:
                return False
        else:
            return False
    return True


def _ordered_map(fn, items, jobs: int):
    """Apply fn in input order; jobs > 1 fans out but keeps the order."""
    if jobs <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def convergence_study(
    x: SampledSignal,
    k: HorizonKernel,
    gamma_list,
    r: float = 2,
    mode: str = "spectral",
    X: Spectrum | None = None,
    M: float | None = None,
    jobs: int = 1,
) -> StudyTable:
    """Error of the synthesized predictor versus gamma, largest gamma last.

    Spectral mode needs the input spectrum; a closed form should be passed
    when one exists, because exp(Re h) magnifies the round-off floor of a
    transformed sample array by up to exp(2*T*gamma).  Time-domain mode
    convolves with the zeroed kernel under memory M.
    """
    gammas = [float(g) for g in gamma_list]
    if len(gammas) < 1 or any(b <= a for a, b in zip(gammas, gammas[1:])):
        raise ValueError("gamma_list must be nonempty and strictly increasing")
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}")
    if mode == "spectral" and X is None:
        X = forward_spectrum(x)
    y = target_output(x, k)
    window = interior_window(y.grid, k.T, M if mode == "time_domain" else None)

    def run_one(gamma: float) -> tuple[float, ErrorReport]:
        spec = synthesize(k, gamma, x.grid)
        if mode == "spectral":
            y_hat = predicted_output_spectral(X, spec, x.grid)
        else:
            y_hat = predicted_output_time(x, spec, M)
        mem = M if mode == "time_domain" else None
        return gamma, error_report(y, y_hat, r, gamma, mode, mem, window)

    rows = _ordered_map(run_one, gammas, jobs)
    rels = [rep.rel_error for _, rep in rows]
    meta = {
        "kind": "convergence",
        "trend_nonincreasing": str(is_nonincreasing(rels)).lower(),
        "final_rel_error": _fmt(rels[-1]),
    }
    return StudyTable(swept_name="gamma", rows=tuple(rows), metadata=meta)


def uniformity_study(
    family: list[tuple[SampledSignal, Spectrum]],
    k: HorizonKernel,
    q: int,
    epsilon_list,
    jobs: int = 1,
) -> StudyTable:
    """Worst-member error under the shared band recipe, one row per epsilon.

    Members are normalized to the L_q unit ball of their spectra, the band
    edge is Omega = 1/epsilon, gamma comes from gamma_for_band with the
    kernel's horizon, and errors are measured in L_r with r = q/(q-1).
    The row records the worst member, which is what a uniform guarantee
    must control.
    """
    if q not in (1, 2):
        raise ValueError("q must be 1 or 2")
    if len(family) == 0:
        raise ValueError("family is empty")
    epsilons = [float(e) for e in epsilon_list]
    if len(epsilons) < 1 or any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError("epsilon_list must be nonempty and strictly decreasing")
    grid = family[0][0].grid
    scaled: list[tuple[SampledSignal, Spectrum]] = []
    for x, X in family:
        if x.grid != grid:
            raise ValueError("family members must share one grid")
        _check_grid_match(X, grid)
        norm_q = float((X.domega * np.sum(np.abs(X.values) ** q)) ** (1.0 / q))
        s = max(1.0, norm_q)
        scaled.append(
            (
                SampledSignal(grid=grid, values=x.values / s),
                Spectrum(dt=X.dt, values=X.values / s),
            )
        )
    r = math.inf if q == 1 else 2.0

    def run_eps(eps: float) -> tuple[float, ErrorReport]:
        Omega = 1.0 / eps
        gamma = gamma_for_band(eps, Omega, k.T)
        spec = synthesize(k, gamma, grid)
        worst: ErrorReport | None = None
        for x, X in scaled:
            y = target_output(x, k)
            window = interior_window(y.grid, k.T)
            y_hat = predicted_output_spectral(X, spec, grid)
            rep = error_report(y, y_hat, r, gamma, "spectral", None, window)
            if worst is None or rep.rel_error > worst.rel_error:
                worst = rep
        return eps, worst

    rows = _ordered_map(run_eps, epsilons, jobs)
    rels = [rep.rel_error for _, rep in rows]
    meta = {
        "kind": "uniformity",
        "family_size": str(len(family)),
        "q": str(q),
        "worst_nonincreasing": str(is_nonincreasing(rels)).lower(),
        "final_rel_error": _fmt(rels[-1]),
    }
    return StudyTable(swept_name="epsilon", rows=tuple(rows), metadata=meta)


def fourier_basis_kernels(basis_size: int, T: float, dt: float) -> list[HorizonKernel]:
    """Orthonormal Fourier basis of L2[0, T], carried on the horizon window.

    Basis index m starts at 1 (constant), then alternates cos/sin pairs.
    Kernel m evaluates phi_m(theta + T) on theta in [-T, 0], so the target
    functional against kernel m is exactly the m-th windowed coefficient.
    """
    if not 1 <= basis_size <= 64:
        raise ValueError("basis_size must lie in [1, 64]")
    nk = round(T / dt)
    u = np.linspace(0.0, T, nk + 1)
    kernels = []
    for m in range(1, basis_size + 1):
        if m == 1:
            vals = np.full(nk + 1, 1.0 / math.sqrt(T))
        else:
            l = m // 2
            phase = 2.0 * np.pi * l * u / T
            vals = math.sqrt(2.0 / T) * (np.cos(phase) if m % 2 == 0 else np.sin(phase))
        kernels.append(HorizonKernel(T=T, dt=dt, samples=vals))
    return kernels


def fourier_coefficient_experiment(
    x: SampledSignal,
    basis_size: int,
    T: float,
    tau: float,
    gamma: float,
    X: Spectrum | None = None,
) -> StudyTable:
    """Windowed Fourier coefficients of the future segment, two ways.

    Row m compares the target coefficient f_m = y_m(tau) with its spectral
    prediction, relative to the largest true coefficient.  Metadata carries
    the L2 error of rebuilding x on [tau, tau + T] from the predicted
    coefficients; with a basis rich enough for the segment, that is a
    reconstruction of a future stretch of the signal.
    """
    if X is None:
        X = forward_spectrum(x)
    g = x.grid
    kernels = fourier_basis_kernels(basis_size, T, g.dt)
    f_true = np.empty(basis_size)
    f_pred = np.empty(basis_size)
    for i, k in enumerate(kernels):
        y = target_output(x, k)
        spec = synthesize(k, gamma, g)
        y_hat = predicted_output_spectral(X, spec, g)
        j = y.grid.index_of(tau)
        f_true[i] = y.values[j]
        f_pred[i] = y_hat.values[y_hat.grid.index_of(tau)]
    scale = float(np.max(np.abs(f_true)))
    if scale == 0.0:
        raise ValueError("every true coefficient vanishes at tau")
    rows = []
    for i in range(basis_size):
        abs_err = float(abs(f_pred[i] - f_true[i]))
        rows.append(
            (
                float(i + 1),
                ErrorReport(
                    r=math.inf,
                    abs_error=abs_err,
                    rel_error=abs_err / scale,
                    gamma=gamma,
                    mode="spectral",
                ),
            )
        )
    # rebuild the segment s in [tau, tau+T] as sum_m f_m phi_m(tau + T - s)
    nk = kernels[0].n_steps
    j0 = g.index_of(tau)
    seg = x.values[j0 : j0 + nk + 1]
    recon = np.zeros(nk + 1)
    for i, k in enumerate(kernels):
        recon += f_pred[i] * k.samples[::-1]
    denom = float(np.linalg.norm(seg))
    rec_rel = float(np.linalg.norm(recon - seg)) / denom if denom > 0.0 else math.inf
    meta = {
        "kind": "fourier_coefficients",
        "basis_size": str(basis_size),
        "tau": _fmt(tau),
        "max_rel_error": _fmt(max(rep.rel_error for _, rep in rows)),
        "reconstruction_rel_error": _fmt(rec_rel),
    }
    return StudyTable(swept_name="m", rows=tuple(rows), metadata=meta)


def causal_invariance_trials(
    x: SampledSignal, spec: PredictorSpec, M: float | None, trials: int, seed: int
) -> int:
    """Count trials where editing the future changes the causal past output.

    Each trial splits the record at a random interior index, replaces every
    sample after the split with fresh noise, and compares the predictions
    up to the split bit for bit.  The return value is the number of trials
    with any discrepancy; a causal implementation returns 0.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.Generator(np.random.Philox(seed))
    g = x.grid
    base = predicted_output_time(x, spec, M)
    failures = 0
    for _ in range(trials):
        j = int(rng.integers(g.n // 4, 3 * g.n // 4))
        altered = x.values.copy()
        altered[j + 1 :] = rng.normal(0.0, 1.0 + np.max(np.abs(x.values)), size=g.n - j - 1)
        other = predicted_output_time(SampledSignal(grid=g, values=altered), spec, M)
        if not np.array_equal(base.values[: j + 1], other.values[: j + 1]):
            failures += 1
    return failures

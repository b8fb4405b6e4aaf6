"""Process generators and predictability-class estimators.

Generators return both time samples and the closed-form spectrum where one
exists.  That is not a convenience: exponentially weighted tail integrals
and high-order derivative norms amplify the FFT round-off floor of a
transformed sample array into garbage, while the closed form underflows to
an exact zero exactly where the true spectrum is negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import (
    SampledSignal,
    Spectrum,
    TimeGrid,
    absolute_moment,
    band_weighted_integral,
    inverse_signal,
    spectral_derivative_norm,
    weighted_tail,
)

# decision thresholds for the class estimators
_MEMBER_TAIL_DROP = 1e-8      # tail(last) below this multiple of tail(first)
_DIVERGENT_GROWTH = 10.0      # per-band growth factor
_DIVERGENT_RUN = 3            # consecutive growing bands
_BOUND_SLACK = 1.0 + 1e-9     # round-off headroom on calibrated bounds


@dataclass(frozen=True)
class GaussianMixtureParams:
    """Terms (c, a, v) of a mixture sum_m c_m exp(-(t - a_m)^2 / v_m)."""

    terms: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        terms = tuple((float(c), float(a), float(v)) for c, a, v in self.terms)
        if len(terms) < 1:
            raise ValueError("a mixture needs at least one term")
        if any(v <= 0 for _, _, v in terms):
            raise ValueError("every width-squared v must be positive")
        object.__setattr__(self, "terms", terms)

    @property
    def N(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class FamilyBounds:
    """Parameter box for mixture families: N <= C1, |c| <= C2, v >= C3, |a| <= C4."""

    C1: int
    C2: float
    C3: float
    C4: float

    def __post_init__(self) -> None:
        # C2 = C4 = 0 is allowed: it degenerates to the zero process
        assert self.C1 >= 1 and self.C3 > 0 and self.C2 >= 0 and self.C4 >= 0

    def contains(self, params: GaussianMixtureParams) -> bool:
        return params.N <= self.C1 and all(
            abs(c) <= self.C2 * (1 + 1e-12)
            and abs(a) <= self.C4 * (1 + 1e-12)
            and v >= self.C3 * (1 - 1e-12)
            for c, a, v in params.terms
        )


@dataclass(frozen=True)
class MembershipReport:
    """Outcome of a predictability-class estimate.

    tail_curve rows are (Omega, tail integral) for the spectral-tail class
    and (k, derivative norm) for the derivative-bound classes; the first
    coordinate is strictly increasing either way.  verdict is one of
    "member", "divergent", "inconclusive"; class_tag identifies the class
    family ("X_qT", "M_C", "N_C").  T is recorded as 0 where it plays no
    role (derivative classes).
    """

    q: int
    T: float
    tail_curve: tuple[tuple[float, float], ...]
    verdict: str
    class_tag: str

    def __post_init__(self) -> None:
        assert self.verdict in ("member", "divergent", "inconclusive")
        assert self.class_tag in ("X_qT", "M_C", "N_C")
        xs = [p[0] for p in self.tail_curve]
        assert all(b > a for a, b in zip(xs, xs[1:])), "curve not increasing"


def gaussian_mixture(
    params: GaussianMixtureParams, grid: TimeGrid
) -> tuple[SampledSignal, Spectrum]:
    """Mixture samples plus the exact spectrum.

    X(iw) = sum_m c_m sqrt(pi v_m) exp(-v_m w^2/4) exp(-i w a_m).  Every
    center must sit at least 4.5*sqrt(v) inside the grid, which caps the
    edge amplitude at exp(-20.25) < 2e-9 of the term's peak, inside the
    leakage budget; otherwise the closed form and the transform of the
    samples would silently disagree.
    """
    margin = [(a - 4.5 * math.sqrt(v), a + 4.5 * math.sqrt(v)) for _, a, v in params.terms]
    lo = min(m[0] for m in margin)
    hi = max(m[1] for m in margin)
    if lo < grid.t_start or hi > grid.t_end:
        raise ValueError(
            f"mixture support [{lo:.3g}, {hi:.3g}] does not fit the grid "
            f"[{grid.t_start:.3g}, {grid.t_end:.3g}] with a 4.5*sqrt(v) margin"
        )
    t = grid.times()
    w = grid.omegas()
    x = np.zeros(grid.n)
    X = np.zeros(grid.n, dtype=complex)
    with np.errstate(under="ignore"):
        for c, a, v in params.terms:
            x += c * np.exp(-((t - a) ** 2) / v)
            X += c * math.sqrt(math.pi * v) * np.exp(-v * w * w / 4.0) * np.exp(-1j * w * a)
    return SampledSignal(grid=grid, values=x), Spectrum(dt=grid.dt, values=X)


def gaussian_filter_output(
    impulses: list[tuple[float, float]],
    c: float,
    v: float,
    grid: TimeGrid,
    v_min: float | None = None,
) -> SampledSignal:
    """Output of the Gaussian kernel c*exp(-t^2/v) driven by weighted impulses.

    A delta train (weight, location) convolved with the kernel is exactly the
    mixture with terms (weight*c, location, v); gridded deltas would alias,
    the closed form does not.
    """
    if v_min is not None and v < v_min:
        raise ValueError(f"v={v} below configured minimum {v_min}")
    if not impulses:
        return SampledSignal(grid=grid, values=np.zeros(grid.n))
    params = GaussianMixtureParams(
        terms=tuple((weight * c, loc, v) for weight, loc in impulses)
    )
    x, _ = gaussian_mixture(params, grid)
    return x


def band_limited_process(
    Omega: float, seed: int, grid: TimeGrid
) -> tuple[SampledSignal, Spectrum]:
    """Pseudo-random real signal whose spectrum vanishes outside [-Omega, Omega].

    Magnitude is a raised cosine (1 + cos(pi*w/Omega))/2 on the band, phases
    are drawn from a counter-based generator keyed by the seed, and the
    negative-frequency bins mirror the positive ones so the signal is real.
    Outside the band the spectrum is exactly zero, so weighted tails beyond
    Omega are zero by construction, not merely small.
    """
    if not 0.0 < Omega < grid.omega_nyquist / 4.0:
        raise ValueError(
            f"Omega must lie in (0, omega_nyquist/4 = {grid.omega_nyquist / 4.0:.4g})"
        )
    rng = np.random.Generator(np.random.Philox(seed))
    w = grid.omegas()
    mag = np.where(np.abs(w) <= Omega, 0.5 * (1.0 + np.cos(np.pi * w / Omega)), 0.0)
    phase = np.zeros(grid.n)
    half = (grid.n - 1) // 2  # positive-frequency bins 1..half
    draws = rng.uniform(0.0, 2.0 * np.pi, size=half)
    phase[1 : half + 1] = draws
    phase[grid.n - half :] = -draws[::-1]  # conjugate mirror
    X = Spectrum(dt=grid.dt, values=mag * np.exp(1j * phase))
    return inverse_signal(X, grid), X


def counterexample_te(
    sign_index: int, grid: TimeGrid
) -> tuple[SampledSignal, Spectrum]:
    """The non-predictable pair: x(t) = (-1)^k t exp(-t) for t > 0, else 0.

    Its spectrum is (-1)^k / (1 + iw)^2, with |X| = 1/(1 + w^2): polynomial
    decay, so every exp(q*T*|w|)-weighted tail diverges.  Both members vanish
    identically for t <= 0, which is what defeats causal prediction.
    """
    if sign_index not in (1, 2):
        raise ValueError("sign_index must be 1 or 2")
    if grid.t_start > 0:
        raise ValueError("grid must start at t <= 0")
    sign = -1.0 if sign_index == 1 else 1.0
    t = grid.times()
    with np.errstate(under="ignore"):
        x = np.where(t > 0.0, sign * t * np.exp(-np.minimum(t, 745.0)), 0.0)
    w = grid.omegas()
    X = sign / (1.0 + 1j * w) ** 2
    return SampledSignal(grid=grid, values=x), Spectrum(dt=grid.dt, values=X)


def membership_x(
    X: Spectrum, q: int, T: float, Omega_list
) -> MembershipReport:
    """Estimate membership in the exponential-tail class via partial tails.

    member: the tail curve decreases monotonically and its last value is
    below 1e-8 of the first (or is exactly zero).  divergent: the partial
    integrals over three consecutive [Omega_i, Omega_i+1] bands each grow by
    at least 10x.  Anything else: inconclusive.
    """
    Omegas = [float(o) for o in Omega_list]
    if len(Omegas) < 4:
        raise ValueError("need at least 4 Omega points")
    if any(b <= a for a, b in zip(Omegas, Omegas[1:])):
        raise ValueError("Omega_list must be strictly increasing")
    if Omegas[-1] >= X.omega_nyquist:
        raise ValueError("Omega_list must stay below omega_nyquist")
    tails = [weighted_tail(X, q, T, o) for o in Omegas]
    curve = tuple(zip(Omegas, tails))

    bands = [
        band_weighted_integral(X, q, T, a, b) for a, b in zip(Omegas, Omegas[1:])
    ]
    run = 0
    divergent = False
    for prev, cur in zip(bands, bands[1:]):
        if prev > 0.0 and cur >= _DIVERGENT_GROWTH * prev:
            run += 1
            if run >= _DIVERGENT_RUN:
                divergent = True
                break
        else:
            run = 0

    verdict = "inconclusive"
    if divergent:
        verdict = "divergent"
    else:
        nonincreasing = all(b <= a for a, b in zip(tails, tails[1:]))
        if nonincreasing and (tails[-1] == 0.0 or tails[-1] < _MEMBER_TAIL_DROP * tails[0]):
            verdict = "member"
    return MembershipReport(q=q, T=T, tail_curve=curve, verdict=verdict, class_tag="X_qT")


def _derivative_curve(X: Spectrum, k_max: int) -> list[float]:
    if not 0 <= k_max <= 40:
        raise ValueError("k_max must lie in [0, 40]")
    return [spectral_derivative_norm(X, k) for k in range(k_max + 1)]


def _log_or_neginf(v: float) -> float:
    return math.log(v) if v > 0.0 else -math.inf


def membership_mc(X: Spectrum, C: float, k_max: int) -> MembershipReport:
    """Estimate membership in the geometric derivative-bound class.

    Calibrates the smallest M making orders 0..2 satisfy D_k <= C^k M (odd
    order via the average (D_{k-1}+D_{k+1})/2), then tests every higher
    order against the same M.  The existence quantifier in the class
    definition becomes a concrete decision procedure this way; it is an
    estimator, not a proof.
    """
    if not C > 0:
        raise ValueError("C must be positive")
    D = _derivative_curve(X, k_max)
    curve = tuple((float(k), d) for k, d in enumerate(D))
    if k_max < 3:
        return MembershipReport(q=2, T=0.0, tail_curve=curve, verdict="inconclusive", class_tag="M_C")
    if all(d == 0.0 for d in D):
        return MembershipReport(q=2, T=0.0, tail_curve=curve, verdict="member", class_tag="M_C")
    M_hat = max(D[0], (D[0] + D[2]) / (2.0 * C), D[2] / (C * C))
    logM = _log_or_neginf(M_hat * _BOUND_SLACK)
    logC = math.log(C)
    ok = True
    for k in range(k_max + 1):
        if k % 2 == 0:
            lhs = _log_or_neginf(D[k])
        elif k + 1 <= k_max:
            lhs = _log_or_neginf(0.5 * (D[k - 1] + D[k + 1]))
        else:
            continue
        if lhs > k * logC + logM:
            ok = False
            break
    verdict = "member" if ok else "divergent"
    return MembershipReport(q=2, T=0.0, tail_curve=curve, verdict=verdict, class_tag="M_C")


def membership_nc(X: Spectrum, C: float, k_max: int) -> MembershipReport:
    """Estimate membership in the factorial derivative-bound class.

    Same calibration scheme as membership_mc with the bound k! C^-k M:
    M is fitted on orders 0..2 and the factorial bound is tested beyond.
    """
    if not C > 0:
        raise ValueError("C must be positive")
    D = _derivative_curve(X, k_max)
    curve = tuple((float(k), d) for k, d in enumerate(D))
    if k_max < 3:
        return MembershipReport(q=2, T=0.0, tail_curve=curve, verdict="inconclusive", class_tag="N_C")
    if all(d == 0.0 for d in D):
        return MembershipReport(q=2, T=0.0, tail_curve=curve, verdict="member", class_tag="N_C")
    M_hat = max(D[0], C * (D[0] + D[2]) / 2.0, C * C * D[2] / 2.0)
    logM = _log_or_neginf(M_hat * _BOUND_SLACK)
    logC = math.log(C)
    ok = True
    for k in range(k_max + 1):
        if k % 2 == 0:
            lhs = _log_or_neginf(D[k])
        elif k + 1 <= k_max:
            lhs = _log_or_neginf(0.5 * (D[k - 1] + D[k + 1]))
        else:
            continue
        if lhs > math.lgamma(k + 1) - k * logC + logM:
            ok = False
            break
    verdict = "member" if ok else "divergent"
    return MembershipReport(q=2, T=0.0, tail_curve=curve, verdict=verdict, class_tag="N_C")


def sample_family(
    bounds: FamilyBounds, count: int, seed: int
) -> list[GaussianMixtureParams]:
    """Deterministic family draws within the parameter box.

    The first four entries pin the box's extreme corners (max term count,
    max amplitude, minimum width, max center offset); the rest are drawn
    from a counter-based generator keyed by the seed.  Widths are spread
    over [C3, C3 + 2.5] so the corners stay the extremes.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    c_half = bounds.C2 / 2.0
    spread = (
        np.linspace(-bounds.C4, bounds.C4, bounds.C1)
        if bounds.C1 > 1
        else np.zeros(1)
    )
    corners = [
        GaussianMixtureParams(
            terms=tuple(
                (bounds.C2 * (1.0 if i % 2 == 0 else -1.0), float(spread[i]), bounds.C3 + 1.0)
                for i in range(bounds.C1)
            )
        ),
        GaussianMixtureParams(terms=((bounds.C2, 0.0, bounds.C3 + 1.0),)),
        GaussianMixtureParams(terms=((c_half, 0.0, bounds.C3),)),
        GaussianMixtureParams(terms=((c_half, bounds.C4, bounds.C3 + 1.0),)),
    ]
    family = corners[:count]
    rng = np.random.Generator(np.random.Philox(seed))
    while len(family) < count:
        n_terms = int(rng.integers(1, bounds.C1 + 1))
        terms = tuple(
            (
                float(rng.uniform(-bounds.C2, bounds.C2)),
                float(rng.uniform(-bounds.C4, bounds.C4)),
                float(rng.uniform(bounds.C3, bounds.C3 + 2.5)),
            )
            for _ in range(n_terms)
        )
        family.append(GaussianMixtureParams(terms=terms))
    return family


def exp_moment_series(X: Spectrum, T: float, k_terms: int = 40) -> np.ndarray:
    """Partial sums of sum_k (2T)^k/k! * int |w|^k |X|^2 dw.

    Termwise this rebuilds int exp(2T|w|) |X|^2 dw from below; the k-th
    term is assembled in log space because the moments can be astronomically
    large while the factorial discount is astronomically small.
    """
    if not 0 <= k_terms <= 40:
        raise ValueError("k_terms must lie in [0, 40]")
    if not T > 0:
        raise ValueError("T must be positive")
    log2T = math.log(2.0 * T)
    total = 0.0
    sums = np.empty(k_terms + 1)
    for k in range(k_terms + 1):
        m = absolute_moment(X, k)
        if m > 0.0:
            total += math.exp(k * log2T - math.lgamma(k + 1) + math.log(m))
        sums[k] = total
    return sums

"""Tour of the gain V = exp(h): identity, envelope, and band control.

Prints the worst gap between |V| and its closed form, the supremum of the
log gain along gamma at fixed frequencies (always T*|w|, always at
gamma = |w|), and what the band tuning rule actually delivers.
"""

from __future__ import annotations

import numpy as np

from horizoncast import (
    band_flatness,
    envelope_search,
    eval_V,
    gamma_for_band,
    magnitude_identity_defect,
    pointwise_limit_curve,
)


def main() -> None:
    w = np.linspace(-40.0, 40.0, 501)
    defect = magnitude_identity_defect(np.logspace(-2, 3, 30), [0.1, 1.0, 5.0], w)
    print(f"log-magnitude identity, worst relative defect: {defect:.3e}")

    print("\nenvelope of log|V| along gamma (cap is T*|omega|):")
    for T, omega in [(0.5, 3.0), (1.0, 5.0), (2.0, 0.7)]:
        sup_log, gamma_star, _ = envelope_search(T, omega)
        print(
            f"  T={T:<4} omega={omega:<5} sup log|V| = {sup_log:.6f}"
            f"  (cap {T * abs(omega):.6f}, attained at gamma = {gamma_star:.6f})"
        )

    print("\npointwise |V - 1| at omega = 4, T = 1, along a gamma sweep:")
    gammas = [1e1, 1e2, 1e3, 1e4, 1e5]
    curve = pointwise_limit_curve(1.0, 4.0, gammas)
    for g, c in zip(gammas, curve):
        print(f"  gamma = {g:>8.0f}   |V - 1| = {c:.3e}")

    print("\nband rule gamma_for_band(eps, Omega, T), delivered flatness:")
    for eps, Omega, T in [(0.2, 5.0, 1.0), (0.1, 3.0, 0.5), (0.05, 10.0, 0.25)]:
        gamma = gamma_for_band(eps, Omega, T)
        flat = band_flatness(gamma, T, Omega)
        print(
            f"  eps={eps:<5} Omega={Omega:<5} T={T:<5} gamma = {gamma:>12.2f}"
            f"  max|V-1| on band = {flat:.4f}"
        )

    # the trade: flat band in exchange for gain away from it
    V, logmag = eval_V(gamma_for_band(0.1, 3.0, 0.5), 0.5, 30.0)
    print(f"\nsame predictor far outside its band: |V(i*30)| = exp({logmag:.3f})")


if __name__ == "__main__":
    main()

"""The pair that defeats causal prediction, and how the estimators say so.

x(t) = (-1)^k t exp(-t) for t > 0 vanishes identically for t <= 0: the two
signs are indistinguishable from the past, yet their horizon integrals
differ by sign.  The spectrum decays only polynomially, every weighted
tail diverges, and the causal prediction error never goes to zero no
matter how large gamma gets.
"""

from __future__ import annotations

from horizoncast import (
    TimeGrid,
    boxcar_kernel,
    convergence_study,
    counterexample_te,
    membership_mc,
    membership_nc,
    membership_x,
)


def main() -> None:
    grid = TimeGrid(t_start=-40.0, dt=0.005, n=16000)
    x, X = counterexample_te(1, grid)

    print("class estimates for |X| = 1/(1 + w^2):")
    for q, T in [(1, 1.0), (2, 1.0)]:
        rep = membership_x(X, q, T, [5.0, 10.0, 20.0, 40.0, 80.0, 160.0])
        print(f"  exponential tail, q={q}, T={T}: {rep.verdict}")
    print(f"  geometric derivative bound, C=20: {membership_mc(X, 20.0, 10).verdict}")
    print(f"  factorial derivative bound, C=0.25: {membership_nc(X, 0.25, 10).verdict}")

    k = boxcar_kernel(1.0, grid.dt)
    table = convergence_study(x, k, [1e1, 1e2, 1e3, 1e4, 1e5, 1e6], mode="time_domain")
    print("\ncausal (time-domain) prediction error versus gamma:")
    for gamma, rep in table.rows:
        print(f"  gamma = {gamma:>9.0f}   rel L2 error = {rep.rel_error:.3e}")
    floor = min(table.rel_errors())
    print(f"\nerror floor {floor:.4f}: the future here is not a function of the past")


if __name__ == "__main__":
    main()

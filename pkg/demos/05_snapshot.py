"""Predict an integral over a window nobody has observed yet.

A microsecond-resolution record ends at t = 0.  The sources that will
dominate the next half millisecond are Gaussian bumps centered beyond the
horizon, so the record contains only their leading tails.  Convolving the
past with the synthesized kernel still recovers the upcoming integral to
a fraction of a percent.
"""

from __future__ import annotations

import numpy as np

from horizoncast import (
    GaussianMixtureParams,
    TimeGrid,
    boxcar_kernel,
    gaussian_mixture,
    predicted_output_time,
    synthesize,
    target_output,
)


def main() -> None:
    grid = TimeGrid(t_start=-0.05, dt=1e-5, n=10000)
    T = 5e-4
    gamma = 1e4

    # hidden sources: centers at 3 to 8 ms, far past the prediction time
    rng = np.random.Generator(np.random.Philox(3))
    terms = tuple(
        (
            float(rng.uniform(0.5, 1.0)),
            float(rng.uniform(3e-3, 8e-3)),
            float(rng.uniform(4e-5, 8e-5)),
        )
        for _ in range(2)
    )
    x, _ = gaussian_mixture(GaussianMixtureParams(terms=terms), grid)

    kern = boxcar_kernel(T, grid.dt)
    spec = synthesize(kern, gamma, grid)
    j0 = grid.index_of(0.0)

    estimate = float(predicted_output_time(x, spec).values[j0])
    y = target_output(x, kern)
    true_value = float(y.values[y.grid.index_of(0.0)])
    rel = abs(estimate - true_value) / abs(true_value)

    last_seen = float(np.max(np.abs(x.values[: j0 + 1])))
    print(f"largest sample the predictor ever saw: {last_seen:.3e}")
    print(f"integral of x over the unseen [0, {T}]:")
    print(f"  estimate   {estimate:.6e}")
    print(f"  true value {true_value:.6e}")
    print(f"  rel error  {rel:.3e}")


if __name__ == "__main__":
    main()

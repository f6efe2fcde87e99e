"""Time the rank-one fast paths against the per-direction eigendecompositions.

Every relaxed estimator has two interchangeable implementations: a naive one
that eigendecomposes the modified covariance at each grid direction, and a
fast one that reuses the covariance eigenbasis and roots secular equations
for the few eigenvalues the cost function actually needs.  Same numbers,
very different cost.  Run with `python3 demos/fast_vs_naive.py`.
"""

import time

import numpy as np

from prdoa import (
    ArrayGeometry,
    SampleCovariance,
    Scenario,
    SearchGrid,
    generate_snapshots,
    snr_to_noise_power,
    spectrum,
)

TAGS = ("pr-dml", "pr-wsf", "pr-ccf")


def setup(m):
    geometry = ArrayGeometry.ula(m)
    scenario = Scenario(
        doas_deg=np.array([45.0, 50.0]),
        powers=np.ones(2),
        noise_power=snr_to_noise_power(6.0),
        snapshots=4 * m,
        seed=1,
    )
    x = generate_snapshots(geometry, scenario)
    cov = SampleCovariance.from_snapshots(x, 2)
    grid = SearchGrid.from_spec(geometry, "0:90:1800")
    return cov, grid


def median_time(fn, reps=7):
    fn()  # warm caches before timing
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples))


def main():
    for m in (10, 30):
        cov, grid = setup(m)
        print(f"M = {m}, grid of {grid.n} directions")
        music_t = median_time(lambda: spectrum("music", cov, grid))
        print(f"  {'music':<14} {music_t * 1e3:8.2f} ms   (closed form, for scale)")
        for tag in TAGS:
            fast = median_time(lambda: spectrum(tag, cov, grid))
            naive = median_time(lambda: spectrum(tag + ":naive", cov, grid))
            worst = np.max(np.abs(
                spectrum(tag, cov, grid).values - spectrum(tag + ":naive", cov, grid).values
            ))
            print(f"  {tag:<14} {fast * 1e3:8.2f} ms   naive {naive * 1e3:8.2f} ms   "
                  f"speedup {naive / fast:5.1f}x   max |diff| {worst:.1e}")
        print()


if __name__ == "__main__":
    main()

"""Run every estimator on the same two-source data and compare the estimates.

Two closely spaced sources at 45 and 50 degrees, 10-sensor half-wavelength
ULA, 40 snapshots.  At 10 dB everything resolves the pair; at 0 dB the
classical spectra start to merge the two dips while the partial-relaxation
family still separates them.  Run with `python3 demos/compare_spectra.py`.
"""

import numpy as np

from prdoa import (
    ArrayGeometry,
    SampleCovariance,
    Scenario,
    SearchGrid,
    dml_grid2,
    find_n_minima,
    generate_snapshots,
    snr_to_noise_power,
    spectrum,
)

TAGS = ("bf", "capon", "music", "pr-dml", "pr-wsf", "pr-ccf", "pr-ucf")


def estimate_all(geometry, scenario, grid):
    x = generate_snapshots(geometry, scenario)
    cov = SampleCovariance.from_snapshots(x, scenario.n_sources)
    rows = []
    for tag in TAGS:
        spec = spectrum(tag, cov, grid)
        est = find_n_minima(spec, scenario.n_sources, refine=True)
        rows.append((tag, est.angles_deg, est.used_fallback))
    pair = dml_grid2(cov, grid)
    rows.append(("dml-grid2", pair.angles_deg, pair.used_fallback))
    return rows


def print_table(title, rows, truth):
    print(title)
    print(f"  {'estimator':<10} {'estimates (deg)':<22} {'error (deg)':<18} note")
    for tag, angles, fallback in rows:
        err = angles - truth
        a_txt = ", ".join(f"{a:6.2f}" for a in angles)
        e_txt = ", ".join(f"{e:+5.2f}" for e in err)
        note = "fallback pick" if fallback else ""
        print(f"  {tag:<10} [{a_txt}]      [{e_txt}]   {note}")
    print()


def main():
    geometry = ArrayGeometry.ula(10)
    grid = SearchGrid.from_spec(geometry, "0:90:1800")
    truth = np.array([45.0, 50.0])
    base = Scenario(
        doas_deg=truth,
        powers=np.ones(2),
        noise_power=snr_to_noise_power(10.0),
        snapshots=40,
        seed=7,
    )

    print(f"ULA with {geometry.m} sensors, sources at {truth.tolist()}, "
          f"{base.snapshots} snapshots, grid step {grid.step:.3f} deg\n")
    print_table("SNR = 10 dB", estimate_all(geometry, base, grid), truth)

    hard = base.with_updates(noise_power=snr_to_noise_power(0.0), seed=11)
    print_table("SNR = 0 dB", estimate_all(geometry, hard, grid), truth)

    print("The beamformer cannot resolve a 5 degree pair at this aperture, and")
    print("at 0 dB the Capon and MUSIC dips merge too, so one pick escapes to a")
    print("sidelobe.  The subspace- and covariance-fitting relaxations and the")
    print("joint pair search still separate the sources here.  A single run is")
    print("an anecdote; demos/snr_sweep.py does the statistics.")


if __name__ == "__main__":
    main()

"""Array geometry, steering vectors, snapshot synthesis, sample covariance."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from prdoa import (
    ArrayGeometry,
    SampleCovariance,
    Scenario,
    SearchGrid,
    SnapshotMatrix,
    diagonal_load,
    generate_snapshots,
    sample_covariance,
    snr_to_noise_power,
    steering_matrix,
    steering_vector,
)


def test_ula_positions_on_x_axis():
    g = ArrayGeometry.ula(4, spacing=0.5)
    assert g.m == 4
    assert_allclose(g.positions[:, 0], [0.0, 0.5, 1.0, 1.5])
    assert_allclose(g.positions[:, 1:], 0.0)


def test_geometry_lifts_1d_positions():
    g = ArrayGeometry(np.array([0.0, 0.3, 0.9]))
    assert g.positions.shape == (3, 3)
    assert_allclose(g.positions[:, 0], [0.0, 0.3, 0.9])


def test_geometry_rejects_bad_input():
    with pytest.raises(ValueError):
        ArrayGeometry(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        ArrayGeometry.ula(1)
    with pytest.raises(ValueError):
        ArrayGeometry.ula(4, spacing=0.0)


def test_positions_are_readonly():
    g = ArrayGeometry.ula(3)
    with pytest.raises(ValueError):
        g.positions[0, 0] = 1.0


def test_steering_broadside_is_all_ones():
    g = ArrayGeometry.ula(5)
    assert_allclose(steering_vector(g, 0.0), np.ones(5))


def test_steering_endfire_alternates_sign():
    # at 90 deg every half-wavelength step adds a pi phase
    g = ArrayGeometry.ula(5)
    assert_allclose(steering_vector(g, 90.0), (-1.0) ** np.arange(5), atol=1e-12)


def test_steering_phase_law():
    g = ArrayGeometry.ula(6)
    for t in (-37.0, 12.5, 61.0):
        a = steering_vector(g, t)
        expect = np.exp(1j * np.pi * np.arange(6) * np.sin(np.radians(t)))
        assert_allclose(a, expect, atol=1e-12)
        assert a[0] == 1.0 + 0.0j  # first sensor is the phase reference


def test_steering_unit_modulus():
    g = ArrayGeometry.ula(7)
    a = steering_matrix(g, np.array([-80.0, -5.0, 33.0, 88.0]))
    assert_allclose(np.abs(a), 1.0)


def test_steering_matrix_matches_vectors():
    g = ArrayGeometry.ula(4)
    angles = np.array([10.0, 40.0, 70.0])
    a = steering_matrix(g, angles)
    assert a.shape == (4, 3)
    for j, t in enumerate(angles):
        assert_allclose(a[:, j], steering_vector(g, t))


def test_grid_from_spec():
    g = ArrayGeometry.ula(4)
    grid = SearchGrid.from_spec(g, "0:90:5")
    assert grid.n == 5
    assert_allclose(grid.angles_deg, [0.0, 22.5, 45.0, 67.5, 90.0])
    assert grid.step == pytest.approx(22.5)
    assert_allclose(grid.steering, steering_matrix(g, grid.angles_deg))


def test_grid_spec_rejects_garbage():
    g = ArrayGeometry.ula(4)
    for bad in ("0:90", "0:90:1", "90:0:10", "a:b:c"):
        with pytest.raises(ValueError):
            SearchGrid.from_spec(g, bad)


def test_snr_conversion():
    assert snr_to_noise_power(0.0) == pytest.approx(1.0)
    assert snr_to_noise_power(10.0) == pytest.approx(0.1)
    assert snr_to_noise_power(-10.0) == pytest.approx(10.0)


def test_scenario_validation():
    ok = dict(doas_deg=[40.0, 50.0], powers=[1.0, 1.0])
    Scenario(**ok)
    with pytest.raises(ValueError):
        Scenario(doas_deg=[50.0, 40.0], powers=[1.0, 1.0])
    with pytest.raises(ValueError):
        Scenario(doas_deg=[40.0, 50.0], powers=[1.0])
    with pytest.raises(ValueError):
        Scenario(doas_deg=[40.0, 50.0], powers=[1.0, -1.0])
    with pytest.raises(ValueError):
        Scenario(**ok, correlation=1.5)
    with pytest.raises(ValueError):
        Scenario(**ok, noise_power=0.0)
    with pytest.raises(ValueError):
        Scenario(**ok, snapshots=0)


def test_scenario_with_updates():
    s = Scenario(doas_deg=[45.0, 50.0], powers=[1.0, 1.0], snapshots=40, seed=3)
    s2 = s.with_updates(noise_power=0.5, seed=7)
    assert s2.noise_power == 0.5
    assert s2.seed == 7
    assert s2.snapshots == 40
    assert_allclose(s2.doas_deg, s.doas_deg)
    assert s.noise_power == 1.0  # original untouched


def test_snapshots_shape_and_determinism():
    geom = ArrayGeometry.ula(6)
    scen = Scenario(doas_deg=[30.0, 60.0], powers=[1.0, 1.0], snapshots=25, seed=11)
    x1 = generate_snapshots(geom, scen)
    x2 = generate_snapshots(geom, scen)
    assert x1.data.shape == (6, 25)
    assert np.array_equal(x1.data, x2.data)
    x3 = generate_snapshots(geom, scen.with_updates(seed=12))
    assert not np.array_equal(x1.data, x3.data)


def test_snapshots_require_more_sensors_than_sources():
    geom = ArrayGeometry.ula(3)
    scen = Scenario(doas_deg=[10.0, 30.0, 50.0], powers=np.ones(3))
    with pytest.raises(ValueError):
        generate_snapshots(geom, scen)


def test_snapshot_statistics_match_model():
    # with many snapshots the sample covariance approaches A P A^H + noise*I
    geom = ArrayGeometry.ula(5)
    scen = Scenario(
        doas_deg=[20.0, 55.0],
        powers=[2.0, 0.5],
        noise_power=0.3,
        snapshots=40000,
        seed=5,
    )
    x = generate_snapshots(geom, scen)
    r_hat = x.data @ x.data.conj().T / scen.snapshots
    a = steering_matrix(geom, scen.doas_deg)
    r_true = a @ np.diag(scen.powers) @ a.conj().T + 0.3 * np.eye(5)
    err = np.abs(r_hat - r_true).max() / np.abs(r_true).max()
    assert err < 0.05


def test_correlated_sources_statistics():
    # consecutive-pair chaining: E[s1 s2*] = rho * sqrt(p1 p2)
    geom = ArrayGeometry.ula(5)
    rho = 0.9
    scen = Scenario(
        doas_deg=[20.0, 55.0],
        powers=[1.0, 1.0],
        correlation=rho,
        noise_power=0.1,
        snapshots=60000,
        seed=9,
    )
    x = generate_snapshots(geom, scen)
    r_hat = x.data @ x.data.conj().T / scen.snapshots
    a = steering_matrix(geom, scen.doas_deg)
    p = np.array([[1.0, rho], [rho, 1.0]])
    r_true = a @ p @ a.conj().T + 0.1 * np.eye(5)
    err = np.abs(r_hat - r_true).max() / np.abs(r_true).max()
    assert err < 0.05


def test_coherent_sources_give_rank_one_signal():
    geom = ArrayGeometry.ula(6)
    scen = Scenario(
        doas_deg=[20.0, 40.0],
        powers=[1.0, 1.0],
        correlation=1.0,
        noise_power=1e-8,
        snapshots=500,
        seed=2,
    )
    cov = SampleCovariance.from_snapshots(generate_snapshots(geom, scen), 2)
    # nearly coherent: second signal eigenvalue collapses toward noise level
    assert cov.eig_values[1] < 1e-6 * cov.eig_values[0]


def test_sample_covariance_matches_definition():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 12)) + 1j * rng.standard_normal((4, 12))
    cov = sample_covariance(SnapshotMatrix(x), 2)
    assert_allclose(cov.r_hat, x @ x.conj().T / 12, atol=1e-12)


def test_eigendecomposition_descending_and_consistent():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((5, 40)) + 1j * rng.standard_normal((5, 40))
    cov = SampleCovariance.from_snapshots(x, 2)
    assert np.all(np.diff(cov.eig_values) <= 0)
    recon = cov.eig_vectors @ np.diag(cov.eig_values) @ cov.eig_vectors.conj().T
    assert_allclose(recon, cov.r_hat, atol=1e-10)
    assert cov.signal_values.size == 2
    assert cov.noise_vectors.shape == (5, 3)
    assert cov.trace == pytest.approx(np.trace(cov.r_hat).real)


def test_from_matrix_rejects_non_hermitian():
    r = np.eye(4, dtype=complex)
    r[0, 1] = 1.0
    with pytest.raises(ValueError):
        SampleCovariance.from_matrix(r, 2)


def test_n_sources_bounds():
    r = np.eye(4, dtype=complex)
    with pytest.raises(ValueError):
        SampleCovariance.from_matrix(r, 0)
    with pytest.raises(ValueError):
        SampleCovariance.from_matrix(r, 4)


def test_rank_and_singularity():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
    cov = SampleCovariance.from_snapshots(x, 2)
    assert cov.rank == 4
    assert cov.is_singular
    x_full = rng.standard_normal((8, 64)) + 1j * rng.standard_normal((8, 64))
    assert not SampleCovariance.from_snapshots(x_full, 2).is_singular


def test_diagonal_load_shifts_eigenvalues_exactly():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    cov = SampleCovariance.from_snapshots(x, 2)
    loaded = diagonal_load(cov, 0.25)
    assert_allclose(loaded.eig_values, cov.eig_values + 0.25, atol=1e-14)
    assert_allclose(loaded.r_hat, cov.r_hat + 0.25 * np.eye(6), atol=1e-14)
    assert np.array_equal(loaded.eig_vectors, cov.eig_vectors)
    assert not loaded.is_singular


def test_diagonal_load_edge_cases():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((4, 10)) + 1j * rng.standard_normal((4, 10))
    cov = SampleCovariance.from_snapshots(x, 1)
    assert diagonal_load(cov, 0.0) is cov
    with pytest.raises(ValueError):
        diagonal_load(cov, -1e-3)

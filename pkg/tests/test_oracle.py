import numpy as np
import pytest

from hybridbcs import fock
from hybridbcs.errors import ConfigurationError
from hybridbcs.oracle import (
    MomentumCluster,
    cluster_grid,
    exact_hybrid_rhs,
    random_physical_state,
    run_all_checks,
    run_eom_suite,
    run_hf_suite,
    run_nh_suite,
    run_norm_conserving_suite,
)


def test_car_relations():
    c = fock.annihilation_operators(3)
    eye = np.eye(8)
    for a in range(3):
        for b in range(3):
            anti = fock.anticommutator(c[a], fock.dagger(c[b]))
            assert np.allclose(anti, eye if a == b else 0.0, atol=1e-14)
            assert np.allclose(fock.anticommutator(c[a], c[b]), 0.0, atol=1e-14)


def test_pair_condensate_expectations():
    c = fock.annihilation_operators(4)
    n_vals = [0.3, 0.6]
    d_vals = [0.2 + 0.1j, 0.25j]
    rho = fock.pair_condensate_state(c, [(0, 1), (2, 3)], n_vals, d_vals)
    assert abs(np.trace(rho) - 1.0) < 1e-13
    for p, (a, b) in enumerate([(0, 1), (2, 3)]):
        for j in (a, b):
            occ = fock.expectation(rho, fock.dagger(c[j]) @ c[j])
            assert abs(occ - n_vals[p]) < 1e-13
        pair = fock.expectation(rho, fock.dagger(c[a]) @ fock.dagger(c[b]))
        assert abs(pair - d_vals[p]) < 1e-13


def test_pair_condensate_purity_on_unit_shell():
    # |Delta|^2 = n(1-n) makes the pair block a pure state.
    c = fock.annihilation_operators(2)
    n = 0.35
    rho = fock.pair_condensate_state(c, [(0, 1)], [n], [np.sqrt(n * (1 - n))])
    assert abs(np.trace(rho @ rho) - 1.0) < 1e-12


def test_pair_condensate_is_positive():
    c = fock.annihilation_operators(2)
    rho = fock.pair_condensate_state(c, [(0, 1)], [0.4], [0.2 + 0.3j])
    evals = np.linalg.eigvalsh(rho)
    assert np.min(evals) > -1e-14


def test_pair_condensate_rejects_bad_input():
    c = fock.annihilation_operators(3)
    with pytest.raises(ValueError):
        fock.pair_condensate_state(c, [(0, 2)], [0.3], [0.1])
    with pytest.raises(ValueError):
        fock.pair_condensate_state(c, [(0, 1)], [0.3], [0.9])


def test_thermal_gaussian_occupations():
    c = fock.annihilation_operators(2)
    h = np.diag([1.0, -0.5])
    rho = fock.thermal_gaussian(c, h)
    for j in range(2):
        occ = fock.expectation(rho, fock.dagger(c[j]) @ c[j])
        assert abs(occ - 1.0 / (1.0 + np.exp(h[j, j]))) < 1e-12
    # No anomalous contractions in a normal Gaussian state.
    anom = fock.expectation(rho, fock.dagger(c[0]) @ fock.dagger(c[1]))
    assert abs(anom) < 1e-14


def test_momentum_cluster_consistency():
    cluster = MomentumCluster([-0.4, 0.4])
    rng = np.random.default_rng(11)
    state = random_physical_state(rng, 2)
    rho = cluster.gaussian_state(state.n_k, state.d_k)
    # Total site occupation equals total momentum occupation.
    n_site = sum(fock.expectation(rho, fock.dagger(op) @ op)
                 for ops in (cluster.site_up, cluster.site_down) for op in ops)
    n_mom = 2.0 * np.sum(state.n_k)
    assert abs(n_site - n_mom) < 1e-12
    # The local pair expectation is the momentum average of Delta_k.
    local_pair = fock.expectation(
        rho, fock.dagger(cluster.site_up[0]) @ fock.dagger(cluster.site_down[0]))
    assert abs(local_pair - np.mean(state.d_k)) < 1e-12


def test_momentum_cluster_rejects_asymmetric_energies():
    with pytest.raises(ConfigurationError):
        MomentumCluster([0.0, 0.3, 0.5])


def test_exact_rhs_dimension_mismatch():
    cluster = MomentumCluster([-0.4, 0.4])
    rho = np.eye(cluster.dim) / cluster.dim
    with pytest.raises(ConfigurationError):
        exact_hybrid_rhs(rho, np.eye(4), [], 1.0, cluster.occupation_operator(0))


def test_exact_rhs_lindblad_trace_preserved():
    # At alpha = 1 the identity observable has zero derivative.
    cluster = MomentumCluster([-0.4, 0.4])
    rng = np.random.default_rng(5)
    state = random_physical_state(rng, 2)
    rho = cluster.gaussian_state(state.n_k, state.d_k)
    h = cluster.mean_field_hamiltonian(np.mean(state.d_k), 1.0)
    losses, pumps = cluster.jump_operators(0.3, 0.2)
    val = exact_hybrid_rhs(rho, h, losses + pumps, 1.0, np.eye(cluster.dim))
    assert abs(val) < 1e-13
    # And for any alpha: normalization makes <1> constant by construction.
    val = exact_hybrid_rhs(rho, h, losses + pumps, 0.3, np.eye(cluster.dim))
    assert abs(val) < 1e-13


def test_eom_suite_two_sites():
    report = run_eom_suite(seeds=5, n_sites=2)
    assert report.passed, str(report)


def test_eom_suite_three_sites():
    report = run_eom_suite(seeds=3, n_sites=3)
    assert report.passed, str(report)


def test_eom_suite_catches_corruption():
    # Negative controls: a 1e-3 perturbation of either equation must trip
    # the 1e-10 gate.
    for corrupt in ("occupation", "pairing"):
        report = run_eom_suite(seeds=2, n_sites=2, corrupt=corrupt)
        assert not report.passed
        assert report.worst_residual > 1e-4


def test_hf_suite():
    report = run_hf_suite(seeds=5)
    assert report.passed, str(report)


def test_norm_conserving_suite():
    report = run_norm_conserving_suite(seeds=3)
    assert report.passed, str(report)


def test_nh_suite():
    report = run_nh_suite(seeds=3)
    assert report.passed, str(report)


def test_run_all_checks():
    reports = run_all_checks(seeds=3)
    assert len(reports) == 4
    assert all(r.passed for r in reports), "\n".join(str(r) for r in reports)
    with pytest.raises(ConfigurationError):
        run_all_checks(n_sites=5)


def test_cluster_grid_shapes():
    for n_sites in (2, 3):
        grid = cluster_grid(n_sites)
        assert grid.n_modes == n_sites
        assert abs(grid.weights.sum() - 1.0) < 1e-15
    with pytest.raises(ConfigurationError):
        cluster_grid(4)


def test_report_formatting():
    report = run_eom_suite(seeds=1, n_sites=2)
    text = str(report)
    assert text.startswith("[PASS]")
    assert "eom-equivalence" in text
